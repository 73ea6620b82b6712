"""Closed-form purification analysis for binary-like mixtures.

Covers the star-graph family under bit-flip noise on the leaves (single
parameter x, exact recursion and threshold) and the closed even chain under
bit-flip noise on its even vertices, where the one-step fidelity-gain window
reduces to a quadratic in the mixing parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

# Large-size limit of the closed-chain threshold: root of 2q^4 - 2q^2 + 2q - 1.
CLUSTER_QCRIT_LIMIT = 0.7467
# Equivalent gate reliability p = 2q - 1 at that limit.
CLUSTER_PCRIT_LIMIT = 0.4934


@dataclass(frozen=True)
class GhzBinaryResult:
    """One noisy step of the star-graph binary map.

    ``x_max`` is the attracting fixed point of the mixing parameter (None
    when no purification is possible at this noise level); ``p_crit`` is the
    noise threshold below which no x can be purified.
    """

    fidelity_after: float
    x_max: Optional[float]
    p_crit: float


def ghz_binary(x: float, p: float, n: int) -> GhzBinaryResult:
    """Noisy single step for the star graph on n vertices.

    Bit-flip noise of reliability p on each of the n-1 leaves of both copies
    compresses the mixing parameter to x' = x p^(n-1); the perfect step then
    squares and renormalizes the two coefficients.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if n < 2:
        raise ValueError("star graph needs n >= 2")
    xp = x * p ** (n - 1)
    lam0 = (1.0 + xp) / 2.0
    lam1 = (1.0 - xp) / 2.0
    fidelity_after = lam0 * lam0 / (lam0 * lam0 + lam1 * lam1)
    two_p = 2.0 * p ** (n - 1) - 1.0
    x_max = math.sqrt(two_p) / p ** (n - 1) if two_p >= 0.0 else None
    p_crit = 0.5 ** (1.0 / (n - 1))
    return GhzBinaryResult(fidelity_after, x_max, p_crit)


def ghz_pcrit(n: int) -> float:
    """Noise threshold (1/2)^(1/(n-1)) for the star graph on n vertices."""
    if n < 2:
        raise ValueError("star graph needs n >= 2")
    return 0.5 ** (1.0 / (n - 1))


# -- closed even chain ---------------------------------------------------------


def _binomial(m: int, k: int) -> float:
    """Binomial coefficient as float; exact integers up to m=25, log-gamma above."""
    if m <= 25:
        return float(math.comb(m, k))
    return math.exp(math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1))


@dataclass(frozen=True)
class ClosedClusterResult:
    """One-step gain window for the closed chain on 2M vertices, M odd.

    The window [x_minus, x_plus] in the mixing parameter is where one noisy
    step increases the fidelity; ``purifiable`` means the window meets (0, 1].
    """

    m: int
    q: float
    a: float
    b: float
    c: float
    discriminant: float
    x_minus: Optional[float]
    x_plus: Optional[float]
    purifiable: bool


def closed_cluster_alpha(q: float, m: int, k: int) -> float:
    """Spread coefficient of the noised pure component: q^k(1-q)^(M-k) + q^(M-k)(1-q)^k."""
    return q**k * (1.0 - q) ** (m - k) + q ** (m - k) * (1.0 - q) ** k


def closed_cluster_abc(q: float, m: int) -> tuple[float, float, float]:
    """The three scalars the gain condition is built from.

    C is evaluated in the exact factored form (q^2 + (1-q)^2)^M, which is the
    stable rewrite of the direct (1-q)^(2M) [1 + (q/(1-q))^2]^M product.
    """
    b = 0.5**m
    a = q**m + (1.0 - q) ** m - b
    c = (q * q + (1.0 - q) * (1.0 - q)) ** m - b + (2.0 * q * (1.0 - q)) ** m
    return a, b, c


def closed_cluster_gamma_direct(q: float, m: int, x: float) -> float:
    """Success probability by direct binomial summation (independent check of x^2 C + B)."""
    b = 0.5**m
    total = 0.0
    for k in range((m - 1) // 2 + 1):
        lam = x * closed_cluster_alpha(q, m, k) + (1.0 - x) * b
        total += _binomial(m, k) * lam * lam
    total += 2 ** (m - 1) * ((1.0 - x) * b) ** 2
    return total


def closed_cluster_delta(q: float, m: int) -> float:
    """Discriminant of the gain-window quadratic; positive iff the window is real."""
    a, b, c = closed_cluster_abc(q, m)
    return (a * a - b * c) ** 2 + 4.0 * c * (1.0 - b) * (2.0 * a * b - b * (1.0 - b))


def closed_cluster_step_fidelity(q: float, m: int, x: float) -> float:
    """Fidelity after one noisy step on the mixing-parameter-x state: (xA+B)^2 / (x^2 C + B)."""
    a, b, c = closed_cluster_abc(q, m)
    return (x * a + b) ** 2 / (x * x * c + b)


def closed_cluster(q: float, m: int) -> ClosedClusterResult:
    """Gain window of one noisy step for the closed chain on 2M vertices.

    The window endpoints solve C(1-B) x^2 - (A^2 - BC) x - (2AB - B(1-B)) = 0;
    note the factor 2 in the denominator of the root formula, required for
    the noiseless limit q=1 to give x_plus = 1 exactly.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError(f"closed-chain analysis needs odd M >= 3, got {m}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    a, b, c = closed_cluster_abc(q, m)
    delta = closed_cluster_delta(q, m)
    if delta <= 0.0:
        return ClosedClusterResult(m, q, a, b, c, delta, None, None, False)
    root = math.sqrt(delta)
    denom = 2.0 * c * (1.0 - b)
    x_minus = ((a * a - b * c) - root) / denom
    x_plus = ((a * a - b * c) + root) / denom
    purifiable = x_plus > 0.0 and x_minus <= 1.0
    return ClosedClusterResult(m, q, a, b, c, delta, x_minus, x_plus, purifiable)


def closed_cluster_qcrit(m: int, tol: float = 1e-8) -> float:
    """Smallest q in (0.5, 1) where the gain window opens (sign change of the discriminant).

    Scans with step 1e-3 for a bracket, then bisects; raises if no sign
    change is found.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError(f"closed-chain analysis needs odd M >= 3, got {m}")
    step = 1e-3
    q = 0.5 + step
    prev = closed_cluster_delta(q, m)
    lo = hi = None
    while q < 1.0:
        nxt = q + step
        cur = closed_cluster_delta(min(nxt, 1.0 - 1e-12), m)
        if prev <= 0.0 < cur:
            lo, hi = q, min(nxt, 1.0)
            break
        prev = cur
        q = nxt
    if lo is None:
        raise ValueError(f"no sign change of the gain discriminant for M={m}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if closed_cluster_delta(mid, m) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
