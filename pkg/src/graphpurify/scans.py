"""Numerical threshold and fixed-point scans.

Covers the generic gate-noise model (fixed points F_max, purification
windows, thresholds in werner weight, channel reliability, and gate
reliability), the restricted flip-noise model that keeps binary-like
mixtures closed under P1, and the comparison bound built from the
best-known bipartite recurrence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .graphs import TwoColorableGraph, ghz_graph
from .protocol import P1, P2, Strategy, run_sequence
from .states import LabelDistribution, binary_family_state, werner_state

BISECT_TOL = 1e-4
MAX_STEPS = 500
FIXPOINT_TOL = 1e-10


@dataclass
class ScanRecord:
    """Outcome of a threshold scan over one parameter."""

    graph_spec: str
    noise_family: str
    parameter: str
    threshold: float
    f_min: Optional[float] = None
    f_max: Optional[float] = None
    steps_to_converge: Optional[int] = None


class BracketError(RuntimeError):
    """The purifiability predicate is not monotone across the scan bracket."""


def _bisect(predicate: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Bisect for the smallest value where ``predicate`` turns true.

    The caller guarantees predicate(lo) is False and predicate(hi) is True;
    both edges are re-checked so a non-monotone bracket is reported rather
    than silently resolved.
    """
    if predicate(lo):
        raise BracketError(f"predicate already true at lower edge {lo}")
    if not predicate(hi):
        raise BracketError(f"predicate false at upper edge {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- generic gate-noise fixed points -------------------------------------------


def _fixed_point_fidelity(
    state: LabelDistribution,
    gate_noise: float,
    max_steps: int = MAX_STEPS,
    strategies: Optional[list[Strategy]] = None,
) -> float:
    """Best attracting-cycle fidelity over the sequencing strategies."""
    if strategies is None:
        strategies = [Strategy.alternate(P1), Strategy.alternate(P2), Strategy.adaptive()]
    best = 0.0
    for strategy in strategies:
        res = run_sequence(state, strategy, gate_noise, max_steps, FIXPOINT_TOL)
        best = max(best, res.cycle_fidelity())
    return best


def find_fmax(graph: TwoColorableGraph, gate_noise: float, max_steps: int = MAX_STEPS) -> float:
    """Attracting fixed-point fidelity reached from a high-fidelity start.

    Runs the alternating strategy in both orders plus the greedy strategy
    and returns the best attracting-cycle fidelity.
    """
    return _fixed_point_fidelity(werner_state(graph, 0.99), gate_noise, max_steps)


def _purifies_to(
    state: LabelDistribution, gate_noise: float, f_max: float, max_steps: int = MAX_STEPS
) -> bool:
    """Spec predicate: fidelity gain > 1e-6 and convergence onto the known fixed point."""
    start = state.fidelity
    for strategy in (Strategy.alternate(P1), Strategy.alternate(P2), Strategy.adaptive()):
        res = run_sequence(state, strategy, gate_noise, max_steps, FIXPOINT_TOL)
        final = res.cycle_fidelity()
        if final - start > 1e-6 and abs(final - f_max) < 1e-6:
            return True
    return False


def find_threshold(
    graph: TwoColorableGraph,
    scan: str,
    gate_noise: float = 1.0,
    tol: float = BISECT_TOL,
    max_steps: int = MAX_STEPS,
) -> ScanRecord:
    """Bisect a purifiability threshold.

    ``scan`` is one of ``x_min`` (werner weight at fixed gate noise),
    ``q_min`` (transmission reliability at fixed gate noise), or ``p_min``
    (gate reliability; the predicate is that a purification window exists).
    """
    from .states import channel_noise_state

    if scan in ("x_min", "q_min"):
        f_max = find_fmax(graph, gate_noise, max_steps)
        make = werner_state if scan == "x_min" else channel_noise_state

        def predicate(value: float) -> bool:
            return _purifies_to(make(graph, value), gate_noise, f_max, max_steps)

        threshold = _bisect(predicate, 0.0, 1.0, tol)
        state = make(graph, threshold)
        return ScanRecord(graph.spec, scan, scan, threshold, f_min=state.fidelity, f_max=f_max)

    if scan == "p_min":

        def window_exists(p: float) -> bool:
            return _window_exists(graph, p, max_steps)

        threshold = _bisect(window_exists, 0.0, 1.0, tol)
        return ScanRecord(graph.spec, "gate_noise", "p_min", threshold)

    raise ValueError(f"scan must be x_min, q_min or p_min, got {scan!r}")


def _window_exists(graph: TwoColorableGraph, gate_noise: float, max_steps: int = MAX_STEPS) -> bool:
    """A nontrivial attracting fixed point survives at this gate reliability.

    Below threshold the iteration from a high-fidelity start collapses onto
    the fully mixed state; above it the fixed point stays macroscopically
    above the trivial fidelity.
    """
    uniform = 1.0 / (1 << graph.n)
    f_fix = _fixed_point_fidelity(werner_state(graph, 0.99), gate_noise, max_steps)
    return f_fix > max(2.5 * uniform, uniform + 0.05)


def purification_window(
    graph: TwoColorableGraph,
    gate_noise: float,
    tol: float = BISECT_TOL,
    max_steps: int = MAX_STEPS,
) -> tuple[float, float]:
    """(F_min, F_max) for the generic model at fixed gate reliability."""
    f_max = find_fmax(graph, gate_noise, max_steps)

    def predicate(x: float) -> bool:
        return _purifies_to(werner_state(graph, x), gate_noise, f_max, max_steps)

    x_min = _bisect(predicate, 0.0, min(1.0, _werner_x(graph, f_max)), tol)
    return werner_state(graph, x_min).fidelity, f_max


def _werner_x(graph: TwoColorableGraph, fidelity: float) -> float:
    dim = 1 << graph.n
    return (fidelity - 1.0 / dim) / (1.0 - 1.0 / dim)


# -- restricted flip-noise model -------------------------------------------------


def restricted_flip_masks(graph: TwoColorableGraph, phase_on_a: bool = True) -> tuple[int, list[int]]:
    """Flip masks in the color-A sublabel space for the family-preserving noise.

    A bit flip on a color-B vertex toggles the label bits of its (color-A)
    neighbors; a phase flip on a color-A vertex toggles its own label bit.
    Both keep the support inside the zero-B-label family.
    """
    a_vertices = sorted(graph.color_a)
    a_pos = {v: i for i, v in enumerate(a_vertices)}
    masks = []
    for k in sorted(graph.color_b):
        mask = 0
        for v in graph.neighbors(k):
            mask |= 1 << a_pos[v]
        masks.append(mask)
    if phase_on_a:
        masks.extend(1 << a_pos[j] for j in a_vertices)
    return len(a_vertices), masks


def restricted_step(coeffs: np.ndarray, perms: list[np.ndarray], q: float) -> np.ndarray:
    """Noise layer on both (identical) copies, then the perfect P1 square map."""
    lam = coeffs
    for perm in perms:
        lam = q * lam + (1.0 - q) * lam[perm]
    lam = lam * lam
    return lam / lam.sum()


def restricted_purifiable(
    n_a: int,
    masks: list[int],
    p: float,
    starts: tuple[float, ...] = (0.99, 0.8, 0.5),
    max_steps: int = 3000,
) -> bool:
    """Iterated P1 convergence onto a strictly target-dominant fixed point.

    The trivial attractor is the uniform vector, so the test is strict
    dominance of the target coefficient over the runner-up plus a small
    absolute margin above the uniform level.
    """
    dim = 1 << n_a
    idx = np.arange(dim)
    perms = [idx ^ m for m in masks]
    q = (1.0 + p) / 2.0
    floor = 1.0 / dim + min(0.01, 0.5 / dim)
    for start in starts:
        lam = np.full(dim, (1.0 - start) / dim)
        lam[0] += start
        for _ in range(max_steps):
            lam = restricted_step(lam, perms, q)
        second = np.partition(lam, -2)[-2] if dim > 1 else 0.0
        if lam[0] > floor and lam[0] > 1.02 * second:
            return True
    return False


def binary_error_pmin(
    graph: TwoColorableGraph,
    phase_on_a: bool = True,
    tol: float = 1e-3,
    max_steps: int = 3000,
) -> float:
    """Gate-reliability threshold under the restricted flip-noise model.

    Per step, every color-B qubit of both copies takes a bit-flip channel
    and (optionally) every color-A qubit a phase-flip channel, followed by a
    perfect P1; binary-family inputs stay in the family so only the 2^|A|
    color-A coefficients evolve.
    """
    n_a, masks = restricted_flip_masks(graph, phase_on_a)

    def predicate(p: float) -> bool:
        return restricted_purifiable(n_a, masks, p, max_steps=max_steps)

    return _bisect(predicate, 0.0, 1.0, tol)


# -- bipartite comparison ---------------------------------------------------------


@dataclass
class BellDiagonalState:
    """Bell-basis weights ordered (phi+, phi-, psi+, psi-)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (4,):
            raise ValueError("need exactly four Bell weights")
        if self.weights.min() < -1e-12 or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("Bell weights must be a normalized distribution")

    @property
    def fidelity(self) -> float:
        return float(self.weights[0])


def bell_werner(fidelity: float) -> BellDiagonalState:
    rest = (1.0 - fidelity) / 3.0
    return BellDiagonalState(np.array([fidelity, rest, rest, rest]))


def _bell_depolarize(w: np.ndarray, p: float) -> np.ndarray:
    """Depolarizing channel with reliability p on one qubit of the pair.

    In (amplitude, phase) coordinates phi+=(0,0), phi-=(0,1), psi+=(1,0),
    psi-=(1,1): a bit flip toggles the amplitude bit, a phase flip the phase
    bit, and the y branch both.
    """
    phip, phim, psip, psim = w
    keep = (1.0 + 3.0 * p) / 4.0
    e = (1.0 - p) / 4.0
    return np.array(
        [
            keep * phip + e * (psip + psim + phim),
            keep * phim + e * (psim + psip + phip),
            keep * psip + e * (phip + phim + psim),
            keep * psim + e * (phim + phip + psip),
        ]
    )


def dejmps_step(state: BellDiagonalState, gate_noise: float = 1.0) -> tuple[BellDiagonalState, float]:
    """One recurrence step of the Deutsch et al. bipartite protocol.

    Both pairs are rotated (swapping the phi- and psi+ weights), every qubit
    takes a depolarizing channel with the gate reliability, and the
    bilateral CNOT plus post-selection keeps pairs whose amplitude bits
    agree while XOR-combining the phase bits.
    """
    w = state.weights[[0, 2, 1, 3]]  # rotation: phi- <-> psi+
    if gate_noise < 1.0:
        w = _bell_depolarize(w, gate_noise)
        w = _bell_depolarize(w, gate_noise)
    phip, phim, psip, psim = w
    # amplitude bit pinned, phase bit XOR-combined
    out = np.array(
        [
            phip * phip + phim * phim,
            2.0 * phip * phim,
            psip * psip + psim * psim,
            2.0 * psip * psim,
        ]
    )
    success = float(out.sum())
    if success <= 0.0:
        raise ValueError("bipartite recurrence kept zero weight")
    return BellDiagonalState(out / success), success


def dejmps_fixed_point(
    gate_noise: float, start_fidelity: float = 0.95, tol: float = 1e-13, max_steps: int = 10000
) -> Optional[BellDiagonalState]:
    """Attracting Bell-diagonal fixed point of the noisy recurrence.

    Returns None when the iteration collapses to the fully mixed pair (the
    recurrence diverges at this noise level and the bound is undefined).
    """
    state = bell_werner(start_fidelity)
    for _ in range(max_steps):
        nxt, _ = dejmps_step(state, gate_noise)
        if np.abs(nxt.weights - state.weights).max() < tol:
            state = nxt
            break
        state = nxt
    if state.fidelity <= 0.3:
        return None
    return state


def bipartite_bound(gate_noise: float, target: TwoColorableGraph) -> float:
    """Upper bound on the target fidelity for schemes built from purified pairs.

    The fixed point of the noisy bipartite recurrence is written as a
    one-sided Pauli mixture on the far end of each distributed pair; those
    mixtures are applied to the perfect target state (dense representation)
    for every choice of hub vertex, and the most favorable hub is reported.
    """
    from .oracle import dense_from_labels, graph_basis, pauli_conjugate
    from .states import pure_state

    fixed = dejmps_fixed_point(gate_noise)
    if fixed is None:
        raise ValueError(f"bipartite recurrence diverges at gate reliability {gate_noise}")
    phip, phim, psip, psim = fixed.weights
    pauli_weights = {"x": psip, "y": psim, "z": phim}
    best = 0.0
    hubs = {1, 2} if target.n >= 2 else {1}
    for hub in hubs:
        rho = dense_from_labels(target, pure_state(target).probs)
        for v in range(1, target.n + 1):
            if v == hub:
                continue
            rho = (phip * rho) + sum(
                weight * pauli_conjugate(rho, axis, v - 1, target.n)
                for axis, weight in pauli_weights.items()
            )
        basis = graph_basis(target)
        fid = float(np.real(basis[:, 0].conj() @ rho @ basis[:, 0]))
        best = max(best, fid)
    return best
