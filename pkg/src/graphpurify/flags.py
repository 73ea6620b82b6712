"""Joint tracking of basis labels and classical error flags for chain states.

The noise source keeps a record: whenever it applies a Pauli to a qubit it
also updates an n-bit flag, so the ensemble is described by a matrix M with
rows indexed by the chain-basis label and columns by the flag.  Physical
action multiplies from the left, flag bookkeeping from the right.

Position convention: within this module sub-protocol P1 reads its syndrome
on the even positions 2, 4, ... (the chain coloring here assigns color A to
the even vertices), so the surviving flag XORs on odd positions and keeps
the first copy's even bits; P2 exchanges even and odd.  The reset rule
zeroes the flag whenever a copy is kept that flag-aware logic would have
discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graphs import TwoColorableGraph, bit, chain_graph
from .protocol import P1, P2, PurificationFailure
from .states import LabelDistribution
from .transforms import slice_layout, two_copy_xor_step

DepolarizingWeights = tuple[float, float, float, float]


def depolarizing_weights(p: float) -> DepolarizingWeights:
    """(identity, x, y, z) weights of a depolarizing channel with reliability p."""
    e = (1.0 - p) / 4.0
    return ((1.0 + 3.0 * p) / 4.0, e, e, e)


@dataclass
class FlagMatrix:
    """Joint distribution over (label, flag) pairs for an open chain of n qubits."""

    n: int
    m: np.ndarray

    def __post_init__(self) -> None:
        dim = 1 << self.n
        self.m = np.asarray(self.m, dtype=float)
        if self.m.shape != (dim, dim):
            raise ValueError(f"matrix must be {dim}x{dim} for n={self.n}")
        if self.m.min() < -1e-14:
            raise ValueError("negative weight in flag matrix")
        if abs(self.m.sum() - 1.0) > 1e-12:
            raise ValueError("flag matrix must sum to one")

    @property
    def graph(self) -> TwoColorableGraph:
        return chain_graph(self.n)

    def label_marginal(self) -> LabelDistribution:
        return LabelDistribution(self.graph, self.m.sum(axis=1))

    @staticmethod
    def from_state(state: LabelDistribution) -> "FlagMatrix":
        """Wrap a label distribution with all flags zero (untracked prior noise)."""
        dim = state.probs.size
        m = np.zeros((dim, dim))
        m[:, 0] = state.probs
        return FlagMatrix(state.graph.n, m)


def _even_mask(n: int) -> int:
    return sum(bit(v) for v in range(2, n + 1, 2))


def _odd_mask(n: int) -> int:
    return sum(bit(v) for v in range(1, n + 1, 2))


def demon_channel(matrix: FlagMatrix, qubit: int, weights: DepolarizingWeights) -> FlagMatrix:
    """Recorded single-qubit Pauli noise.

    A z branch flips label bit i and flag bit i; an x branch flips the
    neighbor label bits i-1, i+1 and the same flag bits (only existing
    neighbors at the chain ends); the y branch composes both.
    """
    n = matrix.n
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit {qubit} out of range 1..{n}")
    f0, fx, fy, fz = weights
    if min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must be a probability 4-tuple")
    nbr = matrix.graph.neighbor_masks[qubit - 1]
    mz = bit(qubit)
    masks = (fx, nbr), (fy, nbr ^ mz), (fz, mz)
    dim = 1 << n
    idx = np.arange(dim)
    out = f0 * matrix.m
    for weight, mask in masks:
        if weight:
            perm = idx ^ mask
            out += weight * matrix.m[np.ix_(perm, perm)]
    return FlagMatrix(n, out)


def flag_update_p1(kappa: int, lam: int, n: int) -> int:
    """Flag of the surviving copy for P1: XOR on odd positions, kappa kept on even.

    If the two even-position flag patterns disagree, errors conspired to keep
    a copy flag-aware logic would have discarded and the flag resets to zero.
    """
    even = _even_mask(n)
    if (kappa ^ lam) & even:
        return 0
    return (kappa & even) | ((kappa ^ lam) & _odd_mask(n))


def flag_update_p2(kappa: int, lam: int, n: int) -> int:
    """P2 variant: exchange even and odd positions."""
    odd = _odd_mask(n)
    if (kappa ^ lam) & odd:
        return 0
    return (kappa & odd) | ((kappa ^ lam) & _even_mask(n))


def flag_step(
    matrix: FlagMatrix,
    which: str,
    weights: Optional[DepolarizingWeights | Sequence[DepolarizingWeights]] = None,
) -> tuple[FlagMatrix, float]:
    """One noisy sub-protocol step on two identical copies of the ensemble.

    Applies the recorded noise to every qubit of both copies, combines all
    label and flag pairs through the CNOT relabeling, keeps copies whose
    measured syndrome vanishes, and updates flags (including the reset
    rule).  Returns the renormalized matrix and the kept probability.
    """
    n = matrix.n
    if which not in (P1, P2):
        raise ValueError(f"sub-protocol must be {P1!r} or {P2!r}")
    if weights is not None:
        if isinstance(weights[0], (tuple, list, np.ndarray)):
            per_qubit = [tuple(w) for w in weights]
        else:
            per_qubit = [tuple(weights)] * n
        for v in range(1, n + 1):
            matrix = demon_channel(matrix, v, per_qubit[v - 1])

    keep_mask = _even_mask(n) if which == P1 else _odd_mask(n)
    dim = 1 << n
    # Matching flag pairs: exactly the two-copy step on the composite
    # (label, flag) space, pinning the keep-side bits of both.
    composite_pin = (keep_mask << n) | keep_mask
    vec = matrix.m.reshape(-1)  # index = label * 2^n + flag
    out_vec, matched = two_copy_xor_step(vec, vec, 2 * n, composite_pin)
    out = out_vec.reshape(dim, dim)

    # Kept label pairs whose keep-side flags disagree land at flag zero.
    flag_lay = slice_layout(n, keep_mask)
    re = matrix.m[:, flag_lay.index2d].sum(axis=2)  # [label, keep-side flag value]
    rowsum = matrix.m.sum(axis=1)
    label_lay = slice_layout(n, keep_mask)
    reset_total = 0.0
    for pinned in range(1 << label_lay.n_pinned):
        labels = label_lay.index2d[pinned]
        block = np.outer(rowsum[labels], rowsum[labels]) - re[labels] @ re[labels].T
        size = labels.size
        for i in range(size):
            targets = labels[np.arange(size) ^ i]
            np.add.at(out[:, 0], targets, block[i])
        reset_total += float(block.sum())

    success = matched + reset_total
    if success <= 0.0:
        raise PurificationFailure(f"{which} kept zero weight")
    return FlagMatrix(n, out / success), success


def fidelities(matrix: FlagMatrix) -> tuple[float, float]:
    """Plain fidelity (target row mass) and conditional fidelity (trace).

    The conditional fidelity scores each flag sub-ensemble against the basis
    state whose label equals the flag, i.e. the state the noise record says
    the copy is in.
    """
    return float(matrix.m[0].sum()), float(np.trace(matrix.m))


@dataclass
class FlagTrace:
    """Per-step record of a tracked purification run."""

    rows: list[tuple[int, str, float, float, float]]  # step, which, F, F_cond, success
    final: FlagMatrix


def flag_run(
    matrix: FlagMatrix,
    gate_noise: float,
    steps: int,
    start_with: str = P1,
) -> FlagTrace:
    """Alternate P1/P2 for a number of steps with depolarizing noise weights."""
    weights = depolarizing_weights(gate_noise)
    rows = []
    which = start_with
    for step in range(1, steps + 1):
        matrix, success = flag_step(matrix, which, weights)
        f, f_cond = fidelities(matrix)
        rows.append((step, which, f, f_cond, success))
        which = P2 if which == P1 else P1
    return FlagTrace(rows, matrix)
