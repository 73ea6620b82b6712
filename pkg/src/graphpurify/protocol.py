"""Recurrence sub-protocols P1/P2, sequencing strategies, and hashing.

Each step consumes two copies of a graph-diagonal state.  P1 pins the
color-A label bits (both copies must agree there, enforced by the measured
copy's syndrome) and XOR-combines the color-B bits; P2 exchanges the roles.
Gate noise is one depolarizing channel per qubit per copy, applied before
the perfect combination map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .graphs import TwoColorableGraph
from .states import LabelDistribution, _normalize, binary_entropy, depolarize_all, diagnostics
from .transforms import two_copy_xor_step

P1 = "P1"
P2 = "P2"

# a converged fixed point at most this far above the fully mixed fidelity
# counts as the trivial attractor
TRIVIAL_MARGIN = 0.02


class PurificationFailure(RuntimeError):
    """Post-selection kept zero weight; the protocol cannot proceed."""


@dataclass
class StepResult:
    """Post-selected, renormalized output of one two-copy step."""

    state: LabelDistribution
    success_prob: float


def _pinned_mask(graph: TwoColorableGraph, which: str) -> int:
    if which == P1:
        return graph.mask_a
    if which == P2:
        return graph.mask_b
    raise ValueError(f"sub-protocol must be {P1!r} or {P2!r}, got {which!r}")


def combine_two_copies(
    state1: LabelDistribution,
    state2: LabelDistribution,
    which: str,
    gate_noise: float = 1.0,
) -> StepResult:
    """One sub-protocol step on two (possibly different) copies.

    With distinct inputs the XOR convolution becomes a cross-correlation of
    the two distributions; this is the kernel entanglement pumping uses.
    The surviving copy's distribution is symmetric in the two inputs.
    """
    graph = state1.graph
    if state2.graph is not graph and state2.graph != graph:
        raise ValueError("both copies must live on the same graph")
    if not 0.0 <= gate_noise <= 1.0:
        raise ValueError(f"gate noise parameter must be in [0, 1], got {gate_noise}")
    if gate_noise < 1.0:
        state1 = depolarize_all(state1, gate_noise)
        state2 = depolarize_all(state2, gate_noise) if state2 is not state1 else state1
    out, weight = two_copy_xor_step(
        state1.probs, state2.probs, graph.n, _pinned_mask(graph, which)
    )
    if weight <= 0.0:
        raise PurificationFailure(f"{which} kept zero weight")
    return StepResult(LabelDistribution(graph, _normalize(out)), weight)


def apply_subprotocol(
    state: LabelDistribution, which: str, gate_noise: float = 1.0
) -> StepResult:
    """Sub-protocol step on two identical copies of ``state``.

    Noise is applied once per qubit per copy (each qubit takes part in
    exactly one local CNOT), then the perfect map combines the copies and
    keeps only the all-zero measurement syndrome.  ``success_prob`` is the
    total kept weight, the inner product of the two pinned-side marginals.
    """
    if gate_noise < 1.0:
        state = depolarize_all(state, gate_noise)
    out, weight = two_copy_xor_step(
        state.probs, state.probs, state.graph.n, _pinned_mask(state.graph, which)
    )
    if weight <= 0.0:
        raise PurificationFailure(f"{which} kept zero weight")
    return StepResult(LabelDistribution(state.graph, _normalize(out)), weight)


def binary_p1_map(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
    """P1 restricted to states supported on zero color-B bits: square and renormalize.

    Returns the new coefficients and the success probability K = sum of
    squares.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.min() < 0.0:
        raise ValueError("coefficients must be nonnegative")
    k = float(coeffs @ coeffs)
    if k <= 0.0:
        raise ValueError("all-zero coefficient vector")
    return coeffs * coeffs / k, k


# -- sequencing ---------------------------------------------------------------


@dataclass(frozen=True)
class Strategy:
    """Order in which the sub-protocols are applied.

    ``alternate`` flips between P1 and P2 starting from ``start``; ``fixed``
    cycles a nonempty token sequence; ``adaptive_greedy`` picks, at each
    step, whichever sub-protocol yields the larger next fidelity.
    """

    kind: str
    start: str = P1
    sequence: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in ("alternate", "fixed", "adaptive_greedy"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "fixed" and not self.sequence:
            raise ValueError("fixed strategy needs a nonempty sequence")

    @staticmethod
    def alternate(start: str = P1) -> "Strategy":
        return Strategy("alternate", start=start)

    @staticmethod
    def fixed(sequence: Sequence[str]) -> "Strategy":
        return Strategy("fixed", sequence=tuple(sequence))

    @staticmethod
    def adaptive() -> "Strategy":
        return Strategy("adaptive_greedy")

    def planned(self, step: int) -> Optional[str]:
        """Sub-protocol for 1-based ``step``; None when adaptive."""
        if self.kind == "alternate":
            other = P2 if self.start == P1 else P1
            return self.start if step % 2 == 1 else other
        if self.kind == "fixed":
            return self.sequence[(step - 1) % len(self.sequence)]
        return None


class TraceEntry(NamedTuple):
    step: int
    which: str
    fidelity: float
    success_prob: float


@dataclass
class SequenceResult:
    """Trace of an iterated recurrence run.

    ``outcome`` is ``converged`` (per-step or period-2 fidelity residual
    below tolerance), ``unpurifiable`` (converged onto the trivial fixed
    point near the fully mixed state), or ``max_steps``.
    """

    trace: list[TraceEntry]
    outcome: str
    state: LabelDistribution

    @property
    def final_fidelity(self) -> float:
        return self.trace[-1].fidelity if self.trace else self.state.fidelity

    def cycle_fidelity(self) -> float:
        """Largest fidelity over the attracting cycle (last two steps)."""
        tail = [entry.fidelity for entry in self.trace[-2:]]
        return max(tail) if tail else self.state.fidelity

    def cumulative_costs(self) -> list[float]:
        """Average copies consumed per surviving copy after each step: prod of 2/K."""
        costs = []
        cost = 1.0
        for entry in self.trace:
            cost *= 2.0 / entry.success_prob
            costs.append(cost)
        return costs


def run_sequence(
    state: LabelDistribution,
    strategy: Strategy,
    gate_noise: float = 1.0,
    max_steps: int = 200,
    fixpoint_tol: float = 1e-10,
) -> SequenceResult:
    """Iterate the recurrence on its own output (two identical copies per step).

    Stops when the per-step fidelity change, or the period-2 residual of an
    alternating cycle, drops below ``fixpoint_tol``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    trace: list[TraceEntry] = []
    fidelities = [state.fidelity]
    uniform = 1.0 / (1 << state.graph.n)
    outcome = "max_steps"
    for step in range(1, max_steps + 1):
        which = strategy.planned(step)
        if which is None:  # greedy single-step lookahead
            res1 = apply_subprotocol(state, P1, gate_noise)
            res2 = apply_subprotocol(state, P2, gate_noise)
            which, result = max(
                ((P1, res1), (P2, res2)), key=lambda pair: pair[1].state.fidelity
            )
        else:
            result = apply_subprotocol(state, which, gate_noise)
        state = result.state
        fidelities.append(state.fidelity)
        trace.append(TraceEntry(step, which, state.fidelity, result.success_prob))
        if abs(fidelities[-1] - fidelities[-2]) < fixpoint_tol:
            outcome = "converged"
            break
        if (
            len(fidelities) >= 5
            and abs(fidelities[-1] - fidelities[-3]) < fixpoint_tol
            and abs(fidelities[-2] - fidelities[-4]) < fixpoint_tol
        ):
            outcome = "converged"
            break
    if outcome == "converged" and max(fidelities[-2:]) <= uniform + TRIVIAL_MARGIN:
        outcome = "unpurifiable"
    return SequenceResult(trace, outcome, state)


# -- hashing ------------------------------------------------------------------


@dataclass(frozen=True)
class HashingYield:
    """Asymptotic hashing rate; ``raw`` may be negative, ``rate`` is clamped at 0."""

    rate: float
    raw: float


def hashing_yield(state: LabelDistribution) -> HashingYield:
    """One minus the worst color-A and color-B label-bit entropies."""
    ent = diagnostics(state).bit_entropies
    graph = state.graph
    worst_a = max(ent[v - 1] for v in graph.color_a) if graph.color_a else 0.0
    worst_b = max(ent[v - 1] for v in graph.color_b) if graph.color_b else 0.0
    raw = 1.0 - worst_a - worst_b
    return HashingYield(max(raw, 0.0), raw)


def werner_hashing_threshold(tol: float = 1e-9) -> float:
    """Smallest werner parameter with positive hashing yield: root of 1 - 2 S((1+x)/2)."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if 1.0 - 2.0 * binary_entropy((1.0 + mid) / 2.0) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def parity_readout(
    graph: TwoColorableGraph,
    labels: Sequence[int],
    side: str = "A",
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Accumulate m copies onto the last one and read out its parity string.

    Multilateral CNOTs XOR the chosen side's label bits of the first m-1
    copies onto copy m; measuring copy m (sigma_x on the readout side,
    sigma_z on the other) then reveals the parity of all m hidden strings on
    that side.  Returns the parity mask restricted to the readout side.
    """
    if len(labels) < 2:
        raise ValueError("parity readout needs at least two copies")
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    rng = rng or np.random.default_rng()
    side_mask = graph.mask_a if side == "A" else graph.mask_b
    other_mask = graph.mask_b if side == "A" else graph.mask_a
    read_vertices = graph.color_a if side == "A" else graph.color_b

    accumulated = labels[-1]
    for lab in labels[:-1]:
        accumulated ^= lab & side_mask

    # Measurement outcomes: the z-basis results on the non-readout side are
    # uniformly random; the x-basis results follow from the eigenvalue
    # relation for the accumulated label.
    zeta = int(rng.integers(0, 1 << graph.n)) & other_mask
    xi = 0
    for j in read_vertices:
        parity = (accumulated >> (j - 1)) & 1
        nbr_parity = (zeta & graph.neighbor_masks[j - 1]).bit_count() & 1
        xi |= (parity ^ nbr_parity) << (j - 1)

    # Readout rule: bit j = xi_j xor parity of zeta over j's neighbors.
    readout = 0
    for j in read_vertices:
        nbr_parity = (zeta & graph.neighbor_masks[j - 1]).bit_count() & 1
        readout |= ((((xi >> (j - 1)) & 1) ^ nbr_parity)) << (j - 1)
    return readout
