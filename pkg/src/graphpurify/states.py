"""Graph-diagonal mixed states as probability vectors over basis labels.

A state is a vector of 2^n nonnegative reals summing to one; entry 0 is the
purification target.  All operations are pure (they return new states), so
concurrent evaluation across a parameter grid is safe.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .graphs import TwoColorableGraph, flip_pattern, label_to_string, string_to_label
from .transforms import apply_flip

SUM_TOL = 1e-12
NEG_FLOOR = -1e-14

# diagnostic counter for values clamped up to zero by _normalize
clamp_stats = {"clamped": 0}


class NormalizationError(ValueError):
    """A probability vector failed the normalization or positivity checks."""


@dataclass
class LabelDistribution:
    """Probability vector over the 2^n graph-basis labels of ``graph``."""

    graph: TwoColorableGraph
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = _normalize(np.asarray(self.probs, dtype=float), check=True)
        if self.probs.size != 1 << self.graph.n:
            raise ValueError(
                f"expected {1 << self.graph.n} entries for n={self.graph.n}, got {self.probs.size}"
            )

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def fidelity(self) -> float:
        """Overlap with the target state, i.e. the weight of label 0."""
        return float(self.probs[0])

    def copy(self) -> "LabelDistribution":
        return LabelDistribution(self.graph, self.probs.copy())


def _normalize(probs: np.ndarray, check: bool = False) -> np.ndarray:
    """Clamp tiny negatives to zero and rescale to unit sum."""
    low = probs.min() if probs.size else 0.0
    if low < NEG_FLOOR:
        raise NormalizationError(f"negative probability {low} below floor {NEG_FLOOR}")
    if low < 0.0:
        probs = np.where(probs < 0.0, 0.0, probs)
        clamp_stats["clamped"] += 1
    total = probs.sum()
    if check and abs(total - 1.0) > SUM_TOL:
        raise NormalizationError(f"probabilities sum to {total}, not 1")
    if total <= 0.0:
        raise NormalizationError("probability vector has zero total weight")
    return probs / total


@dataclass(frozen=True)
class NoiseChannel:
    """Single-qubit Pauli-diagonal channel acting on a label distribution.

    Kinds: ``depolarizing`` (reliability q, q=1 noiseless), ``bitflip`` and
    ``phaseflip`` (reliability p).
    """

    kind: str
    qubit: int
    param: float

    def __post_init__(self) -> None:
        if self.kind not in ("depolarizing", "bitflip", "phaseflip"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.param <= 1.0:
            raise ValueError(f"channel parameter must be in [0, 1], got {self.param}")


def pure_state(graph: TwoColorableGraph) -> LabelDistribution:
    probs = np.zeros(1 << graph.n)
    probs[0] = 1.0
    return LabelDistribution(graph, probs)


def werner_state(graph: TwoColorableGraph, x: float) -> LabelDistribution:
    """Mixture of the target with the fully mixed state: x at label 0 plus (1-x)/2^n everywhere."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"werner parameter must be in [0, 1], got {x}")
    dim = 1 << graph.n
    probs = np.full(dim, (1.0 - x) / dim)
    probs[0] += x
    return LabelDistribution(graph, probs)


def channel_noise_state(graph: TwoColorableGraph, q: float) -> LabelDistribution:
    """Target state after a depolarizing channel with reliability q on every qubit."""
    state = pure_state(graph)
    for v in range(1, graph.n + 1):
        state = apply_channel(state, NoiseChannel("depolarizing", v, q))
    return state


def binary_family_state(graph: TwoColorableGraph, fidelity: float) -> LabelDistribution:
    """One-parameter family supported on labels whose color-B bits vanish.

    Weight ``fidelity`` sits at label 0 and the rest is spread uniformly over
    the remaining color-A sublabels; the family is closed under protocol P1.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {fidelity}")
    from .transforms import slice_layout

    lay = slice_layout(graph.n, graph.mask_b)  # pinned = B bits, combined = A bits
    n_a = lay.n_combined
    probs = np.zeros(1 << graph.n)
    a_labels = lay.index2d[0]  # B-sublabel 0 slice: all labels with zero B bits
    if n_a == 0:
        probs[0] = 1.0
    else:
        rest = (1.0 - fidelity) / (2**n_a - 1) if 2**n_a > 1 else 0.0
        probs[a_labels] = rest
        probs[0] = fidelity
    return LabelDistribution(graph, probs)


def make_state(graph: TwoColorableGraph, family: str, param: Optional[float] = None) -> LabelDistribution:
    """Dispatch on a family name: pure, werner(x), channel_noise(q), binary_family(F)."""
    if family == "pure":
        return pure_state(graph)
    if param is None:
        raise ValueError(f"family {family!r} needs a parameter")
    if family == "werner":
        return werner_state(graph, param)
    if family == "channel_noise":
        return channel_noise_state(graph, param)
    if family == "binary_family":
        return binary_family_state(graph, param)
    raise ValueError(f"unknown state family {family!r}")


def apply_channel(state: LabelDistribution, channel: NoiseChannel) -> LabelDistribution:
    """Apply a single-qubit Pauli-diagonal channel via its label-flip masks."""
    graph = state.graph
    if not 1 <= channel.qubit <= graph.n:
        raise ValueError(f"channel qubit {channel.qubit} outside graph with n={graph.n}")
    p = state.probs
    par = channel.param
    if channel.kind == "depolarizing":
        mx = flip_pattern(graph, channel.qubit, "x").mask
        my = flip_pattern(graph, channel.qubit, "y").mask
        mz = flip_pattern(graph, channel.qubit, "z").mask
        out = (1 + 3 * par) / 4 * p + (1 - par) / 4 * (
            apply_flip(p, mx) + apply_flip(p, my) + apply_flip(p, mz)
        )
    elif channel.kind == "bitflip":
        mx = flip_pattern(graph, channel.qubit, "x").mask
        out = (1 + par) / 2 * p + (1 - par) / 2 * apply_flip(p, mx)
    else:  # phaseflip
        mz = flip_pattern(graph, channel.qubit, "z").mask
        out = (1 + par) / 2 * p + (1 - par) / 2 * apply_flip(p, mz)
    return LabelDistribution(graph, _normalize(out))


def depolarize_all(state: LabelDistribution, q: float) -> LabelDistribution:
    """Depolarizing channel with reliability q on every qubit."""
    out = state
    for v in range(1, state.graph.n + 1):
        out = apply_channel(out, NoiseChannel("depolarizing", v, q))
    return out


def binary_entropy(p0: float, p1: Optional[float] = None) -> float:
    """Shannon entropy of a bit in base 2, with 0*log(0) := 0."""
    if p1 is None:
        p1 = 1.0 - p0
    ent = 0.0
    for p in (p0, p1):
        if p > 0.0:
            ent -= p * np.log2(p)
    return float(ent)


@dataclass(frozen=True)
class Diagnostics:
    """Scalar summaries of a label distribution."""

    fidelity: float
    bit_marginals: np.ndarray  # shape (n, 2): P(bit_j = 0), P(bit_j = 1)
    bit_entropies: np.ndarray  # shape (n,)


def diagnostics(state: LabelDistribution) -> Diagnostics:
    n = state.n
    idx = np.arange(1 << n)
    marg = np.empty((n, 2))
    ent = np.empty(n)
    for v in range(1, n + 1):
        p1 = float(state.probs[(idx >> (v - 1) & 1) == 1].sum())
        marg[v - 1] = (1.0 - p1, p1)
        ent[v - 1] = binary_entropy(1.0 - p1, p1)
    return Diagnostics(state.fidelity, marg, ent)


# -- CSV serialization --------------------------------------------------------

OMIT_BELOW = 1e-15


def write_state_csv(state: LabelDistribution, handle: TextIO, omit_below: float = OMIT_BELOW) -> None:
    """Serialize as (label-as-binary-string, probability) rows; tiny entries omitted."""
    handle.write(f"# graph: {state.graph.spec or 'custom'}\n")
    handle.write("label,probability\n")
    n = state.n
    for label, prob in enumerate(state.probs):
        if prob >= omit_below:
            handle.write(f"{label_to_string(label, n)},{prob!r}\n")


def state_to_csv(state: LabelDistribution) -> str:
    buf = io.StringIO()
    write_state_csv(state, buf)
    return buf.getvalue()


def read_state_csv(handle: TextIO, graph: TwoColorableGraph) -> LabelDistribution:
    probs = np.zeros(1 << graph.n)
    for line in handle:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("label,"):
            continue
        label_str, value = line.split(",")
        probs[string_to_label(label_str)] = float(value)
    return LabelDistribution(graph, _normalize(probs))
