"""Brute-force density-matrix reference for small qubit counts.

Everything here works on raw state vectors and density matrices in the
computational basis, with qubit v of a register stored in bit v-1 of the
index (two-copy systems put copy 1 in the low n bits).  No label-flip
shortcuts are used: graph states are built by applying controlled-phase
gates, channels act via partial traces and Pauli conjugation, and the
measurement step enumerates outcomes.  Size caps are hard errors.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .graphs import TwoColorableGraph, bit
from .protocol import P1, P2
from .states import LabelDistribution, NoiseChannel

MAX_VECTOR_QUBITS = 12
MAX_DENSITY_QUBITS = 5

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def _check_vector_cap(n: int) -> None:
    if n > MAX_VECTOR_QUBITS:
        raise ValueError(f"vector oracle capped at {MAX_VECTOR_QUBITS} qubits, got {n}")


def _check_density_cap(n: int) -> None:
    if n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density oracle capped at {MAX_DENSITY_QUBITS} qubits, got {n}")


# -- graph-state basis --------------------------------------------------------


def graph_state_vector(graph: TwoColorableGraph, label: int) -> np.ndarray:
    """State vector of a graph basis state: CZ gates on |+>^n, then sigma_z dressing."""
    _check_vector_cap(graph.n)
    dim = 1 << graph.n
    vec = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    idx = np.arange(dim)
    for a, b in graph.edges:
        both = ((idx >> (a - 1)) & (idx >> (b - 1))) & 1
        vec = np.where(both == 1, -vec, vec)
    for v in range(1, graph.n + 1):
        if label >> (v - 1) & 1:
            vec = np.where((idx >> (v - 1)) & 1 == 1, -vec, vec)
    return vec


@lru_cache(maxsize=32)
def _basis_cache(graph: TwoColorableGraph) -> np.ndarray:
    dim = 1 << graph.n
    basis = np.empty((dim, dim), dtype=complex)
    for label in range(dim):
        basis[:, label] = graph_state_vector(graph, label)
    basis.setflags(write=False)
    return basis


def graph_basis(graph: TwoColorableGraph) -> np.ndarray:
    """Matrix whose column mu is the basis vector with label mu."""
    return _basis_cache(graph)


def correlation_apply(graph: TwoColorableGraph, vertex: int, vec: np.ndarray) -> np.ndarray:
    """Apply the correlation operator of ``vertex`` (sigma_x there, sigma_z on neighbors)."""
    n = graph.n
    idx = np.arange(1 << n)
    signs = 1.0 - 2.0 * (_popcount(idx & graph.neighbor_masks[vertex - 1]) & 1)
    return (signs * vec)[idx ^ bit(vertex)]


def _popcount(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    work = arr.copy()
    while work.any():
        out += work & 1
        work >>= 1
    return out


def dense_from_labels(graph: TwoColorableGraph, probs: np.ndarray) -> np.ndarray:
    """Density matrix of a graph-diagonal state with the given label weights."""
    _check_density_cap(graph.n)
    basis = graph_basis(graph)
    return (basis * np.asarray(probs)) @ basis.conj().T


def graph_diagonal(graph: TwoColorableGraph, rho: np.ndarray) -> np.ndarray:
    """Graph-basis diagonal of a density matrix."""
    basis = graph_basis(graph)
    return np.einsum("im,ij,jm->m", basis.conj(), rho, basis).real


def offdiagonal_norm(graph: TwoColorableGraph, rho: np.ndarray) -> float:
    basis = graph_basis(graph)
    full = basis.conj().T @ rho @ basis
    return float(np.abs(full - np.diag(np.diag(full))).max())


# -- channels and gates on dense matrices --------------------------------------


def _conjugate_permutation(rho: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return rho[np.ix_(perm, perm)]


def apply_cnot(rho: np.ndarray, source: int, target: int, nbits: int) -> np.ndarray:
    """CNOT conjugation; ``source`` and ``target`` are 0-based bit positions."""
    idx = np.arange(1 << nbits)
    perm = idx ^ (((idx >> source) & 1) << target)
    return _conjugate_permutation(rho, perm)


def apply_1q_unitary(rho: np.ndarray, u: np.ndarray, bitpos: int, nbits: int) -> np.ndarray:
    dim = 1 << nbits
    hi = 1 << (nbits - 1 - bitpos)
    lo = 1 << bitpos
    r = rho.reshape(hi, 2, lo, dim)
    r = np.einsum("ab,hbld->hald", u, r)
    r = r.reshape(dim, hi, 2, lo)
    r = np.einsum("cb,dhbl->dhcl", u.conj(), r)
    return r.reshape(dim, dim)


def whitenoise_channel(rho: np.ndarray, q: float, bitpos: int, nbits: int) -> np.ndarray:
    """Depolarizing channel with reliability q: q*rho + (1-q)/2 * identity (x) tr_k rho."""
    dim = 1 << nbits
    hi = 1 << (nbits - 1 - bitpos)
    lo = 1 << bitpos
    r = rho.reshape(hi, 2, lo, hi, 2, lo)
    reduced = r[:, 0, :, :, 0, :] + r[:, 1, :, :, 1, :]
    mixed = np.zeros_like(r)
    mixed[:, 0, :, :, 0, :] = reduced / 2.0
    mixed[:, 1, :, :, 1, :] = reduced / 2.0
    return q * rho + (1.0 - q) * mixed.reshape(dim, dim)


def pauli_conjugate(rho: np.ndarray, axis: str, bitpos: int, nbits: int) -> np.ndarray:
    idx = np.arange(1 << nbits)
    if axis == "x":
        perm = idx ^ (1 << bitpos)
        return _conjugate_permutation(rho, perm)
    if axis == "z":
        signs = 1.0 - 2.0 * ((idx >> bitpos) & 1)
        return rho * np.outer(signs, signs)
    if axis == "y":
        return pauli_conjugate(pauli_conjugate(rho, "x", bitpos, nbits), "z", bitpos, nbits)
    raise ValueError(f"axis must be x, y or z, got {axis!r}")


def flip_channel(rho: np.ndarray, axis: str, p: float, bitpos: int, nbits: int) -> np.ndarray:
    """Bit/phase-flip channel with reliability p: (1+p)/2 rho + (1-p)/2 sigma rho sigma."""
    return (1 + p) / 2 * rho + (1 - p) / 2 * pauli_conjugate(rho, axis, bitpos, nbits)


def dense_apply_channel(
    graph: TwoColorableGraph, probs: np.ndarray, channel: NoiseChannel
) -> np.ndarray:
    """Graph-basis diagonal after one single-qubit channel, computed densely."""
    rho = dense_from_labels(graph, probs)
    bitpos = channel.qubit - 1
    if channel.kind == "depolarizing":
        rho = whitenoise_channel(rho, channel.param, bitpos, graph.n)
    elif channel.kind == "bitflip":
        rho = flip_channel(rho, "x", channel.param, bitpos, graph.n)
    else:
        rho = flip_channel(rho, "z", channel.param, bitpos, graph.n)
    return graph_diagonal(graph, rho)


# -- depolarization to graph-diagonal form -------------------------------------


def correlation_conjugate(rho: np.ndarray, graph: TwoColorableGraph, vertex: int) -> np.ndarray:
    """K_j rho K_j with K_j = sigma_x(j) prod sigma_z(neighbors)."""
    n = graph.n
    idx = np.arange(1 << n)
    flipped = idx ^ bit(vertex)
    signs = 1.0 - 2.0 * (_popcount(flipped & graph.neighbor_masks[vertex - 1]) & 1)
    return np.outer(signs, signs) * rho[np.ix_(flipped, flipped)]


def depolarize_rounds(graph: TwoColorableGraph, rho: np.ndarray) -> np.ndarray:
    """Probabilistic correlation-operator rounds that kill off-diagonal terms."""
    _check_density_cap(graph.n)
    out = rho
    for v in range(1, graph.n + 1):
        out = 0.5 * (out + correlation_conjugate(out, graph, v))
    return out


def dense_depolarize(graph: TwoColorableGraph, rho: np.ndarray) -> np.ndarray:
    """Graph-basis diagonal after the depolarization rounds."""
    return graph_diagonal(graph, depolarize_rounds(graph, rho))


# -- two-copy sub-protocol ------------------------------------------------------


def dense_subprotocol(
    graph: TwoColorableGraph,
    probs: np.ndarray,
    which: str,
    gate_noise: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Full two-copy simulation of one sub-protocol step.

    Builds rho (x) rho, applies per-qubit depolarizing channels and the exact
    multilateral CNOTs, enumerates all measurement outcomes on copy 2 and
    keeps those with all-zero syndrome.  Returns the normalized graph-basis
    diagonal of the surviving copy and the kept probability.
    """
    n = graph.n
    _check_density_cap(n)
    if which not in (P1, P2):
        raise ValueError(f"sub-protocol must be {P1!r} or {P2!r}")
    single = dense_from_labels(graph, probs)
    # copy 1 in bits 0..n-1, copy 2 in bits n..2n-1
    rho = np.kron(single, single)
    m = 2 * n
    if gate_noise < 1.0:
        for bitpos in range(m):
            rho = whitenoise_channel(rho, gate_noise, bitpos, m)
    for v in range(1, n + 1):
        c1, c2 = v - 1, n + v - 1
        in_a = v in graph.color_a
        if (which == P1) == in_a:
            source, target = c2, c1
        else:
            source, target = c1, c2
        rho = apply_cnot(rho, source, target, m)
    x_side = graph.color_a if which == P1 else graph.color_b
    read_side = x_side
    for v in x_side:
        rho = apply_1q_unitary(rho, _HADAMARD, n + v - 1, m)
    sub_dim = 1 << n
    kept = np.zeros((sub_dim, sub_dim), dtype=complex)
    rows = np.arange(sub_dim)
    for outcome in range(sub_dim):
        ok = True
        for j in read_side:
            stabilizer = bit(j) | graph.neighbor_masks[j - 1]
            if (outcome & stabilizer).bit_count() % 2:
                ok = False
                break
        if ok:
            block = rows | (outcome << n)
            kept += rho[np.ix_(block, block)]
    success = float(kept.trace().real)
    if success <= 0.0:
        raise ValueError(f"{which} kept zero weight")
    diag = graph_diagonal(graph, kept) / success
    return diag, success


# -- sequential chain creation ---------------------------------------------------


def dense_create_chain(n: int, p: float) -> tuple[np.ndarray, float]:
    """Sequential noisy phase-gate construction of a chain, simulated densely.

    Starts from |+>^n and applies controlled-phase gates (k, k+1) in order.
    The chain-side qubit passes its depolarizing channel before the gate;
    the freshly attached qubit takes its channel just after the gate (both
    before it on the very first gate, where both qubits are still fresh).
    Returns the diagonal in the final chain's graph basis and its fidelity.
    """
    from .graphs import chain_graph

    if n > MAX_DENSITY_QUBITS + 1:
        raise ValueError(f"dense chain creation capped at {MAX_DENSITY_QUBITS + 1} qubits")
    dim = 1 << n
    plus = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    rho = np.outer(plus, plus.conj())
    idx = np.arange(dim)
    for k in range(1, n):
        rho = whitenoise_channel(rho, p, k - 1, n)
        if k == 1:
            rho = whitenoise_channel(rho, p, 1, n)
        both = ((idx >> (k - 1)) & (idx >> k)) & 1
        signs = 1.0 - 2.0 * both
        rho = rho * np.outer(signs, signs)
        if k > 1:
            rho = whitenoise_channel(rho, p, k, n)
    chain = chain_graph(n)
    basis = np.empty((dim, dim), dtype=complex)
    for label in range(dim):
        basis[:, label] = graph_state_vector(chain, label)
    diag = np.einsum("im,ij,jm->m", basis.conj(), rho, basis).real
    return diag, float(diag[0])


# -- misc helpers used by tests ---------------------------------------------------


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(rho).min().real)


def partial_transpose(rho: np.ndarray, bitpos: int, nbits: int) -> np.ndarray:
    """Transpose the single-qubit factor at ``bitpos``."""
    dim = 1 << nbits
    hi = 1 << (nbits - 1 - bitpos)
    lo = 1 << bitpos
    r = rho.reshape(hi, 2, lo, hi, 2, lo).copy()
    r = r.transpose(0, 4, 2, 3, 1, 5)
    return r.reshape(dim, dim)


def random_label_distribution(
    graph: TwoColorableGraph, rng: np.random.Generator
) -> LabelDistribution:
    probs = rng.random(1 << graph.n)
    return LabelDistribution(graph, probs / probs.sum())


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / rho.trace().real
