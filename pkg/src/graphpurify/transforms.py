"""Bit-indexed kernels shared by the state and protocol code.

Probability vectors are indexed by n-bit integer labels with vertex v
stored in bit v-1.  The recurrence step pins one color class (both copies
must agree there) and XOR-combines the other; ``slice_layout`` caches the
index bookkeeping for a given (nbits, pinned-mask) split so the step can
run as a Walsh-Hadamard convolution over the combined bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def bits_of(mask: int) -> list[int]:
    """Positions of the set bits of ``mask``, lowest first."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def apply_flip(probs: np.ndarray, mask: int) -> np.ndarray:
    """Pull a label XOR back through a probability vector: out[i] = probs[i ^ mask]."""
    if mask == 0:
        return probs.copy()
    return probs[np.arange(probs.size) ^ mask]


def fwht(vec: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (unnormalized, self-inverse up to size)."""
    a = np.array(vec, dtype=float, copy=True)
    n = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < n:
        a = a.reshape(lead + (n // (2 * h), 2, h))
        top = a[..., 0, :] + a[..., 1, :]
        bot = a[..., 0, :] - a[..., 1, :]
        a = np.stack((top, bot), axis=-2).reshape(lead + (n,))
        h *= 2
    return a


def xor_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """XOR (dyadic) convolution along the last axis: out[g] = sum_{i^j=g} x[i] y[j]."""
    n = x.shape[-1]
    return fwht(fwht(x) * fwht(y)) / n


def xor_convolve_direct(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Quadratic-time XOR convolution, kept as an independent check of ``xor_convolve``."""
    n = x.shape[-1]
    out = np.zeros_like(x, dtype=float)
    for i in range(n):
        out[..., np.arange(n) ^ i] += x[..., i, None] * y
    return out


def _scatter_map(positions: list[int]) -> np.ndarray:
    """Map a compact sub-label (bit i <-> positions[i]) to its full-label bits."""
    out = np.zeros(1 << len(positions), dtype=np.int64)
    idx = np.arange(out.size)
    for i, pos in enumerate(positions):
        out |= ((idx >> i) & 1) << pos
    return out


@dataclass(frozen=True)
class SliceLayout:
    """Index bookkeeping for splitting n-bit labels into pinned and combined bits."""

    nbits: int
    mask_pinned: int
    n_pinned: int
    n_combined: int
    index2d: np.ndarray  # [pinned_sub, combined_sub] -> full label


@lru_cache(maxsize=None)
def slice_layout(nbits: int, mask_pinned: int) -> SliceLayout:
    full = (1 << nbits) - 1
    if mask_pinned & ~full:
        raise ValueError(f"mask {mask_pinned:#x} exceeds {nbits} bits")
    pinned = bits_of(mask_pinned)
    combined = bits_of(full ^ mask_pinned)
    pin_map = _scatter_map(pinned)
    comb_map = _scatter_map(combined)
    index2d = pin_map[:, None] | comb_map[None, :]
    index2d.setflags(write=False)
    return SliceLayout(nbits, mask_pinned, len(pinned), len(combined), index2d)


def two_copy_xor_step(
    probs1: np.ndarray, probs2: np.ndarray, nbits: int, mask_pinned: int
) -> tuple[np.ndarray, float]:
    """Post-selected two-copy combination of label distributions.

    Bits in ``mask_pinned`` must agree between the copies (the pinned value
    survives); the remaining bits are XOR-combined.  Returns the
    unnormalized output vector and the total kept weight, which equals the
    inner product of the two pinned-bit marginals.
    """
    lay = slice_layout(nbits, mask_pinned)
    s1 = probs1[lay.index2d]
    s2 = probs2[lay.index2d]
    conv = xor_convolve(s1, s2)
    out = np.empty(1 << nbits)
    out[lay.index2d] = conv
    return out, float(conv.sum())
