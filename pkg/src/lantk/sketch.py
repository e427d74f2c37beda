"""Walsh-Hadamard transform and the subsampled randomized Hadamard sketch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    return 1 << max(n - 1, 0).bit_length()


def fwht(v) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the first axis, O(N log N).

    fwht(fwht(v)) == N * v.
    """
    a = np.array(v, dtype=float, copy=True)
    shape = a.shape
    n = shape[0]
    if not _is_pow2(n):
        raise ValueError(f"length {n} is not a power of two")
    a = a.reshape(n, -1)
    h = 1
    while h < n:
        b = a.reshape(n // (2 * h), 2, h, -1)
        x = b[:, 0] + b[:, 1]
        b[:, 1] = b[:, 0] - b[:, 1]
        b[:, 0] = x
        h *= 2
    return a.reshape(shape)


@dataclass(frozen=True)
class FJLTSketch:
    """S v = sqrt(1/k) * (H D pad(v))[idx] with H the unnormalized Hadamard matrix.

    E ||S v||^2 = ||v||^2; rows of a matrix are mixed along the first axis.
    """

    input_dim: int
    padded_dim: int
    output_dim: int
    signs: np.ndarray
    idx: np.ndarray
    seed: int

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, float)
        if v.shape[0] != self.input_dim:
            raise ValueError(f"expected leading dimension {self.input_dim}, got {v.shape[0]}")
        pad = np.zeros((self.padded_dim,) + v.shape[1:])
        pad[: self.input_dim] = v
        pad *= self.signs.reshape((-1,) + (1,) * (v.ndim - 1))
        return fwht(pad)[self.idx] / np.sqrt(self.output_dim)


def make_fjlt(input_dim: int, output_dim: int, seed: int = 0) -> FJLTSketch:
    N = next_pow2(input_dim)
    if not 1 <= output_dim <= N:
        raise ValueError(f"sketch dimension must lie in [1, {N}]")
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=N)
    idx = np.sort(rng.choice(N, size=output_dim, replace=False))
    return FJLTSketch(input_dim, N, output_dim, signs, idx, seed)
