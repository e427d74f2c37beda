"""Exact Hoeffding (ANOVA) decomposition of a function of n binary labels.

A function f on {+1, -1}^n is stored as a table of length 2^n. Bit k of the
table index is label k, with bit value 0 meaning +1 and 1 meaning -1. The
component for subset A is the Moebius sum

    proj_A f = sum_{B subset A} (-1)^{|A \\ B|} E[f | y_B]

under the supplied label law.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_N = 12


@dataclass(frozen=True)
class LabelLaw:
    n: int
    probs: np.ndarray  # length 2^n

    def __post_init__(self):
        p = np.asarray(self.probs, float)
        if self.n > MAX_N:
            raise ValueError(f"n = {self.n} exceeds {MAX_N}")
        if p.shape != (1 << self.n,):
            raise ValueError(f"law table has {p.size} entries, expected {1 << self.n}")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to one")
        object.__setattr__(self, "probs", p)


def signs(n: int) -> np.ndarray:
    """(2^n, n) matrix of label vectors in table order."""
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return 1.0 - 2.0 * bits


def product_law(p_plus) -> LabelLaw:
    """Independent labels with P(y_k = +1) = p_plus[k]."""
    p_plus = np.asarray(p_plus, float)
    Y = signs(len(p_plus))
    P = np.where(Y > 0, p_plus, 1 - p_plus).prod(axis=1)
    return LabelLaw(len(p_plus), P / P.sum())


def uniform_law(n: int) -> LabelLaw:
    return product_law(np.full(n, 0.5))


def table_from(fn, n: int) -> np.ndarray:
    return np.array([fn(y) for y in signs(n)], dtype=float)


def cond_expectation(f, law: LabelLaw, B) -> np.ndarray:
    """E[f | y_B] as a table over {+-1}^n (constant across coordinates outside B)."""
    f = np.asarray(f, float)
    n = law.n
    mask = sum(1 << k for k in B)
    key = np.arange(1 << n) & mask
    num = np.bincount(key, weights=f * law.probs, minlength=1 << n)
    den = np.bincount(key, weights=law.probs, minlength=1 << n)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return ratio[key]


def subsets(n: int, max_order: int | None = None):
    top = n if max_order is None else min(max_order, n)
    for r in range(top + 1):
        yield from itertools.combinations(range(n), r)


@dataclass
class Decomposition:
    n: int
    components: dict  # subset tuple -> table over {+-1}^n

    def table(self, A) -> np.ndarray:
        return self.components[tuple(sorted(A))]


def decompose(f, law: LabelLaw) -> Decomposition:
    f = np.asarray(f, float)
    if f.shape != (1 << law.n,):
        raise ValueError(f"function table has {f.size} entries, law expects {1 << law.n}")
    cache = {B: cond_expectation(f, law, B) for B in subsets(law.n)}
    comps = {}
    for A in subsets(law.n):
        acc = np.zeros_like(f)
        for r in range(len(A) + 1):
            for B in itertools.combinations(A, r):
                acc += (-1) ** (len(A) - r) * cache[B]
        comps[A] = acc
    return Decomposition(law.n, comps)


def truncate(dec: Decomposition, max_order: int) -> np.ndarray:
    if max_order > dec.n:
        raise ValueError("order exceeds n")
    return sum(g for A, g in dec.components.items() if len(A) <= max_order)


def inner(f, g, law: LabelLaw) -> float:
    return float(np.sum(np.asarray(f) * np.asarray(g) * law.probs))


def _pattern(y) -> str:
    return "".join("+" if v > 0 else "-" for v in y)


def table_to_json(f) -> dict:
    """Function table as {sign pattern: value}, e.g. {"+-": 0.5, ...}."""
    f = np.asarray(f, float)
    n = int(np.log2(f.size))
    if f.size != 1 << n:
        raise ValueError("table length must be a power of two")
    return {_pattern(y): float(v) for y, v in zip(signs(n), f)}


def table_from_json(obj: dict) -> np.ndarray:
    n = len(next(iter(obj)))
    if len(obj) != 1 << n or any(len(k) != n or set(k) - {"+", "-"} for k in obj):
        raise ValueError("expected one entry per sign pattern of a common length")
    return np.array([obj[_pattern(y)] for y in signs(n)], dtype=float)


def decomposition_to_json(dec: Decomposition) -> dict:
    return {"n": dec.n, "components": {",".join(map(str, A)): table_to_json(g) for A, g in dec.components.items()}}
