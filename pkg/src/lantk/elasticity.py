"""Local elasticity: how much more similar a kernel finds same-class pairs than cross-class pairs."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import PairSets


@dataclass
class ElasticityReport:
    rr: float
    mean_intra: float
    mean_inter: float
    n_intra: int
    n_inter: int
    mode: str
    provenance: dict
    negative_mean: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def normalized_similarity(k_xy: float, k_xx: float, k_yy: float) -> float:
    """K(x, x') / sqrt(K(x, x) K(x', x'))."""
    if k_xx <= 0 or k_yy <= 0:
        raise ValueError(f"non-positive diagonal value ({k_xx}, {k_yy})")
    return float(k_xy / np.sqrt(k_xx * k_yy))


def normalized_matrix(K, diag_a, diag_b=None) -> np.ndarray:
    """Entrywise K[i, j] / sqrt(diag_a[i] diag_b[j]) for a (possibly rectangular) kernel."""
    da = np.asarray(diag_a, float)
    db = da if diag_b is None else np.asarray(diag_b, float)
    if np.any(da <= 0) or np.any(db <= 0):
        raise ValueError("non-positive diagonal value")
    return np.asarray(K, float) / np.sqrt(np.outer(da, db))


def pair_similarities(Kbar, pairs: PairSets):
    Kbar = np.asarray(Kbar)
    return Kbar[pairs.intra[:, 0], pairs.intra[:, 1]], Kbar[pairs.inter[:, 0], pairs.inter[:, 1]]


def relative_ratio(Kbar, pairs: PairSets, provenance: dict | None = None) -> ElasticityReport:
    """RR = mean intra similarity / (mean intra + mean inter) from a normalized kernel.

    For train-train pairs ``Kbar`` is the n x n normalized training kernel; for
    test-train pairs it is the normalized test-by-train cross kernel.
    """
    intra, inter = pair_similarities(Kbar, pairs)
    if len(intra) == 0 or len(inter) == 0:
        raise ValueError("both pair buckets must be non-empty")
    a, b = float(intra.mean()), float(inter.mean())
    if a + b == 0:
        raise ZeroDivisionError("intra and inter means sum to zero")
    return ElasticityReport(a / (a + b), a, b, len(intra), len(inter), pairs.mode,
                            provenance or {}, negative_mean=(a < 0 or b < 0))
