"""Seeded synthetic tasks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClusterSpec:
    d: int = 8
    sep: float = 1.0
    noise: float = 1.0
    offset: float = 0.0  # shared mean along the second axis, keeps most pairs at acute angles


def two_clusters(n: int, spec: ClusterSpec, rng, direction=None):
    """Balanced +-1 labels; x = y * sep * u + offset * e2 + noise * z / sqrt(d) with a fixed unit direction u."""
    if n % 2:
        raise ValueError("n must be even for balanced classes")
    u = np.eye(spec.d)[0] if direction is None else np.asarray(direction, float)
    y = np.repeat([1.0, -1.0], n // 2)
    X = y[:, None] * spec.sep * u + spec.noise * rng.standard_normal((n, spec.d)) / np.sqrt(spec.d)
    if spec.offset:
        X[:, 1] += spec.offset
    perm = rng.permutation(n)
    return X[perm], y[perm]


def blobs(n: int, d: int, n_blobs: int, spread: float, flip: float, rng, centers=None, blob_labels=None):
    """Mixture of Gaussian blobs on the unit sphere, each with its own +-1 label.

    Returns (X, y, centers, blob_labels) so test data can share the geometry.
    A fraction ``flip`` of labels is flipped at random.
    """
    if centers is None:
        centers = rng.standard_normal((n_blobs, d))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        blob_labels = np.resize([1.0, -1.0], n_blobs)
        rng.shuffle(blob_labels)
    k = rng.integers(0, len(centers), size=n)
    X = centers[k] + spread * rng.standard_normal((n, d)) / np.sqrt(d)
    y = blob_labels[k].copy()
    y[rng.random(n) < flip] *= -1
    return X, y, centers, blob_labels


def multi_clusters(n: int, d: int, C: int, sep: float, rng):
    """C Gaussian clusters with class-index labels 0..C-1, means sep * (random orthonormal directions)."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, max(C, 1))))
    means = sep * Q[:, :C].T
    labels = np.arange(n) % C
    rng.shuffle(labels)
    X = means[labels] + rng.standard_normal((n, d)) / np.sqrt(d)
    return X, labels


def relabel_quadrants(Phi, theta1, theta2):
    """+1 when <theta1, phi> and <theta2, phi> have opposite signs, else -1."""
    return np.where((Phi @ theta1) * (Phi @ theta2) < 0, 1.0, -1.0)


def relabel_data(n: int, rng, margin: float = 3.0, spread: float = 1.0, lateral: float = 3.0):
    """2-D feature-space points well separated along theta1 and spread along theta2 (orthogonal).

    Returns (Phi, eta1, eta2, theta1, theta2).
    """
    ang = rng.uniform(0, 2 * np.pi)
    theta1 = np.array([np.cos(ang), np.sin(ang)])
    theta2 = np.array([-theta1[1], theta1[0]])
    s = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    c1 = s * margin + spread * rng.standard_normal(n)
    c2 = lateral * rng.standard_normal(n)
    Phi = np.outer(c1, theta1) + np.outer(c2, theta2)
    eta1 = np.where(Phi @ theta1 > 0, 1.0, -1.0)
    eta2 = relabel_quadrants(Phi, theta1, theta2)
    return Phi, eta1, eta2, theta1, theta2


def shells(n: int, d: int, r_in: float, r_out: float, width: float, rng):
    """Concentric spherical shells: +1 near radius r_in, -1 near r_out, uniform directions.

    The labels depend only on the norm, which a positively homogeneous kernel cannot see.
    """
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = np.abs(np.where(y > 0, r_in, r_out) + width * rng.standard_normal(n))
    return u * r[:, None], y


GENERATORS = ("two_clusters", "shells", "blobs", "multi_clusters")


def generate(spec: dict, n: int, rng, state: dict | None = None):
    """Draw (X, y) from a generator described by a config dict.

    ``state`` carries geometry that train/val/test draws must share (blob centres).
    """
    kind = spec.get("generator", "two_clusters")
    d = int(spec.get("d", 8))
    if kind == "two_clusters":
        cs = ClusterSpec(d, float(spec.get("sep", 1.0)), float(spec.get("noise", 1.0)), float(spec.get("offset", 0.0)))
        return two_clusters(n, cs, rng)
    if kind == "shells":
        return shells(n, d, float(spec.get("r_in", 1.0)), float(spec.get("r_out", 1.6)),
                      float(spec.get("width", 0.2)), rng)
    if kind == "blobs":
        state = {} if state is None else state
        X, y, c, b = blobs(n, d, int(spec.get("n_blobs", 8)), float(spec.get("spread", 0.8)),
                           float(spec.get("flip", 0.1)), rng, state.get("centers"), state.get("labels"))
        state["centers"], state["labels"] = c, b
        return X, y
    if kind == "multi_clusters":
        C = int(spec.get("C", 3))
        state = {} if state is None else state
        if "Q" not in state:
            state["Q"], _ = np.linalg.qr(rng.standard_normal((d, C)))
        means = float(spec.get("sep", 1.5)) * state["Q"][:, :C].T
        labels = np.arange(n) % C
        rng.shuffle(labels)
        return means[labels] + rng.standard_normal((n, d)) / np.sqrt(d), labels
    raise ValueError(f"unknown generator {kind!r}; choose from {GENERATORS}")
