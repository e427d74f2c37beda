"""Expected kernels of a two-layer ReLU network under N(0, 1) initialization.

E K2 has the arc-cosine closed form. E K4 is a weighted sum of per-neuron
Gaussian moments

    E_w[ prod_k sigma^(o_k)(w . x_k) ],   w ~ N(0, I_d),

where for ReLU sigma' is a step, sigma'' a Dirac delta and sigma''' its
derivative. Every such moment is evaluated here by two exact moves:

* a delta factor delta(b . w) restricts w to the hyperplane b-perp, contributing
  the density 1/(sqrt(2 pi) |b|) and projecting the remaining vectors off b;
* a ReLU factor (r . w)_+ = (r . w) 1{r . w >= 0} is removed by Gaussian
  integration by parts, E[(r . w) g(w)] = E[r . grad g(w)].

What remains are orthant probabilities. Up to three half-spaces these are
closed form; four generic directions need either Monte Carlo or a
one-dimensional quadrature along a correlation path (Plackett's identity).
All orthant probabilities that occur inside a single E K4 evaluation concern
the same four directions, so the result is affine in one shared estimate and
its standard error is exact.

Returned E K4 values are per-width coefficients: the expectation for a net of
width m is the returned value divided by m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .net2 import K4_TERMS, init_net, k3_vector

SQRT2PI = math.sqrt(2.0 * math.pi)

RELU, STEP, DELTA, DDELTA = 0, 1, 2, 3
# a-moments E[a^p] for a ~ N(0, 1)
A_MOMENT = {0: 1.0, 2: 1.0, 4: 3.0}


class DegenerateGeometry(ValueError):
    """Inputs too close to collinear/coplanar for a required divisor."""


@dataclass(frozen=True)
class MCConfig:
    samples: int = 200_000
    seed: int = 0
    orthant: str = "mc"  # "mc" or "quadrature"
    jitter: float = 1e-6
    divisor_tol: float = 1e-8

    def __post_init__(self):
        if self.orthant not in ("mc", "quadrature"):
            raise ValueError(f"orthant method must be 'mc' or 'quadrature', got {self.orthant!r}")
        if self.samples < 10_000 and self.orthant == "mc":
            raise ValueError("Monte Carlo needs at least 10^4 samples")


# ---------------------------------------------------------------------------
# second order

def _stable_angle(u, v) -> float:
    """Angle between unit vectors, accurate near 0 and pi where arccos is not."""
    return 2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v))


def _angle(x, x2):
    nx, nx2 = np.linalg.norm(x), np.linalg.norm(x2)
    if nx == 0 or nx2 == 0:
        raise ValueError("zero vector: angle undefined")
    return _stable_angle(x / nx, x2 / nx2), nx, nx2


def expected_k2(x, x2) -> float:
    x, x2 = np.asarray(x, float), np.asarray(x2, float)
    t, nx, nx2 = _angle(x, x2)
    return float(x @ x2 * (math.pi - t) / (2 * math.pi)
                 + nx * nx2 * (math.sin(t) + (math.pi - t) * math.cos(t)) / (2 * math.pi))


def expected_k2_matrix(X, X2=None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, float))
    sym = X2 is None
    X2 = X if sym else np.atleast_2d(np.asarray(X2, float))
    n1, n2 = np.linalg.norm(X, axis=1), np.linalg.norm(X2, axis=1)
    for nm, nrm in (("X", n1), ("X2", n2)):
        if np.any(nrm == 0):
            raise ValueError(f"zero row {int(np.flatnonzero(nrm == 0)[0])} in {nm}")
    G = X @ X2.T
    N = np.outer(n1, n2)
    C = np.clip(G / N, -1.0, 1.0)
    t = np.arccos(C)
    U, U2 = X / n1[:, None], X2 / n2[:, None]
    for i, j in zip(*np.nonzero(np.abs(C) > 0.99)):
        t[i, j] = _stable_angle(U[i], U2[j])
    K = G * (np.pi - t) / (2 * np.pi) + N * (np.sin(t) + (np.pi - t) * np.cos(t)) / (2 * np.pi)
    if sym:
        iu = np.triu_indices(len(X), 1)
        K[(iu[1], iu[0])] = K[iu]
        np.fill_diagonal(K, n1 ** 2)
    return K


# ---------------------------------------------------------------------------
# orthant probabilities

def _orthant_closed(U) -> float:
    """P(u_k . Z >= 0 for all k) for up to three unit vectors."""
    k = len(U)
    if k == 0:
        return 1.0
    if k == 1:
        return 0.5
    R = np.clip(U @ U.T, -1.0, 1.0)
    if k == 2:
        return (math.pi - math.acos(R[0, 1])) / (2 * math.pi)
    if k == 3:
        return 0.125 + (math.asin(R[0, 1]) + math.asin(R[0, 2]) + math.asin(R[1, 2])) / (4 * math.pi)
    raise ValueError("closed form only for up to three half-spaces")


def orthant_prob_quadrature(R) -> float:
    """P(Y >= 0) for Y ~ N(0, R), R a 4x4 correlation matrix.

    Integrates Plackett's identity dP/d rho_ij = phi_2(0, 0; rho_ij) P(rest >= 0 | Y_i = Y_j = 0)
    along the path R(s) = I + s (R - I) from the independent case.
    """
    R = np.asarray(R, float)
    k = R.shape[0]
    if k <= 3:
        raise ValueError("use the closed form for three or fewer half-spaces")
    if k != 4:
        raise ValueError("quadrature implemented for four half-spaces")
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    rest = {(i, j): [l for l in range(4) if l not in (i, j)] for i, j in pairs}

    def rate(s):
        tot = 0.0
        for i, j in pairs:
            rho = R[i, j]
            if rho == 0.0:
                continue
            r = s * rho
            k_, l_ = rest[(i, j)]
            # conditional covariance of (Y_k, Y_l) given Y_i = Y_j = 0 under R(s)
            C = np.array([[1.0, r], [r, 1.0]])
            B = s * np.array([[R[k_, i], R[k_, j]], [R[l_, i], R[l_, j]]])
            S = np.array([[1.0, s * R[k_, l_]], [s * R[k_, l_], 1.0]]) - B @ np.linalg.solve(C, B.T)
            den = math.sqrt(max(S[0, 0] * S[1, 1], 0.0))
            rc = 0.0 if den == 0 else float(np.clip(S[0, 1] / den, -1.0, 1.0))
            tot += rho / (2 * math.pi * math.sqrt(1.0 - r * r)) * (0.25 + math.asin(rc) / (2 * math.pi))
        return tot

    # s = 1 - u^2 absorbs the 1/sqrt(1 - s) endpoint singularity when some |rho| is near 1
    val, _err = quad(lambda u: 2.0 * u * rate(1.0 - u * u), 0.0, 1.0, epsabs=1e-11, epsrel=1e-10, limit=200)
    return 1.0 / 16.0 + val


def _orthant_mc_gram(G, samples, rng):
    """MC estimate of P(Y >= 0), Y ~ N(0, G) for a PSD Gram matrix G."""
    w, Q = np.linalg.eigh(G)
    S = Q * np.sqrt(np.clip(w, 0.0, None))
    hits = 0
    done = 0
    chunk = 1 << 16
    while done < samples:
        b = min(chunk, samples - done)
        Y = rng.standard_normal((b, G.shape[0])) @ S.T
        hits += int(np.count_nonzero(np.all(Y >= 0, axis=1)))
        done += b
    p = hits / samples
    return p, math.sqrt(p * (1 - p) / samples)


# ---------------------------------------------------------------------------
# four-vector reduction

@dataclass(frozen=True)
class Reduced4D:
    """Four unit directions expressed in a 4-D frame where row k is supported on the first k coordinates."""

    V: np.ndarray
    norms: np.ndarray = field(default_factory=lambda: np.ones(4))
    angles: np.ndarray = field(default=None)

    def __post_init__(self):
        V = np.asarray(self.V, float)
        if V.shape != (4, 4):
            raise ValueError(f"V must be 4x4, got {V.shape}")
        if not np.allclose(V[0], [1, 0, 0, 0], atol=1e-12):
            raise ValueError("first row must be (1, 0, 0, 0)")
        if np.abs(np.triu(V, 1)).max() > 1e-12:
            raise ValueError("row k must vanish beyond coordinate k")
        if np.abs(np.linalg.norm(V, axis=1) - 1).max() > 1e-10:
            raise ValueError("rows must have unit norm")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "norms", np.asarray(self.norms, float))
        if self.angles is None:
            C = np.clip(V @ V.T, -1, 1)
            object.__setattr__(self, "angles", np.arccos(C[np.triu_indices(4, 1)]))


def reduce_to_4d(xa, xb, xc, xd, tol: float = 1e-8) -> Reduced4D:
    X = np.array([xa, xb, xc, xd], dtype=float)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise DegenerateGeometry(f"zero input vector at position {int(np.flatnonzero(norms == 0)[0])}")
    U = X / norms[:, None]
    G = np.clip(U @ U.T, -1.0, 1.0)
    L = np.zeros((4, 4))
    for k in range(4):
        for j in range(k):
            if L[j, j] == 0.0:
                if abs(G[k, j] - L[k, :j] @ L[j, :j]) > 1e-10:
                    raise DegenerateGeometry(f"input {j} lies in the span of earlier inputs")
                L[k, j] = 0.0
            else:
                L[k, j] = (G[k, j] - L[k, :j] @ L[j, :j]) / L[j, j]
        r = 1.0 - L[k, :k] @ L[k, :k]
        if r < -1e-10:
            raise DegenerateGeometry(f"negative square-root argument {r:.3e} for row {k}")
        L[k, k] = math.sqrt(max(r, 0.0))
        if k == 1 and L[1, 1] < tol:
            raise DegenerateGeometry(f"sin of angle(xa, xb) = {L[1, 1]:.3e} below {tol}")
    L /= np.linalg.norm(L, axis=1)[:, None]
    return Reduced4D(L, norms, np.arccos(G[np.triu_indices(4, 1)]))


def orthant_prob_mc(V, samples: int = 200_000, seed: int = 0):
    """MC estimate and standard error of P(V Z >= 0), Z ~ N(0, I_4)."""
    if samples < 10_000:
        raise ValueError("Monte Carlo needs at least 10^4 samples")
    V = V.V if isinstance(V, Reduced4D) else np.asarray(V, float)
    rng = np.random.default_rng(seed)
    return _orthant_mc_gram(V @ V.T, samples, rng)


# ---------------------------------------------------------------------------
# Gaussian moment engine

class _Affine:
    """c + k * P where P is the shared four-direction orthant probability."""

    __slots__ = ("c", "k")

    def __init__(self, c=0.0, k=0.0):
        self.c, self.k = float(c), float(k)

    def __add__(self, o):
        if isinstance(o, _Affine):
            return _Affine(self.c + o.c, self.k + o.k)
        return _Affine(self.c + o, self.k)

    __radd__ = __add__

    def __mul__(self, s):
        return _Affine(self.c * s, self.k * s)

    __rmul__ = __mul__

    def value(self, p):
        return self.c + self.k * p


_ZERO = _Affine()
_PAR_TOL = 1e-10  # unit vectors closer than this (up to sign) share a line


def _line(u, w) -> int:
    """+1 if unit vectors u, w coincide, -1 if opposite, else 0 (difference norms stay accurate at small angles)."""
    if np.linalg.norm(u - w) < _PAR_TOL:
        return 1
    if np.linalg.norm(u + w) < _PAR_TOL:
        return -1
    return 0


def _proj(vs, b):
    bb = b @ b
    return [v - (v @ b) / bb * b for v in vs]


def _orth(steps, tol):
    """Orthant probability of the given half-spaces (vectors need not be unit)."""
    units = []
    for v in steps:
        n = np.linalg.norm(v)
        if n < tol:
            raise DegenerateGeometry("half-space normal vanishes after projection")
        u = v / n
        drop = False
        for w in units:
            c = _line(u, w)
            if c > 0:
                drop = True
                break
            if c < 0:
                return _ZERO
        if not drop:
            units.append(u)
    if len(units) <= 3:
        return _Affine(_orthant_closed(np.array(units)) if units else 1.0)
    if len(units) == 4:
        return _Affine(0.0, 1.0)
    raise DegenerateGeometry("more than four half-spaces")


def _delta(b, relus, steps, tol):
    """E[delta(b.Z) prod (r.Z)_+ prod 1{s.Z >= 0}]."""
    nb = np.linalg.norm(b)
    if nb < tol:
        raise DegenerateGeometry(f"delta direction norm {nb:.3e} below {tol}")
    return _cone(_proj(relus, b), _proj(steps, b), tol) * (1.0 / (SQRT2PI * nb))


def _cone(relus, steps, tol):
    """E[prod (r.Z)_+ prod 1{s.Z >= 0}], Z standard normal."""
    if not relus:
        return _orth(steps, tol)
    if any(np.linalg.norm(r) < tol for r in relus):
        return _ZERO
    # (r.Z)_+ 1{r.Z >= 0} = (r.Z)_+ and (r.Z)_+ 1{-r.Z >= 0} = 0
    kept = []
    for s in steps:
        ns = np.linalg.norm(s)
        cs = [_line(r / np.linalg.norm(r), s / ns) for r in relus] if ns >= tol else []
        if any(c < 0 for c in cs):
            return _ZERO
        if not any(c > 0 for c in cs):
            kept.append(s)
    steps = kept
    r, Q = relus[0], relus[1:]
    out = _delta(r, Q, steps, tol) * float(r @ r)
    for k, q in enumerate(Q):
        c = float(r @ q)
        if c != 0.0:
            out = out + _cone(Q[:k] + Q[k + 1:], steps + [r, q], tol) * c
    for k, s in enumerate(steps):
        c = float(r @ s)
        if c != 0.0:
            out = out + _delta(s, Q, steps[:k] + steps[k + 1:] + [r], tol) * c
    return out


def _merge(factors):
    """Combine factors whose directions coincide or are opposite.

    Returns (scale, factors) or (0, None) when the product vanishes. Products of
    a delta (or its derivative) with another singular factor along the same
    line diverge and raise DegenerateGeometry. The half-weight for
    delta(u) * 1{u >= 0} is the limit under any symmetric smoothing.
    """
    scale = 1.0
    out = []
    for v, o in factors:
        u = v / np.linalg.norm(v)
        hit = None
        for k, (w, p) in enumerate(out):
            c = _line(u, w)
            if c:
                hit = (k, c > 0)
                break
        if hit is None:
            out.append((u, o))
            continue
        k, same = hit
        w, p = out[k]
        lo, hi = sorted((o, p))
        if hi == DDELTA or (lo == DELTA and hi == DELTA):
            raise DegenerateGeometry("coincident singular factors")
        if same:
            if (lo, hi) == (STEP, STEP):
                continue
            if (lo, hi) == (RELU, STEP):
                out[k] = (w, RELU)
                continue
            if (lo, hi) == (RELU, RELU):
                out.append((w, RELU))
                continue
            if (lo, hi) == (STEP, DELTA):
                out[k] = (w, DELTA)
                scale *= 0.5
                continue
            return 0.0, None  # relu * delta at the same point
        if (lo, hi) == (STEP, DELTA):
            out[k] = (w, DELTA) if p == DELTA else (-w, DELTA)
            scale *= 0.5
            continue
        return 0.0, None  # opposite half-lines do not overlap
    return scale, out


_NORM_POWER = {RELU: 1, STEP: 0, DELTA: -1, DDELTA: -2}


def gaussian_moment(vectors, orders, tol: float = 1e-8) -> _Affine:
    """E_w[prod_k sigma^(o_k)(w . x_k)] for ReLU sigma, as an affine function of the four-direction orthant probability."""
    scale = 1.0
    factors = []
    for v, o in zip(vectors, orders):
        v = np.asarray(v, float)
        nv = np.linalg.norm(v)
        if nv == 0:
            raise DegenerateGeometry("zero input vector")
        scale *= nv ** _NORM_POWER[o]
        factors.append((v / nv, o))
    s, factors = _merge(factors)
    if factors is None:
        return _ZERO
    scale *= s
    relus = [v for v, o in factors if o == RELU]
    steps = [v for v, o in factors if o == STEP]
    deltas = [v for v, o in factors if o == DELTA]
    dd = [v for v, o in factors if o == DDELTA]
    if dd:
        if len(dd) > 1 or deltas or relus:
            raise DegenerateGeometry("unsupported combination with a delta derivative")
        p = dd[0]
        sp = _proj(steps, p)
        out = _ZERO
        for k, (s_raw, s_perp) in enumerate(zip(steps, sp)):
            c = float(s_raw @ p)
            if c != 0.0:
                out = out + _delta(s_perp, [], sp[:k] + sp[k + 1:], tol) * c
        return out * (-scale / SQRT2PI)
    if len(deltas) == 2:
        p, q = deltas
        det = (p @ p) * (q @ q) - (p @ q) ** 2
        if det < tol * tol:
            raise DegenerateGeometry(f"delta directions nearly parallel (sin = {math.sqrt(max(det, 0)):.3e})")
        q_perp = q - (q @ p) / (p @ p) * p
        r2, s2 = _proj(_proj(relus, p), q_perp), _proj(_proj(steps, p), q_perp)
        return _cone(r2, s2, tol) * (scale / (2 * math.pi * math.sqrt(det)))
    if len(deltas) == 1:
        return _delta(deltas[0], relus, steps, tol) * scale
    if deltas:
        raise DegenerateGeometry("more than two delta factors")
    return _cone(relus, steps, tol) * scale


# ---------------------------------------------------------------------------
# representative term kinds in the reduced frame

KINDS = ("I", "II", "III", "IV", "V")


def expected_k4_term(kind: str, red: Reduced4D, mc: MCConfig = MCConfig()):
    """Per-width expectation of one representative E K4 summand, with its a-moment.

    I    E[a^2 s'(a) s'(b) s'(c) s'(d)]          = P(V Z >= 0)
    II   E[s'(a) s'(b) s(c) s(d)]                = |x_c||x_d| E[(v_c.Z)(v_d.Z) 1{VZ >= 0}]
    III  E[a^2 s''(a) s(b) s'(c) s'(d)]
    IV   E[a^4 s''(a) s''(b) s'(c) s'(d)]
    V    E[a^4 s'''(a) s'(b) s'(c) s'(d)]

    (s = ReLU evaluated at w . x_k.) Kinds I and II are Monte Carlo over the
    reduced 4-D frame and return (estimate, stderr); III to V are closed form
    with stderr 0.
    """
    V, nrm = red.V, red.norms
    tol = mc.divisor_tol
    if kind == "I":
        return orthant_prob_mc(red, mc.samples, mc.seed)
    if kind == "II":
        rng = np.random.default_rng(mc.seed)
        vals = []
        done = 0
        while done < mc.samples:
            b = min(1 << 16, mc.samples - done)
            Y = rng.standard_normal((b, 4)) @ V.T
            vals.append(Y[:, 2] * Y[:, 3] * np.all(Y >= 0, axis=1))
            done += b
        v = np.concatenate(vals) * nrm[2] * nrm[3]
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))
    if kind == "III":
        val = gaussian_moment(V, (DELTA, RELU, STEP, STEP), tol)
        return val.c * nrm[1] / nrm[0], 0.0
    if kind == "IV":
        if abs(V[1, 1]) < tol:
            raise DegenerateGeometry(f"kind IV divisor v_b2 = {V[1, 1]:.3e}")
        ang = _angle(V[2, 2:], V[3, 2:])[0] if min(np.linalg.norm(V[2, 2:]), np.linalg.norm(V[3, 2:])) > tol else None
        if ang is None:
            raise DegenerateGeometry("kind IV: projected step direction vanishes")
        return 3.0 * (math.pi - ang) / (4 * math.pi ** 2 * nrm[0] * nrm[1] * abs(V[1, 1])), 0.0
    if kind == "V":
        return 3.0 * _kind5_frame(V, tol) / nrm[0] ** 2, 0.0
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")


def _kind5_frame(V, tol):
    """E[delta'(Z_1) 1{v_b.Z >= 0} 1{v_c.Z >= 0} 1{v_d.Z >= 0}] written in the reduced frame.

    Integrating delta' by parts against the Gaussian density leaves
    -(1/sqrt(2 pi)) (v_b1 T1 + v_c1 T2 + v_d1 T3), where T_k pins one of the
    three remaining half-spaces to its boundary inside the slice Z_1 = 0.
    """
    b, c, x = V[1, 1:], V[2, 1:], V[3, 1:]
    if abs(b[0]) < tol:
        raise DegenerateGeometry(f"kind V divisor v_b2 = {b[0]:.3e}")

    def pinned(p, u, w):
        # E[delta(p.Z) 1{u.Z >= 0} 1{w.Z >= 0}] in three dimensions
        npn = np.linalg.norm(p)
        if npn < tol:
            raise DegenerateGeometry("kind V: pinned direction vanishes")
        u2, w2 = _proj([u, w], p)
        if min(np.linalg.norm(u2), np.linalg.norm(w2)) < tol:
            raise DegenerateGeometry("kind V: projected direction vanishes")
        return (math.pi - _angle(u2, w2)[0]) / (2 * math.pi) / (SQRT2PI * npn)

    # b is along the first slice axis, so T1 reduces to a 2-D angle between the last two coordinates
    T1 = (math.pi - _angle(c[1:], x[1:])[0]) / (2 * math.pi) / (SQRT2PI * abs(b[0]))
    T2 = pinned(c, b, x)
    T3 = pinned(x, b, c)
    return -(V[1, 0] * T1 + V[2, 0] * T2 + V[3, 0] * T3) / SQRT2PI


# ---------------------------------------------------------------------------
# assembly

@dataclass
class K4Estimate:
    value: float
    stderr: float
    orthant: float | None = None
    flagged: bool = False


def _orthant_for(U, mc: MCConfig, rng):
    G = np.clip(U @ U.T, -1.0, 1.0)
    if mc.orthant == "quadrature":
        return orthant_prob_quadrature(G), 0.0
    return _orthant_mc_gram(G, mc.samples, rng)


def expected_k4(xa, xb, xc, xd, mc: MCConfig = MCConfig(), rng=None) -> K4Estimate:
    """Per-width coefficient of E K4(xa, xb, xc, xd); divide by m for width m.

    Raises DegenerateGeometry for inputs where a singular factor's divisor is
    below ``mc.divisor_tol`` (for example xa parallel to xb).
    """
    X = np.array([xa, xb, xc, xd], dtype=float)
    G = X @ X.T
    ab, ac, ad, bc, bd, cd = G[0, 1], G[0, 2], G[0, 3], G[1, 2], G[1, 3], G[2, 3]
    total = _ZERO
    for coef, p, orders, pref in K4_TERMS:
        w = coef * A_MOMENT[p] * pref(ab, ac, ad, bc, bd, cd)
        if w == 0.0:
            continue
        total = total + gaussian_moment(X, orders, mc.divisor_tol) * w
    if total.k == 0.0:
        return K4Estimate(total.c, 0.0)
    rng = np.random.default_rng(mc.seed) if rng is None else rng
    U = X / np.linalg.norm(X, axis=1)[:, None]
    p, se = _orthant_for(U, mc, rng)
    return K4Estimate(total.value(p), abs(total.k) * se, p)


@dataclass
class FourthOrderBlock:
    probe: tuple
    values: np.ndarray
    stderr: np.ndarray
    mc_samples: int
    seed: int
    flagged: list

    def meta(self) -> dict:
        return {
            "probe": [np.asarray(p).tolist() for p in self.probe],
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "flagged": [list(map(int, f)) for f in self.flagged],
        }


def expected_k4_block(x, x2, X, mc: MCConfig = MCConfig(), max_retries: int = 5) -> FourthOrderBlock:
    """Matrix of expected_k4(x, x2, X[i], X[j]) with per-entry seeds.

    Entries whose geometry is degenerate are recomputed with the trailing
    inputs perturbed by seeded Gaussian jitter of relative size ``mc.jitter``
    and listed in ``flagged``.
    """
    X = np.atleast_2d(np.asarray(X, float))
    x, x2 = np.asarray(x, float), np.asarray(x2, float)
    n = X.shape[0]
    vals = np.zeros((n, n))
    ses = np.zeros((n, n))
    flagged = []
    for i in range(n):
        for j in range(n):
            rng = np.random.default_rng([mc.seed, i, j])
            xc, xd = X[i], X[j]
            for attempt in range(max_retries + 1):
                try:
                    est = expected_k4(x, x2, xc, xd, mc, rng)
                    break
                except DegenerateGeometry:
                    if attempt == max_retries:
                        raise
                    jr = np.random.default_rng([mc.seed, i, j, attempt + 1])
                    xc = X[i] + mc.jitter * np.linalg.norm(X[i]) * jr.standard_normal(X.shape[1])
                    xd = X[j] + mc.jitter * np.linalg.norm(X[j]) * jr.standard_normal(X.shape[1])
            if attempt:
                flagged.append((i, j))
            vals[i, j], ses[i, j] = est.value, est.stderr
    return FourthOrderBlock((x, x2), vals, ses, mc.samples, mc.seed, flagged)


# ---------------------------------------------------------------------------
# odd orders

def expected_odd_kernel_is_zero_check(order: int, X, inits: int = 500, width: int = 4096,
                                      activation: str = "tanh", seed: int = 0):
    """Average empirical K3 over Gaussian inits for every ordered triple of rows of X.

    Returns (max |mean|, max |mean| / stderr) over entries.
    """
    if order != 3:
        raise ValueError("only order 3 is supported")
    X = np.atleast_2d(np.asarray(X, float))
    n, d = X.shape
    idx = [(i, j, k) for i in range(n) for j in range(n) for k in range(n)]
    samples = np.zeros((inits, len(idx)))
    for s in range(inits):
        net = init_net(d, width, activation, seed=np.random.SeedSequence([seed, s]).generate_state(1)[0])
        row = []
        for i in range(n):
            for j in range(n):
                row.append(k3_vector(net, X[i], X[j], X))
        samples[s] = np.concatenate(row)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(inits)
    return float(np.abs(mean).max()), float((np.abs(mean) / se).max())
