"""Finite-width two-layer network f(x) = a^T sigma(W x) / sqrt(m).

Besides forward passes and full-batch training, this module evaluates the
empirical kernel hierarchy of the network exactly:

    K2(x, x')           = <grad f(x), grad f(x')>
    K3(x, x', z)        = <grad K2(x, x'), grad f(z)>
    K4(x, x', z, z')    = <grad K3(x, x', z), grad f(z')>

Each is a short sum of per-neuron products of activation derivatives, listed
in ``K3_TERMS`` and ``K4_TERMS``. The K4 table is shared with the analytic
expectation code in :mod:`lantk.kernels_analytic`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import erf, expit

ACTIVATIONS = ("relu", "tanh", "erf", "softplus")
SMOOTH = ("tanh", "erf", "softplus")


class ActivationError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


def activation_derivative(name: str, order: int, u, beta: float = 1.0):
    """sigma^(order)(u) for order 0..3.

    ``beta`` is the sharpness of softplus, sigma(u) = log(1 + exp(beta u)) / beta,
    which tends to ReLU as beta grows.
    """
    u = np.asarray(u, dtype=float)
    if name == "relu":
        if order == 0:
            return np.maximum(u, 0.0)
        if order == 1:
            return (u > 0).astype(float)
        raise ActivationError("relu has no pointwise derivative of order >= 2; use a smooth activation")
    if name == "tanh":
        t = np.tanh(u)
        if order == 0:
            return t
        s = 1.0 - t * t
        return (s, -2.0 * t * s, -2.0 * s * (1.0 - 3.0 * t * t))[order - 1]
    if name == "erf":
        if order == 0:
            return erf(u)
        g = 2.0 / np.sqrt(np.pi) * np.exp(-u * u)
        return (g, -2.0 * u * g, (4.0 * u * u - 2.0) * g)[order - 1]
    if name == "softplus":
        bu = beta * u
        if order == 0:
            return np.logaddexp(0.0, bu) / beta
        s = expit(bu)
        if order == 1:
            return s
        if order == 2:
            return beta * s * (1.0 - s)
        return beta * beta * s * (1.0 - s) * (1.0 - 2.0 * s)
    raise ActivationError(f"unknown activation {name!r}; choose from {ACTIVATIONS}")


@dataclass
class TwoLayerNet:
    W: np.ndarray
    a: np.ndarray
    activation: str = "relu"
    beta: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.a = np.asarray(self.a, dtype=float).ravel()
        if self.W.shape[0] != self.a.shape[0]:
            raise ValueError(f"W has {self.W.shape[0]} rows but a has {self.a.shape[0]} entries")
        if self.activation not in ACTIVATIONS:
            raise ActivationError(f"unknown activation {self.activation!r}")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def sig(self, order, U):
        return activation_derivative(self.activation, order, U, self.beta)

    def copy(self) -> "TwoLayerNet":
        return copy.deepcopy(self)


def init_net(d: int, m: int, activation: str = "relu", seed: int = 0,
             symmetric: bool = False, beta: float = 1.0) -> TwoLayerNet:
    """Gaussian N(0, 1) initialization.

    With ``symmetric`` the first m/2 neurons are duplicated with negated output
    weights, so the network output is identically zero at initialization.
    """
    rng = np.random.default_rng(seed)
    if symmetric:
        if m % 2:
            raise ValueError("symmetric init needs an even width")
        W = rng.standard_normal((m // 2, d))
        a = rng.standard_normal(m // 2)
        W, a = np.vstack([W, W]), np.concatenate([a, -a])
    else:
        W = rng.standard_normal((m, d))
        a = rng.standard_normal(m)
    return TwoLayerNet(W, a, activation, beta, seed)


def _readout(net: TwoLayerNet, U) -> np.ndarray:
    """sum_r a_r sigma(u_r) / sqrt(m), adding neuron r to neuron r + m/2 first.

    With the duplicate-and-negate initialization the paired terms cancel
    exactly, so the output is exactly zero rather than zero up to rounding.
    """
    S = net.sig(0, U) * net.a
    m = net.m
    if m % 2 == 0:
        S = S[:, : m // 2] + S[:, m // 2:]
    return S.sum(axis=1) / np.sqrt(m)


def forward(net: TwoLayerNet, X) -> np.ndarray:
    X = np.atleast_2d(X)
    return _readout(net, X @ net.W.T)


def loss(net: TwoLayerNet, X, y) -> float:
    r = forward(net, X) - y
    return 0.5 * float(r @ r) / len(y)


def loss_grad(net: TwoLayerNet, X, y):
    """Gradient of L = (1/2n) sum (f_i - y_i)^2 with respect to (W, a)."""
    X = np.atleast_2d(X)
    n = X.shape[0]
    U = X @ net.W.T
    r = (_readout(net, U) - y) / n
    ga = net.sig(0, U).T @ r / np.sqrt(net.m)
    gW = (net.sig(1, U) * r[:, None]).T @ X * (net.a / np.sqrt(net.m))[:, None]
    return gW, ga


def param_grad(net: TwoLayerNet, x):
    """Gradient of f(x) with respect to (W, a)."""
    u = net.W @ x
    return np.outer(net.sig(1, u) * net.a, x) / np.sqrt(net.m), net.sig(0, u) / np.sqrt(net.m)


@dataclass
class TrainTrace:
    times: list = field(default_factory=list)
    nets: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    step_size: float = 0.0
    steps: int = 0


def train_gd(net: TwoLayerNet, X, y, step_size: float, steps: int,
             snapshot_every: int | None = None, max_loss: float = 1e12) -> TrainTrace:
    """Full-batch gradient descent; time after k steps is k * step_size."""
    if step_size <= 0:
        raise ValueError("step_size must be positive")
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=float)
    net = net.copy()
    trace = TrainTrace(step_size=step_size, steps=steps)
    trace.times.append(0.0)
    trace.nets.append(net.copy())
    trace.losses.append(loss(net, X, y))
    every = snapshot_every or max(steps, 1)
    for k in range(1, steps + 1):
        gW, ga = loss_grad(net, X, y)
        net.W -= step_size * gW
        net.a -= step_size * ga
        cur = loss(net, X, y)
        if not np.isfinite(cur) or cur > max_loss:
            raise DivergenceError(f"loss {cur:.3e} at step {k} (step_size={step_size}); reduce the step size")
        trace.losses.append(cur)
        if k % every == 0 or k == steps:
            trace.times.append(k * step_size)
            trace.nets.append(net.copy())
    return trace


def train_flow(net: TwoLayerNet, X, y, times, rtol: float = 1e-10, atol: float = 1e-12):
    """Integrate gradient flow d(theta)/dt = -grad L to the requested times.

    Returns one network snapshot per entry of ``times``. Uses an adaptive
    high-order Runge-Kutta scheme so that discretization error stays well
    below finite-width effects.
    """
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=float)
    m, d = net.W.shape
    work = net.copy()

    def unpack(theta):
        work.W = theta[: m * d].reshape(m, d)
        work.a = theta[m * d:]
        return work

    def rhs(_t, theta):
        gW, ga = loss_grad(unpack(theta), X, y)
        return -np.concatenate([gW.ravel(), ga])

    times = np.asarray(times, dtype=float)
    theta0 = np.concatenate([net.W.ravel(), net.a])
    sol = solve_ivp(rhs, (0.0, float(times.max())), theta0, method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise DivergenceError(sol.message)
    out = []
    for k in range(len(times)):
        snap = net.copy()
        snap.W = sol.y[: m * d, k].reshape(m, d).copy()
        snap.a = sol.y[m * d:, k].copy()
        out.append(snap)
    return out


# ---------------------------------------------------------------------------
# kernel hierarchy

def empirical_k2(net: TwoLayerNet, X, X2=None) -> np.ndarray:
    X = np.atleast_2d(X)
    X2 = X if X2 is None else np.atleast_2d(X2)
    U, U2 = X @ net.W.T, X2 @ net.W.T
    A = net.sig(1, U) * net.a
    A2 = net.sig(1, U2) * net.a
    K = (X @ X2.T) * (A @ A2.T) + net.sig(0, U) @ net.sig(0, U2).T
    return K / net.m


def _require_smooth(net, order):
    if net.activation not in SMOOTH:
        raise ActivationError(
            f"order-{order} kernels need a smooth activation ({', '.join(SMOOTH)}); "
            f"{net.activation} derivatives are distributions")


# Each entry: (coefficient, power of a, derivative orders on (x_a, x_b, x_c),
# inner-product prefactor as a function of ab, ac, bc).
K3_TERMS = (
    (1.0, 3, (2, 1, 1), lambda ab, ac, bc: ac * ab),
    (1.0, 3, (1, 2, 1), lambda ab, ac, bc: bc * ab),
    (2.0, 1, (1, 1, 0), lambda ab, ac, bc: ab),
    (1.0, 1, (1, 0, 1), lambda ab, ac, bc: ac),
    (1.0, 1, (0, 1, 1), lambda ab, ac, bc: bc),
)

# Each entry: (coefficient, power of a, derivative orders on (x_a, x_b, x_c, x_d),
# inner-product prefactor as a function of ab, ac, ad, bc, bd, cd).
K4_TERMS = (
    (1.0, 4, (3, 1, 1, 1), lambda ab, ac, ad, bc, bd, cd: ab * ac * ad),
    (1.0, 4, (1, 3, 1, 1), lambda ab, ac, ad, bc, bd, cd: ab * bc * bd),
    (1.0, 4, (2, 2, 1, 1), lambda ab, ac, ad, bc, bd, cd: ab * (ac * bd + ad * bc)),
    (1.0, 4, (2, 1, 2, 1), lambda ab, ac, ad, bc, bd, cd: ac * ab * cd),
    (1.0, 4, (1, 2, 2, 1), lambda ab, ac, ad, bc, bd, cd: bc * ab * cd),
    (3.0, 2, (2, 1, 1, 0), lambda ab, ac, ad, bc, bd, cd: ab * ac),
    (3.0, 2, (1, 2, 1, 0), lambda ab, ac, ad, bc, bd, cd: ab * bc),
    (2.0, 2, (2, 1, 0, 1), lambda ab, ac, ad, bc, bd, cd: ab * ad),
    (2.0, 2, (1, 2, 0, 1), lambda ab, ac, ad, bc, bd, cd: ab * bd),
    (2.0, 2, (1, 1, 1, 1), lambda ab, ac, ad, bc, bd, cd: ab * cd),
    (1.0, 2, (2, 0, 1, 1), lambda ab, ac, ad, bc, bd, cd: ac * ad),
    (1.0, 2, (1, 0, 2, 1), lambda ab, ac, ad, bc, bd, cd: ac * cd),
    (1.0, 2, (0, 2, 1, 1), lambda ab, ac, ad, bc, bd, cd: bc * bd),
    (1.0, 2, (0, 1, 2, 1), lambda ab, ac, ad, bc, bd, cd: bc * cd),
    (1.0, 2, (1, 1, 1, 1), lambda ab, ac, ad, bc, bd, cd: ac * bd + ad * bc),
    (2.0, 0, (1, 1, 0, 0), lambda ab, ac, ad, bc, bd, cd: ab),
    (1.0, 0, (1, 0, 1, 0), lambda ab, ac, ad, bc, bd, cd: ac),
    (1.0, 0, (0, 1, 1, 0), lambda ab, ac, ad, bc, bd, cd: bc),
)


def k3_vector(net: TwoLayerNet, xa, xb, Xc) -> np.ndarray:
    """K3(xa, xb, z) for every row z of Xc."""
    _require_smooth(net, 3)
    Xc = np.atleast_2d(Xc)
    ua, ub, Uc = net.W @ xa, net.W @ xb, Xc @ net.W.T
    ab, ac, bc = xa @ xb, Xc @ xa, Xc @ xb
    out = np.zeros(Xc.shape[0])
    for coef, p, (oa, ob, oc), pref in K3_TERMS:
        s = net.a ** p * net.sig(oa, ua) * net.sig(ob, ub)
        out += coef * pref(ab, ac, bc) * (net.sig(oc, Uc) @ s)
    return out / (net.m * np.sqrt(net.m))


def empirical_k3(net: TwoLayerNet, xa, xb, xc) -> float:
    return float(k3_vector(net, xa, xb, np.atleast_2d(xc))[0])


def k4_block(net: TwoLayerNet, xa, xb, Xc, Xd=None) -> np.ndarray:
    """Matrix of K4(xa, xb, Xc[i], Xd[j])."""
    _require_smooth(net, 4)
    Xc = np.atleast_2d(Xc)
    Xd = Xc if Xd is None else np.atleast_2d(Xd)
    ua, ub = net.W @ xa, net.W @ xb
    Uc, Ud = Xc @ net.W.T, Xd @ net.W.T
    ab = xa @ xb
    ac, bc = (Xc @ xa)[:, None], (Xc @ xb)[:, None]
    ad, bd = (Xd @ xa)[None, :], (Xd @ xb)[None, :]
    cd = Xc @ Xd.T
    sc = {o: net.sig(o, Uc) for o in (0, 1, 2)}
    sd = {o: net.sig(o, Ud) for o in (0, 1)}
    out = np.zeros((Xc.shape[0], Xd.shape[0]))
    for coef, p, (oa, ob, oc, od), pref in K4_TERMS:
        s = net.a ** p * net.sig(oa, ua) * net.sig(ob, ub)
        out += coef * pref(ab, ac, ad, bc, bd, cd) * ((sc[oc] * s) @ sd[od].T)
    return out / net.m ** 2


def empirical_k4(net: TwoLayerNet, xa, xb, xc, xd) -> float:
    return float(k4_block(net, xa, xb, np.atleast_2d(xc), np.atleast_2d(xd))[0, 0])
