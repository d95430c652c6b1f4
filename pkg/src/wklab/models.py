"""Catalog of Tonelli Lagrangians on T^n used by the experiments.

Every model evaluates vectorised over a batch: ``x`` and ``v`` have shape
``(m, n)`` (a single point may be passed as a 1-D array) and ``t`` is a
scalar or broadcastable array.  ``shift`` is a constant added to the
Lagrangian; it moves the critical value by ``-shift`` and is how the
critical-value estimator is exercised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .grid import lift_shifts, reduce_point

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class UnsupportedModelError(TypeError):
    pass


class LegendreConvergenceError(RuntimeError):
    def __init__(self, msg, radius):
        super().__init__(f"{msg} (search radius {radius})")
        self.radius = radius


class StepRejected(RuntimeError):
    pass


def _batch(a, n):
    return np.asarray(a, dtype=float).reshape(-1, n)


def golden_direction() -> np.ndarray:
    """Unit vector along (1, (sqrt(5) - 1) / 2)."""
    w = np.array([1.0, GOLDEN])
    return w / np.linalg.norm(w)


@dataclass(frozen=True)
class LagrangianModel:
    """Base class; subclasses implement ``_lagrangian`` and ``_hamiltonian``."""

    dim: int = field(init=False, default=1)
    shift: float = field(default=0.0, kw_only=True)

    name = "base"
    time_periodic = False

    def lagrangian(self, x, v, t=0.0):
        x = _batch(x, self.dim)
        v = _batch(v, self.dim)
        return self._lagrangian(x, v, self._phase(t)) + self.shift

    def hamiltonian(self, x, p, t=0.0):
        x = _batch(x, self.dim)
        p = _batch(p, self.dim)
        return self._hamiltonian(x, p, self._phase(t)) - self.shift

    def acceleration(self, x, v, t):
        """Solve the Euler-Lagrange equation for the acceleration (generic, by finite differences)."""
        return _fd_acceleration(self, x, v, t)

    def _phase(self, t):
        return np.mod(t, 1.0) if self.time_periodic else t

    def min_speed_velocity(self, x, t=0.0):
        """Velocity minimising L at (x, t); used to bound the Legendre search."""
        return np.zeros(self.dim)


@dataclass(frozen=True)
class Integrable(LagrangianModel):
    """L(x, v) = |v - omega|^2 / 2."""

    omega: tuple = (GOLDEN,)
    name = "integrable"

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in np.atleast_1d(self.omega)))
        object.__setattr__(self, "dim", len(self.omega))

    @property
    def w(self):
        return np.asarray(self.omega)

    def _lagrangian(self, x, v, t):
        d = v - self.w
        return 0.5 * np.sum(d * d, axis=-1)

    def _hamiltonian(self, x, p, t):
        return p @ self.w + 0.5 * np.sum(p * p, axis=-1)

    def acceleration(self, x, v, t):
        return np.zeros_like(np.asarray(v, dtype=float))

    def drift_integral(self, t0, t1):
        return self.w * (t1 - t0)

    def min_speed_velocity(self, x, t=0.0):
        return self.w


def cosine_potential(amplitude: float = 1.0):
    """U(x) = amplitude * sum_i (1 - cos 2 pi x_i), with gradient."""

    def U(x):
        return amplitude * np.sum(1.0 - np.cos(2 * np.pi * x), axis=-1)

    def grad(x):
        return amplitude * 2 * np.pi * np.sin(2 * np.pi * x)

    return U, grad


@dataclass(frozen=True)
class Mechanical(LagrangianModel):
    """L(x, v) = |v|^2 / 2 + U(x) with min U = U(0) = 0."""

    potential: Callable = None
    potential_grad: Callable = None
    n: int = 1
    amplitude: float = 1.0
    name = "mechanical"

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.n))
        if self.potential is None:
            U, dU = cosine_potential(self.amplitude)
            object.__setattr__(self, "potential", U)
            object.__setattr__(self, "potential_grad", dU)

    def U(self, x):
        return self.potential(_batch(x, self.dim))

    def _lagrangian(self, x, v, t):
        return 0.5 * np.sum(v * v, axis=-1) + self.potential(x)

    def _hamiltonian(self, x, p, t):
        return 0.5 * np.sum(p * p, axis=-1) - self.potential(x)

    def acceleration(self, x, v, t):
        # d/dt v = dL/dx = grad U
        return self.potential_grad(_batch(x, self.dim))

    def energy(self, x, v):
        v = _batch(v, self.dim)
        return 0.5 * np.sum(v * v, axis=-1) - self.U(x)


def cosine_drift(omega0, amplitude):
    """omega(t) = omega0 + amplitude * cos(2 pi t), with derivative."""
    w0 = np.atleast_1d(np.asarray(omega0, dtype=float))
    a = np.atleast_1d(np.asarray(amplitude, dtype=float)) * np.ones_like(w0)

    def drift(t):
        t = np.asarray(t, dtype=float)
        return w0 + a * np.cos(2 * np.pi * t)[..., None]

    def drift_dot(t):
        t = np.asarray(t, dtype=float)
        return -2 * np.pi * a * np.sin(2 * np.pi * t)[..., None]

    return drift, drift_dot


@dataclass(frozen=True)
class PeriodicDrift(LagrangianModel):
    """L(x, v, t) = |v - omega(t)|^2 / 2 with a 1-periodic drift omega(t)."""

    omega0: tuple = (GOLDEN,)
    amplitude: float = 0.3
    drift: Callable = None
    drift_dot: Callable = None
    name = "periodic_drift"
    time_periodic = True

    def __post_init__(self):
        object.__setattr__(self, "omega0", tuple(float(w) for w in np.atleast_1d(self.omega0)))
        object.__setattr__(self, "dim", len(self.omega0))
        if self.drift is None:
            d, dd = cosine_drift(self.omega0, self.amplitude)
            object.__setattr__(self, "drift", d)
            object.__setattr__(self, "drift_dot", dd)

    def _omega(self, t):
        w = self.drift(np.mod(np.asarray(t, dtype=float), 1.0))
        return np.asarray(w, dtype=float).reshape(-1, self.dim)

    def _lagrangian(self, x, v, t):
        d = v - self._omega(t)
        return 0.5 * np.sum(d * d, axis=-1)

    def _hamiltonian(self, x, p, t):
        return np.sum(p * self._omega(t), axis=-1) + 0.5 * np.sum(p * p, axis=-1)

    def acceleration(self, x, v, t):
        # d/dt (v - omega(t)) = 0
        return np.asarray(self.drift_dot(np.mod(t, 1.0)), dtype=float).reshape(-1, self.dim)

    def drift_integral(self, t0, t1):
        w, _ = integrate.quad_vec(lambda s: self._omega(s)[0], t0, t1, epsabs=1e-13, epsrel=1e-12)
        return np.asarray(w)

    def min_speed_velocity(self, x, t=0.0):
        return self._omega(t)[0]


@dataclass(frozen=True)
class QuadraticShift(LagrangianModel):
    """L(x, v) = <A(x)(v - omega), v - omega> / 2 + f(x, v - omega).

    ``A`` is a constant symmetric positive-definite matrix or a callable
    ``x -> (m, n, n)``; ``f`` must be ``O(|w|^3)`` in ``w = v - omega`` and
    defaults to zero.
    """

    omega: tuple = (1.0, GOLDEN)
    A: object = None
    f: Callable = None
    v_max: float = 4.0
    name = "quadratic_shift"

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in np.atleast_1d(self.omega)))
        n = len(self.omega)
        object.__setattr__(self, "dim", n)
        if self.A is None:
            object.__setattr__(self, "A", np.eye(n))
        if not callable(self.A):
            A = np.asarray(self.A, dtype=float)
            if not np.allclose(A, A.T) or np.min(np.linalg.eigvalsh(A)) <= 0:
                raise ValueError("A must be symmetric positive definite")

    @property
    def w(self):
        return np.asarray(self.omega)

    def A_at(self, x):
        x = _batch(x, self.dim)
        if callable(self.A):
            return np.asarray(self.A(x), dtype=float).reshape(-1, self.dim, self.dim)
        return np.broadcast_to(np.asarray(self.A, dtype=float), (x.shape[0], self.dim, self.dim))

    def _lagrangian(self, x, v, t):
        d = v - self.w
        A = self.A_at(x)
        val = 0.5 * np.einsum("mi,mij,mj->m", d, A, d)
        if self.f is not None:
            val = val + self.f(x, d)
        return val

    def _hamiltonian(self, x, p, t):
        x, p = np.broadcast_arrays(x, p)
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            out[i] = self._legendre_point(x[i], p[i], t)
        return out

    def _legendre_point(self, x, p, t):
        n = self.dim
        R = self.v_max

        def neg(v):
            return -(p @ v - self._lagrangian(x[None], v[None], t)[0])

        ax = np.linspace(-R, R, 81 if n == 1 else 41)
        cand = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), -1).reshape(-1, n)
        cand = cand[np.linalg.norm(cand, axis=1) <= R]
        vals = p @ cand.T - self._lagrangian(np.broadcast_to(x, cand.shape), cand, t)
        v0 = cand[np.argmax(vals)]
        res = optimize.minimize(neg, v0, method="BFGS", options={"gtol": 1e-12})
        if not res.success and np.linalg.norm(res.jac) > 1e-6:
            raise LegendreConvergenceError("Legendre maximisation did not converge", R)
        if np.linalg.norm(res.x) >= R:
            raise LegendreConvergenceError("maximiser left the velocity ball", R)
        return -res.fun

    def hamiltonian_remainder(self, x, p):
        """g(x, p) = H(x, p) - <omega, p> - <A^{-1}(x) p, p> / 2."""
        x = _batch(x, self.dim)
        p = _batch(p, self.dim)
        Ainv = np.linalg.inv(self.A_at(x))
        quad = 0.5 * np.einsum("mi,mij,mj->m", p, Ainv, p)
        return self.hamiltonian(x, p) + self.shift - p @ self.w - quad

    def min_speed_velocity(self, x, t=0.0):
        return self.w


def _fd_acceleration(model, x, v, t, eps=1e-5):
    """Generic Euler-Lagrange solve: L_vv a = L_x - L_vx v - L_vt."""
    x = _batch(x, model.dim)
    v = _batch(v, model.dim)
    n = model.dim
    out = np.empty_like(v)
    E = np.eye(n) * eps

    def L(xx, vv, tt):
        return model.lagrangian(xx[None], vv[None], tt)[0]

    def Lv(xx, vv, tt):
        return np.array([(L(xx, vv + E[i], tt) - L(xx, vv - E[i], tt)) / (2 * eps) for i in range(n)])

    for m in range(x.shape[0]):
        xm, vm = x[m], v[m]
        Lx = np.array([(L(xm + E[i], vm, t) - L(xm - E[i], vm, t)) / (2 * eps) for i in range(n)])
        Hvv = np.column_stack([(Lv(xm, vm + E[j], t) - Lv(xm, vm - E[j], t)) / (2 * eps) for j in range(n)])
        Hvx = np.column_stack([(Lv(xm + E[j], vm, t) - Lv(xm - E[j], vm, t)) / (2 * eps) for j in range(n)])
        Lvt = (Lv(xm, vm, t + eps) - Lv(xm, vm, t - eps)) / (2 * eps)
        out[m] = np.linalg.solve(Hvv, Lx - Hvx @ vm - Lvt)
    return out


def eval_lagrangian(model: LagrangianModel, x, v, t=0.0) -> float:
    return float(model.lagrangian(x, v, t)[0])


def eval_hamiltonian(model: LagrangianModel, x, p, t=0.0) -> float:
    return float(model.hamiltonian(x, p, t)[0])


def analytic_min_action(model, y, x, t0: float, t1: float, lift_radius: int = 2) -> float:
    """Closed-form minimal action between ``y`` at ``t0`` and ``x`` at ``t1``.

    Straight lines in the lift are the minimisers for velocity-only
    Lagrangians, so the action is ``|D - W|^2 / (2T)`` minimised over the
    lifts ``D`` of ``x - y``, where ``W`` is the integrated drift.
    """
    if not isinstance(model, (Integrable, PeriodicDrift)):
        raise UnsupportedModelError(f"no closed form for {type(model).__name__}")
    T = t1 - t0
    if T <= 0:
        raise ValueError("t1 must exceed t0")
    W = model.drift_integral(t0, t1)
    y = reduce_point(y, model.dim)
    x = reduce_point(x, model.dim)
    # lifts are enumerated around the drifted start so large W needs no extra radius
    base = x - reduce_point(y + W, model.dim)
    shifts = lift_shifts(model.dim, lift_radius)
    rel = base[None, :] + shifts
    return float(np.min(np.sum(rel * rel, axis=1)) / (2 * T) + model.shift * T)


def _rk4(model, x, v, t, h):
    def f(xx, vv, tt):
        return vv, model.acceleration(xx, vv, tt).reshape(vv.shape)

    k1x, k1v = f(x, v, t)
    k2x, k2v = f(x + h / 2 * k1x, v + h / 2 * k1v, t + h / 2)
    k3x, k3v = f(x + h / 2 * k2x, v + h / 2 * k2v, t + h / 2)
    k4x, k4v = f(x + h * k3x, v + h * k3v, t + h)
    return (x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))


def euler_lagrange_flow(model, x0, v0, t0: float, duration: float, step: float,
                        tol: float = 1e-6):
    """Classical RK4 for the Euler-Lagrange flow.

    Each step is checked against two half steps; a discrepancy above ``tol``
    raises :class:`StepRejected`.  Returns ``(t, x, v)`` arrays with
    positions reduced mod 1.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n_steps = int(round(duration / step))
    x = np.asarray(x0, dtype=float).reshape(1, model.dim)
    v = np.asarray(v0, dtype=float).reshape(1, model.dim)
    ts = [t0]
    xs = [reduce_point(x[0])]
    vs = [v[0].copy()]
    t = t0
    for _ in range(n_steps):
        xf, vf = _rk4(model, x, v, t, step)
        xh, vh = _rk4(model, x, v, t, step / 2)
        xh, vh = _rk4(model, xh, vh, t + step / 2, step / 2)
        err = max(np.max(np.abs(xf - xh)), np.max(np.abs(vf - vh)))
        if err > tol:
            raise StepRejected(f"local error {err:.3e} exceeds tol {tol:.1e} at t={t:.4f}")
        x, v = xh, vh
        t += step
        ts.append(t)
        xs.append(reduce_point(x[0]))
        vs.append(v[0].copy())
    return np.array(ts), np.array(xs), np.array(vs)


CATALOG = {
    "integrable": Integrable,
    "mechanical": Mechanical,
    "periodic_drift": PeriodicDrift,
    "quadratic_shift": QuadraticShift,
}


def build_model(name: str, **params) -> LagrangianModel:
    if name not in CATALOG:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    return CATALOG[name](**params)
