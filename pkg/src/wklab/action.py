"""Discrete minimal action: one-step kernels, min-plus composition, action
potential and windowed Peierls barriers.

Time is discretised on the lattice ``j * dt`` with ``m = 1 / dt`` sub-steps
per period.  Lattice indices are integers throughout; ``KernelFamily.span``
builds the kernel between two lattice indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import PeriodicGrid, GridMismatchError

SENTINEL = 1e6
QUAD_SLACK = 1e-9


class DisconnectedKernelError(ValueError):
    pass


class IntervalMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ActionKernel:
    """cost[y, x] approximates F_{t_start, t_end}(y, x) between grid nodes."""

    grid: PeriodicGrid
    t_start: float
    t_end: float
    cost: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float)
        if c.shape != (self.grid.size, self.grid.size):
            raise GridMismatchError(f"cost shape {c.shape} does not match {self.grid}")
        if c.flags.writeable:
            c = c.copy()
            c.flags.writeable = False
        object.__setattr__(self, "cost", c)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class BarrierTable:
    grid: PeriodicGrid
    tau: float
    tau_prime: float
    window_n: int
    values: np.ndarray = field(repr=False)
    critical_value: float = 0.0
    window_argmin: np.ndarray | None = field(default=None, repr=False)


def minplus(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(min, +) matrix product: C[i, j] = min_k A[i, k] + B[k, j]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        return np.min(A[:, None] + B, axis=0)
    n, k = A.shape
    out = np.full((n, B.shape[1]), np.inf)
    tmp = np.empty_like(out)
    for j in range(k):
        np.add(A[:, j : j + 1], B[j][None, :], out=tmp)
        np.minimum(out, tmp, out=out)
    return out


def minplus_argmin(u: np.ndarray, K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vector-matrix product with the minimising source per target (smallest index on ties)."""
    S = u[:, None] + K
    arg = np.argmin(S, axis=0)
    return S[arg, np.arange(S.shape[1])], arg


def displacement_offsets(grid: PeriodicGrid, cap: float) -> np.ndarray:
    """Integer node offsets d with |d| * spacing <= cap."""
    r = int(np.floor(cap * grid.resolution + 1e-9))
    offs = np.array(list(itertools.product(range(-r, r + 1), repeat=grid.dim)), dtype=int)
    norms = np.linalg.norm(offs * grid.spacing, axis=1)
    return offs[norms <= cap + 1e-12]


def one_step_kernel(model, grid: PeriodicGrid, t: float, dt: float, v_max: float = 4.0) -> ActionKernel:
    """Single sub-step kernel with midpoint evaluation of L.

    cost[y, x] = min over admissible lifts D of dt * L(y + D/2, D/dt, t + dt/2);
    displacements longer than ``v_max * dt`` cost ``SENTINEL``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cap = v_max * dt
    if cap < grid.spacing:
        raise DisconnectedKernelError(
            f"v_max * dt = {cap:.4g} is below the grid spacing {grid.spacing:.4g}"
        )
    if cap >= 0.5:
        raise ValueError("v_max * dt must stay below 1/2 so lifts do not alias")
    N = grid.resolution
    X = grid.coords()
    idx = np.arange(grid.size)
    multi = np.stack(np.unravel_index(idx, grid.shape), axis=-1)
    cost = np.full((grid.size, grid.size), SENTINEL)
    for d in displacement_offsets(grid, cap):
        D = d * grid.spacing
        vel = np.broadcast_to(D / dt, X.shape)
        vals = dt * model.lagrangian(X + D / 2, vel, t + dt / 2)
        tgt = np.ravel_multi_index(tuple(((multi + d) % N).T), grid.shape)
        cost[idx, tgt] = np.minimum(cost[idx, tgt], vals)
    return ActionKernel(grid, t, t + dt, cost)


def identity_kernel(grid: PeriodicGrid, t: float = 0.0) -> ActionKernel:
    cost = np.full((grid.size, grid.size), SENTINEL)
    np.fill_diagonal(cost, 0.0)
    return ActionKernel(grid, t, t, cost)


def compose(K1: ActionKernel, K2: ActionKernel) -> ActionKernel:
    if K1.grid != K2.grid:
        raise GridMismatchError("kernels live on different grids")
    if abs(K1.t_end - K2.t_start) > 1e-9:
        raise IntervalMismatchError(f"K1 ends at {K1.t_end}, K2 starts at {K2.t_start}")
    return ActionKernel(K1.grid, K1.t_start, K2.t_end, minplus(K1.cost, K2.cost))


def critical_value_of(P: np.ndarray) -> float:
    """Minimum cycle mean of a (min, +) matrix (Karp).

    For a one-period kernel this is the per-period growth rate of the
    iterates, i.e. minus the discrete critical value.
    """
    N = P.shape[0]
    D = np.empty((N + 1, N))
    D[0] = 0.0
    for k in range(1, N + 1):
        D[k] = np.min(D[k - 1][:, None] + P, axis=0)
    ks = np.arange(N)[:, None]
    ratios = (D[N][None, :] - D[:N]) / (N - ks)
    return float(np.min(np.max(ratios, axis=0)))


class KernelFamily:
    """Sub-step kernels of one model on one grid, with cached period kernels.

    Autonomous models share a single cost table across all phases.
    """

    def __init__(self, model, grid: PeriodicGrid, dt: float = 0.05, v_max: float = 4.0):
        m = int(round(1.0 / dt))
        if abs(m * dt - 1.0) > 1e-9:
            raise ValueError("dt must divide the unit period")
        self.model = model
        self.grid = grid
        self.dt = 1.0 / m
        self.m = m
        self.v_max = v_max
        self._sub: dict[int, ActionKernel] = {}
        self._period: dict[int, ActionKernel] = {}
        self._growth: float | None = None

    @property
    def autonomous(self) -> bool:
        return not getattr(self.model, "time_periodic", False)

    def sub(self, j: int) -> ActionKernel:
        """Kernel over [j dt, (j + 1) dt] (cost depends only on j mod m)."""
        phase = j % self.m
        if phase not in self._sub:
            if self.autonomous and self._sub:
                base = next(iter(self._sub.values()))
                self._sub[phase] = ActionKernel(self.grid, phase * self.dt, (phase + 1) * self.dt, base.cost)
            else:
                self._sub[phase] = one_step_kernel(self.model, self.grid, phase * self.dt, self.dt, self.v_max)
        return self._sub[phase]

    def sub_kernels(self) -> list[ActionKernel]:
        return [self.sub(j) for j in range(self.m)]

    def period(self, phase: int = 0) -> ActionKernel:
        """One-period kernel starting at lattice phase ``phase`` (write-once cache)."""
        phase %= self.m
        if phase not in self._period:
            if self.autonomous and self._period:
                base = next(iter(self._period.values()))
                K = ActionKernel(self.grid, phase * self.dt, phase * self.dt + 1.0, base.cost)
            else:
                K = self.sub(phase)
                for j in range(phase + 1, phase + self.m):
                    K = compose(K, self._shifted(self.sub(j), j))
            self._period[phase] = K
        return self._period[phase]

    def _shifted(self, K: ActionKernel, j: int) -> ActionKernel:
        # re-tag cached sub-kernels with absolute times so compose can chain them
        t0 = j * self.dt
        if abs(K.t_start - t0) < 1e-12:
            return K
        return ActionKernel(self.grid, t0, t0 + self.dt, K.cost)

    def growth_rate(self) -> float:
        """Per-period growth of the iterates (minimum cycle mean of the period map)."""
        if self._growth is None:
            self._growth = critical_value_of(self.period(0).cost)
        return self._growth

    def critical_value(self) -> float:
        return -self.growth_rate()

    def propagate(self, rows: np.ndarray, a: int, b: int, c: float = 0.0) -> np.ndarray:
        """Push value rows from lattice index ``a`` to ``b`` (rows: (..., size)).

        Whole periods use the cached period kernel when the phase allows;
        ``c`` is added per unit time (the critical-value normalisation).
        """
        if b < a:
            raise ValueError("b must be >= a")
        R = np.asarray(rows, dtype=float)
        j = a
        while j < b:
            if b - j >= self.m and self._period_affordable(j):
                R = minplus(R, self.period(j).cost) + c
                j += self.m
            else:
                R = minplus(R, self.sub(j).cost) + c * self.dt
                j += 1
        return R

    def _period_affordable(self, j: int) -> bool:
        # building a period kernel costs m dense min-plus products
        cached = (j % self.m) in self._period or (self.autonomous and bool(self._period))
        return cached or self.grid.size <= 512

    def span(self, a: int, b: int) -> ActionKernel:
        """Kernel from lattice index a to b."""
        if b < a:
            raise ValueError("b must be >= a")
        if b == a:
            return identity_kernel(self.grid, a * self.dt)
        K = None
        j = a
        while j < b:
            if b - j >= self.m:
                step = self.period(j).cost
                j_next = j + self.m
            else:
                step = self.sub(j).cost
                j_next = j + 1
            K = step if K is None else minplus(K, step)
            j = j_next
        return ActionKernel(self.grid, a * self.dt, b * self.dt, K)

    def lattice_index(self, t: float) -> int:
        j = int(round(t / self.dt))
        if abs(j * self.dt - t) > 1e-9:
            raise ValueError(f"time {t} is not on the dt = {self.dt} lattice")
        return j


_FAMILIES: dict = {}


def kernel_family(model, grid: PeriodicGrid, dt: float = 0.05, v_max: float = 4.0) -> KernelFamily:
    """Shared families keyed by model identity; the cache keeps the model alive."""
    key = (id(model), grid, round(dt, 12), v_max)
    hit = _FAMILIES.get(key)
    if hit is None or hit.model is not model:
        hit = KernelFamily(model, grid, dt, v_max)
        _FAMILIES[key] = hit
    return hit


def clear_cache():
    _FAMILIES.clear()


def _delta_rows(grid: PeriodicGrid, sources) -> np.ndarray:
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    R = np.full((sources.size, grid.size), np.inf)
    R[np.arange(sources.size), sources] = 0.0
    return R


def min_action(model, grid: PeriodicGrid, y: int, x: int, t0: float, t1: float,
               dt: float = 0.05, v_max: float = 4.0) -> float:
    fam = kernel_family(model, grid, dt, v_max)
    a, b = fam.lattice_index(t0), fam.lattice_index(t1)
    if b <= a:
        raise ValueError("(t1 - t0) / dt must be a positive integer")
    row = fam.propagate(_delta_rows(grid, [y]), a, b)
    return float(row[0, x])


def action_potential_rows(fam: KernelFamily, sources, s: float, tau: float,
                          horizon: int, c: float = 0.0) -> np.ndarray:
    """Phi_{s, tau}(y, .) for y in ``sources``: minimum over admissible end times.

    End times are ``tau + k`` with ``k`` the ``horizon`` smallest integers
    giving a gap of at least one period.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    a = fam.lattice_index(s)
    jt = fam.lattice_index(tau)
    # first end index b = jt + k m with b - a >= m
    k0 = int(np.ceil((a + fam.m - jt) / fam.m))
    b0 = jt + k0 * fam.m
    R = fam.propagate(_delta_rows(fam.grid, sources), a, b0, c)
    best = R.copy()
    P = fam.period(b0)
    for _ in range(horizon - 1):
        R = minplus(R, P.cost) + c
        np.minimum(best, R, out=best)
    return best


def action_potential(model, grid: PeriodicGrid, y: int, s: float, x: int, tau: float,
                     horizon: int = 4, dt: float = 0.05, v_max: float = 4.0,
                     critical_value: float = 0.0) -> float:
    fam = kernel_family(model, grid, dt, v_max)
    return float(action_potential_rows(fam, [y], s, tau, horizon, critical_value)[0, x])


def barrier_rows(fam: KernelFamily, sources, tau: float, tau_prime: float, window_n: int,
                 c: float = 0.0, return_argmin: bool = False):
    """min over k in [n, 2n] of F_{tau, tau' + k}(y, .) + c * gap for y in ``sources``."""
    if window_n < 1:
        raise ValueError("window_n must be >= 1")
    a = fam.lattice_index(tau)
    b = fam.lattice_index(tau_prime) + window_n * fam.m
    R = fam.propagate(_delta_rows(fam.grid, sources), a, b, c)
    best = R.copy()
    arg = np.full(best.shape, window_n, dtype=int)
    P = fam.period(b)
    for k in range(window_n + 1, 2 * window_n + 1):
        R = minplus(R, P.cost) + c
        better = R < best
        best[better] = R[better]
        arg[better] = k
    return (best, arg) if return_argmin else best


def peierls_barrier(model, grid: PeriodicGrid, tau: float = 0.0, tau_prime: float = 0.0,
                    window_n: int = 64, dt: float = 0.05, v_max: float = 4.0,
                    critical_value: float = 0.0) -> BarrierTable:
    """Windowed approximation of the Peierls barrier over all node pairs.

    Full tables are limited to 256 nodes in 1D and 48^2 in 2D; use
    :func:`barrier_rows` for selected sources on larger grids.
    """
    limit = 256 if grid.dim == 1 else 48 * 48
    if grid.size > limit:
        raise ValueError(f"full barrier table limited to {limit} nodes; use barrier_rows")
    fam = kernel_family(model, grid, dt, v_max)
    vals, arg = barrier_rows(fam, np.arange(grid.size), tau, tau_prime, window_n,
                             critical_value, return_argmin=True)
    vals.flags.writeable = False
    return BarrierTable(grid, tau, tau_prime, window_n, vals, critical_value, arg)
