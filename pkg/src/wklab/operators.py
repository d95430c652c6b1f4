"""Lax-Oleinik iteration and the windowed operators.

Classic operator: one application of a kernel, ``(T u)(x) = min_y u(y) + K[y, x]``.
Windowed operators take the node-wise minimum of ``T_k u`` over the
integer window ``n <= k <= 2n`` (time-periodic case, followed by the
partial chain up to the phase ``tau``) or over the sub-step lattice in
``[t, 2t]`` (autonomous case).

Normalisation adds ``c`` per unit time, ``c`` being the discrete critical
value, so that iterates of models with ``c != 0`` stay bounded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .action import ActionKernel, KernelFamily, kernel_family, minplus, minplus_argmin
from .grid import GridMismatchError, ValueField, sup_distance


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residuals):
        super().__init__(msg)
        self.residuals = residuals


class NonCauchyWarning(RuntimeWarning):
    pass


OVERFLOW_LIMIT = 1e9


def lo_step(u: ValueField, K: ActionKernel) -> ValueField:
    if u.grid != K.grid:
        raise GridMismatchError("field and kernel live on different grids")
    vals = minplus(u.samples, K.cost)
    return ValueField(u.grid, vals, u.time_tag + K.duration)


@dataclass
class EvolutionState:
    """Driver state for the period map of one model on one grid."""

    current: ValueField
    family: KernelFamily = field(repr=False)
    step_count: int = 0
    c_estimate: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def period_kernel(self) -> ActionKernel:
        return self.family.period(0)

    @property
    def sub_kernels(self) -> list[ActionKernel]:
        return self.family.sub_kernels()

    @property
    def grid(self):
        return self.current.grid

    def period_map(self, vals: np.ndarray, c: float = 0.0) -> np.ndarray:
        """One period starting at phase 0; ``c`` added per unit time."""
        return self.family.propagate(vals, 0, self.family.m, c)


def make_state(model, u0: ValueField, dt: float = 0.05, v_max: float = 4.0,
               critical: str = "auto") -> EvolutionState:
    """Build the driver; ``critical`` picks how ``c_estimate`` is initialised.

    ``"exact"`` uses the minimum cycle mean of the period kernel, ``"probe"``
    the long-time growth of the iterates, ``"zero"`` assumes c = 0 and
    ``"auto"`` chooses exact on grids of at most 512 nodes.
    """
    fam = kernel_family(model, u0.grid, dt, v_max)
    state = EvolutionState(u0, fam)
    if critical == "auto":
        critical = "exact" if u0.grid.size <= 512 else "probe"
    if critical == "exact":
        state.c_estimate = fam.critical_value()
    elif critical == "probe":
        state.c_estimate = estimate_critical_value(state, 40)
    elif critical != "zero":
        raise ValueError(f"unknown critical-value mode {critical!r}")
    return state


def evolve(state: EvolutionState, periods: int, normalize: bool = True) -> EvolutionState:
    if periods < 0:
        raise ValueError("periods must be >= 0")
    c = state.c_estimate if normalize else 0.0
    vals = state.current.samples
    history = list(state.history)
    step = state.step_count
    for _ in range(periods):
        new = state.period_map(vals, c)
        if np.max(np.abs(new)) > OVERFLOW_LIMIT:
            raise OverflowError("iterates exceeded 1e9; normalise or fix the critical value")
        step += 1
        history.append((float(step), float(np.max(np.abs(new - vals))), state.c_estimate))
        vals = new
    cur = ValueField(state.grid, vals, state.current.time_tag)
    return replace(state, current=cur, step_count=step, history=history)


def _window_iterates(state: EvolutionState, n: int, normalize: bool, rows=None):
    """Running node-wise minimum over k in [n, 2n] and its argmin."""
    c = state.c_estimate if normalize else 0.0
    vals = state.current.samples if rows is None else np.asarray(rows, dtype=float)
    best = None
    arg = None
    for k in range(0, 2 * n + 1):
        if k > 0:
            vals = state.period_map(vals, c)
        if k == n:
            best = vals.copy()
            arg = np.full(vals.shape, n)
        elif k > n:
            better = vals < best
            best[better] = vals[better]
            arg[better] = k
    return best, arg


def window_min_periodic(state: EvolutionState, n: int, tau: float = 0.0,
                        normalize: bool = True) -> ValueField:
    """Windowed operator of the time-periodic case applied to ``state.current``.

    Minimum over ``k = n..2n`` of the period-map iterates, then the
    sub-step chain from phase 0 to ``tau``.
    """
    best = window_min_periodic_rows(state, state.current.samples, n, tau, normalize)
    return ValueField(state.grid, best, tau)


def window_min_periodic_rows(state: EvolutionState, rows, n: int, tau: float = 0.0,
                             normalize: bool = True) -> np.ndarray:
    """Same as :func:`window_min_periodic` on raw value rows of shape (..., size)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0, 1)")
    fam = state.family
    j = fam.lattice_index(tau)
    best, _ = _window_iterates(state, n, normalize, rows)
    c = state.c_estimate if normalize else 0.0
    for i in range(j):
        best = minplus(best, fam.sub(i).cost) + c * fam.dt
    return best


def window_min_autonomous(state: EvolutionState, t: float, sublattice: int | None = None,
                          normalize: bool = False) -> ValueField:
    """Node-wise minimum of T_sigma u over the sub-step lattice in [t, 2t]."""
    if sublattice is not None and sublattice != state.family.m:
        raise ValueError(f"sublattice {sublattice} differs from the kernel lattice {state.family.m}")
    best = window_min_autonomous_rows(state, state.current.samples, t, normalize)
    return ValueField(state.grid, best, state.current.time_tag)


def window_min_autonomous_rows(state: EvolutionState, rows, t: float,
                               normalize: bool = False) -> np.ndarray:
    """Same as :func:`window_min_autonomous` on raw value rows of shape (..., size)."""
    fam = state.family
    if not fam.autonomous:
        raise ValueError("the continuous-time window needs an autonomous model")
    if t < 0:
        raise ValueError("t must be >= 0")
    J = fam.lattice_index(t)
    c = state.c_estimate * fam.dt if normalize else 0.0
    K = fam.sub(0).cost
    vals = np.asarray(rows, dtype=float)
    for _ in range(J):
        vals = minplus(vals, K) + c
    best = vals.copy()
    for _ in range(J):
        vals = minplus(vals, K) + c
        np.minimum(best, vals, out=best)
    return best


def classic_autonomous(state: EvolutionState, t: float, normalize: bool = False) -> ValueField:
    """T_t u on the sub-step lattice (same arithmetic as the window scan)."""
    fam = state.family
    J = fam.lattice_index(t)
    c = state.c_estimate * fam.dt if normalize else 0.0
    K = fam.sub(0).cost
    vals = state.current.samples
    for _ in range(J):
        vals = minplus(vals, K) + c
    return ValueField(state.grid, vals, state.current.time_tag)


def estimate_critical_value(state: EvolutionState, t_probe: int = 40) -> float:
    """Critical value from the growth of ``min_x T_t u`` between t/2 and t.

    Differencing over the second half of the probe removes the O(osc u / t)
    transient of the one-sided estimate.  A warning is issued when the
    estimates on [t/4, t/2] and [t/2, t] disagree by more than 10 %.
    """
    if t_probe < 10:
        raise ValueError("t_probe must be at least 10 periods")
    t_probe = int(t_probe) - int(t_probe) % 4
    vals = state.current.samples
    mins = {0: float(np.min(vals))}
    for k in range(1, t_probe + 1):
        vals = state.period_map(vals)
        if k in (t_probe // 4, t_probe // 2, t_probe):
            mins[k] = float(np.min(vals))
    h, q = t_probe // 2, t_probe // 4
    c_full = -(mins[t_probe] - mins[h]) / (t_probe - h)
    c_half = -(mins[h] - mins[q]) / (h - q)
    if abs(c_full - c_half) > 0.1 * max(abs(c_full), 1e-2):
        warnings.warn(
            f"critical value drift not Cauchy: {c_half:.6g} vs {c_full:.6g}",
            NonCauchyWarning,
            stacklevel=2,
        )
    return c_full


def fixed_point(state: EvolutionState, tol: float = 1e-10, max_periods: int = 5000) -> ValueField:
    """Iterate the normalised period map until successive iterates agree to ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    vals = state.current.samples
    c = state.c_estimate
    residuals = []
    for _ in range(max_periods):
        new = state.period_map(vals, c)
        r = float(np.max(np.abs(new - vals)))
        residuals.append(r)
        vals = new
        if r < tol:
            return ValueField(state.grid, vals, 0.0)
    raise NonConvergenceError(
        f"no fixed point within {max_periods} periods (last residual {residuals[-1]:.3e})",
        residuals,
    )


def backtrack_window(state: EvolutionState, n: int, x: int, normalize: bool = True):
    """Realise the windowed value at node ``x`` by an explicit chain.

    Returns ``(k0, nodes, value)`` where ``nodes`` are the period-boundary
    nodes of the minimising chain (``nodes[0]`` the source, ``nodes[-1] == x``)
    and ``value`` re-adds the chain costs in forward order.
    """
    c = state.c_estimate if normalize else 0.0
    P = state.period_kernel.cost
    iterates = [state.current.samples]
    args = []
    for _ in range(2 * n):
        v, a = minplus_argmin(iterates[-1], P)
        iterates.append(v + c)
        args.append(a)
    window = np.array([iterates[k][x] for k in range(n, 2 * n + 1)])
    k0 = n + int(np.argmin(window))
    nodes = [x]
    for k in range(k0, 0, -1):
        nodes.append(int(args[k - 1][nodes[-1]]))
    nodes.reverse()
    val = iterates[0][nodes[0]]
    for a, b in zip(nodes[:-1], nodes[1:]):
        val = val + P[a, b] + c
    return k0, nodes, float(val)
