"""Closed-form Lax-Oleinik evaluation for L = |v - omega|^2 / 2 (+ shift).

Straight lines in the universal cover are the minimisers, so

    T_t u(x) = min_y u(y) + d(x, y + omega t)^2 / (2t) + shift * t.

Sources ``y`` range over a fine sample grid; targets ``x`` are arbitrary.
The windowed operator minimises over the continuous window sigma in
[t, 2t]: for a fixed lift D of x - y the action
|D - omega sigma|^2 / (2 sigma) + shift * sigma is convex in sigma, so the
window minimum is attained at the clamped stationary point.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..grid import wrap_displacement

_CHUNK = 2_000_000


def classic(u_y: np.ndarray, ys: np.ndarray, xs: np.ndarray, omega, t: float,
            shift: float = 0.0) -> np.ndarray:
    """T_t u at the targets ``xs``; ``u_y`` holds u on the sources ``ys``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    ys = ys.reshape(len(u_y), -1)
    xs = xs.reshape(-1, omega.size)
    if t == 0:
        raise ValueError("use the initial field directly at t = 0")
    shifted = ys + omega * t
    out = np.empty(xs.shape[0])
    step = max(1, _CHUNK // max(1, ys.shape[0]))
    for i in range(0, xs.shape[0], step):
        d = wrap_displacement(xs[i : i + step, None, :] - shifted[None, :, :])
        val = u_y[None, :] + np.sum(d * d, axis=-1) / (2 * t)
        out[i : i + step] = np.min(val, axis=1)
    return out + shift * t


def window_lifts(omega, t_lo: float, t_hi: float) -> np.ndarray:
    """Integer lifts k for which some z + k, z in [0,1)^n, can be nearest to omega * sigma."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    speed = np.max(np.abs(omega))
    n_samp = int(np.ceil((t_hi - t_lo) * speed * 4)) + 2
    sig = np.linspace(t_lo, t_hi, n_samp)
    cells = np.floor(sig[:, None] * omega[None, :]).astype(int)
    cells = np.unique(cells, axis=0)
    nb = np.array(list(itertools.product((-1, 0, 1), repeat=omega.size)))
    lifts = (cells[:, None, :] + nb[None, :, :]).reshape(-1, omega.size)
    return np.unique(lifts, axis=0).astype(float)


def windowed(u_y: np.ndarray, ys: np.ndarray, xs: np.ndarray, omega, t: float,
             shift: float = 0.0, classic_vals: np.ndarray | None = None) -> np.ndarray:
    """min over sigma in [t, 2t] of T_sigma u at ``xs`` (continuous window).

    ``classic_vals`` (T_t u at ``xs``) doubles as an upper bound that prunes
    sources; the result never exceeds it because sigma = t is in the window.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = omega.size
    ys = ys.reshape(len(u_y), -1)
    xs = xs.reshape(-1, n)
    if classic_vals is None:
        classic_vals = classic(u_y, ys, xs, omega, t, shift)
    t_lo, t_hi = t, 2 * t
    lifts = window_lifts(omega, t_lo, t_hi)
    w2 = float(omega @ omega) + 2 * shift
    out = classic_vals.copy()
    # the window action is at least shift * sigma over sigma in [t, 2t]
    act_floor = shift * (t_lo if shift >= 0 else t_hi)
    order = np.argsort(u_y, kind="stable")
    u_sorted = u_y[order]
    y_sorted = ys[order]
    for i in range(xs.shape[0]):
        bound = out[i]
        # sources whose initial value alone exceeds the bound cannot win
        n_cand = int(np.searchsorted(u_sorted, bound - act_floor, side="right"))
        if n_cand == 0:
            continue
        cu = u_sorted[:n_cand]
        z = np.mod(xs[i][None, :] - y_sorted[:n_cand], 1.0)
        step = max(1, _CHUNK // max(1, lifts.shape[0]))
        for j in range(0, n_cand, step):
            D = z[j : j + step, None, :] + lifts[None, :, :]
            dn2 = np.sum(D * D, axis=-1)
            sig = np.clip(np.sqrt(dn2 / w2), t_lo, t_hi)
            dot = D @ omega
            act = dn2 / (2 * sig) - dot + w2 * sig / 2
            val = np.min(cu[j : j + step, None] + act)
            if val < out[i]:
                out[i] = val
    return out


def windowed_lattice(u_y, ys, xs, omega, t: float, per_unit: int = 20, shift: float = 0.0):
    """Window minimum over the lattice sigma = t + j / per_unit, j = 0..t * per_unit."""
    J = int(round(t * per_unit))
    best = None
    for j in range(J + 1):
        v = classic(u_y, ys, xs, omega, t + j / per_unit, shift)
        best = v if best is None else np.minimum(best, v)
    return best
