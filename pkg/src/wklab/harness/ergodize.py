"""Covering time of the linear flow: how long until the tube swept by
B_R(x0) under x -> x + omega t covers the torus.

For a unit vector omega the swept set up to time T is the R-neighbourhood
of the segment {x0 + omega s : 0 <= s <= T}.  A point p is first reached
at time max(0, s_c - h) where, for the lift p + k nearest to the line,
s_c = <p + k - x0, omega> is the foot of the perpendicular and
h = sqrt(R^2 - d_perp^2).  T(R) is the largest first-reach time over a
fine grid of probe points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..grid import PeriodicGrid, torus_distance


class CoverageTimeout(RuntimeError):
    def __init__(self, msg, radius, horizon, uncovered):
        super().__init__(msg)
        self.radius = radius
        self.horizon = horizon
        self.uncovered = uncovered


def first_reach_times(points: np.ndarray, omega, x0, radius: float, horizon: float,
                      chunk: float = 64.0) -> np.ndarray:
    """Time at which each point first enters the swept tube (inf if never by ``horizon``)."""
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    n = w.size
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    pts = np.asarray(points, dtype=float).reshape(-1, n)
    out = np.full(pts.shape[0], np.inf)
    # points already inside the ball at time 0
    out[torus_distance(pts, x0) <= radius] = 0.0
    pad = int(np.ceil(radius)) + 1
    nb = np.array(list(itertools.product(range(-pad, pad + 1), repeat=n)))
    s0 = 0.0
    while s0 < horizon and np.isinf(out).any():
        s1 = min(horizon, s0 + chunk)
        sig = np.linspace(s0, s1, int(np.ceil((s1 - s0) * 2)) + 2)
        cells = np.unique(np.floor(x0 + sig[:, None] * w).astype(int), axis=0)
        lifts = np.unique((cells[:, None, :] + nb[None, :, :]).reshape(-1, n), axis=0)
        todo = np.flatnonzero(np.isinf(out))
        P = pts[todo]
        best = np.full(todo.size, np.inf)
        step = max(1, 4_000_000 // max(1, lifts.shape[0]))
        for i in range(0, todo.size, step):
            D = P[i : i + step, None, :] + lifts[None, :, :] - x0
            sc = D @ w
            perp2 = np.sum(D * D, axis=-1) - sc * sc
            h2 = radius * radius - perp2
            ok = h2 >= 0
            h = np.sqrt(np.where(ok, h2, 0.0))
            enter = np.maximum(sc - h, 0.0)
            valid = ok & (sc + h >= 0) & (enter <= s1)
            enter = np.where(valid, enter, np.inf)
            best[i : i + step] = np.min(enter, axis=1)
        out[todo] = best
        s0 = s1
    out[out > horizon] = np.inf
    return out


@dataclass
class ErgodizationResult:
    radii: list
    times: list
    timeouts: list = field(default_factory=list)
    slope: float = float("nan")
    intercept: float = float("nan")

    def rows(self):
        return list(zip(self.radii, self.times))

    def to_dict(self) -> dict:
        return {"radii": self.radii, "times": self.times, "timeouts": self.timeouts,
                "slope": self.slope, "intercept": self.intercept}


def covering_time(omega, radius: float, x0, resolution: int = 256, horizon: float = 5000.0) -> float:
    """T(R) on a probe grid; raises :class:`CoverageTimeout` past ``horizon``."""
    n = np.atleast_1d(omega).size
    if radius >= np.sqrt(n) / 2:
        # the ball already covers the torus
        return 0.0
    pts = PeriodicGrid(n, resolution).coords()
    t = first_reach_times(pts, omega, x0, radius, horizon)
    if np.isinf(t).any():
        raise CoverageTimeout(
            f"coverage at R={radius} not reached by t={horizon}", radius, horizon, int(np.isinf(t).sum())
        )
    return float(np.max(t))


def ergodization_probe(omega, R_list, x0=None, resolution: int = 256,
                       horizon: float = 5000.0) -> ErgodizationResult:
    """Covering times over descending radii and the slope of log T against log R."""
    R = [float(r) for r in R_list]
    if any(r <= 0 or r > 1 for r in R) or any(b >= a for a, b in zip(R, R[1:])):
        raise ValueError("R_list must be descending with entries in (0, 1]")
    n = np.atleast_1d(omega).size
    x0 = np.zeros(n) if x0 is None else x0
    radii, times, timeouts = [], [], []
    for r in R:
        try:
            T = covering_time(omega, r, x0, resolution, horizon)
        except CoverageTimeout:
            timeouts.append(r)
            continue
        radii.append(r)
        times.append(T)
    res = ErgodizationResult(radii, times, timeouts)
    pos = [(r, t) for r, t in zip(radii, times) if t > 0]
    if len(pos) >= 2:
        lr, lt = np.log([p[0] for p in pos]), np.log([p[1] for p in pos])
        res.slope, res.intercept = (float(v) for v in np.polyfit(lr, lt, 1))
    return res
