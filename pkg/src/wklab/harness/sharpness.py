"""The 1/t rate of the classic operator cannot be improved: tent example.

Start from the tent u(x) = max(delta - |x - x0|, 0) (min u = 0) and evaluate
T_t u(x0) for L = |v - omega|^2 / 2 at the return times t_m of the drift
to within delta / 2 of the start.  Along those times t_m * T_{t_m} u(x0)
stays bounded below, so no faster uniform decay is possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diophantine import return_times_1d, return_times_lattice
from ..grid import PeriodicGrid, torus_distance
from . import analytic


def tent(points, x0, delta: float) -> np.ndarray:
    d = torus_distance(points, x0)
    return np.maximum(delta - d, 0.0)


@dataclass
class SharpnessRow:
    m: int
    t: float
    value: float

    @property
    def scaled(self) -> float:
        return self.t * self.value


def sharpness_example(delta: float, omega, m_count: int, x0=None,
                      sample_resolution: int | None = None) -> list[SharpnessRow]:
    """Table of (t_m, T_{t_m} u(x0)) at the first ``m_count`` return times.

    In 1D the return times are continued-fraction denominators q of omega
    with |q omega - p| <= delta / 2; in 2D they come from a scan of the
    flow for record returns within delta / 2.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = omega.size
    x0 = np.full(n, 0.5) if x0 is None else np.broadcast_to(np.asarray(x0, float), (n,))
    if n == 1:
        times = [float(q) for q, _ in return_times_1d(float(omega[0]), delta / 2, m_count)]
        res = sample_resolution or 1 << 16
    else:
        times = return_times_lattice(omega, delta / 2, m_count)
        res = sample_resolution or 1024
    g = PeriodicGrid(n, res)
    ys = g.coords()
    u = tent(ys, x0, delta)
    rows = []
    for m, t in enumerate(times, start=1):
        val = float(analytic.classic(u, ys, x0[None, :], omega, t)[0])
        rows.append(SharpnessRow(m, t, val))
    return rows


def tent_lower_bound(delta: float) -> float:
    """Half the constant of the subsequence lower bound: delta^2 / 64."""
    return delta * delta / 64
