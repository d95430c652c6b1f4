"""Backward weak KAM verification: domination, calibrated curves, Aubry set,
static classes and the representation of solutions by their trace on the
static classes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .action import KernelFamily, action_potential_rows, barrier_rows, minplus
from .grid import PeriodicGrid, ValueField


class EmptyTraceError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceTimeField:
    """Values u(x, tau) on the sub-step phase lattice ``taus`` (sorted, starts at 0)."""

    grid: PeriodicGrid
    taus: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (taus.size, self.grid.size):
            raise ValueError(f"values shape {vals.shape} != ({taus.size}, {self.grid.size})")
        if taus[0] != 0.0 or np.any(np.diff(taus) <= 0):
            raise ValueError("tau lattice must be sorted and start at 0")
        if not np.all(np.isfinite(vals)):
            raise ValueError("space-time field must be finite")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", vals)

    def slice(self, j: int) -> ValueField:
        return ValueField(self.grid, self.values[j % self.taus.size], self.taus[j % self.taus.size])

    def __add__(self, c: float) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.taus, self.values + c)


def space_time_field(fam: KernelFamily, u0: ValueField, c: float = 0.0) -> SpaceTimeField:
    """Extend a time-0 field over one period with the normalised sub-step kernels."""
    rows = [u0.samples]
    for j in range(fam.m - 1):
        rows.append(minplus(rows[-1], fam.sub(j).cost) + c * fam.dt)
    return SpaceTimeField(u0.grid, np.arange(fam.m) * fam.dt, np.array(rows))


@dataclass
class DominationReport:
    pairs: int
    violations: int
    max_excess: float

    @property
    def fraction(self) -> float:
        return self.violations / self.pairs if self.pairs else 0.0

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_domination(u: SpaceTimeField, fam: KernelFamily, sample_pairs: int = 500,
                     tol: float = 2e-2, c: float = 0.0, horizon: int = 4,
                     seed: int = 0, phases: int = 4) -> DominationReport:
    """Test u(x, tau) - u(y, s) <= Phi_{s, tau}(y, x) + tol on sampled pairs.

    ``sample_pairs`` triples (y, s, tau) are drawn; each computed potential
    row Phi_{s, tau}(y, .) is then checked against every target node x, so
    the reported pair count is (distinct rows) x (grid size) and a defect
    at a single node cannot slip between samples.

    Phi is evaluated with ``horizon`` admissible end times, so it
    over-estimates the true potential; the test therefore certifies
    domination against the truncated potential.  Phases are drawn from
    ``phases`` evenly spaced lattice points of ``u.taus``.
    """
    rng = np.random.default_rng(seed)
    step = max(1, u.taus.size // phases)
    phase_idx = np.arange(0, u.taus.size, step)
    js = rng.choice(phase_idx, size=sample_pairs)
    ss = rng.choice(phase_idx, size=sample_pairs)
    ys = rng.integers(0, u.grid.size, size=sample_pairs)
    pairs, viol, worst = 0, 0, -np.inf
    for s_idx in np.unique(ss):
        for t_idx in np.unique(js[ss == s_idx]):
            srcs = np.unique(ys[(ss == s_idx) & (js == t_idx)])
            phi = action_potential_rows(fam, srcs, u.taus[s_idx], u.taus[t_idx], horizon, c)
            lhs = u.values[t_idx][None, :] - u.values[s_idx, srcs][:, None]
            excess = lhs - phi
            pairs += excess.size
            viol += int(np.sum(excess > tol))
            worst = max(worst, float(np.max(excess)))
    return DominationReport(pairs, viol, worst)


@dataclass
class CalibratedPath:
    nodes: np.ndarray
    times: np.ndarray
    actions: np.ndarray
    drops: np.ndarray

    @property
    def defect(self) -> float:
        return float(np.max(np.abs(self.drops - self.actions))) if self.actions.size else 0.0

    @property
    def total_action(self) -> float:
        return float(np.sum(self.actions))


def extract_calibrated_curve(u: SpaceTimeField, fam: KernelFamily, x: int, tau: float = 0.0,
                             span: int = 10, c: float = 0.0) -> CalibratedPath:
    """Backtrack the argmin chain of the sub-step kernels from (x, tau) over ``span`` periods.

    Each segment's action includes the normalisation ``c * dt``; the
    defect compares it with the drop of ``u`` along the segment.
    """
    if span < 1:
        raise ValueError("span must be >= 1")
    if u.taus.size != fam.m:
        raise ValueError("space-time field must live on the kernel's phase lattice")
    j = fam.lattice_index(tau)
    nodes = [int(x)]
    times = [j * fam.dt]
    actions, drops = [], []
    for _ in range(span * fam.m):
        prev = j - 1
        K = fam.sub(prev).cost
        col = u.values[prev % fam.m] + K[:, nodes[-1]]
        y = int(np.argmin(col))
        seg = K[y, nodes[-1]] + c * fam.dt
        actions.append(seg)
        drops.append(u.values[j % fam.m, nodes[-1]] - u.values[prev % fam.m, y])
        nodes.append(y)
        times.append(prev * fam.dt)
        j = prev
    return CalibratedPath(np.array(nodes[::-1]), np.array(times[::-1]),
                          np.array(actions[::-1]), np.array(drops[::-1]))


def self_barrier(fam: KernelFamily, tau: float, window_n: int, c: float = 0.0) -> np.ndarray:
    """h_{tau, tau}(x, x) for every node."""
    h = barrier_rows(fam, np.arange(fam.grid.size), tau, tau, window_n, c)
    return np.diag(h).copy()


def aubry_set(fam: KernelFamily, tau: float = 0.0, window_n: int = 64, tol: float = 2e-2,
              c: float = 0.0) -> np.ndarray:
    """Nodes whose windowed self-barrier is at most ``tol``.

    With ``tol = 0`` the set is usually empty: the discrete self-barrier of
    an Aubry node is a tiny positive number rather than an exact zero.
    """
    return np.flatnonzero(self_barrier(fam, tau, window_n, c) <= tol)


def static_classes(h: np.ndarray, nodes, tol: float) -> list[np.ndarray]:
    """Connected components of h(x, y) + h(y, x) <= tol restricted to ``nodes``."""
    nodes = np.asarray(nodes, dtype=int)
    if nodes.size == 0:
        return []
    sub = h[np.ix_(nodes, nodes)]
    adj = (sub + sub.T) <= tol
    ncomp, labels = connected_components(csr_matrix(adj), directed=False)
    return [nodes[labels == i] for i in range(ncomp)]


def weak_kam_from_trace(trace: dict, fam: KernelFamily, window_n: int = 64,
                        c: float = 0.0) -> SpaceTimeField:
    """u_f(x, tau) = min over representatives p of f(p) + h_{0, tau}(p, x)."""
    if not trace:
        raise EmptyTraceError("trace has no representative nodes")
    reps = np.array(sorted(trace), dtype=int)
    f = np.array([trace[p] for p in reps], dtype=float)
    rows = []
    for j in range(fam.m):
        h = barrier_rows(fam, reps, 0.0, j * fam.dt, window_n, c)
        rows.append(np.min(f[:, None] + h, axis=0))
    return SpaceTimeField(fam.grid, np.arange(fam.m) * fam.dt, np.array(rows))


@dataclass
class VerificationReport:
    violations: int
    max_defect: float
    aubry_nodes: list
    classes: list
    pairs: int = 0
    max_excess: float = 0.0

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "violations": int(self.violations),
            "max_defect": float(self.max_defect),
            "aubry_nodes": [int(i) for i in self.aubry_nodes],
            "classes": [[int(i) for i in cls] for cls in self.classes],
            "pairs": int(self.pairs),
            "max_excess": float(self.max_excess),
        }


def verify_field(u: SpaceTimeField, fam: KernelFamily, c: float = 0.0, *, sample_pairs: int = 500,
                 tol: float = 2e-2, defect_tol: float = 1e-2, span: int = 10, window_n: int = 64,
                 curve_nodes: int = 8, seed: int = 0) -> tuple[VerificationReport, bool]:
    """Both clauses of the backward weak KAM definition plus the Aubry skeleton.

    Returns the report and whether the field passes (zero domination
    violations and calibration defect at most ``defect_tol``).
    """
    dom = check_domination(u, fam, sample_pairs, tol, c, seed=seed)
    rng = np.random.default_rng(seed + 1)
    starts = rng.choice(u.grid.size, size=min(curve_nodes, u.grid.size), replace=False)
    defect = max(extract_calibrated_curve(u, fam, int(x), 0.0, span, c).defect for x in starts)
    h = barrier_rows(fam, np.arange(u.grid.size), 0.0, 0.0, window_n, c)
    aubry = np.flatnonzero(np.diag(h) <= tol)
    classes = static_classes(h, aubry, tol)
    report = VerificationReport(dom.violations, defect, list(aubry), classes, dom.pairs, dom.max_excess)
    return report, dom.passed and defect <= defect_tol
