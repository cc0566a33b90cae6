"""Finite-radius probes for sub/superdifferentials of grid functions.

The continuum membership condition is a liminf; on a grid it becomes the
finite certificate

    f(y) >= f(x) + delta . (y - x) - eps * |y - x|   for all probe nodes y,

with ``|.|`` the chart (euclidean) norm, a probe radius of a few grid
shells and a slack ``eps`` tied to the local second differences.  The
superdifferential probe is the mirrored inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import DistanceField, distance_field, graph_distance_matrix
from .errors import GeometryError, InputError, ProbeError
from .grid import GridDomain
from .norms import Covector, NormField


@dataclass(frozen=True)
class SubdiffProbe:
    """Probe geometry: neighbourhood radius, first-order slack, sample cap."""

    radius: float
    slack: float
    max_samples: int | None = None

    def __post_init__(self):
        if self.radius <= 0 or self.slack <= 0:
            raise InputError("probe radius and slack must be positive")

    def validate(self, grid: GridDomain) -> None:
        if self.radius < 2 * grid.h - 1e-12:
            raise InputError("probe radius must cover at least two grid shells")


def default_probe(f: np.ndarray, grid: GridDomain, x: tuple[int, int],
                  radius: float | None = None) -> SubdiffProbe:
    """Default probe: radius 4h, slack 10*h*(local second-difference estimate).

    The slack floor 1e-9 keeps the probe meaningful on exactly linear data.
    """
    h = grid.h
    est = _second_difference_estimate(f, grid, x)
    return SubdiffProbe(radius=radius if radius is not None else 4 * h,
                        slack=max(10.0 * h * est, 1e-9))


def _second_difference_estimate(f, grid, x):
    i, j = x
    n1, n2 = grid.resolution
    h1, h2 = grid.spacing
    est = 0.0
    if 0 < i < n1 - 1:
        est = max(est, abs(f[i + 1, j] - 2 * f[i, j] + f[i - 1, j]) / h1 ** 2)
    if 0 < j < n2 - 1:
        est = max(est, abs(f[i, j + 1] - 2 * f[i, j] + f[i, j - 1]) / h2 ** 2)
    return est


_BALL_CACHE: dict = {}


def _ball_offsets(grid: GridDomain, radius: float) -> np.ndarray:
    """Integer offsets (excluding 0) within euclidean radius of the origin."""
    h1, h2 = grid.spacing
    key = (round(h1, 15), round(h2, 15), round(radius, 15))
    if key not in _BALL_CACHE:
        r1 = int(np.floor(radius / h1))
        r2 = int(np.floor(radius / h2))
        offs = []
        for di in range(-r1, r1 + 1):
            for dj in range(-r2, r2 + 1):
                if (di, dj) == (0, 0):
                    continue
                if (di * h1) ** 2 + (dj * h2) ** 2 <= radius ** 2 + 1e-15:
                    offs.append((di, dj))
        _BALL_CACHE[key] = np.array(sorted(offs), dtype=np.int64)
    return _BALL_CACHE[key]


def _probe_geometry(f, grid, x, probe):
    """Offsets, their physical displacements and f-increments at x."""
    probe.validate(grid)
    i, j = x
    if not grid.interior[i, j]:
        raise ProbeError(f"probe centre {x} is not an interior node")
    offs = _ball_offsets(grid, probe.radius)
    ii, jj = i + offs[:, 0], j + offs[:, 1]
    n1, n2 = grid.resolution
    if np.any((ii < 0) | (ii >= n1) | (jj < 0) | (jj >= n2)):
        raise ProbeError(f"probe ball at {x} exits the grid")
    if not np.all(grid.active[ii, jj]):
        raise ProbeError(f"probe ball at {x} exits the domain")
    if probe.max_samples is not None and len(offs) > probe.max_samples:
        stride = int(np.ceil(len(offs) / probe.max_samples))
        offs, ii, jj = offs[::stride], ii[::stride], jj[::stride]
    h1, h2 = grid.spacing
    disp = offs * np.array([h1, h2])
    return disp, f[ii, jj] - f[i, j]


def probe_ball_fits(grid: GridDomain, x: tuple[int, int], radius: float) -> bool:
    """Whether the probe ball at x stays inside the active node set."""
    offs = _ball_offsets(grid, radius)
    ii, jj = x[0] + offs[:, 0], x[1] + offs[:, 1]
    n1, n2 = grid.resolution
    if np.any((ii < 0) | (ii >= n1) | (jj < 0) | (jj >= n2)):
        return False
    return bool(np.all(grid.active[ii, jj]) and grid.interior[x])


def is_subdifferential(f: np.ndarray, grid: GridDomain, x: tuple[int, int],
                       delta: np.ndarray, probe: SubdiffProbe) -> bool:
    """True iff delta passes the first-order minorant inequality at x."""
    disp, df = _probe_geometry(f, grid, x, probe)
    lin = disp @ np.asarray(delta, dtype=float)
    return bool(np.all(df - lin >= -probe.slack * np.linalg.norm(disp, axis=1)))


def is_superdifferential(f: np.ndarray, grid: GridDomain, x: tuple[int, int],
                         delta: np.ndarray, probe: SubdiffProbe) -> bool:
    """Mirrored inequality: delta majorises f to first order at x."""
    disp, df = _probe_geometry(f, grid, x, probe)
    lin = disp @ np.asarray(delta, dtype=float)
    return bool(np.all(df - lin <= probe.slack * np.linalg.norm(disp, axis=1)))


def one_sided_candidates(f: np.ndarray, grid: GridDomain,
                         x: tuple[int, int]) -> list[np.ndarray]:
    """The four one-sided difference covectors (forward/backward per axis)."""
    i, j = x
    h1, h2 = grid.spacing
    d1 = ((f[i + 1, j] - f[i, j]) / h1, (f[i, j] - f[i - 1, j]) / h1)
    d2 = ((f[i, j + 1] - f[i, j]) / h2, (f[i, j] - f[i, j - 1]) / h2)
    return [np.array([a, b]) for a in d1 for b in d2]


def central_candidate(f: np.ndarray, grid: GridDomain,
                      x: tuple[int, int]) -> np.ndarray:
    i, j = x
    h1, h2 = grid.spacing
    return np.array([(f[i + 1, j] - f[i - 1, j]) / (2 * h1),
                     (f[i, j + 1] - f[i, j - 1]) / (2 * h2)])


def differentiability_criterion(f: np.ndarray, nf: NormField, grid: GridDomain,
                                x: tuple[int, int],
                                probe: SubdiffProbe | None = None):
    """Search finite-difference candidates passing both probes.

    Returns ``(differentiable, covector-or-None)``; when a candidate passes
    both the sub- and the superdifferential probe it is the recovered
    gradient (unique up to twice the probe slack in dual norm).
    """
    if probe is None:
        probe = default_probe(f, grid, x)
    candidates = [central_candidate(f, grid, x)] + one_sided_candidates(f, grid, x)
    for delta in candidates:
        if is_subdifferential(f, grid, x, delta, probe) and \
           is_superdifferential(f, grid, x, delta, probe):
            return True, Covector(delta, grid.point(x))
    return False, None


def local_lipschitz(f: np.ndarray, df_from_x: DistanceField, radius: float) -> float:
    """max |f(y) - f(x)| / d(x, y) over 0 < d <= radius, x the seed node."""
    seeds = [s for s in df_from_x.seeds if s[1] == 0.0]
    if len(df_from_x.seeds) != 1 or not seeds:
        raise InputError("local Lipschitz needs a single zero-valued seed")
    x = seeds[0][0]
    d = df_from_x.values
    sel = (d > 0) & (d <= radius) & np.isfinite(d)
    if not sel.any():
        raise ProbeError("empty neighbourhood for the requested radius")
    return float(np.max(np.abs(f[sel] - f[x]) / d[sel]))


@dataclass
class LipschitzReport:
    """Outcome of a mean-value-inequality check on a ball pair."""

    region: str
    k_bound: float
    measured: float
    tolerance: float
    witnesses: list

    @property
    def passed(self) -> bool:
        return self.measured <= self.k_bound * (1.0 + self.tolerance)

    def to_dict(self) -> dict:
        return {"check": "deville", "region": self.region,
                "k_bound": self.k_bound, "measured": self.measured,
                "pass": self.passed, "witnesses": self.witnesses}


def deville_check(f: np.ndarray, nf: NormField, grid: GridDomain,
                  p: tuple[int, int], delta: float,
                  probe_radius: float | None = None,
                  stencil_order: int = 16) -> LipschitzReport:
    """Mean value inequality: subdifferential bound on B(p, 4*delta) versus
    the measured Lipschitz constant on B(p, delta).

    The dual-norm bound K is taken over every one-sided difference covector
    passing the subdifferential probe at interior nodes of the large ball;
    the Lipschitz constant is measured over node pairs of the small ball
    with distances through the large-ball subgraph (paths between small-ball
    points of near-optimal length stay inside it).  Pass tolerance: 1 + 5h/delta.
    """
    if delta <= 0:
        raise InputError("delta must be positive")
    dp = distance_field(nf, grid, [(p, 0.0)], stencil_order)
    ball4 = dp.values <= 4 * delta
    n1, n2 = grid.resolution
    edge = np.zeros((n1, n2), dtype=bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    if np.any(ball4 & (edge | ~grid.interior)):
        raise GeometryError("B(p, 4*delta) does not fit inside the domain")

    h = grid.h
    k_bound = 0.0
    pr = probe_radius if probe_radius is not None else 4 * h
    for (i, j) in map(tuple, np.argwhere(ball4)):
        if not probe_ball_fits(grid, (i, j), pr):
            continue
        probe = default_probe(f, grid, (i, j), radius=pr)
        for cand in one_sided_candidates(f, grid, (i, j)):
            if is_subdifferential(f, grid, (i, j), cand, probe):
                k_bound = max(k_bound, float(nf.dual_norm(grid.point((i, j)), cand)))

    small = np.argwhere((dp.values <= delta) & grid.active)
    dist, idx = graph_distance_matrix(nf, grid, small, stencil_order,
                                      node_mask=ball4)
    fs = f[small[:, 0], small[:, 1]]
    ft = f[ball4 & grid.active]
    measured = 0.0
    witnesses: list = []
    tol = 5 * h / delta
    in_small = np.zeros(dist.shape[1], dtype=bool)
    in_small[[idx[tuple(s)] for s in small]] = True
    for s in range(len(small)):
        d = dist[s]
        ok = in_small & (d > 0) & np.isfinite(d)
        if not ok.any():
            continue
        ratios = np.abs(ft[ok] - fs[s]) / d[ok]
        m = float(ratios.max())
        if m > measured:
            measured = m
            tgt_flat = np.flatnonzero(ok)[int(np.argmax(ratios))]
            tgt = tuple(np.argwhere((idx >= 0) & (idx == tgt_flat))[0])
            witnesses = [{"pair": [list(map(int, small[s])), list(map(int, tgt))],
                          "ratio": m}]
    region = f"B({tuple(int(c) for c in p)}, {delta})"
    report = LipschitzReport(region, k_bound, measured, tol, witnesses)
    if report.passed:
        report.witnesses = []
    return report
