"""Time marching for u_t + H(t, x, ||u_x||_x) = 0, u(0, .) = h.

The scheme is explicit Euler with the same upwind positive-part dual-norm
gradient P as the stationary solver.  Under the CFL bound
dt <= cfl * h / (L_H * nu), with nu the sampled dual-norm anisotropy of
stencil covectors, the update is nondecreasing in every input value, which
is the discrete engine behind the comparison, monotonicity and envelope
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import BIG, dual_of_covector_field
from .distance import graph_distance_matrix
from .errors import BudgetError, InputError
from .expressions import Expression, evolution_expression, spatial_expression
from .grid import GridDomain
from .norms import NormField
from .report import VerificationReport
from .stationary import distance_profile, frame_window


@dataclass
class EvolutionHamiltonian:
    """H(t, x, m) = expression(t, m, d) with a per-node profile in d."""

    expression: Expression
    grid: GridDomain
    node_data: np.ndarray
    monotone_in_m: bool = True
    lipschitz_in_m: float | None = None       # L_H over the working range
    condition_a: tuple | None = None          # (omega(s, dist, r), C)
    label: str = ""

    @staticmethod
    def from_expression(text: str, nf: NormField, grid: GridDomain, x0=None,
                        lipschitz_in_m: float | None = None,
                        stencil_order: int = 16, **kwargs) -> "EvolutionHamiltonian":
        expr = evolution_expression(text)
        if expr.uses("d"):
            if x0 is None:
                raise InputError("expression references d(x0, .) but no x0 given")
            data = distance_profile(nf, grid, x0, stencil_order)
        else:
            data = np.zeros(grid.resolution)
        return EvolutionHamiltonian(expr, grid, data,
                                    lipschitz_in_m=lipschitz_in_m,
                                    label=text, **kwargs)

    def eval(self, t: float, m, sel=None) -> np.ndarray:
        d = self.node_data if sel is None else self.node_data[sel]
        return self.expression.evaluate({"t": t, "m": m, "d": d})

    def estimate_lipschitz_in_m(self, m_cap: float = 10.0, t_cap: float = 10.0,
                                n: int = 41) -> float:
        """Sampled bound on |dH/dm| over m in [0, m_cap]; used for the CFL."""
        ms = np.linspace(0.0, m_cap, n)
        sel = (slice(None, None, max(1, self.grid.resolution[0] // 16)),
               slice(None, None, max(1, self.grid.resolution[1] // 16)))
        worst = 0.0
        for t in np.linspace(0.0, t_cap, 9):
            vals = np.stack([self.eval(float(t), float(m), sel) for m in ms])
            dm = np.abs(np.diff(vals, axis=0)) / (ms[1] - ms[0])
            worst = max(worst, float(np.max(dm)))
            if np.any(np.diff(vals, axis=0) < -1e-12) and self.monotone_in_m:
                raise InputError("sampled monotonicity in m fails")
        return worst

    def validate(self) -> None:
        if self.monotone_in_m:
            self.estimate_lipschitz_in_m(n=11)


def stencil_anisotropy(nf: NormField, grid: GridDomain, n_dirs: int = 32,
                       node_stride: int = 8) -> float:
    """nu = max sampled ratio between the dual norm and the euclidean norm
    of stencil covectors."""
    thetas = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    pts = grid.points()[::node_stride, ::node_stride].reshape(-1, 2)
    nu = 0.0
    for c in dirs:
        duals = nf.dual_norm(pts, np.broadcast_to(c, pts.shape))
        nu = max(nu, float(np.max(duals)))
    return nu


@dataclass
class EvolutionSolution:
    """Stored snapshots of one explicit march."""

    dt: float
    horizon: float
    stride: int
    times: list[float]
    snapshots: list[np.ndarray]
    cfl_record: float
    anisotropy: float
    grid: GridDomain = field(repr=False, default=None)

    def __post_init__(self):
        n_steps = int(round(self.horizon / self.dt))
        want = n_steps // self.stride + 1
        if len(self.snapshots) != want:
            raise InputError(f"snapshot count {len(self.snapshots)} != "
                             f"floor(T/dt/stride)+1 = {want}")

    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def solve_evolution(H: EvolutionHamiltonian, nf: NormField, grid: GridDomain,
                    h0: np.ndarray, T: float, cfl: float = 0.4,
                    stride: int = 10, dt: float | None = None,
                    keep_all: bool = False) -> EvolutionSolution:
    """Explicit monotone march to horizon T.

    dt defaults to the CFL bound cfl*h/(L_H*nu) shrunk so that stride
    divides the step count exactly; a user-supplied dt violating the bound
    is an input error.  ``keep_all`` stores every step (stride 1).
    """
    if grid.kind != "global":
        raise InputError("the evolution equation is posed on the full "
                         "rectangle; build the grid with GridDomain.rectangle")
    h0 = np.asarray(h0, dtype=float)
    if h0.shape != tuple(grid.resolution):
        raise InputError("initial condition shape does not match the grid")
    if not np.all(np.isfinite(h0)):
        raise InputError("initial condition must be finite")
    if not H.monotone_in_m:
        raise InputError("solver requires H nondecreasing in the norm slot")
    if T <= 0:
        raise InputError("horizon T must be positive")
    lh = H.lipschitz_in_m
    if lh is None:
        lh = H.estimate_lipschitz_in_m()
    nu = stencil_anisotropy(nf, grid)
    h = min(grid.spacing)
    dt_max = cfl * h / max(lh * nu, 1e-12)
    if dt is not None and dt > dt_max * (1 + 1e-12):
        raise InputError(f"requested dt={dt:g} violates the CFL bound {dt_max:g}")
    if keep_all:
        stride = 1
    base = dt if dt is not None else dt_max
    n_steps = max(1, int(math.ceil(T / base - 1e-12)))
    n_steps = stride * int(math.ceil(n_steps / stride))
    dt = T / n_steps

    h1, h2 = grid.spacing
    mode_args = None
    u = h0.copy()
    times = [0.0]
    snaps = [u.copy()]
    for n in range(n_steps):
        t = n * dt
        cx, cy = _upwind(u, h1, h2)
        m = dual_of_covector_field(nf, grid, cx, cy)
        u = u - dt * H.eval(t, m)
        if (n + 1) % stride == 0:
            times.append((n + 1) * dt)
            snaps.append(u.copy())
    return EvolutionSolution(dt, T, stride, times, snaps, cfl, nu, grid)


def _upwind(u, h1, h2):
    pad = np.pad(u, 1, constant_values=BIG)
    uL, uR = pad[:-2, 1:-1], pad[2:, 1:-1]
    uD, uU = pad[1:-1, :-2], pad[1:-1, 2:]
    cx = np.maximum(np.maximum(u - uL, u - uR), 0.0) / h1
    cy = np.maximum(np.maximum(u - uD, u - uU), 0.0) / h2
    return cx, cy


def hopf_lax_oracle(nf: NormField, grid: GridDomain, h0: np.ndarray, t: float,
                    stencil_order: int = 16,
                    node_budget: int = 10_000) -> np.ndarray:
    """Brute-force x -> min{h0(y) : d(x, y) <= t} over discrete metric balls.

    Independent of the marching scheme: distances come from the stencil
    graph (one compiled all-pairs sweep).  Grids beyond the node budget are
    refused.
    """
    n1, n2 = grid.resolution
    if n1 * n2 > node_budget:
        raise BudgetError(f"grid has {n1 * n2} nodes; brute-force oracle "
                          f"budget is {node_budget}")
    if t < 0:
        raise InputError("time must be non-negative")
    sources = np.argwhere(grid.active)
    dist, idx = graph_distance_matrix(nf, grid, sources, stencil_order)
    vals = h0[grid.active]
    out = np.full((n1, n2), np.inf)
    masked = np.where(dist <= t + 1e-12, vals[None, :], np.inf)
    out[grid.active] = np.min(masked, axis=1)
    return out


# ---------------------------------------------------------------------------
# theorem-backed checks
# ---------------------------------------------------------------------------

def envelope_bounds_check(sol: EvolutionSolution, k0: float, k1: float,
                          h0: np.ndarray, C: float = 5.0,
                          frame: float = 0.1) -> VerificationReport:
    """-K1 t + h <= u(t) <= -K0 t + h with slack C (h + dt)(1 + t).

    K0/K1 bound H over the working gradient range of h (sampled by the
    caller); checked on the frame-excluded window per stored snapshot.
    """
    grid = sol.grid
    window = frame_window(grid, frame)
    h = grid.h
    worst_lo = -np.inf
    worst_hi = -np.inf
    wit = []
    for t, u in zip(sol.times, sol.snapshots):
        slack = C * (h + sol.dt) * (1.0 + t)
        lo = -k1 * t + h0 - slack
        hi = -k0 * t + h0 + slack
        below = float(np.max((lo - u)[window]))
        above = float(np.max((u - hi)[window]))
        if below > worst_lo:
            worst_lo = below
        if above > worst_hi:
            worst_hi = above
        if max(below, above) > 0 and len(wit) < 3:
            wit.append({"t": t, "below": below, "above": above})
    return VerificationReport("evolution-envelope",
                              {"lower_violation": worst_lo,
                               "upper_violation": worst_hi},
                              {"lower_violation": 0.0, "upper_violation": 0.0},
                              1e-12, wit,
                              details={"k0": k0, "k1": k1, "C": C,
                                       "snapshots": len(sol.times)})


def comparison_check(u_sol: EvolutionSolution, v_sol: EvolutionSolution,
                     C: float = 5.0, frame: float = 0.1) -> VerificationReport:
    """inf(v - u) >= -C (h + dt)(1 + T) over stored snapshots.

    ``u_sol`` is the subsolution route (smaller initial data), ``v_sol``
    the supersolution route; both must share grid, step and horizon.  The
    neighbourhood-Lipschitz hypothesis of the continuum statement holds for
    solver output on Lipschitz data but is not certified for arbitrary
    fields; this check records it as an assumption.
    """
    if u_sol.grid.resolution != v_sol.grid.resolution or \
       abs(u_sol.dt - v_sol.dt) > 1e-15 or len(u_sol.times) != len(v_sol.times):
        raise InputError("comparison needs matching grids, steps and horizons")
    window = frame_window(u_sol.grid, frame)
    h = u_sol.grid.h
    inf_gap = np.inf
    wit = []
    for t, u, v in zip(u_sol.times, u_sol.snapshots, v_sol.snapshots):
        gap = float(np.min((v - u)[window]))
        if gap < inf_gap:
            inf_gap = gap
            wit = [{"t": t, "inf_gap": gap}]
    bound = C * (h + u_sol.dt) * (1.0 + u_sol.horizon)
    return VerificationReport("evolution-comparison",
                              {"gap_defect": -inf_gap}, {"gap_defect": bound},
                              1e-12, wit if -inf_gap > bound else [],
                              details={"inf_gap": inf_gap, "C": C})


def monotonicity_gap(u_sol: EvolutionSolution, v_sol: EvolutionSolution,
                     H1: EvolutionHamiltonian, H2: EvolutionHamiltonian,
                     h1_data: np.ndarray, h2_data: np.ndarray,
                     C: float = 5.0, m_cap: float = 5.0) -> VerificationReport:
    """sup(u - v) <= sup(H2 - H1) + sup(h2 - h1) for H1 <= H2, h2 <= h1.

    ``u_sol`` solves (H2, h2) and ``v_sol`` solves (H1, h1).  Hypotheses
    are verified on samples/nodes first (input error with witness).
    """
    sel = (slice(None, None, 4), slice(None, None, 4))
    for t in np.linspace(0.0, u_sol.horizon, 5):
        for m in np.linspace(0.0, m_cap, 9):
            d1 = H1.eval(float(t), float(m), sel)
            d2 = H2.eval(float(t), float(m), sel)
            if np.any(d1 > d2 + 1e-12):
                raise InputError(f"hypothesis H1 <= H2 fails at t={t:g}, m={m:g}")
    if np.any(h2_data > h1_data + 1e-12):
        k = np.unravel_index(int(np.argmax(h2_data - h1_data)), h2_data.shape)
        raise InputError(f"hypothesis h2 <= h1 fails at node {k}")
    gap = -np.inf
    for u, v in zip(u_sol.snapshots, v_sol.snapshots):
        gap = max(gap, float(np.max(u - v)))
    sup_dh = float(np.max(h2_data - h1_data))
    sup_dH = -np.inf
    for t in np.linspace(0.0, u_sol.horizon, 9):
        for m in np.linspace(0.0, m_cap, 17):
            sup_dH = max(sup_dH, float(np.max(H2.eval(float(t), float(m))
                                              - H1.eval(float(t), float(m)))))
    bound = sup_dH + sup_dh
    slack = C * (u_sol.grid.h + u_sol.dt) * (1.0 + u_sol.horizon)
    return VerificationReport("evolution-monotonicity",
                              {"gap": gap}, {"gap": bound + slack}, 1e-12,
                              [] if gap <= bound + slack else
                              [{"gap": gap, "bound": bound}],
                              details={"sup_dH": sup_dH, "sup_dh": sup_dh,
                                       "C": C})


def check_condition_a_evolution(H: EvolutionHamiltonian, nf: NormField,
                                omega=None, C: float | None = None,
                                n_sources: int = 6,
                                t_values: np.ndarray | None = None,
                                m_values: np.ndarray | None = None,
                                budget: int = 100_000,
                                stencil_order: int = 16,
                                tol: float = 1e-9) -> VerificationReport:
    """Evolution condition (A): |H(t1,x1,r1) - H(t2,x2,r2)| bounded by
    omega(|t1-t2|, d, r1-r2) + C max|r| (|t1-t2| + d), on samples."""
    from .distance import distance_field as _df

    if omega is None or C is None:
        if H.condition_a is None:
            raise InputError("no condition-(A) certificate supplied")
        omega, C = H.condition_a
    grid = H.grid
    n1, n2 = grid.resolution
    ts = np.asarray(t_values if t_values is not None
                    else np.linspace(0.0, 2.0, 3), dtype=float)
    ms = np.asarray(m_values if m_values is not None
                    else np.linspace(0.0, 10.0, 4), dtype=float)
    pair_count = (len(ts) * len(ms)) ** 2
    node_cap = max(50, int(budget // max(1, n_sources * pair_count)))
    flat_stride = max(1, (n1 * n2) // node_cap)
    sel = np.zeros((n1, n2), dtype=bool)
    sel.ravel()[::flat_stride] = True

    src_stride = max(1, (n1 * n2) // n_sources)
    sources = [np.unravel_index(f, (n1, n2))
               for f in range(0, n1 * n2, src_stride)][:n_sources]
    violations, checked = 0, 0
    wit = []
    for s in sources:
        d = _df(nf, grid, [(tuple(s), 0.0)], stencil_order).values[sel]
        data_sel = H.node_data[sel]
        ds = H.node_data[tuple(s)]
        for t1 in ts:
            for m1 in ms:
                h1v = float(H.expression.evaluate({"t": t1, "m": m1, "d": ds}))
                for t2 in ts:
                    for m2 in ms:
                        h2v = H.expression.evaluate({"t": t2, "m": m2,
                                                     "d": data_sel})
                        lhs = np.abs(h1v - h2v)
                        rhs = omega(abs(t1 - t2), d, m1 - m2) + \
                            C * max(abs(m1), abs(m2)) * (abs(t1 - t2) + d)
                        checked += len(d)
                        bad = lhs > rhs + tol
                        if np.any(bad):
                            violations += int(np.count_nonzero(bad))
                            if len(wit) < 5:
                                k = int(np.argmax(lhs - rhs))
                                wit.append({"x1": list(map(int, s)),
                                            "t": [float(t1), float(t2)],
                                            "m": [float(m1), float(m2)],
                                            "excess": float((lhs - rhs)[k])})
    return VerificationReport("evolution-condition-A",
                              {"violations": float(violations)},
                              {"violations": 0.0}, 0.0, wit,
                              details={"tuples_checked": checked, "C": C})


def initial_condition(grid: GridDomain, spec, nf: NormField | None = None,
                      x0=None, stencil_order: int = 16) -> np.ndarray:
    """Grid data from an expression over {x1, x2, d} or a constant."""
    if isinstance(spec, (int, float)):
        return np.full(grid.resolution, float(spec))
    expr = spatial_expression(spec)
    env = {}
    X1, X2 = grid.mesh()
    env["x1"], env["x2"] = X1, X2
    if expr.uses("d"):
        if nf is None or x0 is None:
            raise InputError("initial condition references d(x0, .); supply "
                             "the metric and x0")
        env["d"] = distance_profile(nf, grid, x0, stencil_order)
    return np.broadcast_to(np.asarray(expr.evaluate(env), dtype=float),
                           grid.resolution).copy()
