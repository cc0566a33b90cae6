"""Globally posed stationary problem u(x) + H(x, ||du(x)||_x) = 0.

The solver is a monotone Gauss-Seidel fast sweep realising the
sup-of-subsolutions construction: starting from the constant subsolution
-K1, every node update solves the scalar equation v + H(x, P(v)) = 0 by
bisection, where P(v) is the dual norm of the upwind positive-part
difference covector.  H nondecreasing in its scalar slot plus P
nondecreasing in v make the left side strictly increasing, so the root is
unique and the iterates climb monotonically to the discrete solution.

The five shipped problem families (``BuiltinProblem``) carry their
documented value bounds, Lipschitz rules, condition-(A) certificates and
coercivity classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import dual_of_covector_field, dual_profile_arrays, sweep_stationary
from .distance import distance_field
from .errors import (CoercivityError, ConvergenceError, InputError)
from .expressions import (Expression, OP_D, OP_T, spatial_expression,
                          stationary_expression)
from .grid import GridDomain
from .norms import NormField
from .report import VerificationReport, combine
from .subdiff import (SubdiffProbe, central_candidate, is_superdifferential,
                      one_sided_candidates, probe_ball_fits)

_SWEEP_ORDERINGS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def distance_profile(nf: NormField, grid: GridDomain, x0,
                     stencil_order: int = 16) -> np.ndarray:
    """d(x0, x) on the grid: one Dijkstra from the node nearest x0."""
    node = grid.nearest_node(x0)
    return distance_field(nf, grid, [(node, 0.0)], stencil_order).values


@dataclass
class StationaryHamiltonian:
    """H(x, t) = expression(t, d) with a per-node data profile in the d slot."""

    expression: Expression
    grid: GridDomain
    node_data: np.ndarray
    k0: float
    k1: float
    monotone_in_t: bool = True
    condition_a: tuple | None = None          # (omega(s, r) -> array, C >= 0)
    coercivity_class: str = "uniform"         # 'uniform'|'locally-uniform'|'none'
    label: str = ""

    @staticmethod
    def from_expression(text: str, nf: NormField, grid: GridDomain,
                        k0: float, k1: float, x0=None,
                        stencil_order: int = 16, **kwargs) -> "StationaryHamiltonian":
        expr = stationary_expression(text)
        if expr.uses("d"):
            if x0 is None:
                raise InputError("expression references d(x0, .) but no x0 given")
            data = distance_profile(nf, grid, x0, stencil_order)
        else:
            data = np.zeros(grid.resolution)
        return StationaryHamiltonian(expr, grid, data, float(k0), float(k1),
                                     label=text, **kwargs)

    def eval(self, t, sel=None) -> np.ndarray:
        """H over nodes: t scalar or per-node array, sel an optional mask/index."""
        d = self.node_data if sel is None else self.node_data[sel]
        return self.expression.evaluate({"t": t, "d": d})

    def program(self):
        return self.expression.program({"t": OP_T, "d": OP_D})

    def shifted(self, c: float) -> "StationaryHamiltonian":
        """H + c (same data profile); solutions shift by exactly -c."""
        expr = stationary_expression(f"({self.expression.text}) + ({c!r})")
        return StationaryHamiltonian(expr, self.grid, self.node_data,
                                     self.k0 + c, self.k1 + c,
                                     self.monotone_in_t, self.condition_a,
                                     self.coercivity_class,
                                     label=f"{self.label} + {c}")

    def validate(self, t_samples=None) -> None:
        """Sampled invariants: K0 <= H(x,0) <= K1 and monotonicity in t."""
        h0 = self.eval(0.0)
        if np.min(h0) < self.k0 - 1e-9 or np.max(h0) > self.k1 + 1e-9:
            raise InputError(f"claimed bounds K0={self.k0}, K1={self.k1} do not "
                             f"cover sampled H(x,0) range "
                             f"[{np.min(h0):g}, {np.max(h0):g}]")
        if t_samples is None:
            t_samples = np.linspace(0.0, 10.0, 21)
        sel = (slice(None, None, max(1, self.grid.resolution[0] // 16)),
               slice(None, None, max(1, self.grid.resolution[1] // 16)))
        prev = None
        for t in t_samples:
            cur = self.eval(float(t), sel)
            if prev is not None and np.any(cur < prev - 1e-12):
                raise InputError("sampled monotonicity in t fails")
            prev = cur


# ---------------------------------------------------------------------------
# builtin problem families
# ---------------------------------------------------------------------------

_BUILTIN_IDS = ("ex1", "ex2", "ex3", "ex4", "ex5")


@dataclass
class BuiltinProblem:
    """The five shipped Hamiltonian families with documented constants.

    ex1(a, x0):  min(t, a) - cos d(x0, x), a > 2     -> -1 <= u <= 1, a-Lipschitz
    ex2(x0):     t - cos d(x0, x)                    -> -1 <= u <= 1, 2-Lipschitz
    ex3(a,b,x0): min(t, 1) - (a + d)/(b + d), 0<a<b  -> a/b <= u <= 1,
                                                        (1 - a/b)-Lipschitz
    ex4(x0):     (1 + 2|t|)/(1 + |t| + d)            -> -1 <= u <= 0,
                                                        R-Lipschitz in B(x0, R/4)
    ex5(f):      t - f(x), f bounded                  -> inf f <= u <= sup f,
                                                        (sup f - inf f)-Lipschitz
    """

    id: str
    a: float | None = None
    b: float | None = None
    x0: tuple[float, float] = (0.0, 0.0)
    f_expr: str | None = None

    def __post_init__(self):
        if self.id not in _BUILTIN_IDS:
            raise InputError(f"unknown builtin id {self.id!r}")
        if self.id == "ex1":
            if self.a is None or not self.a > 2:
                raise InputError("ex1 needs parameter a > 2")
        if self.id == "ex3":
            if self.a is None or self.b is None or not (0 < self.a < self.b):
                raise InputError("ex3 needs parameters 0 < a < b")
        if self.id == "ex5" and not self.f_expr:
            raise InputError("ex5 needs the source profile f as an expression")

    def hamiltonian(self, nf: NormField, grid: GridDomain,
                    stencil_order: int = 16) -> StationaryHamiltonian:
        x0 = self.x0
        if self.id == "ex5":
            fx = spatial_expression(self.f_expr)
            env = {}
            X1, X2 = grid.mesh()
            env["x1"], env["x2"] = X1, X2
            if fx.uses("d"):
                env["d"] = distance_profile(nf, grid, x0, stencil_order)
            fvals = np.broadcast_to(np.asarray(fx.evaluate(env), dtype=float),
                                    grid.resolution).copy()
            expr = stationary_expression("t - d")
            return StationaryHamiltonian(expr, grid, fvals,
                                         k0=-float(np.max(fvals)),
                                         k1=-float(np.min(fvals)),
                                         condition_a=(_omega_sum, 0.0),
                                         coercivity_class="uniform",
                                         label=f"ex5: t - f, f = {self.f_expr}")
        texts = {
            "ex1": f"min(t, {self.a!r}) - cos(d)",
            "ex2": "t - cos(d)",
            "ex3": f"min(t, 1) - (({self.a!r} + d) / ({self.b!r} + d))",
            "ex4": "(1 + 2*abs(t)) / (1 + abs(t) + d)",
        }
        bounds = {
            "ex1": (-1.0, 1.0),
            "ex2": (-1.0, 1.0),
            "ex3": (-1.0, -self.a / self.b if self.id == "ex3" else None),
            "ex4": (0.0, 1.0),
        }
        k0, k1 = bounds[self.id]
        coer = "locally-uniform" if self.id == "ex4" else "uniform"
        H = StationaryHamiltonian.from_expression(
            texts[self.id], nf, grid, k0, k1, x0=x0, stencil_order=stencil_order,
            condition_a=(_omega_sum, 0.0), coercivity_class=coer)
        H.label = f"{self.id}: {texts[self.id]}"
        return H

    def expected_bounds(self, H: StationaryHamiltonian) -> tuple[float, float]:
        if self.id in ("ex1", "ex2"):
            return (-1.0, 1.0)
        if self.id == "ex3":
            return (self.a / self.b, 1.0)
        if self.id == "ex4":
            return (-1.0, 0.0)
        return (-H.k1, -H.k0)   # ex5: [inf f, sup f]

    def expected_lipschitz(self, H: StationaryHamiltonian):
        """Either a global constant or ("radial", 1/4) for the ball rule."""
        if self.id == "ex1":
            return float(self.a)
        if self.id == "ex2":
            return 2.0
        if self.id == "ex3":
            return 1.0 - self.a / self.b
        if self.id == "ex4":
            return ("radial", 0.25)
        return H.k1 - H.k0      # ex5: sup f - inf f

    def describe(self) -> dict:
        rules = {
            "ex1": ("min(t, a) - cos d(x0, x)", "a > 2", "[-1, 1]", "a"),
            "ex2": ("t - cos d(x0, x)", "", "[-1, 1]", "2"),
            "ex3": ("min(t, 1) - (a + d)/(b + d)", "0 < a < b", "[a/b, 1]",
                    "1 - a/b"),
            "ex4": ("(1 + 2|t|)/(1 + |t| + d)", "", "[-1, 0]",
                    "R in B(x0, R/4)"),
            "ex5": ("t - f(x)", "f bounded", "[inf f, sup f]",
                    "sup f - inf f"),
        }
        ham, constraint, bounds, lip = rules[self.id]
        return {"id": self.id, "hamiltonian": ham, "constraints": constraint,
                "bounds": bounds, "lipschitz": lip}


def _omega_sum(s, r):
    return s + np.abs(r)


def list_builtins() -> list[dict]:
    return [BuiltinProblem(i, a=3.0 if i == "ex1" else (1.0 if i == "ex3" else None),
                           b=2.0 if i == "ex3" else None,
                           f_expr="cos(d)" if i == "ex5" else None).describe()
            for i in _BUILTIN_IDS]


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

@dataclass
class StationaryResult:
    values: np.ndarray
    cycles: int
    residual: float
    converged: bool
    mode: str
    hamiltonian: StationaryHamiltonian = field(repr=False, default=None)


def solve_stationary(H: StationaryHamiltonian, nf: NormField, grid: GridDomain,
                     tol: float = 1e-8, max_sweeps: int = 500,
                     mode: str = "gs", bisect_tol: float = 1e-10,
                     history: list | None = None) -> StationaryResult:
    """Monotone fast sweeping for v + H(x, P(v)) = 0 on the full rectangle.

    ``max_sweeps`` counts full cycles through the four axis orderings
    (Gauss-Seidel, the deterministic default) or Jacobi passes
    (mode="jacobi", the parallel-consistent variant; same fixed point).
    ``history`` optionally collects per-cycle max updates.
    """
    if grid.kind != "global":
        raise InputError("the stationary equation is posed on the full "
                         "rectangle; build the grid with GridDomain.rectangle")
    if H.grid is not grid and H.node_data.shape != grid.resolution:
        raise InputError("Hamiltonian profile does not match the grid")
    if not H.monotone_in_t:
        raise InputError("solver requires H nondecreasing in its scalar slot")
    H.validate()
    lo0, hi0 = -H.k1 - 1.0, -H.k0 + 1.0
    nbis = max(8, int(math.ceil(math.log2((hi0 - lo0) / bisect_tol))))
    u = np.full(grid.resolution, -H.k1)
    if mode == "gs":
        dual_mode, b11, b12, b22, w1, w2, q = dual_profile_arrays(nf, grid)
        ops, args, consts = H.program()
        h1, h2 = grid.spacing
        for cycle in range(1, max_sweeps + 1):
            maxchg = 0.0
            for si, sj in _SWEEP_ORDERINGS:
                chg, ok = sweep_stationary(u, H.node_data, ops, args, consts,
                                           dual_mode, b11, b12, b22, w1, w2, q,
                                           h1, h2, lo0, hi0, nbis, si, sj)
                if not ok:
                    raise InputError("bisection bracket failed: claimed K0/K1 "
                                     "do not bracket the node equations")
                maxchg = max(maxchg, chg)
            if history is not None:
                history.append(maxchg)
            if maxchg < tol:
                return StationaryResult(u, cycle, maxchg, True, mode, H)
        raise ConvergenceError(f"no convergence within {max_sweeps} cycles "
                               f"(last max update {maxchg:g})")
    if mode != "jacobi":
        raise InputError(f"unknown solver mode {mode!r}")
    for it in range(1, max_sweeps + 1):
        new = _jacobi_update(u, H, nf, grid, lo0, hi0, nbis)
        maxchg = float(np.max(new - u))
        u = new
        if history is not None:
            history.append(maxchg)
        if maxchg < tol:
            return StationaryResult(u, it, maxchg, True, mode, H)
    raise ConvergenceError(f"no convergence within {max_sweeps} Jacobi passes "
                           f"(last max update {maxchg:g})")


def _upwind_components(u: np.ndarray, grid: GridDomain, v=None):
    """Positive-part one-sided difference components of the candidate v
    (default: u itself) against the neighbour values of u."""
    from ._kernels import BIG

    h1, h2 = grid.spacing
    pad = np.pad(u, 1, constant_values=BIG)
    uL, uR = pad[:-2, 1:-1], pad[2:, 1:-1]
    uD, uU = pad[1:-1, :-2], pad[1:-1, 2:]
    vv = u if v is None else v
    cx = np.maximum(np.maximum(vv - uL, vv - uR), 0.0) / h1
    cy = np.maximum(np.maximum(vv - uD, vv - uU), 0.0) / h2
    return cx, cy


def _jacobi_update(u, H, nf, grid, lo0, hi0, nbis):
    lo = np.full_like(u, lo0)
    hi = np.full_like(u, hi0)
    glo = lo0 + H.eval(dual_of_covector_field(
        nf, grid, *_upwind_components(u, grid, np.full_like(u, lo0))))
    ghi = hi0 + H.eval(dual_of_covector_field(
        nf, grid, *_upwind_components(u, grid, np.full_like(u, hi0))))
    if np.any(glo > 0.0) or np.any(ghi < 0.0):
        raise InputError("bisection bracket failed: claimed K0/K1 do not "
                         "bracket the node equations")
    for _ in range(nbis):
        mid = 0.5 * (lo + hi)
        p = dual_of_covector_field(nf, grid, *_upwind_components(u, grid, mid))
        g = mid + H.eval(p)
        above = g > 0.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.maximum(u, 0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# condition (A) and coercivity
# ---------------------------------------------------------------------------

@dataclass
class ConditionASampler:
    """Deterministic sampling plan for the joint-continuity check."""

    n_sources: int = 8
    t_values: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 10.0, 5))
    budget: int = 100_000


def check_condition_a(H: StationaryHamiltonian, nf: NormField,
                      omega=None, C: float | None = None,
                      sampler: ConditionASampler | None = None,
                      stencil_order: int = 16, tol: float = 1e-9) -> VerificationReport:
    """Sampled check of |H(x1,t1) - H(x2,t2)| <= omega(d, t1-t2) + C max|t| d.

    Sources are strided grid nodes; for each source one distance field
    supplies d to every other sampled node, and all (t1, t2) pairs from the
    sampler are tested.  The tuple count stays within the sampler budget.
    """
    if omega is None or C is None:
        if H.condition_a is None:
            raise InputError("no condition-(A) certificate supplied")
        omega, C = H.condition_a
    sampler = sampler or ConditionASampler()
    grid = H.grid
    n1, n2 = grid.resolution
    ts = np.asarray(sampler.t_values, dtype=float)
    n_pairs = len(ts) ** 2
    node_cap = max(50, int(sampler.budget // max(1, sampler.n_sources * n_pairs)))
    flat_stride = max(1, (n1 * n2) // node_cap)
    sel = np.zeros((n1, n2), dtype=bool)
    sel.ravel()[::flat_stride] = True
    sel &= grid.active

    src_stride = max(1, (n1 * n2) // sampler.n_sources)
    sources = [np.unravel_index(f, (n1, n2))
               for f in range(0, n1 * n2, src_stride)][:sampler.n_sources]

    violations = 0
    checked = 0
    wit = []
    for s in sources:
        dfield = distance_field(nf, grid, [(tuple(s), 0.0)], stencil_order)
        d = dfield.values[sel]
        finite = np.isfinite(d)
        d = d[finite]
        data_sel = H.node_data[sel][finite]
        ds = H.node_data[tuple(s)]
        for t1 in ts:
            h1v = float(H.expression.evaluate({"t": t1, "d": ds}))
            for t2 in ts:
                h2v = H.expression.evaluate({"t": t2, "d": data_sel})
                lhs = np.abs(h1v - h2v)
                rhs = omega(d, t1 - t2) + C * max(abs(t1), abs(t2)) * d
                checked += len(d)
                bad = lhs > rhs + tol
                if np.any(bad):
                    violations += int(np.count_nonzero(bad))
                    if len(wit) < 5:
                        k = int(np.argmax(lhs - rhs))
                        wit.append({"x1": list(map(int, s)), "t1": float(t1),
                                    "t2": float(t2), "excess": float((lhs - rhs)[k])})
    return VerificationReport("condition-A", {"violations": float(violations)},
                              {"violations": 0.0}, 0.0, wit,
                              details={"tuples_checked": checked,
                                       "C": C, "tolerance": tol})


def coercivity_threshold(H: StationaryHamiltonian, k1: float, x,
                         tol: float = 1e-3, probe_radius: float = 0.25,
                         cap: float = 1e6, t_window: float = 10.0,
                         n_t: int = 65) -> float:
    """Smallest sampled R with H(z, t) > K1 for z near x and t in (R, R+10].

    Bisected to ``tol``; raises CoercivityError when even the cap fails.
    """
    if H.coercivity_class == "none":
        raise InputError("Hamiltonian declared non-coercive")
    grid = H.grid
    pts = grid.points()
    x = np.asarray(x, dtype=float)
    near = np.linalg.norm(pts - x, axis=-1) <= probe_radius
    near[grid.nearest_node(x)] = True
    data = H.node_data[near]

    def exceeds(R: float) -> bool:
        ts = R + tol * 0.1 + np.linspace(0.0, t_window, n_t)
        vals = H.expression.evaluate({"t": ts[:, None], "d": data[None, :]})
        return bool(np.min(vals) > k1)

    if not exceeds(cap):
        raise CoercivityError(f"no threshold below cap {cap:g}")
    if exceeds(0.0):
        return 0.0
    lo, hi = 0.0, float(cap)
    # shrink the huge bracket geometrically before bisecting
    while hi / max(lo, 1.0) > 4.0 and hi > 1.0:
        mid = max(1.0, hi / 4.0) if lo == 0.0 else math.sqrt(lo * hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def frame_window(grid: GridDomain, frac: float = 0.1) -> np.ndarray:
    """Nodes at least ``frac`` of the resolution away from the rectangle edge
    (domain-truncation frame excluded from verification)."""
    n1, n2 = grid.resolution
    m1, m2 = int(math.ceil(frac * n1)), int(math.ceil(frac * n2))
    w = np.zeros((n1, n2), dtype=bool)
    w[m1:n1 - m1, m2:n2 - m2] = True
    return w


def axis_edge_lipschitz(u: np.ndarray, nf: NormField, grid: GridDomain,
                        window: np.ndarray | None = None):
    """Discrete Lipschitz constant over axis-neighbour pairs.

    The upwind scheme controls exactly these differences; the ratio uses
    the Finsler length of the axis step (midpoint rule).
    """
    h1, h2 = grid.spacing
    pts = grid.points()
    best, wit = 0.0, []
    for axis, hh in ((0, h1), (1, h2)):
        vec = np.array([hh, 0.0]) if axis == 0 else np.array([0.0, hh])
        if axis == 0:
            du = np.abs(u[1:, :] - u[:-1, :])
            mid = pts[:-1, :, :] + 0.5 * vec
            inw = None if window is None else (window[1:, :] & window[:-1, :])
        else:
            du = np.abs(u[:, 1:] - u[:, :-1])
            mid = pts[:, :-1, :] + 0.5 * vec
            inw = None if window is None else (window[:, 1:] & window[:, :-1])
        w = nf.norm(mid, np.broadcast_to(vec, mid.shape))
        ratio = du / w
        if inw is not None:
            ratio = np.where(inw, ratio, -np.inf)
        k = int(np.argmax(ratio))
        if ratio.ravel()[k] > best:
            best = float(ratio.ravel()[k])
            i, j = np.unravel_index(k, ratio.shape)
            wit = [{"pair": [[int(i), int(j)],
                             [int(i + (axis == 0)), int(j + (axis == 1))]],
                    "ratio": best}]
    return best, wit


def check_stationary_bounds(u: np.ndarray, lo: float, hi: float,
                            tol: float = 1e-6) -> VerificationReport:
    """(a) expected value band, checked on every node."""
    upper = float(np.max(u - hi))
    lower = float(np.max(lo - u))
    wit = []
    if max(upper, lower) > tol:
        k = np.unravel_index(int(np.argmax(np.maximum(u - hi, lo - u))), u.shape)
        wit = [{"node": [int(k[0]), int(k[1])], "value": float(u[k])}]
    return VerificationReport("stationary-bounds",
                              {"upper_excess": upper, "lower_excess": lower},
                              {"upper_excess": 0.0, "lower_excess": 0.0},
                              tol, wit, details={"lo": lo, "hi": hi})


def check_stationary_lipschitz(u: np.ndarray, rule, H: StationaryHamiltonian,
                               nf: NormField, grid: GridDomain,
                               frame: float = 0.1) -> VerificationReport:
    """(b) measured discrete Lipschitz constant against the documented rule,
    within factor (1 + 5h), on the frame-excluded window.

    The radial rule measures inside metric balls B(x0, R/4) for R in
    {1, 2, 4} using the Hamiltonian's own distance profile.
    """
    h = grid.h
    window = frame_window(grid, frame)
    measured, bound, wit = {}, {}, []
    if isinstance(rule, tuple) and rule[0] == "radial":
        for R in (1.0, 2.0, 4.0):
            ball = (H.node_data <= R * rule[1]) & window
            if not ball.any():
                continue
            val, w = axis_edge_lipschitz(u, nf, grid, ball)
            key = f"lipschitz_R{R:g}"
            measured[key] = val
            bound[key] = R * (1.0 + 5.0 * h)
            if val > bound[key]:
                wit += w
    else:
        val, w = axis_edge_lipschitz(u, nf, grid, window)
        measured["lipschitz"] = val
        bound["lipschitz"] = float(rule) * (1.0 + 5.0 * h)
        if val > bound["lipschitz"]:
            wit = w
    return VerificationReport("stationary-lipschitz", measured, bound,
                              1e-9, wit)


def subsolution_spot_residual(w: np.ndarray, H: StationaryHamiltonian,
                              nf: NormField, grid: GridDomain, C: float = 10.0,
                              sample_cap: int = 200, frame: float = 0.1):
    """Viscosity subsolution probe: at sampled nodes, every covector passing
    the superdifferential probe must satisfy w(x) + H(x, ||delta||*) <= C h.

    Returns (max residual, witness list, number of passing covectors).
    """
    h = grid.h
    pr = 4 * h
    probe = SubdiffProbe(radius=pr, slack=C * h)
    window = frame_window(grid, frame)
    nodes = [tuple(n) for n in np.argwhere(window)
             if probe_ball_fits(grid, tuple(n), pr)]
    stride = max(1, len(nodes) // sample_cap)
    worst = -np.inf
    wit = []
    n_pass = 0
    for x in nodes[::stride]:
        cands = [central_candidate(w, grid, x)] + one_sided_candidates(w, grid, x)
        pt = grid.point(x)
        for delta in cands:
            if not is_superdifferential(w, grid, x, delta, probe):
                continue
            n_pass += 1
            resid = float(w[x] + H.expression.evaluate(
                {"t": float(nf.dual_norm(pt, delta)), "d": H.node_data[x]}))
            if resid > worst:
                worst = resid
                wit = [{"node": list(x), "residual": resid}]
    if n_pass == 0:
        worst = -np.inf
    return worst, wit, n_pass


def check_stationary_viscosity(u: np.ndarray, H: StationaryHamiltonian,
                               nf: NormField, grid: GridDomain,
                               C: float = 10.0) -> VerificationReport:
    """(c) spot viscosity probe on the solved field."""
    worst, wit, n_pass = subsolution_spot_residual(u, H, nf, grid, C)
    measured = {"max_residual": worst if np.isfinite(worst) else -1.0}
    return VerificationReport("stationary-viscosity", measured,
                              {"max_residual": C * grid.h}, 1e-9,
                              wit if measured["max_residual"] > C * grid.h else [],
                              details={"passing_covectors": n_pass, "C": C})


def verify_stationary(result: StationaryResult | np.ndarray, problem,
                      nf: NormField, grid: GridDomain, C: float = 10.0,
                      frame: float = 0.1) -> VerificationReport:
    """Bounds, Lipschitz rule and viscosity spot-checks for a solved field.

    ``problem`` is a BuiltinProblem (documented constants) or a tuple
    ``(H, lo, hi, lipschitz_rule)`` for custom Hamiltonians.
    """
    u = result.values if isinstance(result, StationaryResult) else result
    if isinstance(problem, BuiltinProblem):
        H = (result.hamiltonian if isinstance(result, StationaryResult)
             and result.hamiltonian is not None
             else problem.hamiltonian(nf, grid))
        lo, hi = problem.expected_bounds(H)
        rule = problem.expected_lipschitz(H)
    else:
        H, lo, hi, rule = problem
    parts = [check_stationary_bounds(u, lo, hi),
             check_stationary_lipschitz(u, rule, H, nf, grid, frame),
             check_stationary_viscosity(u, H, nf, grid, C)]
    return combine("stationary", parts)


def stability_gap(H1: StationaryHamiltonian, H2: StationaryHamiltonian,
                  u1: np.ndarray, u2: np.ndarray, C: float = 5.0,
                  t_samples: np.ndarray | None = None) -> VerificationReport:
    """sup(u1 - u2) against sup(H2 - H1): the comparison-based stability bound.

    Requires both fields on one grid; the Hamiltonian gap is sampled over
    the grid and a t range covering the working gradient scale.
    """
    if u1.shape != u2.shape or H1.grid.resolution != H2.grid.resolution:
        raise InputError("stability gap needs both solutions on one grid")
    grid = H1.grid
    ts = t_samples if t_samples is not None else np.linspace(0.0, 10.0, 41)
    gap = float(np.max(u1 - u2))
    sup = -np.inf
    for t in ts:
        diff = H2.eval(float(t)) - H1.eval(float(t))
        sup = max(sup, float(np.max(diff)))
    bound = sup + C * grid.h
    return VerificationReport("stationary-stability",
                              {"gap": gap}, {"gap": bound}, 1e-9,
                              [] if gap <= bound else [{"gap": gap, "sup_dH": sup}],
                              details={"sup_dH": sup, "C": C})


def family_sup_diagnostic(fields: list[np.ndarray], H: StationaryHamiltonian,
                          nf: NormField, grid: GridDomain,
                          C: float = 10.0) -> VerificationReport:
    """Pointwise supremum of verified subsolutions stays a subsolution.

    Every member must pass the spot subsolution check first (InputError
    otherwise); the supremum is then re-checked.  On a finite grid the
    upper semicontinuous envelope of a finite family supremum is the
    supremum itself, so no envelope step appears here.
    """
    if not fields:
        raise InputError("empty subsolution family")
    bound = C * grid.h
    for k, w in enumerate(fields):
        resid, _, _ = subsolution_spot_residual(w, H, nf, grid, C)
        if np.isfinite(resid) and resid > bound:
            raise InputError(f"family member {k} fails the subsolution "
                             f"spot-check (residual {resid:g} > {bound:g})")
    sup = np.maximum.reduce(fields)
    worst, wit, n_pass = subsolution_spot_residual(sup, H, nf, grid, C)
    measured = {"max_residual": worst if np.isfinite(worst) else -1.0}
    return VerificationReport("perron-family-sup", measured,
                              {"max_residual": bound}, 1e-9,
                              wit if measured["max_residual"] > bound else [],
                              details={"members": len(fields),
                                       "passing_covectors": n_pass})
