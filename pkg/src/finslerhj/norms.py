"""Point-dependent norm fields and the metric primitives built on them.

A norm field assigns to every point x of a rectangular domain a norm on
vectors (and by duality on covectors).  The shipped kinds are

* ``EuclideanNorm``            -- |v|_2, self-dual;
* ``RiemannianNorm``           -- sqrt(v^T A(x) v) for an SPD matrix field A;
* ``WeightedPNorm``            -- (sum_i w_i(x) |v_i|^p)^(1/p), p in [1, inf];
* ``ScaledNorm``               -- c(x) * base norm for a positive scalar field;
* ``CustomNorm``               -- arbitrary evaluator, dual norm by search.

All evaluators are vectorised over leading axes: ``x`` has shape (..., n) and
vectors/covectors match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InputError, MetricError

Bounds = tuple[tuple[float, float], ...]


def _check_points(x: np.ndarray, bounds: Bounds | None) -> None:
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite point coordinates")
    if bounds is None:
        return
    for axis, (lo, hi) in enumerate(bounds):
        xa = x[..., axis]
        if np.any(xa < lo - 1e-12) or np.any(xa > hi + 1e-12):
            raise DomainError(f"point outside bounds on axis {axis}: "
                              f"range [{xa.min()}, {xa.max()}] vs [{lo}, {hi}]")


def _check_vectors(v: np.ndarray) -> None:
    if not np.all(np.isfinite(v)):
        raise InputError("non-finite vector components")


class NormField:
    """Base class; subclasses implement ``_norm`` and optionally ``_dual``."""

    kind = "abstract"

    def __init__(self, dimension: int = 2, bounds: Bounds | None = None):
        if dimension < 1:
            raise InputError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self.bounds = bounds

    # -- subclass hooks ----------------------------------------------------
    def _norm(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dual(self, x: np.ndarray, c: np.ndarray) -> np.ndarray | None:
        """Closed-form dual norm, or None to fall back to the search."""
        return None

    # -- public API --------------------------------------------------------
    def norm(self, x, v) -> np.ndarray:
        """Evaluate ||v||_x. Broadcasts over leading axes."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        _check_points(x, self.bounds)
        _check_vectors(v)
        return self._norm(x, v)

    def dual_norm(self, x, c) -> np.ndarray:
        """Evaluate the dual norm sup{c(v) : ||v||_x <= 1}."""
        x = np.asarray(x, dtype=float)
        c = np.asarray(c, dtype=float)
        _check_points(x, self.bounds)
        _check_vectors(c)
        closed = self._dual(x, c)
        if closed is not None:
            return closed
        return _dual_by_search(self, x, c)

    def dual_profile(self, points: np.ndarray):
        """Per-node dual-norm data for the sweeping kernels.

        Returns ``("quad", B)`` with the dual norm sqrt(c^T B c), or
        ``("power", w, q)`` with the dual norm (sum_i w_i |c_i|^q)^(1/q)
        (q = inf encoded as 0.0), or None when no closed form exists.
        """
        return None

    def with_bounds(self, bounds: Bounds) -> "NormField":
        self.bounds = bounds
        return self


class EuclideanNorm(NormField):
    kind = "euclidean"

    def _norm(self, x, v):
        return np.sqrt(np.sum(v * v, axis=-1))

    def _dual(self, x, c):
        return np.sqrt(np.sum(c * c, axis=-1))

    def dual_profile(self, points):
        n = self.dimension
        B = np.broadcast_to(np.eye(n), points.shape[:-1] + (n, n)).copy()
        return ("quad", B)


class RiemannianNorm(NormField):
    """sqrt(v^T A(x) v) for a symmetric positive-definite matrix field A."""

    kind = "riemannian"

    def __init__(self, matrix: Callable[[np.ndarray], np.ndarray],
                 dimension: int = 2, bounds: Bounds | None = None):
        super().__init__(dimension, bounds)
        self.matrix = matrix

    def _mat(self, x):
        A = np.asarray(self.matrix(x), dtype=float)
        want = x.shape[:-1] + (self.dimension, self.dimension)
        return np.broadcast_to(A, want)

    def _norm(self, x, v):
        A = self._mat(x)
        return np.sqrt(np.einsum("...i,...ij,...j->...", v, A, v))

    def _dual(self, x, c):
        A = self._mat(x)
        try:
            Ainv = np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise MetricError(f"singular matrix field: {exc}") from exc
        return np.sqrt(np.einsum("...i,...ij,...j->...", c, Ainv, c))

    def dual_profile(self, points):
        A = self._mat(points)
        try:
            return ("quad", np.linalg.inv(A))
        except np.linalg.LinAlgError as exc:
            raise MetricError(f"singular matrix field: {exc}") from exc


class WeightedPNorm(NormField):
    """(sum_i w_i(x)|v_i|^p)^(1/p); p = inf gives max_i w_i(x)|v_i|."""

    kind = "weighted-p"

    def __init__(self, p: float, weights: Callable[[np.ndarray], np.ndarray],
                 dimension: int = 2, bounds: Bounds | None = None):
        if not (p >= 1.0):
            raise InputError("exponent p must lie in [1, inf]")
        super().__init__(dimension, bounds)
        self.p = float(p)
        self.weights = weights

    def _w(self, x):
        w = np.asarray(self.weights(x), dtype=float)
        w = np.broadcast_to(w, x.shape[:-1] + (self.dimension,))
        if np.any(w <= 0):
            raise MetricError("weight field must stay positive")
        return w

    def _norm(self, x, v):
        w = self._w(x)
        if math.isinf(self.p):
            return np.max(w * np.abs(v), axis=-1)
        return np.sum(w * np.abs(v) ** self.p, axis=-1) ** (1.0 / self.p)

    def _dual_weights(self, w):
        # dual of a weighted-p norm is weighted-q with w_i^(-q/p), 1/p+1/q=1
        p = self.p
        if p == 1.0:
            return 1.0 / w, math.inf
        if math.isinf(p):
            return 1.0 / w, 1.0
        q = p / (p - 1.0)
        return w ** (-q / p), q

    def _dual(self, x, c):
        wd, q = self._dual_weights(self._w(x))
        if math.isinf(q):
            return np.max(wd * np.abs(c), axis=-1)
        return np.sum(wd * np.abs(c) ** q, axis=-1) ** (1.0 / q)

    def dual_profile(self, points):
        wd, q = self._dual_weights(self._w(points))
        return ("power", wd, 0.0 if math.isinf(q) else float(q))


class ScaledNorm(NormField):
    """c(x) * base norm for a positive scalar field c."""

    kind = "scaled"

    def __init__(self, base: NormField, scale: Callable[[np.ndarray], np.ndarray],
                 bounds: Bounds | None = None):
        super().__init__(base.dimension, bounds if bounds is not None else base.bounds)
        self.base = base
        self.scale = scale

    def _c(self, x):
        c = np.broadcast_to(np.asarray(self.scale(x), dtype=float), x.shape[:-1])
        if np.any(c <= 0):
            raise MetricError("scale field must stay positive")
        return c

    def _norm(self, x, v):
        return self._c(x) * self.base._norm(x, v)

    def _dual(self, x, c):
        inner = self.base._dual(x, c)
        if inner is None:
            return None
        return inner / self._c(x)

    def dual_profile(self, points):
        prof = self.base.dual_profile(points)
        if prof is None:
            return None
        c = self._c(points)
        if prof[0] == "quad":
            return ("quad", prof[1] / (c * c)[..., None, None])
        _, wd, q = prof
        if q == 0.0:  # dual exponent inf: dual scales each weight by 1/c
            return ("power", wd / c[..., None], 0.0)
        return ("power", wd / (c[..., None] ** q), q)


class CustomNorm(NormField):
    """Arbitrary continuous evaluator; dual norm via directional search."""

    kind = "custom"

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 dimension: int = 2, bounds: Bounds | None = None):
        super().__init__(dimension, bounds)
        self.func = func

    def _norm(self, x, v):
        return np.asarray(self.func(x, v), dtype=float)


def _dual_by_search(nf: NormField, x: np.ndarray, c: np.ndarray,
                    tol: float = 1e-6) -> np.ndarray:
    """Dual norm without a closed form.

    2-D: coarse angular scan refined by golden-section search.  n > 2:
    projected-gradient ascent on the unit sphere from 2n axis starts.
    """
    x = np.atleast_2d(x)
    c = np.atleast_2d(c)
    x, c = np.broadcast_arrays(x, c)
    flatx = x.reshape(-1, nf.dimension)
    flatc = c.reshape(-1, nf.dimension)
    out = np.empty(len(flatx))
    for k in range(len(flatx)):
        if nf.dimension == 2:
            out[k] = _dual_search_2d(nf, flatx[k], flatc[k], tol)
        else:
            out[k] = _dual_search_nd(nf, flatx[k], flatc[k], tol)
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else out[0]


def _rayleigh(nf, x, c, theta):
    v = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    denom = nf._norm(np.broadcast_to(x, v.shape), v)
    return np.abs(v @ c) / denom


def _dual_search_2d(nf, x, c, tol):
    if not np.any(c):
        return 0.0
    # |c(v)|/||v||_x is pi-periodic in the direction angle
    thetas = np.linspace(0.0, np.pi, 65)[:-1]
    vals = _rayleigh(nf, x, c, thetas)
    k = int(np.argmax(vals))
    step = np.pi / 64
    lo, hi = thetas[k] - step, thetas[k] + step
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1 = _rayleigh(nf, x, c, np.array(c1))
    f2 = _rayleigh(nf, x, c, np.array(c2))
    while (b - a) > tol:
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = _rayleigh(nf, x, c, np.array(c2))
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = _rayleigh(nf, x, c, np.array(c1))
    return float(max(f1, f2, vals[k]))


def _dual_search_nd(nf, x, c, tol, max_iter=400):
    best = 0.0
    n = nf.dimension
    starts = [e for k in range(n) for e in (np.eye(n)[k], -np.eye(n)[k])]
    for v0 in starts:
        v = v0.astype(float)
        val = abs(v @ c) / float(nf._norm(x, v))
        step = 0.5
        it = 0
        while step > tol and it < max_iter:
            it += 1
            g = c if v @ c >= 0 else -c
            cand = v + step * g / (np.linalg.norm(g) + 1e-300)
            cval = abs(cand @ c) / float(nf._norm(x, cand))
            if cval > val:
                v, val = cand, cval
            else:
                step *= 0.5
        best = max(best, val)
    return best


# ---------------------------------------------------------------------------
# spec-level operation wrappers
# ---------------------------------------------------------------------------

def eval_norm(nf: NormField, x, v) -> np.ndarray:
    """||v||_x; raises DomainError outside bounds, InputError on non-finite v."""
    return nf.norm(x, v)


def eval_dual_norm(nf: NormField, x, c) -> np.ndarray:
    """sup{c(v) : ||v||_x <= 1} with closed forms for the shipped kinds."""
    return nf.dual_norm(x, c)


@dataclass(frozen=True)
class Covector:
    """Covector components anchored at a point."""

    components: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, float))
        object.__setattr__(self, "point", np.asarray(self.point, float))


@dataclass
class PiecewisePath:
    """Ordered polyline with a per-segment quadrature order."""

    vertices: np.ndarray
    quadrature_order: int = 1

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2:
            raise InputError("vertices must be an (m, n) array")
        if self.quadrature_order < 1:
            raise InputError("quadrature order must be >= 1")
        if len(self.vertices) >= 2:
            seg = np.diff(self.vertices, axis=0)
            if np.any(np.all(seg == 0.0, axis=1)):
                raise InputError("consecutive path vertices must be distinct")


def path_length(nf: NormField, path: PiecewisePath, rule: str = "midpoint") -> float:
    """Length of a polyline under the norm field.

    Each segment contributes int_0^1 ||q - p||_{c(t)} dt, approximated with a
    composite midpoint (default) or Simpson rule over ``quadrature_order``
    subintervals.  A single-vertex path has length 0.
    """
    verts = path.vertices
    if len(verts) < 2:
        return 0.0
    _check_points(verts, nf.bounds)
    m = path.quadrature_order
    total = 0.0
    for p, q in zip(verts[:-1], verts[1:]):
        seg = q - p
        if rule == "midpoint":
            ts = (np.arange(m) + 0.5) / m
            pts = p + ts[:, None] * seg
            total += float(np.sum(nf.norm(pts, np.broadcast_to(seg, pts.shape)))) / m
        elif rule == "simpson":
            ts = np.linspace(0.0, 1.0, 2 * m + 1)
            pts = p + ts[:, None] * seg
            vals = nf.norm(pts, np.broadcast_to(seg, pts.shape))
            weights = np.ones(2 * m + 1)
            weights[1:-1:2] = 4.0
            weights[2:-1:2] = 2.0
            total += float(np.sum(weights * vals)) / (6.0 * m)
        else:
            raise InputError(f"unknown quadrature rule {rule!r}")
    return total


def palais_ratio(nf: NormField, x0, r: float, n_samples: int = 256) -> float:
    """Empirical (1+eps)-equivalence constant over a probe ball.

    Samples points with |x - x0| <= r and directions, and returns the largest
    two-sided ratio between the norm at a sampled point and the norm at x0.
    Deterministic; always >= 1.
    """
    if r <= 0:
        raise InputError("probe radius must be positive")
    x0 = np.asarray(x0, dtype=float)
    n = nf.dimension
    n_ang = max(8, int(math.isqrt(n_samples)))
    n_rad = max(2, n_samples // n_ang)
    if n == 2:
        phis = np.linspace(0.0, 2 * np.pi, n_ang, endpoint=False)
        dirs = np.stack([np.cos(phis), np.sin(phis)], axis=-1)
    else:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(n_ang, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.linspace(0.0, r, n_rad + 1)[1:]
    pts = (x0 + radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    _check_points(pts, nf.bounds)

    ratio = 1.0
    for v in dirs:
        at_x0 = float(nf.norm(x0, v))
        at_pts = nf.norm(pts, np.broadcast_to(v, pts.shape))
        if at_x0 <= 0 or np.any(at_pts <= 0):
            raise MetricError("norm field degenerate inside probe ball")
        ratio = max(ratio, float(np.max(at_pts / at_x0)),
                    float(np.max(at_x0 / at_pts)))
    return ratio


def check_norm_axioms(nf: NormField, points: np.ndarray, vectors: np.ndarray,
                      tol: float = 1e-12) -> None:
    """Assert positivity, absolute homogeneity and the triangle inequality
    on the sampled points/vectors; raises MetricError on violation."""
    pts = np.asarray(points, float)
    vecs = np.asarray(vectors, float)
    for x in pts:
        xs = np.broadcast_to(x, vecs.shape)
        norms = nf.norm(xs, vecs)
        if np.any(norms <= 0):
            raise MetricError(f"positivity violated at {x}")
        for lam in (-2.0, -1.0, 0.5, 3.0):
            if np.max(np.abs(nf.norm(xs, lam * vecs) - abs(lam) * norms)) > tol:
                raise MetricError(f"homogeneity violated at {x}, lambda={lam}")
        for shift in (1, 2):
            w = np.roll(vecs, shift, axis=0)
            lhs = nf.norm(xs, vecs + w)
            rhs = norms + nf.norm(xs, w)
            if np.max(lhs - rhs) > tol:
                raise MetricError(f"triangle inequality violated at {x}")
