"""Uniform Cartesian grid domains.

Arrays over a grid are indexed ``values[i, j]`` where ``i`` runs along the
first coordinate axis (x1) and ``j`` along the second (x2).  Flat node
indices are lexicographic, ``idx = i * n2 + j``; Dijkstra tie-breaking and
the CSV layout both follow this order.

Two flavours of domain exist:

* ``GridDomain.rectangle`` -- the whole rectangle is active and there is no
  boundary set (used by the globally-posed stationary/evolution equations);
* ``GridDomain.masked``    -- an open region described by a mask; the
  boundary set consists of the inactive nodes 8-adjacent to the interior
  (one grid shell, no sub-grid geometry).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

# coprime stencil offsets by neighbourhood order (2-D)
_STENCILS: dict[int, tuple[tuple[int, int], ...]] = {}


def stencil_offsets(order: int) -> np.ndarray:
    """Integer neighbour offsets for stencil order 8, 16 or 32."""
    if order not in (8, 16, 32):
        raise InputError("stencil order must be one of 8, 16, 32")
    if order not in _STENCILS:
        reach = {8: 1, 16: 2, 32: 3}[order]
        offs = []
        for di in range(-reach, reach + 1):
            for dj in range(-reach, reach + 1):
                if (di, dj) == (0, 0):
                    continue
                if np.gcd(abs(di), abs(dj)) != 1:
                    continue
                offs.append((di, dj))
        _STENCILS[order] = tuple(sorted(offs))
    return np.array(_STENCILS[order], dtype=np.int64)


_SHELL8 = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]


@dataclass
class GridDomain:
    """Uniform grid over [a1,b1] x [a2,b2] with interior mask and boundary set."""

    bounds: tuple[tuple[float, float], tuple[float, float]]
    resolution: tuple[int, int]
    interior: np.ndarray
    boundary: np.ndarray
    kind: str = "masked"   # "masked" (open set with boundary) or "global"
    _coords: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    # -- constructors --------------------------------------------------
    @staticmethod
    def rectangle(bounds, resolution) -> "GridDomain":
        """Full rectangle, no boundary set (globally posed equations)."""
        n1, n2 = _check_shape(bounds, resolution)
        interior = np.ones((n1, n2), dtype=bool)
        boundary = np.zeros((n1, n2), dtype=bool)
        return GridDomain(tuple(map(tuple, bounds)), (n1, n2), interior,
                          boundary, kind="global")

    @staticmethod
    def masked(bounds, resolution, mask) -> "GridDomain":
        """Open domain from a nodewise mask (callable(x1, x2) -> bool array).

        Interior nodes are mask-true nodes off the grid edge; the boundary
        set is every other node 8-adjacent to an interior node.
        """
        n1, n2 = _check_shape(bounds, resolution)
        g = GridDomain(tuple(map(tuple, bounds)), (n1, n2),
                       np.zeros((n1, n2), bool), np.zeros((n1, n2), bool))
        X1, X2 = g.mesh()
        inside = np.asarray(mask(X1, X2), dtype=bool)
        if inside.shape != (n1, n2):
            raise InputError("mask must return one boolean per node")
        interior = inside.copy()
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        if not interior.any():
            raise InputError("empty interior: mask excludes every node")
        boundary = np.zeros_like(interior)
        for di, dj in _SHELL8:
            shifted = _shift(interior, di, dj)
            boundary |= shifted & ~interior
        g.interior, g.boundary = interior, boundary
        g._check_invariants()
        return g

    # -- geometry -------------------------------------------------------
    @property
    def spacing(self) -> tuple[float, float]:
        (a1, b1), (a2, b2) = self.bounds
        n1, n2 = self.resolution
        return ((b1 - a1) / (n1 - 1), (b2 - a2) / (n2 - 1))

    @property
    def h(self) -> float:
        """Conservative scalar spacing used in discretisation tolerances."""
        return max(self.spacing)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        (a1, b1), (a2, b2) = self.bounds
        n1, n2 = self.resolution
        return np.linspace(a1, b1, n1), np.linspace(a2, b2, n2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        if self._coords is None:
            x1, x2 = self.axes()
            self._coords = tuple(np.meshgrid(x1, x2, indexing="ij"))
        return self._coords

    def points(self) -> np.ndarray:
        """(n1, n2, 2) array of node coordinates."""
        X1, X2 = self.mesh()
        return np.stack([X1, X2], axis=-1)

    def point(self, node: tuple[int, int]) -> np.ndarray:
        X1, X2 = self.mesh()
        return np.array([X1[node], X2[node]])

    def nearest_node(self, x) -> tuple[int, int]:
        (a1, _), (a2, _) = self.bounds
        h1, h2 = self.spacing
        i = int(round((x[0] - a1) / h1))
        j = int(round((x[1] - a2) / h2))
        n1, n2 = self.resolution
        if not (0 <= i < n1 and 0 <= j < n2):
            raise InputError(f"point {x} outside the grid")
        return (i, j)

    # -- node sets --------------------------------------------------------
    @property
    def active(self) -> np.ndarray:
        """Nodes the metric graph is built on (interior plus boundary)."""
        return self.interior | self.boundary

    def boundary_nodes(self) -> list[tuple[int, int]]:
        return [tuple(t) for t in np.argwhere(self.boundary)]

    def flat(self, node: tuple[int, int]) -> int:
        return node[0] * self.resolution[1] + node[1]

    # -- invariants -------------------------------------------------------
    def _check_invariants(self) -> None:
        # boundary adjacency: every boundary node touches an interior node
        touch = np.zeros_like(self.interior)
        for di, dj in _SHELL8:
            touch |= _shift(self.interior, di, dj)
        if np.any(self.boundary & ~touch):
            raise InputError("boundary node without adjacent interior node")
        # connectivity: every interior node reaches the boundary through
        # interior nodes (BFS over the 8-neighbourhood)
        seen = self.boundary.copy()
        frontier = self.boundary.copy()
        while frontier.any():
            grown = np.zeros_like(seen)
            for di, dj in _SHELL8:
                grown |= _shift(frontier, di, dj)
            frontier = grown & self.interior & ~seen
            seen |= frontier
        if np.any(self.interior & ~seen):
            raise InputError("interior component not connected to the boundary")


def _check_shape(bounds, resolution) -> tuple[int, int]:
    bounds = tuple(map(tuple, bounds))
    if len(bounds) != 2:
        raise InputError("grid domains are 2-D: bounds must have two axes")
    for lo, hi in bounds:
        if not hi > lo:
            raise InputError("each bounds interval must be non-degenerate")
    n1, n2 = (int(r) for r in resolution)
    if n1 < 3 or n2 < 3:
        raise InputError("resolution must be at least 3 nodes per axis")
    return n1, n2


def _shift(mask: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Mask shifted by (di, dj) with False fill."""
    out = np.zeros_like(mask)
    n1, n2 = mask.shape
    si = slice(max(di, 0), n1 + min(di, 0))
    sj = slice(max(dj, 0), n2 + min(dj, 0))
    ti = slice(max(-di, 0), n1 + min(-di, 0))
    tj = slice(max(-dj, 0), n2 + min(-dj, 0))
    out[si, sj] = mask[ti, tj]
    return out
