"""Uniform Cartesian grids on the holdall domain, quadrature and discrete norms.

Nodal arrays are indexed ``values[i, j]`` with ``i`` along x and ``j`` along y.
Quadrature is cell based: a cell contributes ``h**2`` times the mean of its
four corner values, which is the composite trapezoid rule on the full grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "RectRegion",
    "DiskRegion",
    "Grid",
    "Field",
    "unit_square",
]


@dataclass(frozen=True)
class RectRegion:
    """Closed axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, x, y, tol=1e-12):
        return (
            (x >= self.x0 - tol)
            & (x <= self.x1 + tol)
            & (y >= self.y0 - tol)
            & (y <= self.y1 + tol)
        )


@dataclass(frozen=True)
class DiskRegion:
    """Closed disk of radius ``r`` around ``(cx, cy)``."""

    cx: float
    cy: float
    r: float

    def contains(self, x, y, tol=1e-12):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= (self.r + tol) ** 2


Region = Union[RectRegion, DiskRegion]


@dataclass(frozen=True, eq=False)
class Grid:
    """Node grid on a rectangle ``D`` with an observation region ``E`` inside.

    Parameters
    ----------
    nx, ny : int
        Node counts per axis (both >= 5).
    extent : tuple
        ``(x0, x1, y0, y1)``; the mesh width must agree on both axes.
    e_region : RectRegion or DiskRegion
        Observation set. Every node of ``E`` must lie at least ``2h`` away
        from the boundary of ``D``.
    """

    nx: int
    ny: int
    extent: tuple = (0.0, 1.0, 0.0, 1.0)
    e_region: Region = field(default_factory=lambda: RectRegion(0.4, 0.6, 0.4, 0.6))

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ValueError(f"grid too coarse: {self.nx}x{self.ny}")
        x0, x1, y0, y1 = self.extent
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate extent {self.extent}")
        hx = (x1 - x0) / (self.nx - 1)
        hy = (y1 - y0) / (self.ny - 1)
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"mesh width differs per axis: hx={hx}, hy={hy}")
        if not self.e_nodes.any():
            raise ValueError("observation region contains no grid node")
        gap = self.boundary_distance[self.e_nodes].min()
        if gap < 2 * self.h - 1e-12:
            raise ValueError(
                f"observation region too close to the boundary: {gap:.3g} < 2h"
            )

    # identity semantics are not useful for grids; compare geometry instead
    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and tuple(self.extent) == tuple(other.extent)
            and self.e_region == other.e_region
        )

    def __hash__(self):
        return hash((self.nx, self.ny, tuple(self.extent), self.e_region))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def cell_shape(self):
        return (self.nx - 1, self.ny - 1)

    @cached_property
    def h(self) -> float:
        return (self.extent[1] - self.extent[0]) / (self.nx - 1)

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.extent
        return (x1 - x0) * (y1 - y0)

    @cached_property
    def x(self):
        return np.linspace(self.extent[0], self.extent[1], self.nx)

    @cached_property
    def y(self):
        return np.linspace(self.extent[2], self.extent[3], self.ny)

    @cached_property
    def X(self):
        return np.meshgrid(self.x, self.y, indexing="ij")[0]

    @cached_property
    def Y(self):
        return np.meshgrid(self.x, self.y, indexing="ij")[1]

    @cached_property
    def cell_centers(self):
        xc = 0.5 * (self.x[1:] + self.x[:-1])
        yc = 0.5 * (self.y[1:] + self.y[:-1])
        return np.meshgrid(xc, yc, indexing="ij")

    @cached_property
    def boundary(self):
        """Node mask of the boundary of ``D``."""
        b = np.zeros(self.shape, dtype=bool)
        b[0, :] = b[-1, :] = b[:, 0] = b[:, -1] = True
        return b

    @property
    def interior(self):
        return ~self.boundary

    @cached_property
    def boundary_distance(self):
        """Euclidean distance of every node to the boundary of ``D``."""
        x0, x1, y0, y1 = self.extent
        X, Y = self.X, self.Y
        return np.minimum(np.minimum(X - x0, x1 - X), np.minimum(Y - y0, y1 - Y))

    @cached_property
    def e_nodes(self):
        return self.e_region.contains(self.X, self.Y)

    @cached_property
    def e_cells(self):
        xc, yc = self.cell_centers
        return self.e_region.contains(xc, yc)

    @cached_property
    def e_boundary_gap(self) -> float:
        """Distance between the E nodes and the boundary of ``D``."""
        return float(self.boundary_distance[self.e_nodes].min())

    # -- quadrature -------------------------------------------------------

    def cell_to_node_weights(self, cells):
        """Nodal quadrature weights of the cell set ``cells``."""
        c = np.asarray(cells, dtype=float)
        w = np.zeros(self.shape)
        w[:-1, :-1] += c
        w[1:, :-1] += c
        w[:-1, 1:] += c
        w[1:, 1:] += c
        return w * (self.h**2 / 4.0)

    @cached_property
    def _weights_d(self):
        return self.cell_to_node_weights(np.ones(self.cell_shape, dtype=bool))

    @cached_property
    def _weights_e(self):
        return self.cell_to_node_weights(self.e_cells)

    @cached_property
    def _weights_out(self):
        return self.cell_to_node_weights(~self.e_cells)

    def weights(self, region="D"):
        """Nodal weights ``w`` with ``integrate(v, region) == sum(w * v)``.

        ``region`` is ``"D"``, ``"E"``, ``"D\\E"`` or a boolean mask. A mask of
        cell shape selects cells directly; a mask of node shape restricts the
        trapezoid weights of ``D`` to the selected nodes.
        """
        if isinstance(region, str):
            if region == "D":
                return self._weights_d
            if region == "E":
                return self._weights_e
            if region in ("D\\E", "D-E", "out"):
                return self._weights_out
            raise ValueError(f"unknown region {region!r}")
        mask = np.asarray(region, dtype=bool)
        if mask.shape == self.cell_shape:
            return self.cell_to_node_weights(mask)
        if mask.shape == self.shape:
            return np.where(mask, self._weights_d, 0.0)
        raise ValueError(f"mask shape {mask.shape} does not fit grid {self.shape}")

    def integrate(self, values, region="D") -> float:
        v = self.values_of(values)
        return float(np.sum(self.weights(region) * v))

    def values_of(self, values):
        """Return the nodal array of ``values``, checking it belongs to this grid."""
        if isinstance(values, Field):
            if values.grid != self:
                raise ValueError("field lives on a different grid")
            return values.values
        v = np.asarray(values, dtype=float)
        if v.ndim == 0:
            return np.full(self.shape, float(v))
        if v.shape != self.shape:
            raise ValueError(f"array shape {v.shape} does not match grid {self.shape}")
        return v

    # -- difference operators ---------------------------------------------

    @cached_property
    def _dx(self):
        """Edge differences along x, shape ((nx-1)*ny, nx*ny), scaled by 1/h."""
        n = self.nx * self.ny
        idx = np.arange(n).reshape(self.shape)
        a, b = idx[:-1, :].ravel(), idx[1:, :].ravel()
        m = a.size
        rows = np.concatenate([np.arange(m), np.arange(m)])
        data = np.concatenate([-np.ones(m), np.ones(m)]) / self.h
        return sp.csr_matrix((data, (rows, np.concatenate([a, b]))), shape=(m, n))

    @cached_property
    def _dy(self):
        n = self.nx * self.ny
        idx = np.arange(n).reshape(self.shape)
        a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
        m = a.size
        rows = np.concatenate([np.arange(m), np.arange(m)])
        data = np.concatenate([-np.ones(m), np.ones(m)]) / self.h
        return sp.csr_matrix((data, (rows, np.concatenate([a, b]))), shape=(m, n))

    def _edge_weights(self, cells):
        c = np.asarray(cells, dtype=float)
        h2 = self.h**2
        # x-edge (i,j)-(i+1,j) touches cells (i,j-1) and (i,j)
        ex = np.zeros((self.nx - 1, self.ny))
        ex[:, :-1] += c
        ex[:, 1:] += c
        ey = np.zeros((self.nx, self.ny - 1))
        ey[:-1, :] += c
        ey[1:, :] += c
        return 0.5 * h2 * ex.ravel(), 0.5 * h2 * ey.ravel()

    def _second_difference_ops(self):
        n = self.nx * self.ny
        idx = np.arange(n).reshape(self.shape)
        inv = 1.0 / self.h**2

        def three_point(center, minus, plus):
            m = center.size
            rows = np.tile(np.arange(m), 3)
            cols = np.concatenate([minus, center, plus])
            data = np.concatenate([np.ones(m), -2 * np.ones(m), np.ones(m)]) * inv
            return sp.csr_matrix((data, (rows, cols)), shape=(m, n))

        dxx = three_point(idx[1:-1, :].ravel(), idx[:-2, :].ravel(), idx[2:, :].ravel())
        dyy = three_point(idx[:, 1:-1].ravel(), idx[:, :-2].ravel(), idx[:, 2:].ravel())
        m = (self.nx - 1) * (self.ny - 1)
        rows = np.tile(np.arange(m), 4)
        cols = np.concatenate(
            [
                idx[1:, 1:].ravel(),
                idx[:-1, :-1].ravel(),
                idx[1:, :-1].ravel(),
                idx[:-1, 1:].ravel(),
            ]
        )
        data = np.concatenate([np.ones(m), np.ones(m), -np.ones(m), -np.ones(m)]) * inv
        dxy = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
        return dxx, dyy, dxy

    def mass_matrix(self, region="D"):
        return sp.diags(self.weights(region).ravel())

    def h1_seminorm_matrix(self, cells=None):
        """Gram matrix of the discrete Dirichlet form over a cell set."""
        if cells is None:
            cells = np.ones(self.cell_shape, dtype=bool)
        wx, wy = self._edge_weights(cells)
        return (self._dx.T @ sp.diags(wx) @ self._dx + self._dy.T @ sp.diags(wy) @ self._dy).tocsr()

    def h2_seminorm_matrix(self, cells=None):
        """Gram matrix of ``int u_xx^2 + 2 u_xy^2 + u_yy^2`` over a cell set."""
        if cells is None:
            cells = np.ones(self.cell_shape, dtype=bool)
        dxx, dyy, dxy = self._second_difference_ops()
        wn = self.cell_to_node_weights(cells)
        wxx = wn[1:-1, :].ravel()
        wyy = wn[:, 1:-1].ravel()
        wxy = 2.0 * self.h**2 * np.asarray(cells, dtype=float).ravel()
        return (
            dxx.T @ sp.diags(wxx) @ dxx
            + dyy.T @ sp.diags(wyy) @ dyy
            + dxy.T @ sp.diags(wxy) @ dxy
        ).tocsr()

    @cached_property
    def w_matrix(self):
        """Gram matrix of the W inner product: L2 on D plus H2 on D minus E."""
        out = ~self.e_cells
        return (
            self.mass_matrix("D")
            + self.mass_matrix(out)
            + self.h1_seminorm_matrix(out)
            + self.h2_seminorm_matrix(out)
        ).tocsr()

    @cached_property
    def h1_matrix(self):
        return (self.mass_matrix("D") + self.h1_seminorm_matrix()).tocsr()

    def gram(self, kind):
        if kind == "L2_D":
            return self.mass_matrix("D")
        if kind == "L2_E":
            return self.mass_matrix("E")
        if kind == "H1_D":
            return self.h1_matrix
        if kind == "W":
            return self.w_matrix
        raise ValueError(f"unknown norm kind {kind!r}")

    def inner(self, u, v, kind="L2_D") -> float:
        a = self.values_of(u).ravel()
        b = self.values_of(v).ravel()
        if kind in ("L2_D", "L2_E"):
            w = self.weights("D" if kind == "L2_D" else "E").ravel()
            return float(np.dot(w * a, b))
        return float(a @ (self.gram(kind) @ b))

    def norm(self, values, kind="L2_D") -> float:
        return float(np.sqrt(max(self.inner(values, values, kind), 0.0)))

    def w_operator(self, values):
        """Riesz representer of the W inner product in the discrete L2 metric."""
        v = self.values_of(values).ravel()
        return (self.w_matrix @ v / self._weights_d.ravel()).reshape(self.shape)

    def central_gradient(self, values):
        """Central-difference gradient (one-sided on the boundary of ``D``)."""
        v = self.values_of(values)
        gx, gy = np.gradient(v, self.h, self.h, edge_order=2)
        return gx, gy

    def field(self, values):
        return Field(self, self.values_of(values).copy())


def unit_square(n, e_region=None):
    """Grid with ``n x n`` nodes on the unit square."""
    if e_region is None:
        return Grid(n, n)
    return Grid(n, n, e_region=e_region)


@dataclass(frozen=True, eq=False)
class Field:
    """Grid-sampled scalar function; values must be finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
