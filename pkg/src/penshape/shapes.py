"""Discrete shapes generated by shape functions.

A node belongs to the shape when ``g < 0`` strictly; nodes with ``g == 0`` and
the boundary nodes of ``D`` are outside. Components use 4-connectivity, the
adjacency of the five-point stencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Grid
from .heaviside import H

__all__ = [
    "ShapeMask",
    "FsReport",
    "extract_shape",
    "validate_fs",
    "default_tau",
    "area_via_heaviside",
    "shape_distance",
    "sign_discrepancy",
    "symmetric_difference",
    "reparametrize",
    "smoothstep",
    "boundary_curves",
    "count_components",
]

FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class ShapeMask:
    grid: Grid
    inside: np.ndarray
    component: np.ndarray
    area: float
    boundary_nodes: np.ndarray  # (k, 2) integer node indices

    @property
    def contains_e(self) -> bool:
        return bool(np.all(self.component[self.grid.e_nodes]))

    @property
    def boundary_mask(self):
        m = np.zeros(self.grid.shape, dtype=bool)
        if len(self.boundary_nodes):
            m[self.boundary_nodes[:, 0], self.boundary_nodes[:, 1]] = True
        return m

    def core(self, layers=3):
        """Component nodes at distance >= ``layers * h`` from every outside node."""
        dist = ndimage.distance_transform_edt(self.component)
        return self.component & (dist >= layers)

    def exterior(self):
        """Nodes outside the component."""
        return ~self.component

    def same_as(self, other) -> bool:
        return bool(np.array_equal(self.component, other.component))


def _boundary_of(component):
    padded = np.pad(component, 1, constant_values=False)
    all_in = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return np.argwhere(component & ~all_in)


def extract_shape(grid, g) -> ShapeMask:
    """Shape ``{g < 0}`` and its connected component containing ``E``."""
    g = grid.values_of(g)
    inside = (g < 0) & grid.interior
    labels, _ = ndimage.label(inside, structure=FOUR)
    seeds = np.unique(labels[grid.e_nodes & inside])
    seeds = seeds[seeds > 0]
    if seeds.size == 0:
        raise ValueError("E not inside shape: no observation node has g < 0")
    component = np.isin(labels, seeds)
    return ShapeMask(
        grid=grid,
        inside=inside,
        component=component,
        area=float(component.sum()) * grid.h**2,
        boundary_nodes=_boundary_of(component),
    )


def count_components(mask) -> int:
    _, n = ndimage.label(mask, structure=FOUR)
    return int(n)


@dataclass(frozen=True)
class FsReport:
    neg_on_E: bool
    positive_on_boundary: bool
    nondegenerate: bool
    max_on_E: float
    min_on_boundary: float
    min_nondegeneracy: float
    tau: float

    @property
    def accepted(self) -> bool:
        return self.neg_on_E and self.positive_on_boundary and self.nondegenerate

    def as_lines(self):
        return [f"{k}={v}" for k, v in self.__dict__.items()] + [f"accepted={self.accepted}"]


def default_tau(g) -> float:
    return 1e-8 * (1.0 + float(np.max(np.abs(g))))


def validate_fs(grid, g, tau=None) -> FsReport:
    """Check the three discrete membership conditions of admissible shape functions."""
    g = grid.values_of(g)
    if tau is None:
        tau = default_tau(g)
    if tau <= 0:
        raise ValueError("tau must be positive")
    gx, gy = grid.central_gradient(g)
    nd = np.hypot(gx, gy) + np.abs(g)
    max_e = float(g[grid.e_nodes].max())
    min_b = float(g[grid.boundary].min())
    min_nd = float(nd[grid.interior].min())
    return FsReport(
        neg_on_E=max_e < 0,
        positive_on_boundary=min_b > 0,
        nondegenerate=min_nd > tau,
        max_on_E=max_e,
        min_on_boundary=min_b,
        min_nondegeneracy=min_nd,
        tau=float(tau),
    )


def area_via_heaviside(grid, g) -> float:
    return grid.integrate(1.0 - H(grid.values_of(g)))


def sign_discrepancy(grid, h, hn) -> float:
    """Measure of ``{h > 0 and hn <= 0}``."""
    h = grid.values_of(h)
    hn = grid.values_of(hn)
    return grid.integrate(((h > 0) & (hn <= 0)).astype(float))


def shape_distance(grid, g1, g2):
    """``(mu{g1 < 0, g2 >= 0}, mu{g1 >= 0, g2 < 0})``."""
    a = grid.values_of(g1)
    b = grid.values_of(g2)
    return (
        grid.integrate(((a < 0) & (b >= 0)).astype(float)),
        grid.integrate(((a >= 0) & (b < 0)).astype(float)),
    )


def symmetric_difference(grid, mask1, mask2) -> float:
    return grid.integrate((np.asarray(mask1) ^ np.asarray(mask2)).astype(float))


def smoothstep(t):
    """Quintic ramp, 0 at t <= 0 and 1 at t >= 1, with C^2 joins."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def reparametrize(grid, g_hat, mask: ShapeMask):
    """Shape function equal to ``g_hat`` on the component and positive elsewhere.

    Adds ``-min(g_hat) * plateau`` where the plateau vanishes on the component,
    equals 2 on the other negative components and ramps smoothly in between.
    """
    g_hat = grid.values_of(g_hat)
    gmin = float(g_hat.min())
    if gmin >= 0:
        raise ValueError("g_hat has no negative values; it cannot generate a shape")
    comp = mask.component
    others = (g_hat < 0) & ~comp
    if not others.any():
        return g_hat.copy()
    d_comp = ndimage.distance_transform_edt(~comp)
    d_other = ndimage.distance_transform_edt(~others)
    plateau = 2.0 * smoothstep(d_comp / (d_comp + d_other))
    return g_hat - gmin * plateau


def boundary_curves(grid, g):
    """Zero level set of ``g`` as polylines in physical coordinates (marching squares)."""
    from skimage import measure

    g = grid.values_of(g)
    curves = []
    for c in measure.find_contours(g, 0.0):
        xy = np.column_stack([grid.extent[0] + c[:, 0] * grid.h, grid.extent[2] + c[:, 1] * grid.h])
        curves.append(xy)
    return curves
