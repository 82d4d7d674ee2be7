"""Constructive approximation of relaxed controls by admissible shape functions.

Three stages map a control that is merely nonpositive on ``E`` to a shape
function that is negative on ``E``, positive on the boundary of ``D`` and
nondegenerate:

1. ``clamp_and_mollify``: clamp to ``min(g, 0)`` near ``E`` and smooth with a
   bump of width ``1/m``;
2. ``boundary_lift``: add a collar of width ``1/m`` making the boundary values
   positive;
3. ``sard_shift``: shift by a small ``delta`` whose level set avoids critical
   nodes, and add a small bump outside the shifted shape.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .shapes import FsReport, default_tau, smoothstep, validate_fs

__all__ = [
    "Mollifier",
    "ShiftError",
    "PipelineStep",
    "observation_neighborhood",
    "clamp_and_mollify",
    "boundary_lift",
    "choose_shift",
    "sard_shift",
    "pipeline_step",
    "density_sequence",
    "project_to_fs",
    "scales_for",
]

log = logging.getLogger(__name__)


class ShiftError(ValueError):
    """No admissible level-set shift was found."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


@dataclass(frozen=True)
class Mollifier:
    """Product bump ``(1 - s1^2)^3 (1 - s2^2)^3`` scaled to width ``1/m``.

    The separable 1D weights are normalized on the grid so the 2D discrete mass
    is exactly one.
    """

    m: int
    h: float

    @property
    def half_width(self) -> int:
        return int(np.floor(1.0 / (self.m * self.h) + 1e-12))

    @property
    def weights1d(self):
        k = np.arange(-self.half_width, self.half_width + 1)
        s = k * self.h * self.m
        w = np.clip(1.0 - s * s, 0.0, None) ** 3
        if w.sum() == 0:
            w = (k == 0).astype(float)
        return w / w.sum()

    @property
    def kernel(self):
        w = self.weights1d
        return np.outer(w, w)

    def density(self):
        """Kernel values as a density: ``sum(density) * h^2 == 1``."""
        return self.kernel / self.h**2

    def apply(self, values):
        w = self.weights1d
        out = ndimage.convolve1d(values, w, axis=0, mode="constant", cval=0.0)
        return ndimage.convolve1d(out, w, axis=1, mode="constant", cval=0.0)


def _check_scale(grid, m):
    if m < 1:
        raise ValueError("scale index m must be a positive integer")
    if 1.0 / m >= grid.e_boundary_gap:
        raise ValueError(
            f"1/m = {1.0 / m:.4g} is not below the E-to-boundary gap {grid.e_boundary_gap:.4g}"
        )


def observation_neighborhood(grid, m):
    """Nodes within max-norm distance ``1/m`` of the E nodes."""
    steps = ndimage.distance_transform_cdt(~grid.e_nodes, metric="chessboard")
    return steps * grid.h <= 1.0 / m + 1e-12


def clamp_and_mollify(grid, g, m):
    g = grid.values_of(g)
    _check_scale(grid, m)
    if np.any(g[grid.e_nodes] > 0):
        raise ValueError("control is positive somewhere on E")
    near = observation_neighborhood(grid, m)
    clamped = np.where(near, np.minimum(g, 0.0), g)
    return Mollifier(m, grid.h).apply(clamped)


def boundary_lift(grid, g, m):
    g = grid.values_of(g)
    _check_scale(grid, m)
    amp = -2.0 * min(float(g[grid.boundary].min()), 0.0) + 1.0 / m
    collar = amp * (1.0 - smoothstep(grid.boundary_distance * m))
    return g + collar


def _shift_band(g, delta, tol):
    d = g - delta
    lo = ndimage.minimum_filter(d, size=3, mode="nearest")
    hi = ndimage.maximum_filter(d, size=3, mode="nearest")
    return ((lo <= 0) & (hi >= 0)) | (np.abs(d) <= tol)


def choose_shift(grid, g, m, delta_prev=None, rng=None, retries=50):
    """Pick ``delta`` in ``(0, min(delta_prev, 1/m, min_boundary g))`` with a regular level set.

    The level set ``{g = delta}`` is regular when every node whose 3x3
    neighbourhood straddles it has a central-difference gradient above a
    threshold. The first trial is the midpoint of the admissible interval,
    later trials are drawn uniformly from its middle 80%.
    """
    g = grid.values_of(g)
    min_b = float(g[grid.boundary].min())
    if min_b <= 0:
        raise ValueError("control is not positive on the boundary of D")
    upper = min(1.0 / m, min_b, np.inf if delta_prev is None else delta_prev)
    gx, gy = grid.central_gradient(g)
    grad = np.hypot(gx, gy)
    tau = 1e-6 * (1.0 + float(np.abs(g).max()) + float(grad.max()))
    rng = np.random.default_rng(0) if rng is None else rng
    worst = {}
    for attempt in range(retries):
        u = 0.5 if attempt == 0 else rng.uniform(0.1, 0.9)
        delta = upper * u
        band = _shift_band(g, delta, tau) & grid.interior
        bad = band & (grad < tau)
        if not bad.any():
            return delta
        worst = {"delta": delta, "critical_nodes": int(bad.sum()), "band_nodes": int(band.sum()),
                 "tau": tau}
    raise ShiftError(f"no regular level-set shift found after {retries} trials", worst)


def sard_shift(grid, g, m, delta=None, delta_prev=None, rng=None):
    """``g - delta + f_m / m`` with ``f_m`` in (0, 1] where ``g > delta`` and 0 elsewhere."""
    g = grid.values_of(g)
    if np.any(g[grid.e_nodes] > 0):
        raise ValueError("control is positive somewhere on E")
    if delta is None:
        delta = choose_shift(grid, g, m, delta_prev, rng)
    top = float(g.max()) - delta
    bump = smoothstep((g - delta) / top) if top > 0 else np.zeros_like(g)
    return g - delta + bump / m


@dataclass
class PipelineStep:
    m: int
    g: np.ndarray
    delta: float
    error: float
    report: FsReport


def pipeline_step(grid, g, m, delta_prev=None, rng=None) -> PipelineStep:
    g = grid.values_of(g)
    g1 = clamp_and_mollify(grid, g, m)
    g2 = boundary_lift(grid, g1, m)
    delta = choose_shift(grid, g2, m, delta_prev, rng)
    g3 = sard_shift(grid, g2, m, delta=delta)
    return PipelineStep(
        m=m,
        g=g3,
        delta=delta,
        error=grid.norm(g3 - g, "L2_D"),
        report=validate_fs(grid, g3, default_tau(g3)),
    )


def density_sequence(grid, g, ms, rng=None):
    """Run the pipeline at each scale in ``ms``, passing the shift sequence along."""
    steps = []
    delta = None
    for m in ms:
        step = pipeline_step(grid, g, m, delta, rng)
        delta = step.delta
        steps.append(step)
    return steps


def scales_for(grid, start=4):
    """Doubling scales from the first admissible one up to the mesh resolution."""
    m = max(start, int(np.floor(1.0 / grid.e_boundary_gap)) + 1)
    ms = []
    while m <= grid.nx - 1:
        ms.append(m)
        m *= 2
    return ms


def project_to_fs(grid, g, target_err, rng=None, start=4):
    """Admissible shape function within ``target_err`` (L2) of ``g`` when attainable.

    Returns ``(g_fs, report, achieved_error)``. An input that already passes
    the validator is returned unchanged; otherwise, when no scale reaches the
    target, the best accepted attempt is returned.
    """
    g = grid.values_of(g)
    report = validate_fs(grid, g, default_tau(g))
    if report.accepted:
        # already admissible: it is its own best approximation
        return g.copy(), report, 0.0
    ms = scales_for(grid, start)
    if not ms:
        raise ValueError("grid too coarse for any admissible mollification scale")
    best = None
    delta = None
    for m in ms:
        try:
            step = pipeline_step(grid, g, m, delta, rng)
        except ShiftError as exc:
            log.debug("scale m=%d rejected: %s", m, exc)
            continue
        delta = step.delta
        if step.report.accepted and (best is None or step.error < best.error):
            best = step
        if best is not None and best.error <= target_err:
            break
    if best is None:
        raise ValueError("no scale produced an admissible shape function")
    return best.g, best.report, best.error
