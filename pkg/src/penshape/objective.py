"""Sharp and regularized reduced cost functionals and the adjoint gradient."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .heaviside import H_eps, H_eps_prime, Smoothing
from .nonsmooth import NonsmoothMap
from .pde import StateSolve, solve_adjoint, solve_masked, solve_state
from .shapes import area_via_heaviside, extract_shape, validate_fs

__all__ = [
    "ProblemData",
    "Evaluation",
    "NotAdmissible",
    "J_sharp",
    "sharp_state",
    "j_eps",
    "evaluate",
    "gradient_j_eps",
    "check_feasible",
    "sign_assumption_holds",
]

log = logging.getLogger(__name__)


class NotAdmissible(ValueError):
    """Control outside the set the functional is defined on."""


@dataclass
class ProblemData:
    grid: object
    f: np.ndarray
    y_d: np.ndarray
    alpha: float
    beta: NonsmoothMap
    anchor: Optional[np.ndarray] = None
    eps_source: bool = True

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        self.f = self.grid.values_of(self.f)
        self.y_d = self.grid.values_of(self.y_d)
        self.anchor = None if self.anchor is None else self.grid.values_of(self.anchor)

    def anchor_or_zero(self):
        return np.zeros(self.grid.shape) if self.anchor is None else self.anchor


def sign_assumption_holds(data: ProblemData) -> bool:
    """``f >= beta(0)`` on D with ``y_d <= 0`` on E, or both inequalities reversed."""
    b0 = data.beta.value_at_zero
    yd = data.y_d[data.grid.e_nodes]
    return bool(
        (np.all(data.f >= b0) and np.all(yd <= 0)) or (np.all(data.f <= b0) and np.all(yd >= 0))
    )


def check_feasible(grid, g, tol=0.0):
    g = grid.values_of(g)
    worst = float(g[grid.e_nodes].max())
    if worst > tol:
        raise NotAdmissible(f"control is positive on E (max {worst:.3e}); expected g <= 0 there")
    return g


def _tracking(data, y):
    return data.grid.integrate((y - data.y_d) ** 2, "E")


def sharp_state(data: ProblemData, g):
    """Masked state on the E-component of ``{g < 0}`` for an admissible ``g``."""
    grid = data.grid
    g = grid.values_of(g)
    report = validate_fs(grid, g)
    if not report.accepted:
        raise NotAdmissible("control is not an admissible shape function: " + ", ".join(report.as_lines()))
    mask = extract_shape(grid, g)
    return solve_masked(grid, data.beta, mask, data.f)


def J_sharp(data: ProblemData, g) -> float:
    solve = sharp_state(data, g)
    return _tracking(data, solve.y) + data.alpha * area_via_heaviside(data.grid, g)


@dataclass
class Evaluation:
    value: float
    tracking: float
    volume: float
    proximal: float
    state: StateSolve
    gradient: Optional[np.ndarray] = None
    adjoint: Optional[np.ndarray] = None

    @property
    def y(self):
        return self.state.y

    def breakdown(self) -> str:
        return (
            f"j={self.value:.12e} tracking={self.tracking:.12e} "
            f"volume={self.volume:.12e} proximal={self.proximal:.12e}"
        )


def evaluate(data: ProblemData, smoothing, g, with_gradient=False, y0=None) -> Evaluation:
    """Value of the regularized functional, optionally with its L2 gradient."""
    grid = data.grid
    s = smoothing if isinstance(smoothing, Smoothing) else Smoothing(smoothing)
    g = check_feasible(grid, g)
    st = solve_state(grid, data.beta, s, g, data.f, data.eps_source, y0=y0)
    diff = g - data.anchor_or_zero()
    tracking = _tracking(data, st.y)
    volume = data.alpha * grid.integrate(1.0 - H_eps(s, g))
    proximal = 0.5 * grid.inner(diff, diff, "W")
    ev = Evaluation(tracking + volume + proximal, tracking, volume, proximal, st)
    if with_gradient:
        p = solve_adjoint(grid, data.beta, s, g, st.y, data.y_d)
        dH = H_eps_prime(s, g)
        # state-coupled part lives on interior nodes only (p vanishes on the boundary)
        coupled = -dH * st.y * p / s.eps
        if data.eps_source:
            coupled = coupled + s.eps * p
        ev.gradient = coupled - data.alpha * dH + grid.w_operator(diff)
        ev.adjoint = p
    log.debug("eps=%g %s", s.eps, ev.breakdown())
    return ev


def j_eps(data: ProblemData, smoothing, g) -> float:
    return evaluate(data, smoothing, g).value


def gradient_j_eps(data: ProblemData, smoothing, g) -> np.ndarray:
    return evaluate(data, smoothing, g, with_gradient=True).gradient
