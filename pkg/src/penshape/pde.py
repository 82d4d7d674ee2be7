"""Five-point finite-difference solvers for the penalized and the masked state equations.

The penalized state equation on the whole holdall domain reads

    -Lap y + beta(y) + H_eps(g) / eps * y = f + eps * g,   y = 0 on the boundary,

and the reference equation on a shape ``Omega`` is ``-Lap y + beta(y) = f`` with
``y = 0`` on every node outside ``Omega``. Both are solved by a damped
semismooth Newton iteration with a monotone Picard fallback.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .heaviside import H_eps, Smoothing
from .shapes import ShapeMask

__all__ = [
    "SolverError",
    "StateSolve",
    "MaskedSolve",
    "laplacian",
    "penalty_coefficient",
    "state_rhs",
    "solve_state",
    "solve_masked",
    "linearized_operator",
    "solve_linearized",
    "solve_adjoint",
    "state_norms",
    "BoundReport",
    "apriori_bound_check",
    "lipschitz_estimate",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


class SolverError(RuntimeError):
    """Nonlinear or linear solve failed; ``history`` holds the residual norms."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass
class StateSolve:
    y: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    method: str = "newton"

    def as_lines(self):
        return [
            f"iterations={self.iterations}",
            f"residual={self.residual:.6e}",
            f"method={self.method}",
            f"max_abs_y={float(np.max(np.abs(self.y))):.17g}",
        ]


@dataclass
class MaskedSolve:
    y: np.ndarray
    mask: ShapeMask
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def laplacian(grid, active):
    """Five-point ``-Lap`` restricted to the ``active`` nodes (zero elsewhere)."""
    nx, ny = grid.shape

    def second_difference(n):
        return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])

    full = (
        sp.kron(second_difference(nx), sp.identity(ny))
        + sp.kron(sp.identity(nx), second_difference(ny))
    ).tocsr() / grid.h**2
    idx = np.flatnonzero(np.asarray(active).ravel())
    return full[idx][:, idx].tocsc()


def penalty_coefficient(smoothing, g):
    s = smoothing if isinstance(smoothing, Smoothing) else Smoothing(smoothing)
    return H_eps(s, g) / s.eps


def state_rhs(smoothing, g, f, eps_source=True):
    s = smoothing if isinstance(smoothing, Smoothing) else Smoothing(smoothing)
    return f + s.eps * g if eps_source else np.array(f, dtype=float, copy=True)


def _l2(grid, r):
    # interior nodes carry the weight h^2
    return grid.h * float(np.linalg.norm(r))


def _semilinear_solve(grid, beta, active, coeff, rhs, tol, max_iter, y0=None):
    """Solve ``A y + beta(y) + coeff*y = rhs`` on the active nodes."""
    A = laplacian(grid, active)
    sel = np.asarray(active).ravel()
    c = np.asarray(coeff, dtype=float).ravel()[sel]
    r = np.asarray(rhs, dtype=float).ravel()[sel]
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(r))):
        raise SolverError("non-finite coefficient or right-hand side")
    y = np.zeros_like(r) if y0 is None else np.asarray(y0, dtype=float).ravel()[sel].copy()
    target = tol * (1.0 + _l2(grid, r))

    def residual(v):
        return A @ v + beta.apply(v) + c * v - r

    F = residual(y)
    res = _l2(grid, F)
    history = [res]
    it = 0
    method = "newton"
    while res > target:
        if it >= max_iter:
            raise SolverError(f"no convergence after {max_iter} iterations (residual {res:.3e})", history)
        it += 1
        if method == "newton":
            J = A + sp.diags(beta.subderivative(y) + c)
            dy = spsolve(J.tocsc(), -F)
            t = 1.0
            while True:
                trial = y + t * dy
                Ft = residual(trial)
                rt = _l2(grid, Ft)
                if rt <= (1.0 - 1e-4 * t) * res or rt <= target:
                    break
                t *= 0.5
                if t < 1e-4:
                    break
            if t < 1e-4:
                log.debug("newton line search stalled at residual %.3e; switching to picard", res)
                method = "picard"
                continue
        else:
            L = beta.max_slope
            M = (A + sp.diags(c + L)).tocsc()
            trial = spsolve(M, r - beta.apply(y) + L * y)
            Ft = residual(trial)
            rt = _l2(grid, Ft)
        if not np.all(np.isfinite(trial)):
            raise SolverError("NaN encountered in state iterate", history)
        y, F, res = trial, Ft, rt
        history.append(res)
    out = np.zeros(grid.shape)
    out.ravel()[sel] = y
    return out, it, res, history, method


def solve_state(grid, beta, smoothing, g, f, eps_source=True, tol=DEFAULT_TOL,
                max_iter=DEFAULT_MAX_ITER, y0=None) -> StateSolve:
    """Penalized fixed-domain state for the control ``g``."""
    g = grid.values_of(g)
    f = grid.values_of(f)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(f))):
        raise SolverError("non-finite control or source")
    coeff = penalty_coefficient(smoothing, g)
    rhs = state_rhs(smoothing, g, f, eps_source)
    y, it, res, hist, method = _semilinear_solve(
        grid, beta, grid.interior, coeff, rhs, tol, max_iter, y0
    )
    return StateSolve(y=y, iterations=it, residual=res, history=hist, method=method)


def solve_masked(grid, beta, mask: ShapeMask, f, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> MaskedSolve:
    """State on the shape component; every node outside it carries the zero boundary value."""
    if not mask.contains_e:
        raise ValueError("shape component does not contain E")
    f = grid.values_of(f)
    y, it, res, hist, _ = _semilinear_solve(
        grid, beta, mask.component, np.zeros(grid.shape), f, tol, max_iter
    )
    return MaskedSolve(y=y, mask=mask, iterations=it, residual=res, history=hist)


def linearized_operator(grid, beta, smoothing, g, y):
    """``-Lap + beta'(y) + H_eps(g)/eps`` on the interior nodes (symmetric, M-matrix)."""
    sel = grid.interior.ravel()
    c = penalty_coefficient(smoothing, grid.values_of(g)).ravel()[sel]
    d = beta.subderivative(grid.values_of(y).ravel()[sel])
    return (laplacian(grid, grid.interior) + sp.diags(c + d)).tocsc()


def solve_linearized(grid, beta, smoothing, g, y, rhs):
    """Solve the linearized state operator with a nodal right-hand side."""
    sel = grid.interior.ravel()
    J = linearized_operator(grid, beta, smoothing, g, y)
    b = grid.values_of(rhs).ravel()[sel]
    p = spsolve(J, b)
    if not np.all(np.isfinite(p)):
        raise SolverError("linearized solve produced non-finite values")
    # relative backward error of the direct solve
    scale = np.linalg.norm(b) + abs(J).max() * np.linalg.norm(p)
    if np.linalg.norm(J @ p - b) > 1e-12 * scale:
        raise SolverError("linearized solve did not reach tolerance")
    out = np.zeros(grid.shape)
    out.ravel()[sel] = p
    return out


def observation_indicator(grid):
    """Discrete ``chi_E``: the E-quadrature weight of each node divided by ``h^2``."""
    return grid.weights("E") / grid.h**2


def solve_adjoint(grid, beta, smoothing, g, y, y_d):
    """Adjoint state ``p`` with right-hand side ``2 (y - y_d) chi_E``."""
    rhs = 2.0 * (grid.values_of(y) - grid.values_of(y_d)) * observation_indicator(grid)
    return solve_linearized(grid, beta, smoothing, g, y, rhs)


def state_norms(grid, y):
    y = grid.values_of(y)
    return {"h1": grid.norm(y, "H1_D"), "sup": float(np.max(np.abs(y)))}


@dataclass
class BoundReport:
    c1: float
    c2: float
    control_norms: np.ndarray
    state_norms: np.ndarray
    holds: bool

    def bound(self, gnorm):
        return self.c1 + self.c2 * gnorm


def apriori_bound_check(grid, solves, controls, which="h1") -> BoundReport:
    """Fit the affine envelope ``|y| <= c1 + c2 |g|_L2`` over a batch of solves.

    The slope comes from a least-squares fit (clipped at zero); the intercept
    is then raised until every sample lies below the envelope. A monitoring
    diagnostic only.
    """
    gn = np.array([grid.norm(g, "L2_D") for g in controls])
    yn = np.array([state_norms(grid, s.y if hasattr(s, "y") else s)[which] for s in solves])
    if gn.size == 0:
        raise ValueError("empty batch")
    if np.ptp(gn) <= 1e-14 * (1.0 + gn.max()):
        c2 = 0.0
    else:
        c2 = max(float(np.polyfit(gn, yn, 1)[0]), 0.0)
    c1 = float(np.max(yn - c2 * gn))
    return BoundReport(c1=c1, c2=c2, control_norms=gn, state_norms=yn,
                       holds=bool(np.all(yn <= c1 + c2 * gn + 1e-12)))


def lipschitz_estimate(grid, beta, smoothing, f, pairs, eps_source=True):
    """Largest observed ``|S(g1) - S(g2)|_H1 / |g1 - g2|_L2`` over control pairs."""
    ratios = []
    for g1, g2 in pairs:
        y1 = solve_state(grid, beta, smoothing, g1, f, eps_source).y
        y2 = solve_state(grid, beta, smoothing, g2, f, eps_source).y
        den = grid.norm(np.asarray(g1) - np.asarray(g2), "L2_D")
        if den > 0:
            ratios.append(grid.norm(y1 - y2, "H1_D") / den)
    return max(ratios) if ratios else 0.0
