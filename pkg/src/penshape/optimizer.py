"""Projected gradient descent on the relaxed control set with epsilon continuation.

The search direction is the gradient preconditioned by the W Gram matrix,
restricted to nodes whose E-constraint is not active. Trial points are mapped
back onto the feasible set by the pointwise clamp (and the optional ball) and
accepted by an Armijo test along the projected step.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import splu

from .density import project_to_fs
from .heaviside import Smoothing
from .objective import Evaluation, NotAdmissible, ProblemData, evaluate, sharp_state, J_sharp
from .pde import SolverError
from .shapes import extract_shape, shape_distance, validate_fs

__all__ = [
    "OptimizerConfig",
    "IterRecord",
    "OptimizerTrace",
    "PhaseResult",
    "ContinuationResult",
    "project_F",
    "minimize_fixed_eps",
    "continuation",
    "eps_schedule",
]

log = logging.getLogger(__name__)

FEAS_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 100
    c1: float = 1e-4
    shrink: float = 0.5
    growth: float = 2.0
    t_max: float = 1.0
    step_floor: float = 1e-10
    grad_tol: float = 1e-9
    ball_radius: Optional[float] = None  # r; the ball has radius r/2 around the anchor
    eps0: float = 0.1
    rho: float = 0.5
    eps_min: float = 1e-4
    certify_tol: float = 1e-2

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.c1 < 1:
            raise ValueError("armijo constant must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.growth < 1:
            raise ValueError("growth factor must be at least 1")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        for name in ("t_max", "step_floor", "grad_tol", "eps0", "eps_min", "certify_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ball_radius is not None and not self.ball_radius > 0:
            raise ValueError("ball radius must be positive")


def eps_schedule(cfg: OptimizerConfig):
    eps = []
    e = cfg.eps0
    while e >= cfg.eps_min * (1 - 1e-12):
        eps.append(e)
        e *= cfg.rho
    if not eps:
        raise ValueError("empty epsilon schedule (eps0 < eps_min)")
    return eps


def project_F(grid, g, ball=None, rounds=20):
    """Clamp to ``g <= 0`` on E, then alternate with the ball projection when given.

    ``ball`` is ``(center, radius)`` in the L2(D) norm.
    """
    g = np.array(grid.values_of(g), dtype=float, copy=True)
    e = grid.e_nodes
    g[e] = np.minimum(g[e], 0.0)
    if ball is None:
        return g
    center, radius = ball
    center = grid.values_of(center)
    for _ in range(rounds):
        v = g - center
        n = grid.norm(v)
        if n > radius:
            g = center + v * (radius / n)
        if g[e].max() <= FEAS_TOL and grid.norm(g - center) <= radius * (1 + 1e-12) + 1e-10:
            break
        g[e] = np.minimum(g[e], 0.0)
    return g


def _in_ball(grid, g, ball):
    if ball is None:
        return True
    center, radius = ball
    return grid.norm(g - grid.values_of(center)) <= radius + 1e-10


@dataclass
class IterRecord:
    eps: float
    iteration: int
    value: float
    tracking: float
    volume: float
    proximal: float
    step: float
    grad_norm: float
    stationarity: float
    dist_anchor: float
    shape_change: float
    state_iterations: int

    FIELDS = (
        "eps", "iteration", "value", "tracking", "volume", "proximal", "step",
        "grad_norm", "stationarity", "dist_anchor", "shape_change", "state_iterations",
    )

    def row(self):
        return [getattr(self, k) for k in self.FIELDS]


@dataclass
class OptimizerTrace:
    records: list = field(default_factory=list)
    stop_reason: str = ""
    next_step: float = 1.0
    g: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None

    def values(self, eps=None):
        return [r.value for r in self.records if eps is None or r.eps == eps]

    def monotone(self, eps=None) -> bool:
        v = self.values(eps)
        return all(b <= a for a, b in zip(v, v[1:]))

    def extend(self, other):
        self.records.extend(other.records)


class _Preconditioner:
    """Solves ``W_ff d_f = -grad_f`` with W restricted to the free nodes; factorizations are cached."""

    def __init__(self, grid):
        self.grid = grid
        self.W = grid.w_matrix.tocsc()
        self._cache = {}

    def direction(self, euclid_grad, fixed):
        key = fixed.tobytes()
        lu = self._cache.get(key)
        free = ~fixed.ravel()
        if lu is None:
            idx = np.flatnonzero(free)
            lu = splu(self.W[idx][:, idx].tocsc())
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = lu
        d = np.zeros(euclid_grad.size)
        d[free] = -lu.solve(euclid_grad.ravel()[free])
        return d.reshape(self.grid.shape)


def _record(grid, data, s, it, ev: Evaluation, step, g, prev_g, stationarity):
    anchor = data.anchor_or_zero()
    change = 0.0 if prev_g is None else float(sum(shape_distance(grid, prev_g, g)))
    return IterRecord(
        eps=s.eps,
        iteration=it,
        value=ev.value,
        tracking=ev.tracking,
        volume=ev.volume,
        proximal=ev.proximal,
        step=step,
        grad_norm=grid.norm(ev.gradient),
        stationarity=stationarity,
        dist_anchor=grid.norm(g - anchor),
        shape_change=change,
        state_iterations=ev.state.iterations,
    )


def minimize_fixed_eps(data: ProblemData, smoothing, g0, cfg: OptimizerConfig = OptimizerConfig(),
                       first_step=None, preconditioner=None, iteration_offset=0):
    """Projected-gradient local search on ``j_eps``; returns ``(g, trace)``.

    ``first_step`` overrides the initial trial step and ``iteration_offset``
    shifts the recorded iteration numbers; both serve to resume a run.
    """
    grid = data.grid
    s = smoothing if isinstance(smoothing, Smoothing) else Smoothing(smoothing)
    g = np.array(grid.values_of(g0), dtype=float, copy=True)
    ball = None
    if cfg.ball_radius is not None:
        ball = (data.anchor_or_zero(), 0.5 * cfg.ball_radius)
    if g[grid.e_nodes].max() > FEAS_TOL or not _in_ball(grid, g, ball):
        raise NotAdmissible("initial control is infeasible")
    pre = preconditioner or _Preconditioner(grid)
    wD = grid.weights("D")
    ev = evaluate(data, s, g, with_gradient=True)
    trace = OptimizerTrace()
    t_next = cfg.t_max if first_step is None else float(first_step)
    trace.records.append(_record(grid, data, s, iteration_offset, ev, 0.0, g, None, np.nan))
    stop = "max_iters"
    for it in range(1, cfg.max_iters + 1):
        euclid = ev.gradient * wD
        fixed = grid.e_nodes & (g >= -FEAS_TOL) & (ev.gradient < 0)
        d = pre.direction(euclid, fixed)
        stationarity = float(np.sqrt(max(-np.sum(euclid * d), 0.0)))
        trace.records[-1].stationarity = stationarity
        if stationarity <= cfg.grad_tol:
            stop = "stationary"
            break
        t = t_next
        accepted = None
        while t >= cfg.step_floor:
            trial = project_F(grid, g + t * d, ball)
            decrease = float(np.sum(euclid * (trial - g)))
            try:
                ev_t = evaluate(data, s, trial, with_gradient=False)
            except SolverError as exc:
                log.debug("trial step %.3e rejected: %s", t, exc)
                ev_t = None
            if ev_t is not None and ev_t.value <= ev.value + cfg.c1 * min(decrease, 0.0):
                accepted = (trial, ev_t)
                break
            t *= cfg.shrink
        if accepted is None:
            stop = "step_floor"
            break
        prev = g
        g = accepted[0]
        ev = evaluate(data, s, g, with_gradient=True)
        t_next = min(cfg.t_max, cfg.growth * t)
        trace.records.append(_record(grid, data, s, iteration_offset + it, ev, t, g, prev, np.nan))
    trace.stop_reason = stop
    trace.next_step = t_next
    trace.g = g
    trace.y = ev.y
    log.info("eps=%g stop=%s iterations=%d %s", s.eps, stop, len(trace.records) - 1, ev.breakdown())
    return g, trace


@dataclass
class PhaseResult:
    eps: float
    value: float
    tracking: float
    iterations: int
    stop_reason: str
    w_dist_anchor: float
    exterior_mass: float
    g: Optional[np.ndarray] = field(default=None, repr=False)
    y: Optional[np.ndarray] = field(default=None, repr=False)

    def as_dict(self):
        d = asdict(self)
        d.pop("g")
        d.pop("y")
        return d


@dataclass
class ContinuationResult:
    g: np.ndarray
    phases: list
    trace: OptimizerTrace
    certified: np.ndarray
    certification_error: float
    report: object
    mask: object
    y_sharp: np.ndarray
    J_sharp: float


def continuation(data: ProblemData, g_init, cfg: OptimizerConfig = OptimizerConfig(), certify=True,
                 start_index=0, first_step=None, iteration_offset=0):
    """Warm-started sequence of fixed-epsilon minimizations along the geometric schedule.

    ``start_index``, ``first_step`` and ``iteration_offset`` resume an
    interrupted run: the schedule starts at that phase and its first phase
    uses the persisted trial step and iteration count.
    """
    grid = data.grid
    schedule = eps_schedule(cfg)
    g = np.array(grid.values_of(g_init), dtype=float, copy=True)
    anchor = data.anchor_or_zero()
    pre = _Preconditioner(grid)
    phases = []
    full = OptimizerTrace()
    if not 0 <= start_index < len(schedule):
        raise ValueError("resume index outside the epsilon schedule")
    for k, eps in enumerate(schedule[start_index:]):
        g, tr = minimize_fixed_eps(
            data, eps, g, cfg,
            first_step=first_step if k == 0 else None,
            preconditioner=pre,
            iteration_offset=iteration_offset if k == 0 else 0,
        )
        full.extend(tr)
        full.stop_reason = tr.stop_reason
        full.next_step = tr.next_step
        last = tr.records[-1]
        outside = g > 0
        phases.append(PhaseResult(
            eps=eps,
            value=last.value,
            tracking=last.tracking,
            iterations=len(tr.records) - 1,
            stop_reason=tr.stop_reason,
            w_dist_anchor=grid.norm(g - anchor, "W") if data.anchor is not None else float("nan"),
            exterior_mass=grid.integrate(np.where(outside, tr.y**2, 0.0)),
            g=g,
            y=tr.y,
        ))
        full.y = tr.y
    full.g = g
    if not certify:
        return ContinuationResult(g, phases, full, None, float("nan"), None, None, None, float("nan"))
    report = validate_fs(grid, g)
    if report.accepted:
        certified, err = g, 0.0
    else:
        target = cfg.certify_tol * max(grid.norm(g), 1.0)
        certified, report, err = project_to_fs(grid, g, target)
    mask = extract_shape(grid, certified)
    y_sharp = sharp_state(data, certified).y
    return ContinuationResult(
        g=g,
        phases=phases,
        trace=full,
        certified=certified,
        certification_error=err,
        report=report,
        mask=mask,
        y_sharp=y_sharp,
        J_sharp=J_sharp(data, certified),
    )
