"""Monotone, locally Lipschitz nonlinearities and their Nemytskii action."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NonsmoothMap", "max0", "abs_shifted", "piecewise_linear", "smooth_reference", "beta_from_name"]

KINDS = ("max0", "abs_shifted", "piecewise_linear", "smooth_reference")


@dataclass(frozen=True)
class NonsmoothMap:
    """Continuous piecewise linear monotone map.

    Every supported kind is stored in the same normal form: sorted
    ``breakpoints`` (possibly empty), one more ``slopes`` than breakpoints and
    the value ``anchor_value`` at ``anchor`` (the first breakpoint, or 0 when
    there is none). ``kind`` is kept for reporting.
    """

    kind: str
    breakpoints: tuple
    slopes: tuple
    anchor_value: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        if len(sl) != len(bp) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if any(s < 0 for s in sl):
            raise ValueError("slopes must be nonnegative (monotone map)")
        if not all(np.isfinite(sl)) or not np.isfinite(self.anchor_value):
            raise ValueError("non-finite parameter")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)

    @property
    def anchor(self) -> float:
        return self.breakpoints[0] if self.breakpoints else 0.0

    def _knot_values(self):
        vals = [self.anchor_value]
        for k in range(1, len(self.breakpoints)):
            vals.append(vals[-1] + self.slopes[k] * (self.breakpoints[k] - self.breakpoints[k - 1]))
        return np.array(vals)

    def apply(self, y):
        """Pointwise value ``beta(y)``."""
        y = np.asarray(y, dtype=float)
        bp = np.asarray(self.breakpoints)
        sl = np.asarray(self.slopes)
        if bp.size == 0:
            return self.anchor_value + sl[0] * y
        knots = self._knot_values()
        # piece k covers [bp[k-1], bp[k]); piece 0 extends to -inf
        piece = np.searchsorted(bp, y, side="right")
        base = np.where(piece == 0, 0, piece - 1)
        return knots[base] + sl[piece] * (y - bp[base])

    __call__ = apply

    def subderivative(self, y):
        """Right derivative, an element of the Clarke subdifferential."""
        y = np.asarray(y, dtype=float)
        bp = np.asarray(self.breakpoints)
        sl = np.asarray(self.slopes)
        if bp.size == 0:
            return np.full(y.shape, sl[0])
        return sl[np.searchsorted(bp, y, side="right")]

    def lipschitz_constant(self, M: float) -> float:
        """Largest slope among the pieces meeting ``[-M, M]``."""
        if M <= 0:
            raise ValueError("M must be positive")
        lo = np.concatenate([[-np.inf], self.breakpoints])
        hi = np.concatenate([self.breakpoints, [np.inf]])
        active = (hi > -M) & (lo < M)
        return float(np.max(np.asarray(self.slopes)[active]))

    @property
    def value_at_zero(self) -> float:
        return float(self.apply(0.0))

    @property
    def max_slope(self) -> float:
        return max(self.slopes)


def max0():
    return NonsmoothMap("max0", (0.0,), (0.0, 1.0), 0.0)


def abs_shifted(shift=0.0, offset=0.0):
    """``(|y - shift| + (y - shift)) / 2 + offset``: the monotone half of ``|.|``.

    ``|.|`` itself is not monotone, so only its increasing branch is admitted.
    """
    return NonsmoothMap("abs_shifted", (float(shift),), (0.0, 1.0), float(offset))


def piecewise_linear(breakpoints, slopes, anchor_value=0.0):
    return NonsmoothMap("piecewise_linear", tuple(breakpoints), tuple(slopes), anchor_value)


def smooth_reference(c=1.0):
    """Linear map ``y -> c*y`` without kinks, for derivative checks."""
    return NonsmoothMap("smooth_reference", (), (float(c),), 0.0)


def beta_from_name(kind, params=()):
    """Build a map from a config name and parameter list.

    ``piecewise_linear`` parameters are ``[b1, ..., bk, s0, ..., sk]``
    optionally followed by the value at ``b1``.
    """
    params = [float(p) for p in params]
    if kind == "max0":
        if params:
            raise ValueError("max0 takes no parameters")
        return max0()
    if kind == "abs_shifted":
        if len(params) > 2:
            raise ValueError("abs_shifted takes [shift, offset]")
        return abs_shifted(*params)
    if kind == "smooth_reference":
        if len(params) > 1:
            raise ValueError("smooth_reference takes [c]")
        return smooth_reference(*params)
    if kind == "piecewise_linear":
        n = len(params)
        if n >= 3 and n % 2 == 1:
            k = (n - 1) // 2
            return piecewise_linear(params[:k], params[k:], 0.0)
        if n >= 4 and n % 2 == 0:
            k = (n - 2) // 2
            return piecewise_linear(params[:k], params[k:-1], params[-1])
        raise ValueError("piecewise_linear takes [breakpoints..., slopes..., (value)]")
    raise ValueError(f"unknown nonlinearity kind {kind!r}")
