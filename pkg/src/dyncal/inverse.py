"""Quadratic inverse prediction and the per-time calibration posterior.

Inversion solves, in scaled units,

    b2 x^2 + b1 x + (ybar - y0 - b1*x_bar - b2*x2_bar) = 0

and picks the root on the monotone branch of the restricted calibration
domain.  Root computation uses the cancellation-safe q-form.

Two posterior constructions are provided.  ``posterior_x0`` is the closed
form exactly as published,

    mu = x_hat / (1 + tr(Q)),   sigma2 = 1 / (1 + tr(Q)),

which treats the forecast trace as if it were already an x-scale variance.
``matched_posterior`` converts the forecast variance to the x scale through
the local slope before completing the square,

    s2 = tr(Q) / g'(x_hat)^2,   mu = x_hat / (1 + s2),   sigma2 = s2 / (1 + s2),

which is the construction whose widths actually track the observation noise
(and is the pipeline default).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCovariance, NoRealRoot, RootOutsideDomain, ShapeError
from .model import RegressionState

# Below this (relative) curvature the quadratic term is numerically noise and
# the linear inversion is used instead.
LINEAR_FALLBACK_REL = 1e-12


@dataclass(frozen=True)
class InversionContext:
    """Everything needed to invert one second-stage observation at time t."""

    beta: RegressionState
    y0: float
    y_bar: float
    x_bar: float
    x2_bar: float
    domain: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ShapeError(f"domain must satisfy lo < hi, got {self.domain}")


def _quadratic_roots(b2: float, b1: float, c: float) -> tuple[float, float]:
    """Both real roots of b2 x^2 + b1 x + c = 0, cancellation-safe.

    Assumes a nonnegative discriminant and b2 != 0.
    """
    disc = b1 * b1 - 4.0 * b2 * c
    sq = math.sqrt(max(disc, 0.0))
    if b1 >= 0:
        q = -0.5 * (b1 + sq)
    else:
        q = -0.5 * (b1 - sq)
    if q == 0.0:
        # b1 == 0 and disc == 0: double root at the origin shift.
        return 0.0, 0.0
    r1 = q / b2
    r2 = c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def invert_quadratic(ctx: InversionContext) -> float:
    """Invert the reduced second-stage model for the unknown reference.

    Returns the branch-selected root in scaled units.  Raises NoRealRoot when
    the observation lies beyond the parabola's extremum (the exception carries
    the vertex abscissa).  If both roots fall outside the domain a
    RootOutsideDomain warning is issued and the branch-consistent root is
    still returned; the caller may clamp or flag.
    """
    b0, b1, b2 = ctx.beta.beta
    lo, hi = ctx.domain
    c = ctx.y_bar - ctx.y0 - b1 * ctx.x_bar - b2 * ctx.x2_bar

    if abs(b2) < LINEAR_FALLBACK_REL * max(1.0, abs(b1)):
        if b1 == 0.0:
            raise NoRealRoot("curve is flat: no informative inverse", vertex=None)
        return -c / b1

    disc = b1 * b1 - 4.0 * b2 * c
    vertex = -b1 / (2.0 * b2)
    if disc < 0.0:
        raise NoRealRoot(
            f"response {ctx.y0} lies beyond the parabola extremum", vertex=vertex)

    r_low, r_high = _quadratic_roots(b2, b1, c)
    mid = 0.5 * (lo + hi)
    branch_sign = math.copysign(1.0, b1 + 2.0 * b2 * mid)

    def on_branch(x: float) -> bool:
        deriv = b1 + 2.0 * b2 * x
        return deriv == 0.0 or math.copysign(1.0, deriv) == branch_sign

    inside = [x for x in (r_low, r_high) if lo <= x <= hi]
    if len(inside) == 1:
        return inside[0]
    if len(inside) == 2:
        matching = [x for x in inside if on_branch(x)]
        if len(matching) == 1:
            return matching[0]
        return min(inside)

    # Neither root is usable as-is; keep the branch-consistent one and warn.
    warnings.warn(
        f"both roots ({r_low:.6g}, {r_high:.6g}) outside domain [{lo:.6g}, {hi:.6g}]",
        RootOutsideDomain, stacklevel=2)
    matching = [x for x in (r_low, r_high) if on_branch(x)]
    if len(matching) == 1:
        return matching[0]
    return r_low


def branch_support(beta, domain: tuple[float, float]) -> tuple[float, float]:
    """Interval of the domain on the selected monotone branch.

    The posterior over the unknown is restricted to this interval: values on
    the far side of the vertex are indistinguishable mirror images and values
    outside the reference range are uncalibrated extrapolation.  The branch
    is the one containing the domain midpoint, so the result is never empty.
    """
    b0, b1, b2 = np.asarray(beta, dtype=float)
    lo, hi = domain
    if b2 == 0.0:
        return lo, hi
    vertex = -b1 / (2.0 * b2)
    mid = 0.5 * (lo + hi)
    # The derivative is linear with its zero at the vertex, so the monotone
    # branch through the midpoint is everything on the midpoint's side of it.
    if mid <= vertex:
        return lo, min(hi, vertex)
    return max(lo, vertex), hi


def posterior_x0(x_hat: float, Q) -> tuple[float, float]:
    """Closed-form posterior moments as published.

    Q is the r x r one-step forecast covariance (a scalar trace is also
    accepted); only its trace enters.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 2:
        tr = float(np.trace(Q))
    elif Q.ndim == 0:
        tr = float(Q)
    else:
        raise InvalidCovariance(f"Q must be a matrix or scalar trace, got ndim={Q.ndim}")
    if tr < 0.0:
        raise InvalidCovariance(f"forecast covariance has negative trace {tr:.3e}")
    denom = 1.0 + tr
    return x_hat / denom, 1.0 / denom


# Variance floor keeping degenerate zero-noise posteriors drawable.
_SIGMA2_FLOOR = 1e-300


def matched_posterior(x_hat: float, q_trace: float, slope: float
                      ) -> tuple[float, float]:
    """Posterior moments with the forecast variance mapped to the x scale.

    ``slope`` is the curve derivative at the root, in scaled units.  At a
    vanishing slope (vertex) the data carry no information about the unknown
    and the standard-normal prior is returned unchanged.
    """
    if q_trace < 0.0:
        raise InvalidCovariance(f"forecast trace must be nonnegative, got {q_trace}")
    g2 = slope * slope
    if g2 <= 0.0 or not np.isfinite(g2):
        return 0.0, 1.0
    s2 = q_trace / g2
    if not np.isfinite(s2):
        return 0.0, 1.0
    denom = 1.0 + s2
    return x_hat / denom, max(s2 / denom, _SIGMA2_FLOOR)


def draw_x0(mu: float, sigma2: float, rng: np.random.Generator) -> float:
    """One posterior draw; deterministic given the generator state."""
    if sigma2 <= 0.0:
        raise InvalidCovariance(f"sigma2 must be positive, got {sigma2}")
    return mu + math.sqrt(sigma2) * rng.standard_normal()
