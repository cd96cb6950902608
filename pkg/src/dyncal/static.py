"""Classical one-shot calibration: OLS quadratic fit, point inversion, and
two interval constructions (pivot-style and delta method).

These are the comparison baselines.  The point estimate always takes the
"+" branch of the quadratic formula,

    xi* = (-b1 + sqrt(b1^2 - 4 b2 (b0 - y0))) / (2 b2),

even when the other root would be the in-domain one; faithfulness to the
baseline matters more than improving it, so an out-of-range result only
triggers a RootOutsideDomain warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, t as t_dist

from .errors import (
    DegenerateDesign,
    InsufficientReferences,
    NoRealRoot,
    RootOutsideDomain,
    VarianceUnavailable,
    VerticalTangent,
)
from .inverse import LINEAR_FALLBACK_REL


@dataclass(frozen=True)
class OlsFit:
    """Quadratic least-squares fit of first-stage data.

    ``s2`` and ``V`` are None when the fit is exactly determined (3 points):
    the point estimate still works but no interval can be built.
    """

    beta_hat: np.ndarray
    s2: float | None
    V: np.ndarray | None
    XtX_inv: np.ndarray
    n_first: int
    dof: int
    x_min: float
    x_max: float


@dataclass(frozen=True)
class StaticEstimate:
    xi_star: float
    ci_lo: float
    ci_hi: float
    method: str
    sigma2_xi: float


def fit_ols_quadratic(x, y) -> OlsFit:
    """Normal-equation quadratic fit with residual variance when dof >= 1."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DegenerateDesign(f"x and y lengths differ: {x.size} vs {y.size}")
    m = x.size
    if m < 3:
        raise InsufficientReferences(f"need at least 3 points, got {m}")
    X = np.column_stack([np.ones(m), x, x * x])
    if np.linalg.matrix_rank(X) < 3:
        raise DegenerateDesign("design is rank deficient (need 3 distinct x values)")
    XtX_inv = np.linalg.inv(X.T @ X)
    beta_hat = XtX_inv @ (X.T @ y)
    dof = m - 3
    if dof >= 1:
        rss = float(np.sum((y - X @ beta_hat) ** 2))
        s2 = rss / dof
        V = s2 * XtX_inv
    else:
        s2 = None
        V = None
    return OlsFit(beta_hat=beta_hat, s2=s2, V=V, XtX_inv=XtX_inv,
                  n_first=m, dof=dof, x_min=float(x.min()), x_max=float(x.max()))


def static_estimate(fit: OlsFit, y0: float) -> float:
    """Invert the fitted quadratic at y0 using the "+" root.

    Falls back to linear inversion when the curvature is numerically zero.
    Warns (RootOutsideDomain) when the estimate leaves the fitted x range.
    """
    b0, b1, b2 = fit.beta_hat
    if abs(b2) < LINEAR_FALLBACK_REL * max(1.0, abs(b1)):
        if b1 == 0.0:
            raise NoRealRoot("flat fit: no inverse", vertex=None)
        xi = (y0 - b0) / b1
    else:
        disc = b1 * b1 - 4.0 * b2 * (b0 - y0)
        if disc < 0.0:
            raise NoRealRoot(
                f"y0={y0} beyond the fitted extremum",
                vertex=-b1 / (2.0 * b2))
        xi = (-b1 + math.sqrt(disc)) / (2.0 * b2)
    if not fit.x_min <= xi <= fit.x_max:
        warnings.warn(
            f"estimate {xi:.6g} outside fitted range [{fit.x_min:.6g}, {fit.x_max:.6g}]",
            RootOutsideDomain, stacklevel=2)
    return float(xi)


def _require_s2(fit: OlsFit) -> float:
    if fit.s2 is None:
        raise VarianceUnavailable(
            f"residual variance needs dof >= 1, fit has dof {fit.dof}")
    return fit.s2


def lundberg_interval(fit: OlsFit, xi_star: float, n_second: int,
                      alpha: float = 0.05) -> StaticEstimate:
    """Small-measurement-error pivot interval around xi*.

    Half width is t_{alpha/2, m+n} * s * sqrt(1/n + Xi'(X'X)^-1 Xi) / |g'(xi*)|
    where g'(xi*) = b1 + 2 b2 xi* is the curve slope at the estimate.  The
    interval degenerates (VerticalTangent) when xi* sits at the vertex.
    """
    s2 = _require_s2(fit)
    b0, b1, b2 = fit.beta_hat
    slope = b1 + 2.0 * b2 * xi_star
    scale = max(1.0, abs(b1))
    if abs(slope) < 1e-12 * scale:
        raise VerticalTangent(f"curve slope vanishes at xi*={xi_star:.6g}")
    xi_vec = np.array([1.0, xi_star, xi_star * xi_star])
    d = math.sqrt(s2) * math.sqrt(1.0 / n_second + float(xi_vec @ fit.XtX_inv @ xi_vec)) / abs(slope)
    tq = float(t_dist.ppf(1.0 - alpha / 2.0, fit.n_first + n_second))
    return StaticEstimate(xi_star=float(xi_star), ci_lo=float(xi_star - tq * d),
                          ci_hi=float(xi_star + tq * d), method="lundberg",
                          sigma2_xi=float(d * d))


def delta_gradient(fit: OlsFit, xi_star: float) -> tuple[float, np.ndarray]:
    """Analytic partials of the "+"-root estimate.

    Returns (d xi*/d y0, gradient wrt (b0, b1, b2)).  Uses the identity
    D = sqrt(disc) = b1 + 2 b2 xi* up to sign, so no y0 value is needed.
    """
    b0, b1, b2 = fit.beta_hat
    if abs(b2) < LINEAR_FALLBACK_REL * max(1.0, abs(b1)):
        # Linear-calibration limit of the quadratic estimate.
        if b1 == 0.0:
            raise VerticalTangent("flat fit: gradient undefined")
        return 1.0 / b1, np.array([-1.0 / b1, -xi_star / b1, -xi_star ** 2 / b1])
    D = abs(b1 + 2.0 * b2 * xi_star)
    if D < 1e-12 * max(1.0, abs(b1)):
        raise VerticalTangent(f"zero discriminant at xi*={xi_star:.6g}")
    d_y0 = 1.0 / D
    d_b0 = -1.0 / D
    d_b1 = (-1.0 + b1 / D) / (2.0 * b2)
    d_b2 = -((D - b1) ** 2) / (4.0 * b2 * b2 * D)
    return d_y0, np.array([d_b0, d_b1, d_b2])


def delta_interval(fit: OlsFit, xi_star: float, sigma_y0: float,
                   alpha: float = 0.05) -> StaticEstimate:
    """Delta-method interval: propagate y0 noise and fit covariance through
    the analytic gradient, then apply the normal quantile."""
    if fit.V is None:
        raise VarianceUnavailable(
            f"fit covariance needs dof >= 1, fit has dof {fit.dof}")
    d_y0, grad = delta_gradient(fit, xi_star)
    sigma2_xi = (d_y0 * sigma_y0) ** 2 + float(grad @ fit.V @ grad)
    z = float(norm.ppf(1.0 - alpha / 2.0))
    hw = z * math.sqrt(max(sigma2_xi, 0.0))
    return StaticEstimate(xi_star=float(xi_star), ci_lo=float(xi_star - hw),
                          ci_hi=float(xi_star + hw), method="delta",
                          sigma2_xi=float(sigma2_xi))
