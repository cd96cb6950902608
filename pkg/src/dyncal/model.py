"""Shared domain types: reference designs, unit scaling, filter state.

All estimation happens in scaled units (reference column centered to mean 0
and mean square 1); conversion back to original units is confined to the
reporting boundary.  The quadratic column is always rebuilt from the scaled
references, never rescaled from the original one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDesign,
    InsufficientReferences,
    InvalidCovariance,
)

_MOMENT_TOL = 1e-12


@dataclass(frozen=True)
class DesignMatrix:
    """Fixed r x d reference design with rows [1, x_i, x_i^2].

    ``refs`` are strictly increasing reference values in whatever units the
    caller works in; ``matrix`` is derived from them and never edited
    directly.
    """

    refs: np.ndarray
    matrix: np.ndarray
    d: int = 3

    @property
    def r(self) -> int:
        return len(self.refs)

    def xtx(self) -> np.ndarray:
        return self.matrix.T @ self.matrix

    def xtx_inv(self) -> np.ndarray:
        xtx = self.xtx()
        if np.linalg.matrix_rank(xtx) < self.d:
            raise DegenerateDesign("X'X is singular; references do not span a quadratic")
        return np.linalg.inv(xtx)


@dataclass(frozen=True)
class ScalingTransform:
    """Affine map between original and scaled reference units.

    scaled = (original - center) / scale.  After the transform the scaled
    references satisfy sum(x) = 0 and mean(x^2) = 1; ``x_bar`` and ``x2_bar``
    store the realised moments so downstream algebra uses the exact floats.
    ``y_bar_t`` optionally carries the per-time response means once a run has
    seen data.
    """

    center: float
    scale: float
    x_bar: float
    x2_bar: float
    y_bar_t: np.ndarray | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RegressionState:
    """Quadratic coefficient vector (intercept, slope, curvature), scaled units."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (3,):
            raise InvalidCovariance(f"beta must be a 3-vector, got shape {beta.shape}")
        if not np.all(np.isfinite(beta)):
            raise InvalidCovariance("beta contains non-finite entries")
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class VariancePair:
    """Observation variance and system variance, both nonnegative.

    The prior sampler enforces sigma2_W < sigma2_E; the raw constructor
    deliberately permits equality (and zero) for degenerate test setups.
    """

    sigma2_E: float
    sigma2_W: float

    def __post_init__(self):
        if self.sigma2_E < 0 or self.sigma2_W < 0:
            raise InvalidCovariance("variances must be nonnegative")


def check_covariance(C: np.ndarray, name: str = "C", sym_tol: float = 1e-10,
                     eig_tol: float = -1e-10) -> np.ndarray:
    """Validate symmetry and positive semidefiniteness, returning C as float array."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidCovariance(f"{name} must be square, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise InvalidCovariance(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.abs(C).max()))
    if np.abs(C - C.T).max() > sym_tol * scale:
        raise InvalidCovariance(f"{name} is not symmetric")
    eigvals = np.linalg.eigvalsh(0.5 * (C + C.T))
    if eigvals.min() < eig_tol * scale:
        raise InvalidCovariance(f"{name} has negative eigenvalue {eigvals.min():.3e}")
    return C


@dataclass(frozen=True)
class FilterState:
    """Posterior moments of the regression vector at time t."""

    m: np.ndarray
    C: np.ndarray
    t: int = 0

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        C = check_covariance(self.C, name="C")
        if m.ndim != 1 or C.shape != (m.size, m.size):
            raise InvalidCovariance(
                f"state dimensions disagree: m {m.shape}, C {C.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "C", C)


@dataclass(frozen=True)
class CalibrationPosterior:
    """Per-time posterior summary of the unknown reference.

    ``mu``/``sigma2`` are the scaled-unit mixture moments across retained
    candidates; ``median``/``lower95``/``upper95`` are original-unit quantile
    summaries of the retained draws.  ``censored`` marks steps where at least
    one retained candidate had no real inverse (posterior fell back to the
    vertex abscissa); ``clamped`` marks steps where draws were truncated at
    the calibration-domain boundary.
    """

    t: int
    mu: float
    sigma2: float
    median: float
    lower95: float
    upper95: float
    censored: bool = False
    clamped: bool = False
    samples: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.lower95 <= self.median <= self.upper95):
            raise InvalidCovariance(
                f"t={self.t}: quantiles out of order "
                f"({self.lower95}, {self.median}, {self.upper95})")
        if not self.sigma2 > 0:
            raise InvalidCovariance(f"t={self.t}: sigma2 must be positive")


def build_design(refs) -> DesignMatrix:
    """Construct the quadratic design [1, x, x^2] from reference values.

    References are sorted ascending; duplicates raise DegenerateDesign and
    fewer than two points raise InsufficientReferences.
    """
    refs = np.asarray(refs, dtype=float).ravel()
    if refs.size < 2:
        raise InsufficientReferences(
            f"need at least 2 references, got {refs.size}")
    refs = np.sort(refs)
    if np.any(np.diff(refs) == 0):
        raise DegenerateDesign("reference values must be distinct")
    matrix = np.column_stack([np.ones_like(refs), refs, refs ** 2])
    return DesignMatrix(refs=refs, matrix=matrix, d=3)


def center_scale(design: DesignMatrix) -> tuple[DesignMatrix, ScalingTransform]:
    """Map references to scaled units with sum 0 and mean square 1.

    Every filter/inversion step downstream works on the returned design; the
    transform inverts results back at the reporting boundary.
    """
    refs = design.refs
    center = float(refs.mean())
    scale = float(np.sqrt(np.mean((refs - center) ** 2)))
    if scale == 0.0:
        raise DegenerateDesign("references have zero variance")
    scaled_refs = (refs - center) / scale
    scaled = build_design(scaled_refs)
    x_bar = float(scaled_refs.mean())
    x2_bar = float(np.mean(scaled_refs ** 2))
    if abs(x_bar) > _MOMENT_TOL or abs(x2_bar - 1.0) > _MOMENT_TOL:
        raise DegenerateDesign(
            f"scaling failed its moment constraints: x_bar={x_bar:.3e}, "
            f"x2_bar={x2_bar:.6f}")
    return scaled, ScalingTransform(center=center, scale=scale,
                                    x_bar=x_bar, x2_bar=x2_bar)


def scale_value(v, tr: ScalingTransform):
    """Map an original-unit reference value into scaled units."""
    return (v - tr.center) / tr.scale


def rescale_value(v, tr: ScalingTransform):
    """Map a scaled-unit value back to original units (exact affine inverse)."""
    if np.ndim(v) == 0:
        return tr.center + tr.scale * float(v)
    return tr.center + tr.scale * np.asarray(v, dtype=float)
