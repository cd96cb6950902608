"""Synthetic data generation: drifting coefficient paths, first- and
second-stage observations, shock regimes, and vertex geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDesign, InvalidShockSpec, NoVertex, ShapeError
from .model import build_design

#: Coefficient truths used throughout the simulation study.
SIM_BETA_MEAN = np.array([-0.0007, 0.01858, -0.000117])

#: Reference placement schemes of the simulation study.
SIM_SCHEMES = {
    3: (20.0, 90.0, 100.0),
    4: (20.0, 60.0, 90.0, 100.0),
    5: (20.0, 40.0, 60.0, 90.0, 100.0),
}


@dataclass(frozen=True)
class ShockWindow:
    """Multiplicative disturbance to the curvature over [t_start, t_start+t_len).

    ``gamma`` is the disturbance factor; None means sample it uniformly from
    [1.5, 3] per affected step.  With the half/half profile the first half of
    the window mirrors the disturbance to the negative side (factor 2-gamma).
    """

    t_start: int
    t_len: int
    gamma: float | None = None
    sign_profile: str = "constant"

    def __post_init__(self):
        if self.t_len < 1:
            raise InvalidShockSpec(f"t_len must be >= 1, got {self.t_len}")
        if self.t_start < 1:
            raise InvalidShockSpec(f"t_start must be >= 1, got {self.t_start}")
        if self.sign_profile not in ("constant", "half_negative_half_positive"):
            raise InvalidShockSpec(f"unknown sign_profile {self.sign_profile!r}")


@dataclass(frozen=True)
class VertexPoint:
    """Extremum of a quadratic: abscissa h, ordinate k, leading coefficient a."""

    h: float
    k: float
    a: float


@dataclass(frozen=True)
class SimScenario:
    """Complete description of one synthetic calibration experiment.

    ``beta_mode`` selects how coefficients move: independent draws around the
    mean each period ("iid_around_mean", the study's generator) or a random
    walk started at the mean ("random_walk", the model the filter assumes).
    ``beta_cov`` optionally overrides the default drift covariance
    sigma2_W * (X'X)^-1 with an explicit matrix.
    """

    scheme: tuple[float, ...]
    beta_mean: np.ndarray = field(default_factory=lambda: SIM_BETA_MEAN.copy())
    sigma2_E: float = 1e-4
    sigma2_W: float = 5e-5
    T: int = 1000
    x0_true: float | np.ndarray = 65.0
    beta_mode: str = "iid_around_mean"
    shocks: tuple[ShockWindow, ...] = ()
    seed: int = 0
    beta_cov: np.ndarray | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ShapeError(f"T must be >= 1, got {self.T}")
        if self.beta_mode not in ("iid_around_mean", "random_walk"):
            raise ShapeError(f"unknown beta_mode {self.beta_mode!r}")
        object.__setattr__(self, "scheme", tuple(float(v) for v in self.scheme))
        object.__setattr__(self, "beta_mean",
                           np.asarray(self.beta_mean, dtype=float))

    def design(self):
        return build_design(self.scheme)

    def x0_series(self) -> np.ndarray:
        x0 = np.asarray(self.x0_true, dtype=float)
        if x0.ndim == 0:
            return np.full(self.T, float(x0))
        if x0.shape != (self.T,):
            raise ShapeError(f"x0_true series must have length T={self.T}")
        return x0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed))

    def streams(self) -> dict[str, np.random.Generator]:
        """Named independent substreams, one per generation stage.

        Keeping the stages on separate streams means toggling one stage (for
        example removing the shock windows) leaves every other stage's draws
        bit-identical.
        """
        kids = np.random.SeedSequence(self.seed).spawn(4)
        names = ("beta", "shocks", "first", "second")
        return {n: np.random.default_rng(k) for n, k in zip(names, kids)}


def _drift_cholesky(scn: SimScenario) -> np.ndarray | None:
    """Cholesky factor of the per-step coefficient covariance, or None if zero."""
    if scn.beta_cov is not None:
        cov = np.asarray(scn.beta_cov, dtype=float)
    else:
        if scn.sigma2_W == 0.0:
            return None
        design = scn.design()
        xtx = design.xtx()
        if np.linalg.matrix_rank(xtx) < design.d:
            raise DegenerateDesign("X'X singular; cannot form drift covariance")
        cov = scn.sigma2_W * np.linalg.inv(xtx)
    if not np.any(cov):
        return None
    return np.linalg.cholesky(cov)


def gen_beta_path(scn: SimScenario, rng: np.random.Generator) -> np.ndarray:
    """T x 3 coefficient path under the scenario's drift mode."""
    L = _drift_cholesky(scn)
    if L is None:
        return np.tile(scn.beta_mean, (scn.T, 1))
    shocks_z = rng.standard_normal((scn.T, 3))
    steps = shocks_z @ L.T
    if scn.beta_mode == "iid_around_mean":
        return scn.beta_mean[None, :] + steps
    return scn.beta_mean[None, :] + np.cumsum(steps, axis=0)


def gen_first_stage(scn: SimScenario, beta_path: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """T x r reference responses: X beta_t plus white observation noise."""
    beta_path = np.asarray(beta_path, dtype=float)
    if beta_path.shape != (scn.T, 3):
        raise ShapeError(f"beta_path must be {scn.T} x 3, got {beta_path.shape}")
    X = scn.design().matrix
    Y = beta_path @ X.T
    if scn.sigma2_E > 0.0:
        Y = Y + np.sqrt(scn.sigma2_E) * rng.standard_normal(Y.shape)
    return Y


def gen_second_stage(scn: SimScenario, beta_path: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Second-stage observations of the unknown: the per-time quadratic
    evaluated at the true reference plus white noise."""
    beta_path = np.asarray(beta_path, dtype=float)
    if beta_path.shape != (scn.T, 3):
        raise ShapeError(f"beta_path must be {scn.T} x 3, got {beta_path.shape}")
    x0 = scn.x0_series()
    y0 = beta_path[:, 0] + beta_path[:, 1] * x0 + beta_path[:, 2] * x0 ** 2
    if scn.sigma2_E > 0.0:
        y0 = y0 + np.sqrt(scn.sigma2_E) * rng.standard_normal(scn.T)
    return y0


def apply_shocks(beta_path: np.ndarray, windows, rng: np.random.Generator
                 ) -> np.ndarray:
    """Multiply the curvature coefficient by the disturbance inside each window.

    Returns a new path; rows outside every window are byte-identical to the
    input.  Windows are 1-based and must not overlap.
    """
    beta_path = np.asarray(beta_path, dtype=float)
    T = beta_path.shape[0]
    covered = np.zeros(T, dtype=bool)
    out = beta_path.copy()
    for w in windows:
        start = w.t_start - 1
        stop = start + w.t_len
        if stop > T:
            raise InvalidShockSpec(
                f"window [{w.t_start}, {w.t_start + w.t_len}) exceeds horizon T={T}")
        if covered[start:stop].any():
            raise InvalidShockSpec("shock windows overlap")
        covered[start:stop] = True
        if w.gamma is None:
            gam = rng.uniform(1.5, 3.0, size=w.t_len)
        else:
            gam = np.full(w.t_len, float(w.gamma))
        if w.sign_profile == "half_negative_half_positive":
            half = w.t_len // 2
            gam[:half] = 2.0 - gam[:half]
        out[start:stop, 2] *= gam
    return out


def vertex_of(beta) -> VertexPoint:
    """Extremum of the quadratic b0 + b1 x + b2 x^2 (requires b2 != 0)."""
    b0, b1, b2 = np.asarray(beta, dtype=float)
    if b2 == 0.0:
        raise NoVertex("quadratic coefficient is zero")
    h = -b1 / (2.0 * b2)
    k = b0 + b1 * h + b2 * h * h
    return VertexPoint(h=float(h), k=float(k), a=float(b2))
