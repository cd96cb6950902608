"""Sequential Bayesian updating of a drifting quadratic regression.

One step of the recursion, given posterior moments (m, C) at t-1 and the
variance pair (sigma2_E, sigma2_W):

    a = m,  R = C + W            with W = sigma2_W * (X'X)^-1
    f = X a,  Q = X R X' + sigma2_E * I
    e = Y_t - f,  A = R X' Q^-1
    m' = a + A e,  C' = R - A Q A'

The gain is the d x r form so that both the mean update and the posterior
covariance contraction are dimensionally consistent.  Q is factored as a
symmetric positive definite matrix; a reciprocal condition number below
1e-14 fails loudly rather than producing garbage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ShapeError, SingularForecastCovariance
from .model import DesignMatrix, FilterState, VariancePair

_LOG_2PI = np.log(2.0 * np.pi)
_RCOND_MIN = 1e-14


@dataclass(frozen=True)
class StepOutput:
    """All intermediate quantities of one filter step.

    ``log_pred`` is the log density of Y_t under the one-step forecast
    N(f, Q); summed over time it is the marginal likelihood used to weight
    variance candidates.
    """

    a: np.ndarray
    R: np.ndarray
    f: np.ndarray
    Q: np.ndarray
    e: np.ndarray
    A: np.ndarray
    state: FilterState
    log_pred: float


def init_filter(m0, C0) -> FilterState:
    """Initial information: validates C0 and returns the t=0 state."""
    return FilterState(m=np.asarray(m0, dtype=float), C=C0, t=0)


def filter_step(state: FilterState, X: DesignMatrix, Y, gamma: VariancePair) -> StepOutput:
    """Advance the posterior one observation.

    Y is the r-vector of responses observed at the new time point.
    """
    Y = np.asarray(Y, dtype=float).ravel()
    d = state.m.size
    r = X.r
    if X.matrix.shape != (r, d):
        raise ShapeError(f"design is {X.matrix.shape}, state dimension {d}")
    if Y.size != r:
        raise ShapeError(f"observation has {Y.size} entries, design has {r} rows")

    Xm = X.matrix
    W = gamma.sigma2_W * X.xtx_inv()
    a = state.m
    R = state.C + W
    f = Xm @ a
    Q = Xm @ R @ Xm.T + gamma.sigma2_E * np.eye(r)

    if np.linalg.cond(Q) > 1.0 / _RCOND_MIN:
        raise SingularForecastCovariance(
            f"forecast covariance at t={state.t + 1} is numerically singular "
            f"(rcond ~ {1.0 / np.linalg.cond(Q):.2e})")
    try:
        cho = cho_factor(Q, lower=True)
    except LinAlgError as exc:
        raise SingularForecastCovariance(
            f"forecast covariance at t={state.t + 1} is not positive definite") from exc

    e = Y - f
    # A = R X' Q^-1, computed as (Q^-1 X R)' through the Cholesky factor.
    A = cho_solve(cho, Xm @ R).T
    m_new = a + A @ e
    # C = R - A Q A', evaluated in the equivalent Joseph form, which stays
    # positive semidefinite when a diffuse prior collapses by many orders of
    # magnitude in a single step.
    IAX = np.eye(d) - A @ Xm
    C_new = IAX @ R @ IAX.T + gamma.sigma2_E * (A @ A.T)
    C_new = 0.5 * (C_new + C_new.T)

    z = cho_solve(cho, e)
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    log_pred = -0.5 * (r * _LOG_2PI + logdet + float(e @ z))

    new_state = FilterState(m=m_new, C=C_new, t=state.t + 1)
    return StepOutput(a=a, R=R, f=f, Q=Q, e=e, A=A, state=new_state,
                      log_pred=log_pred)


def run_filter(X: DesignMatrix, Y_series, gamma: VariancePair, m0, C0
               ) -> tuple[list[StepOutput], float]:
    """Filter a whole T x r response series, returning every step and the
    accumulated one-step-ahead log predictive density."""
    Y_series = np.asarray(Y_series, dtype=float)
    if Y_series.ndim == 1:
        Y_series = Y_series[:, None]
    if Y_series.ndim != 2 or Y_series.shape[0] < 1:
        raise ShapeError(f"Y_series must be T x r with T >= 1, got {Y_series.shape}")
    if Y_series.shape[1] != X.r:
        raise ShapeError(
            f"Y_series has {Y_series.shape[1]} columns, design has {X.r} rows")

    state = init_filter(m0, C0)
    steps: list[StepOutput] = []
    total = 0.0
    for t in range(Y_series.shape[0]):
        try:
            out = filter_step(state, X, Y_series[t], gamma)
        except (SingularForecastCovariance, ShapeError) as exc:
            raise type(exc)(f"t={t + 1}: {exc}") from exc
        steps.append(out)
        total += out.log_pred
        state = out.state
    return steps, total
