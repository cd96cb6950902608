"""Variance-pair prior sampling, importance weighting, resampling, and the
end-to-end dynamic calibration pipeline.

The pipeline, per run:

1. draw M variance candidates (sigma2_E, sigma2_W) from the nested uniform
   prior;
2. for each candidate, filter the (centered and scaled) first-stage series,
   invert the fitted curve at every time step, and draw one posterior sample
   of the unknown per step;
3. weight candidates by their accumulated one-step-ahead log predictive
   density of the first-stage data (the candidate density is the prior, so
   the standardized weights reduce to pure likelihoods), then resample N
   trajectories with replacement;
4. rescale the retained draws to original units and summarise each time step
   by its median and equal-tailed 95% interval.

Candidate evaluation is batched across candidates with fixed-size chunks;
thread count affects wall time only, never results.  Candidates whose
forecast covariance degenerates receive -inf log likelihood instead of
aborting the run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateWeights, ShapeError
from .inverse import matched_posterior, posterior_x0
from .model import (
    CalibrationPosterior,
    DesignMatrix,
    ScalingTransform,
    VariancePair,
    center_scale,
    rescale_value,
)

_CHUNK = 64  # fixed so results cannot depend on the thread count

#: Posterior variance constructions accepted by CalibrationConfig.
POSTERIOR_MODES = ("slope_matched", "trace_reciprocal")


@dataclass(frozen=True)
class CalibrationConfig:
    """Run settings for the dynamic calibration pipeline.

    ``alpha_E`` is the observation-variance prior ceiling; None derives it
    from a pooled least-squares pre-fit of the first-stage data (ten times
    its residual variance).  ``posterior_mode`` selects how the forecast
    variance enters the per-time posterior: "slope_matched" (default)
    converts it to the unknown's scale through the local curve slope;
    "trace_reciprocal" applies the closed form verbatim.
    """

    alpha_E: float | None = None
    M: int = 500
    N: int = 250
    m0: np.ndarray | None = None
    C0: np.ndarray | None = None
    seed: int = 0
    posterior_mode: str = "slope_matched"
    threads: int = 1
    keep_samples: bool = True

    def __post_init__(self):
        if self.M < 1 or self.N < 1 or self.N > self.M:
            raise ShapeError(f"need M >= N >= 1, got M={self.M}, N={self.N}")
        if self.posterior_mode not in POSTERIOR_MODES:
            raise ShapeError(f"unknown posterior_mode {self.posterior_mode!r}")
        if self.threads < 1:
            raise ShapeError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class CandidateSet:
    """Variance candidates with standardized importance weights."""

    pairs: tuple[VariancePair, ...]
    log_weights: np.ndarray
    probs: np.ndarray

    @property
    def M(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CalibrationRun:
    """Everything a finished pipeline run exposes.

    ``posterior`` holds one record per time step (original units); the
    parallel arrays ``medians``/``lower95``/``upper95`` repeat the summaries
    for vectorised consumers.
    """

    config: CalibrationConfig
    alpha_E: float
    candidates: CandidateSet
    resampled: np.ndarray
    posterior: tuple[CalibrationPosterior, ...]
    transform: ScalingTransform
    medians: np.ndarray = field(compare=False, default=None)
    lower95: np.ndarray = field(compare=False, default=None)
    upper95: np.ndarray = field(compare=False, default=None)
    censored: np.ndarray = field(compare=False, default=None)
    clamped: np.ndarray = field(compare=False, default=None)

    @property
    def T(self) -> int:
        return len(self.posterior)


def sample_prior(alpha_E: float, M: int, rng: np.random.Generator
                 ) -> list[VariancePair]:
    """M draws of (sigma2_E, sigma2_W) from the nested uniform prior.

    sigma2_E ~ U(0, alpha_E) and sigma2_W | sigma2_E ~ U(0, sigma2_E), which
    keeps the system variance strictly below the observation variance.
    """
    if alpha_E <= 0.0:
        raise ShapeError(f"alpha_E must be positive, got {alpha_E}")
    if M < 1:
        raise ShapeError(f"M must be >= 1, got {M}")
    e = alpha_E * rng.uniform(size=M)
    w = e * rng.uniform(size=M)
    return [VariancePair(sigma2_E=float(ei), sigma2_W=float(wi))
            for ei, wi in zip(e, w)]


def weight_candidates(log_liks) -> tuple[np.ndarray, np.ndarray]:
    """Standardized importance weights from per-candidate log likelihoods.

    With candidates drawn from the prior itself the weight of a candidate is
    its likelihood; normalisation is done in log space with max subtraction
    so arbitrarily large magnitudes cannot overflow.
    """
    log_liks = np.asarray(log_liks, dtype=float)
    finite = np.isfinite(log_liks)
    if not finite.any():
        raise DegenerateWeights("all candidates have zero likelihood")
    shifted = np.where(finite, log_liks - log_liks[finite].max(), -np.inf)
    w = np.exp(shifted)
    probs = w / w.sum()
    return shifted, probs


def resample(probs, N: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial resampling with replacement; indices into the candidates."""
    probs = np.asarray(probs, dtype=float)
    if N < 1:
        raise ShapeError(f"N must be >= 1, got {N}")
    if probs.ndim != 1 or probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
        raise ShapeError("probs must be a probability vector")
    return rng.choice(probs.size, size=N, replace=True, p=probs)


# ---------------------------------------------------------------------------
# Batched candidate evaluation
# ---------------------------------------------------------------------------


def _default_alpha_e(X: DesignMatrix, Y: np.ndarray) -> float:
    """Prior ceiling from a pooled static pre-fit: 10x its residual variance.

    The floor is relative to the squared response magnitude so the prior
    stays proper on noise-free data without dwarfing the likelihood scale of
    small-magnitude responses.
    """
    T, r = Y.shape
    Xs = np.tile(X.matrix, (T, 1))
    ys = Y.reshape(-1)
    coef, *_ = np.linalg.lstsq(Xs, ys, rcond=None)
    resid = ys - Xs @ coef
    dof = max(ys.size - 3, 1)
    pooled = float(resid @ resid) / dof
    floor = 1e-12 * float(np.mean(ys * ys))
    return 10.0 * max(pooled, floor, 1e-300)


def _eval_chunk(X: np.ndarray, XtX_inv: np.ndarray, Y: np.ndarray,
                sig2_e: np.ndarray, sig2_w: np.ndarray,
                m0: np.ndarray, C0: np.ndarray):
    """Filter a chunk of candidates over the whole series.

    Vectorised translation of the single-candidate recursion; every candidate
    is computed by identical per-matrix kernels, so results do not depend on
    the chunk composition.  Returns per-candidate arrays:
    (log_lik, beta1[t], beta2[t], trQ[t]).  A candidate whose forecast
    covariance stops being positive definite is frozen with -inf likelihood.
    """
    B = sig2_e.size
    T, r = Y.shape
    d = m0.size
    eye_r = np.eye(r)
    W = sig2_w[:, None, None] * XtX_inv[None, :, :]
    m = np.tile(m0, (B, 1))
    C = np.tile(C0, (B, 1, 1))
    log_lik = np.zeros(B)
    dead = np.zeros(B, dtype=bool)
    beta1 = np.empty((B, T))
    beta2 = np.empty((B, T))
    trQ = np.empty((B, T))
    log2pi = np.log(2.0 * np.pi)

    # Dead candidates keep flowing through the batched kernels with garbage
    # values; their numerical noise is silenced and their outputs ignored.
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(T):
            R = C + W
            f = m @ X.T
            Q = X @ R @ X.T + sig2_e[:, None, None] * eye_r
            try:
                L = np.linalg.cholesky(Q)
            except np.linalg.LinAlgError:
                L = np.empty_like(Q)
                for b in range(B):
                    try:
                        L[b] = np.linalg.cholesky(Q[b])
                    except np.linalg.LinAlgError:
                        dead[b] = True
                        L[b] = eye_r
            e = Y[t][None, :] - f
            # Solve L z = e and L' u = z per candidate (triangular systems).
            z = np.linalg.solve(L, e[:, :, None])
            quad = np.sum(z * z, axis=(1, 2))
            logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
            step_ll = -0.5 * (r * log2pi + logdet + quad)

            XR = X @ R                               # (B, r, d)
            ZA = np.linalg.solve(L, XR)
            A_T = np.linalg.solve(np.swapaxes(L, 1, 2), ZA)   # Q^-1 X R, (B, r, d)
            A = np.swapaxes(A_T, 1, 2)                        # R X' Q^-1, (B, d, r)
            m = m + (A @ e[:, :, None])[:, :, 0]
            # Joseph form of C = R - A Q A' (see dlrm.filter_step).
            IAX = np.eye(d)[None, :, :] - A @ X
            C = IAX @ R @ np.swapaxes(IAX, 1, 2) \
                + sig2_e[:, None, None] * (A @ np.swapaxes(A, 1, 2))
            C = 0.5 * (C + np.swapaxes(C, 1, 2))

            step_ll = np.where(np.isfinite(step_ll), step_ll, -np.inf)
            log_lik = np.where(dead, -np.inf, log_lik + step_ll)
            beta1[:, t] = m[:, 1]
            beta2[:, t] = m[:, 2]
            trQ[:, t] = np.trace(Q, axis1=1, axis2=2)

    log_lik = np.where(dead, -np.inf, log_lik)
    return log_lik, beta1, beta2, trQ, dead


def _invert_grid(beta1, beta2, c, lo: float, hi: float):
    """Vectorised quadratic inversion with the branch rule of
    inverse.invert_quadratic.

    Solves b2 x^2 + b1 x + c = 0 elementwise.  Returns (x_hat, censored,
    outside): censored entries had no real root and carry the vertex
    abscissa; outside entries had both roots off the domain (the
    branch-consistent root is returned).
    """
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    c = np.asarray(c, dtype=float)
    mid = 0.5 * (lo + hi)

    # NaN coefficients (dead filter candidates) flow through silently and
    # stay NaN in every output.
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        linear = np.abs(beta2) < 1e-12 * np.maximum(1.0, np.abs(beta1))
        flat = linear & (beta1 == 0.0)
        b2_safe = np.where(linear, 1.0, beta2)
        b1_safe = np.where(flat, 1.0, beta1)

        disc = beta1 * beta1 - 4.0 * beta2 * c
        censored = ((~linear) & (disc < 0.0)) | flat
        vertex = np.where(flat, 0.0, -beta1 / (2.0 * b2_safe))

        sq = np.sqrt(np.maximum(disc, 0.0))
        q = np.where(beta1 >= 0, -0.5 * (beta1 + sq), -0.5 * (beta1 - sq))
        q_safe = np.where(q == 0.0, 1.0, q)
        r1 = np.where(q == 0.0, 0.0, q / b2_safe)
        r2 = np.where(q == 0.0, 0.0, c / q_safe)
        r_low = np.minimum(r1, r2)
        r_high = np.maximum(r1, r2)

        branch_sign = np.sign(beta1 + 2.0 * beta2 * mid)
        d_low = beta1 + 2.0 * beta2 * r_low
        d_high = beta1 + 2.0 * beta2 * r_high
        low_on_branch = (d_low == 0.0) | (np.sign(d_low) == branch_sign)
        high_on_branch = (d_high == 0.0) | (np.sign(d_high) == branch_sign)

        in_low = (lo <= r_low) & (r_low <= hi)
        in_high = (lo <= r_high) & (r_high <= hi)

        # Exactly one root inside: take it.  Both inside: the branch-matching
        # one (low root on ties).  Neither: branch-matching, flagged outside.
        pick_high_both = in_low & in_high & high_on_branch & ~low_on_branch
        pick_high_one = (~in_low) & in_high
        pick_high_none = (~in_low) & (~in_high) & high_on_branch & ~low_on_branch
        x = np.where(pick_high_both | pick_high_one | pick_high_none, r_high, r_low)
        outside = (~in_low) & (~in_high) & ~linear & ~censored

        x_lin = -c / b1_safe
        x = np.where(linear, x_lin, x)
        x = np.where(censored, vertex, x)
    return x, censored, outside


def dynamic_calibrate(X: DesignMatrix, Y_series, y0_series,
                      cfg: CalibrationConfig | None = None) -> CalibrationRun:
    """Run the full dynamic calibration pipeline.

    ``X`` is the original-unit reference design; ``Y_series`` the T x r
    first-stage responses; ``y0_series`` the T second-stage observations of
    the unknown.  All outputs are reported in original units.
    """
    cfg = cfg or CalibrationConfig()
    Y = np.asarray(Y_series, dtype=float)
    y0 = np.asarray(y0_series, dtype=float).ravel()
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ShapeError(f"Y_series must be T x r, got {Y.shape}")
    if Y.shape[1] != X.r:
        raise ShapeError(f"Y_series has {Y.shape[1]} columns, design {X.r} rows")
    if y0.size != Y.shape[0]:
        raise ShapeError(
            f"y0_series length {y0.size} != first-stage horizon {Y.shape[0]}")
    T, r = Y.shape

    scaled, tr = center_scale(X)
    d = scaled.d
    m0 = np.ones(d) if cfg.m0 is None else np.asarray(cfg.m0, dtype=float)
    C0 = 100.0 * np.eye(d) if cfg.C0 is None else np.asarray(cfg.C0, dtype=float)
    alpha_E = cfg.alpha_E if cfg.alpha_E is not None else _default_alpha_e(scaled, Y)

    root = np.random.SeedSequence(cfg.seed)
    prior_ss, resample_ss, draw_ss = root.spawn(3)
    pairs = sample_prior(alpha_E, cfg.M, np.random.default_rng(prior_ss))
    sig2_e = np.array([p.sigma2_E for p in pairs])
    sig2_w = np.array([p.sigma2_W for p in pairs])

    Xs = scaled.matrix
    XtX_inv = scaled.xtx_inv()
    ybar = Y.mean(axis=1)

    chunks = [slice(i, min(i + _CHUNK, cfg.M)) for i in range(0, cfg.M, _CHUNK)]

    def work(sl: slice):
        return _eval_chunk(Xs, XtX_inv, Y, sig2_e[sl], sig2_w[sl], m0, C0)

    if cfg.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(sl) for sl in chunks]

    log_lik = np.concatenate([res[0] for res in results])
    beta1 = np.concatenate([res[1] for res in results])   # (M, T)
    beta2 = np.concatenate([res[2] for res in results])
    trQ = np.concatenate([res[3] for res in results])

    # Per-candidate, per-time inversion and posterior draw (scaled units).
    lo = float(scaled.refs.min())
    hi = float(scaled.refs.max())
    c = (ybar - y0)[None, :] - beta1 * tr.x_bar - beta2 * tr.x2_bar
    x_hat, censored, outside = _invert_grid(beta1, beta2, c, lo, hi)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if cfg.posterior_mode == "slope_matched":
            slope = beta1 + 2.0 * beta2 * x_hat
            g2 = slope * slope
            s2 = np.where(g2 > 0.0, trQ / np.where(g2 > 0.0, g2, 1.0), np.inf)
            bad = ~np.isfinite(s2)
            s2_safe = np.where(bad, 0.0, s2)
            denom = 1.0 + s2_safe
            mu = np.where(bad, 0.0, x_hat / denom)
            sigma2 = np.where(bad, 1.0, np.maximum(s2_safe / denom, 1e-300))
        else:
            mu = x_hat / (1.0 + trQ)
            sigma2 = 1.0 / (1.0 + trQ)

    # Domain restriction on the selected monotone branch: values past the
    # vertex are mirror ghosts, values outside the reference range are
    # uncalibrated extrapolation.
    mid = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(beta2 != 0.0, -beta1 / (2.0 * np.where(beta2 == 0, 1, beta2)),
                          np.inf)
    left_branch = mid <= vertex
    upper_bound = np.where(left_branch, np.minimum(hi, vertex), hi)
    lower_bound = np.where(left_branch, lo, np.maximum(lo, vertex))

    lw, probs = weight_candidates(log_lik)
    idx = resample(probs, cfg.N, np.random.default_rng(resample_ss))

    # One fresh posterior draw per retained trajectory per time step, so the
    # summary mixes candidate spread with each candidate's own posterior
    # width even when the weights concentrate.
    draw_rngs = draw_ss.spawn(cfg.N)
    z = np.empty((cfg.N, T))
    for i, ss in enumerate(draw_rngs):
        z[i] = np.random.default_rng(ss).standard_normal(T)

    kept_mu = mu[idx]
    kept_sig2 = sigma2[idx]
    kept = kept_mu + np.sqrt(kept_sig2) * z
    kept_clamp = (kept > upper_bound[idx]) | (kept < lower_bound[idx])
    kept = np.clip(kept, lower_bound[idx], upper_bound[idx])
    # A step is censored when its inverse was not attainable inside the
    # calibration domain: no real root, or both roots beyond the references.
    kept_cens = (censored | outside)[idx]

    med_s = np.quantile(kept, 0.5, axis=0, method="linear")
    lo_s = np.quantile(kept, 0.025, axis=0, method="linear")
    hi_s = np.quantile(kept, 0.975, axis=0, method="linear")

    medians = rescale_value(med_s, tr)
    lower95 = rescale_value(lo_s, tr)
    upper95 = rescale_value(hi_s, tr)
    cens_t = kept_cens.any(axis=0)
    clamp_t = kept_clamp.any(axis=0)

    mu_t = kept_mu.mean(axis=0)
    sigma2_t = kept_sig2.mean(axis=0) + kept_mu.var(axis=0)
    sigma2_t = np.maximum(sigma2_t, 1e-300)

    posterior = tuple(
        CalibrationPosterior(
            t=t + 1, mu=float(mu_t[t]), sigma2=float(sigma2_t[t]),
            median=float(medians[t]), lower95=float(lower95[t]),
            upper95=float(upper95[t]), censored=bool(cens_t[t]),
            clamped=bool(clamp_t[t]),
            samples=rescale_value(kept[:, t], tr) if cfg.keep_samples else None)
        for t in range(T))

    cand = CandidateSet(pairs=tuple(pairs), log_weights=lw, probs=probs)
    tr_with_ybar = replace(tr, y_bar_t=ybar)
    return CalibrationRun(config=cfg, alpha_E=float(alpha_E), candidates=cand,
                          resampled=idx, posterior=posterior,
                          transform=tr_with_ybar, medians=medians,
                          lower95=lower95, upper95=upper95,
                          censored=cens_t, clamped=clamp_t)
