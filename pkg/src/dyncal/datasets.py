"""Bundled experiment data and deterministic regeneration of the two
application scenarios.

The cadmium absorbance table is reproduced verbatim.  The radiometer bench
data is proprietary, so series are synthesised to match the published
per-channel means and standard deviations exactly; their temporal structure
(a slow gain drift plus white measurement noise) is a modelling choice,
controlled by ``drift_share``.
"""

from __future__ import annotations

import numpy as np

from .simgen import SimScenario
from .static import fit_ols_quadratic

# ---------------------------------------------------------------------------
# Cadmium spectroscopy (graphite furnace): standards used to fit the curve.
# The 10 ppb standard is withheld as the unknown sample.
# ---------------------------------------------------------------------------

CD_REFS = np.array([0.0, 5.0, 15.0, 20.0])

CD_TABLE: dict[float, tuple[float, ...]] = {
    0.0: (0, 1, 1, 0, 1),
    5.0: (74, 74, 78, 78, 76),
    15.0: (183, 184, 178, 183, 184),
    20.0: (217, 215, 213, 218, 210, 215),
}

#: Peak absorbances recorded for the withheld 10 ppb sample.
CD_UNKNOWN_ABSORBANCES = np.array([135.0, 142.0, 132.0, 141.0, 136.0])
CD_UNKNOWN_TRUE = 10.0


def cd_fit_data() -> tuple[np.ndarray, np.ndarray]:
    """Flattened (concentration, absorbance) pairs of the standards table."""
    xs, ys = [], []
    for conc, vals in CD_TABLE.items():
        xs.extend([conc] * len(vals))
        ys.extend(vals)
    return np.array(xs, dtype=float), np.array(ys, dtype=float)


def cd_beta_stats() -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficient mean and drift covariance for the replay generator.

    The mean is the OLS fit of the standards table and the covariance is the
    fit's s2 * (X'X)^-1, computed from the data rather than copied from the
    rounded published matrix (which is not quite positive definite).
    """
    x, y = cd_fit_data()
    fit = fit_ols_quadratic(x, y)
    assert fit.s2 is not None
    return fit.beta_hat, fit.s2 * fit.XtX_inv, fit.s2


def cd_replay_scenario(T: int = 500, seed: int = 0) -> SimScenario:
    """Scenario regenerating the 500-period extension of the Cd experiment."""
    mu, cov, _s2 = cd_beta_stats()
    return SimScenario(scheme=tuple(CD_REFS), beta_mean=mu, sigma2_E=0.0,
                       sigma2_W=0.0, T=T, x0_true=CD_UNKNOWN_TRUE,
                       beta_mode="iid_around_mean", seed=seed, beta_cov=cov)


def cd_replay(T: int = 500, seed: int = 0
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(refs, first-stage T x 4, second-stage T) for the Cd replay.

    First-stage responses come from independent coefficient draws around the
    fitted curve; the unknown's five recorded absorbances are cycled through
    the horizon.
    """
    from .simgen import gen_beta_path, gen_first_stage

    scn = cd_replay_scenario(T=T, seed=seed)
    rng = scn.rng()
    path = gen_beta_path(scn, rng)
    Y = gen_first_stage(scn, path, rng)
    y0 = np.resize(CD_UNKNOWN_ABSORBANCES, T)
    return CD_REFS.copy(), Y, y0


# ---------------------------------------------------------------------------
# Microwave radiometer bench calibration (synthesised to published stats).
# ---------------------------------------------------------------------------

RADIOMETER_T = 1400

RADIOMETER_TEMPS = {
    "cryo": 84.3,
    "135": 135.0,
    "245": 245.0,
    "amb": 296.2,
    "warm": 300.7,
}

RADIOMETER_MEANS = {
    "cryo": 0.0001120096,
    "135": 0.0001228344,
    "245": 0.0001415994,
    "amb": 0.0001481137,
    "warm": 0.0001486190,
}

RADIOMETER_SDS = {
    "cryo": 0.0000001280,
    "135": 0.0000001257,
    "245": 0.0000001233,
    "amb": 0.0000001308,
    "warm": 0.0000001236,
}

THREE_POINT = ("cryo", "amb", "warm")
FIVE_POINT = ("cryo", "135", "245", "amb", "warm")

#: Output voltage observed for the unknown scene; corresponds to 200 K.
RADIOMETER_Y0 = 0.0001347169
RADIOMETER_TRUE = 200.0

#: Reference temperature of the vertex stress scenario.
VERTEX_TARGET = 508.0

#: Fraction of each channel's variance carried by the slow gain drift.
DEFAULT_DRIFT_SHARE = 0.9


def _standardize(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    if sd == 0.0:
        return np.zeros_like(v)
    return (v - v.mean()) / sd


def radiometer_series(channels=FIVE_POINT, T: int = RADIOMETER_T, seed: int = 0,
                      drift_share: float = DEFAULT_DRIFT_SHARE,
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Synthesise voltage series matching the published summary statistics.

    Returns (reference temps, T x r voltages, T x r drift component).  Each
    channel is an independent slow random walk plus white noise, affinely
    standardised so the sample mean and standard deviation equal the
    published values exactly.  The drift component (returned separately) is
    the noise-free "true" channel level used to build stress scenarios.
    """
    if not 0.0 <= drift_share < 1.0:
        raise ValueError(f"drift_share must be in [0, 1), got {drift_share}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(900,)))
    temps = np.array([RADIOMETER_TEMPS[c] for c in channels])
    order = np.argsort(temps)
    channels = [channels[i] for i in order]
    temps = temps[order]

    r = len(channels)
    V = np.empty((T, r))
    drift_out = np.empty((T, r))
    for j, ch in enumerate(channels):
        walk = _standardize(np.cumsum(rng.standard_normal(T)))
        white = _standardize(rng.standard_normal(T))
        z = np.sqrt(drift_share) * walk + np.sqrt(1.0 - drift_share) * white
        # Re-standardise the mixture so published stats are hit exactly.
        z = _standardize(z)
        mu, sd = RADIOMETER_MEANS[ch], RADIOMETER_SDS[ch]
        V[:, j] = mu + sd * z
        drift_out[:, j] = mu + sd * np.sqrt(drift_share) * _standardize(walk)
    return temps, V, drift_out


def radiometer_scenario(points: int = 5, T: int = RADIOMETER_T, seed: int = 0,
                        drift_share: float = DEFAULT_DRIFT_SHARE,
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(refs, first stage, second stage) for the 3- or 5-point comparison.

    The unknown scene's voltage is the published constant; the truth is 200 K.
    """
    channels = THREE_POINT if points == 3 else FIVE_POINT
    temps, V, _ = radiometer_series(channels, T=T, seed=seed,
                                    drift_share=drift_share)
    y0 = np.full(T, RADIOMETER_Y0)
    return temps, V, y0


def vertex_scenario(T: int = RADIOMETER_T, seed: int = 0,
                    drift_share: float = DEFAULT_DRIFT_SHARE,
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Near-vertex stress case: the unknown sits at 508 K.

    The fitted 5-point curve peaks almost exactly there, so the second stage
    is generated by evaluating the per-time drifted curve at the target: the
    observation rides the vertex ordinate and the inverse problem is at the
    edge of solvability.
    """
    channels = FIVE_POINT
    temps, V, drift = radiometer_series(channels, T=T, seed=seed,
                                        drift_share=drift_share)
    X = np.column_stack([np.ones_like(temps), temps, temps ** 2])
    # Per-time exact quadratic through the drifted channel levels.
    coef, *_ = np.linalg.lstsq(X, drift.T, rcond=None)
    y0 = coef[0] + coef[1] * VERTEX_TARGET + coef[2] * VERTEX_TARGET ** 2
    return temps, V, y0


def shock_scenario(T: int = 700, seed: int = 0, long_window: bool = False
                   ) -> SimScenario:
    """Shock stress case: curvature glitches at t=250 and t=520.

    With ``long_window`` the disturbances last 100 periods and flip sign
    halfway through instead of lasting 20.
    """
    from .simgen import ShockWindow

    if long_window:
        windows = (ShockWindow(250, 100, sign_profile="half_negative_half_positive"),
                   ShockWindow(520, 100, sign_profile="half_negative_half_positive"))
    else:
        windows = (ShockWindow(250, 20), ShockWindow(520, 20))
    return SimScenario(scheme=(20.0, 90.0, 100.0), sigma2_E=1e-4, sigma2_W=5e-5,
                       T=T, x0_true=65.0, beta_mode="iid_around_mean",
                       shocks=windows, seed=seed)
