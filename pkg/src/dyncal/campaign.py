"""Monte Carlo study harness: paired dynamic-vs-static evaluation over a
variance grid, plus the bundled application scenarios."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import datasets, simgen, static
from .errors import NoRealRoot, VarianceUnavailable, VerticalTangent
from .metrics import CampaignSummary, ReplicationResult, campaign_summary, replication_metrics
from .model import build_design
from .sir import CalibrationConfig, CalibrationRun, dynamic_calibrate
from .simgen import SimScenario


@dataclass(frozen=True)
class CellResult:
    """Summaries for one (sigma2_E, sigma2_W) grid cell.

    ``sc`` is None for designs where the static fit has no residual degrees
    of freedom (3 references).
    """

    sigma2_E: float
    sigma2_W: float
    dc: CampaignSummary
    sc: CampaignSummary | None


def static_series(refs, Y, y0_series, alpha: float = 0.05
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-time static calibration: refit, invert, delta interval.

    Steps whose inverse does not exist fall back to the vertex abscissa with
    an empty (NaN) interval; such steps count as uncovered downstream.
    Returns (estimates, lower, upper).
    """
    refs = np.asarray(refs, dtype=float)
    Y = np.asarray(Y, dtype=float)
    T = Y.shape[0]
    est = np.empty(T)
    lo = np.full(T, np.nan)
    hi = np.full(T, np.nan)
    for t in range(T):
        fit = static.fit_ols_quadratic(refs, Y[t])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                xi = static.static_estimate(fit, float(y0_series[t]))
        except NoRealRoot as exc:
            est[t] = exc.vertex if exc.vertex is not None else np.nan
            continue
        est[t] = xi
        if fit.s2 is None:
            continue
        try:
            interval = static.delta_interval(fit, xi, sigma_y0=np.sqrt(fit.s2),
                                             alpha=alpha)
        except (VarianceUnavailable, VerticalTangent):
            continue
        lo[t] = interval.ci_lo
        hi[t] = interval.ci_hi
    return est, lo, hi


def _metrics_with_gaps(est, lo, hi, truth) -> ReplicationResult:
    """Replication metrics tolerating undefined (NaN) intervals.

    NaN intervals count as misses for coverage and are excluded from the
    width average.
    """
    est = np.asarray(est, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    truth = np.asarray(truth, dtype=float)
    defined = np.isfinite(lo) & np.isfinite(hi)
    covered = defined & (lo < truth) & (truth < hi)
    widths = (hi - lo)[defined]
    return ReplicationResult(
        mse=float(np.mean((est - truth) ** 2)),
        iw=float(np.mean(widths)) if widths.size else float("nan"),
        cp=float(np.mean(covered)),
        covered=covered,
    )


def generate_experiment(scn: SimScenario) -> tuple[np.ndarray, np.ndarray]:
    """(first stage, second stage) for a scenario, stage streams separated."""
    streams = scn.streams()
    path = simgen.gen_beta_path(scn, streams["beta"])
    if scn.shocks:
        path = simgen.apply_shocks(path, scn.shocks, streams["shocks"])
    Y = simgen.gen_first_stage(scn, path, streams["first"])
    y0 = simgen.gen_second_stage(scn, path, streams["second"])
    return Y, y0


def run_replication(scn: SimScenario, cfg: CalibrationConfig,
                    with_static: bool = True
                    ) -> tuple[ReplicationResult, ReplicationResult | None, CalibrationRun]:
    """Generate one synthetic experiment and evaluate both methods on it."""
    Y, y0 = generate_experiment(scn)
    truth = scn.x0_series()

    design = build_design(scn.scheme)
    run = dynamic_calibrate(design, Y, y0, cfg)
    dc = replication_metrics(run.medians, run.lower95, run.upper95, truth)

    sc = None
    if with_static and len(scn.scheme) > 3:
        est, lo, hi = static_series(np.asarray(scn.scheme), Y, y0)
        sc = _metrics_with_gaps(est, lo, hi, truth)
    return dc, sc, run


def run_cell(scheme, sigma2_E: float, sigma2_W: float, T: int, n_reps: int,
             cfg: CalibrationConfig, x0_true: float, seed: int) -> CellResult:
    """One grid cell: n_reps paired replications, aggregated."""
    root = np.random.SeedSequence(entropy=seed)
    rep_seeds = root.generate_state(n_reps, dtype=np.uint64)
    dc_reps, sc_reps = [], []
    for j in range(n_reps):
        scn = SimScenario(scheme=tuple(scheme), sigma2_E=sigma2_E,
                          sigma2_W=sigma2_W, T=T, x0_true=x0_true,
                          seed=int(rep_seeds[j]))
        rep_cfg = CalibrationConfig(
            alpha_E=cfg.alpha_E, M=cfg.M, N=cfg.N, m0=cfg.m0, C0=cfg.C0,
            seed=int(rep_seeds[j]) ^ 0x5DEECE66D, posterior_mode=cfg.posterior_mode,
            threads=cfg.threads, keep_samples=False)
        dc, sc, _ = run_replication(scn, rep_cfg)
        dc_reps.append(dc)
        if sc is not None:
            sc_reps.append(sc)
    return CellResult(
        sigma2_E=sigma2_E, sigma2_W=sigma2_W,
        dc=campaign_summary(dc_reps),
        sc=campaign_summary(sc_reps) if sc_reps else None)


def run_grid(scheme, sigma2_E_grid, sigma2_W_grid, T: int, n_reps: int,
             cfg: CalibrationConfig, x0_true: float, seed: int
             ) -> list[CellResult]:
    """Full campaign over the variance grid, deterministic per (seed, cell)."""
    cells = []
    for iw, sw in enumerate(sigma2_W_grid):
        for ie, se in enumerate(sigma2_E_grid):
            cell_seed = (seed * 1_000_003 + iw * 1009 + ie) & 0xFFFFFFFF
            cells.append(run_cell(scheme, se, sw, T, n_reps, cfg, x0_true,
                                  cell_seed))
    return cells


def radiometer_compare(T: int = datasets.RADIOMETER_T, seed: int = 0,
                       cfg: CalibrationConfig | None = None,
                       drift_share: float = datasets.DEFAULT_DRIFT_SHARE,
                       ) -> dict[str, tuple[ReplicationResult, CalibrationRun]]:
    """Three-point versus five-point reference placement on the same bench.

    Returns per-model replication metrics against the 200 K truth.
    """
    cfg = cfg or CalibrationConfig()
    out = {}
    for label, points in (("3pt", 3), ("5pt", 5)):
        temps, V, y0 = datasets.radiometer_scenario(points=points, T=T,
                                                    seed=seed,
                                                    drift_share=drift_share)
        run = dynamic_calibrate(build_design(temps), V, y0, cfg)
        truth = np.full(T, datasets.RADIOMETER_TRUE)
        out[label] = (replication_metrics(run.medians, run.lower95,
                                          run.upper95, truth), run)
    return out


def vertex_stress(T: int = datasets.RADIOMETER_T, seed: int = 0,
                  cfg: CalibrationConfig | None = None) -> CalibrationRun:
    """Near-vertex scenario: unknown at 508 K, on the curve's extremum."""
    cfg = cfg or CalibrationConfig()
    temps, V, y0 = datasets.vertex_scenario(T=T, seed=seed)
    return dynamic_calibrate(build_design(temps), V, y0, cfg)


def cd_example(T: int = 500, seed: int = 0,
               cfg: CalibrationConfig | None = None
               ) -> tuple[CalibrationRun, static.StaticEstimate]:
    """Cadmium replay plus the published-protocol baseline interval."""
    cfg = cfg or CalibrationConfig()
    refs, Y, y0 = datasets.cd_replay(T=T, seed=seed)
    run = dynamic_calibrate(build_design(refs), Y, y0, cfg)
    x, y = datasets.cd_fit_data()
    fit = static.fit_ols_quadratic(x, y)
    xi = static.static_estimate(fit, float(datasets.CD_UNKNOWN_ABSORBANCES.mean()))
    baseline = static.lundberg_interval(
        fit, xi, n_second=len(datasets.CD_UNKNOWN_ABSORBANCES))
    return run, baseline


def shock_example(T: int = 700, seed: int = 0, long_window: bool = False,
                  cfg: CalibrationConfig | None = None, windows=None
                  ) -> tuple[SimScenario, np.ndarray, np.ndarray, CalibrationRun]:
    """Shock stress case; returns (scenario, first stage, second stage, run).

    ``windows`` overrides the default glitch placement.
    """
    from dataclasses import replace as dc_replace

    cfg = cfg or CalibrationConfig()
    scn = datasets.shock_scenario(T=T, seed=seed, long_window=long_window)
    if windows is not None:
        scn = dc_replace(scn, shocks=tuple(windows))
    Y, y0 = generate_experiment(scn)
    run = dynamic_calibrate(build_design(scn.scheme), Y, y0, cfg)
    return scn, Y, y0, run
