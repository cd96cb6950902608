"""Evaluation statistics for Monte Carlo campaigns: per-replication MSE,
interval width and coverage, and their across-replication aggregates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCampaign, ShapeError


@dataclass(frozen=True)
class ReplicationResult:
    """One replication's error, width and coverage summaries."""

    mse: float
    iw: float
    cp: float
    covered: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.cp <= 1.0:
            raise ShapeError(f"coverage must lie in [0, 1], got {self.cp}")


@dataclass(frozen=True)
class CampaignSummary:
    ramse: float
    aviw: float
    avcp: float


def replication_metrics(est, lo, hi, truth) -> ReplicationResult:
    """Per-time metrics for one replication.

    Coverage uses strict inequalities: a truth exactly on an interval
    endpoint counts as a miss.
    """
    est, lo, hi, truth = (np.asarray(a, dtype=float).ravel()
                          for a in (est, lo, hi, truth))
    n = est.size
    if not (lo.size == hi.size == truth.size == n):
        raise ShapeError(
            f"length mismatch: est {n}, lo {lo.size}, hi {hi.size}, truth {truth.size}")
    if np.any(lo > hi):
        raise ShapeError("interval bounds out of order (lo > hi)")
    covered = (lo < truth) & (truth < hi)
    return ReplicationResult(
        mse=float(np.mean((est - truth) ** 2)),
        iw=float(np.mean(hi - lo)),
        cp=float(np.mean(covered)),
        covered=covered,
    )


def campaign_summary(reps) -> CampaignSummary:
    """Aggregate replications: root of the mean MSE, mean width, mean coverage."""
    reps = list(reps)
    if not reps:
        raise EmptyCampaign("no replications to summarize")
    return CampaignSummary(
        ramse=float(np.sqrt(np.mean([r.mse for r in reps]))),
        aviw=float(np.mean([r.iw for r in reps])),
        avcp=float(np.mean([r.cp for r in reps])),
    )
