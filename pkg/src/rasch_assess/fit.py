"""Residual-based fit diagnostics: infit/outfit mean squares and flags.

Outfit is the plain mean of squared standardized residuals, so a single wild
response on an off-target cell inflates it sharply; infit weights each squared
residual by the cell's model variance, damping the influence of cells the
model barely constrains. Values near 1.0 say the data behave as modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as K
from .engine import CalibrationResult, _prepare
from .errors import DegenerateCellError
from .ingest import CodedMatrix

__all__ = [
    "DEFAULT_BAND",
    "STRICT_BAND",
    "FitStatistic",
    "FitFlag",
    "FitReport",
    "standardized_residual",
    "fit_statistics",
    "flag_fit",
]

DEFAULT_BAND = (0.5, 2.0)
STRICT_BAND = (0.5, 1.5)


@dataclass(frozen=True)
class FitStatistic:
    target_id: str
    infit_mnsq: float
    outfit_mnsq: float


@dataclass(frozen=True)
class FitFlag:
    classification: str  # acceptable | overfit | misfit
    band: tuple[float, float]


@dataclass(frozen=True)
class FitReport:
    item_stats: dict[str, FitStatistic]
    person_stats: dict[str, FitStatistic]
    # ids excluded from diagnostics (extreme, or no usable cells)
    skipped_items: tuple[str, ...]
    skipped_persons: tuple[str, ...]


def standardized_residual(x: float, e: float, w: float) -> float:
    """Observed minus expected, in model standard deviations."""
    if w <= 0:
        raise DegenerateCellError(f"cell variance {w} is not positive")
    return (x - e) / math.sqrt(w)


def fit_statistics(matrix: CodedMatrix, result: CalibrationResult) -> FitReport:
    """Infit/outfit mean squares per non-extreme item and person, computed
    from the calibrated parameters on the estimation scale."""
    prep = _prepare(matrix, warn=False)
    person_ids = np.array(matrix.person_ids)[prep.active_p]
    item_ids = np.array(matrix.item_ids)[prep.active_i]
    beta = np.array([result.person(p).measure for p in person_ids])
    delta = np.array([result.item(i).difficulty for i in item_ids])
    tau = np.asarray(result.thresholds, dtype=float)

    x = prep.x
    obs = x >= 0
    e, w = K.esw(beta, delta, tau)
    sq = np.where(obs, (x - e) ** 2, 0.0)
    z2 = np.where(obs, sq / w, 0.0)
    wm = np.where(obs, w, 0.0)

    def stats_along(axis, ids):
        out = {}
        skipped = []
        counts = obs.sum(axis=axis)
        for k, target in enumerate(ids):
            take = (slice(None), k) if axis == 0 else (k, slice(None))
            n = counts[k]
            wsum = wm[take].sum()
            if n == 0 or wsum <= 0:
                skipped.append(str(target))
                continue
            out[str(target)] = FitStatistic(
                target_id=str(target),
                infit_mnsq=float(sq[take].sum() / wsum),
                outfit_mnsq=float(z2[take].sum() / n),
            )
        return out, tuple(skipped)

    item_stats, skipped_i = stats_along(0, item_ids)
    person_stats, skipped_p = stats_along(1, person_ids)
    return FitReport(
        item_stats=item_stats,
        person_stats=person_stats,
        skipped_items=tuple(result.excluded_items) + skipped_i,
        skipped_persons=tuple(result.excluded_persons) + skipped_p,
    )


def flag_fit(stats: FitStatistic, band: tuple[float, float] = DEFAULT_BAND) -> FitFlag:
    """Classify a statistic against an acceptability band: any mean square
    above the band is misfit, else any below is overfit, else acceptable."""
    low, high = band
    if not low < 1 < high:
        raise ValueError(f"band must straddle 1.0, got {band}")
    values = (stats.infit_mnsq, stats.outfit_mnsq)
    if any(v > high for v in values):
        classification = "misfit"
    elif any(v < low for v in values):
        classification = "overfit"
    else:
        classification = "acceptable"
    return FitFlag(classification=classification, band=(low, high))
