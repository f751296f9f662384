"""Disparity metrics between Pareto fronts of (cost, risk) solutions.

Between discrete solutions a front is read as a staircase envelope (minimum
risk attainable at or below a given cost), which never credits interventions
that have not been paid for. Areas under fronts use the trapezoidal rule on
the raw sorted points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

__all__ = [
    "FrontCurve",
    "RiskRange",
    "envelope_risk",
    "risk_differences",
    "as_percent_of_range",
    "aupf",
    "delta_aupf",
    "zone_contribution",
]


@dataclass(frozen=True)
class FrontCurve:
    """Cost-ascending (cost, risk) points; cost ties keep the minimum risk."""

    costs: np.ndarray
    risks: np.ndarray
    provenance: str = ""

    @staticmethod
    def from_points(points: Sequence[tuple[float, float]], provenance: str = "") -> "FrontCurve":
        if not points:
            raise InputError("front has no points")
        arr = sorted((float(c), float(r)) for c, r in points)
        dedup: dict[float, float] = {}
        for c, r in arr:
            dedup[c] = min(r, dedup.get(c, np.inf))
        costs = np.array(sorted(dedup), dtype=np.float64)
        risks = np.array([dedup[c] for c in sorted(dedup)], dtype=np.float64)
        return FrontCurve(costs=costs, risks=risks, provenance=provenance)

    def __len__(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class RiskRange:
    """Risk span between no intervention and maximum intervention."""

    baseline: float
    max_intervention: float

    @property
    def span(self) -> float:
        return self.baseline - self.max_intervention


def envelope_risk(front: FrontCurve, cost: float) -> float:
    """Minimum risk over all front points with cost <= the given cost."""
    if cost < front.costs[0]:
        raise InputError(
            f"cost {cost} is below the cheapest front solution ({front.costs[0]})"
        )
    k = int(np.searchsorted(front.costs, cost, side="right"))
    return float(np.minimum.accumulate(front.risks)[k - 1])


def _common_costs(ref: FrontCurve, trial: FrontCurve) -> np.ndarray:
    lo = max(ref.costs[0], trial.costs[0])
    hi = min(ref.costs[-1], trial.costs[-1])
    union = np.union1d(ref.costs, trial.costs)
    return union[(union >= lo) & (union <= hi)]


def risk_differences(ref: FrontCurve, trial: FrontCurve) -> tuple[float, float]:
    """(MaxRD, MedRD): largest and median absolute envelope gap.

    Evaluated on the union of both fronts' cost values clipped to the overlap
    of their spans; both fronts must include the zero-cost baseline.
    """
    if ref.costs[0] != 0.0 or trial.costs[0] != 0.0:
        raise InputError("both fronts must start at cost 0 (baseline solution)")
    costs = _common_costs(ref, trial)
    if len(costs) == 0:
        raise InputError("fronts share no cost range")
    ref_env = np.minimum.accumulate(ref.risks)
    trial_env = np.minimum.accumulate(trial.risks)
    kr = np.searchsorted(ref.costs, costs, side="right") - 1
    kt = np.searchsorted(trial.costs, costs, side="right") - 1
    gaps = np.abs(trial_env[kt] - ref_env[kr])
    return float(np.max(gaps)), float(np.median(gaps))


def as_percent_of_range(value: float, rr: RiskRange) -> float:
    """Express a risk gap as a percentage of the baseline-to-maximum span."""
    if rr.span == 0.0:
        raise InputError("risk range is zero (baseline equals maximum intervention)")
    if rr.span < 0.0:
        logger.warning(
            "risk range is negative: maximum intervention (%s) exceeds baseline (%s)",
            rr.max_intervention,
            rr.baseline,
        )
    return 100.0 * value / rr.span


def aupf(front: FrontCurve) -> float:
    """Area under the front: trapezoids over consecutive sorted points."""
    if len(front) < 2:
        raise InputError("AUPF needs at least two front points")
    c, r = front.costs, front.risks
    return float(np.sum((c[1:] - c[:-1]) * (r[:-1] + r[1:]) * 0.5))


def envelope_curve(front: FrontCurve) -> FrontCurve:
    """The front with risks replaced by their running minimum."""
    return FrontCurve(
        costs=front.costs,
        risks=np.minimum.accumulate(front.risks),
        provenance=front.provenance + "/envelope" if front.provenance else "envelope",
    )


def delta_aupf(ref_area: float, trial_area: float) -> tuple[float, float]:
    """(absolute difference, percent of the reference area)."""
    if ref_area <= 0.0:
        raise InputError(f"reference area must be positive, got {ref_area}")
    absolute = trial_area - ref_area
    return absolute, 100.0 * absolute / ref_area


def zone_contribution(genomes: Sequence[Sequence[int]]) -> np.ndarray:
    """Per-zone appearance frequency among non-baseline front solutions."""
    if len(genomes) == 0:
        raise InputError("front has no solutions")
    arr = np.asarray(genomes, dtype=np.uint8)
    non_baseline = arr[arr.any(axis=1)]
    if len(non_baseline) == 0:
        raise InputError("front contains only the baseline genome")
    return non_baseline.mean(axis=0)
