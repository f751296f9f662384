"""Life-cycle costs, expected annual damage, and benefit-cost ratios."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .catchment import Zone
from .errors import InputError

__all__ = [
    "CostParams",
    "inflate",
    "zone_lcc",
    "candidate_lcc",
    "d_infin",
    "ead",
    "benefit_cost",
]


@dataclass(frozen=True)
class CostParams:
    """Unit costs per m² of installed permeable surface.

    Inflation compounds over inflate_years (guideline base year to analysis
    year); the annual operational cost accrues over the whole lifespan.
    """

    capital_per_m2: float
    operational_per_m2_yr: float
    inflation: float = 0.0
    inflate_years: int = 0
    lifespan_yr: int = 40

    def __post_init__(self) -> None:
        for name in ("capital_per_m2", "operational_per_m2_yr", "inflation"):
            if getattr(self, name) < 0.0:
                raise InputError(f"cost parameter {name} must be >= 0")
        if self.inflate_years < 0:
            raise InputError("inflate_years must be >= 0")
        if self.lifespan_yr < 1:
            raise InputError("lifespan must be >= 1 year")

    def unit_cost_per_m2(self) -> float:
        capital = inflate(self.capital_per_m2, self.inflation, self.inflate_years)
        operational = inflate(self.operational_per_m2_yr, self.inflation, self.inflate_years)
        return capital + operational * self.lifespan_yr


def inflate(base_value: float, rate: float, years: int) -> float:
    """Future value after compounding: BV * (1 + i)^n."""
    if years < 0 or years != int(years):
        raise InputError(f"inflation years must be a non-negative integer, got {years}")
    return base_value * (1.0 + rate) ** int(years)


def zone_lcc(zone: Zone, cp: CostParams) -> float:
    """Life-cycle cost of one zone: unit cost times installed area."""
    return cp.unit_cost_per_m2() * zone.area_m2


def candidate_lcc(bits: Sequence[int], zones: Sequence[Zone], cp: CostParams) -> float:
    """Sum of zone LCCs over the set bits of a candidate genome."""
    if len(bits) != len(zones):
        raise InputError(f"genome length {len(bits)} does not match {len(zones)} zones")
    unit = cp.unit_cost_per_m2()
    return float(sum(unit * z.area_m2 for b, z in zip(bits, zones) if b))


def d_infin(ddc_largest: float, ddc_second: float, t_largest: float = 100.0,
            t_second: float = 50.0) -> float:
    """Extrapolated damage beyond the largest return period, floored at zero.

    The exceedance-probability ratio (1/T_l) / (1/T_s - 1/T_l) simplifies to
    T_s / (T_l - T_s); written that way the canonical {50, 100} pair gives a
    ratio of exactly one, so the result is exactly max(0, 2*DDC_100 - DDC_50).
    """
    if ddc_largest < 0.0 or ddc_second < 0.0:
        raise InputError("damage costs must be >= 0")
    if not t_second < t_largest:
        raise InputError("return periods must be strictly ascending")
    ratio = t_second / (t_largest - t_second)
    return max(0.0, ddc_largest * (1.0 + ratio) - ddc_second * ratio)


def ead(ddc_by_period: Mapping[float, float]) -> float:
    """Expected annual damage: trapezoids over exceedance probability.

    Consecutive return periods contribute (DDC_k + DDC_k+1)(1/T_k - 1/T_k+1)/2
    and the tail adds (DDC_last + D_INFIN)(1/T_last)/2 with the extrapolation
    taken from the two largest periods.
    """
    periods = sorted(ddc_by_period)
    if len(periods) < 2:
        raise InputError("EAD needs at least two return periods")
    if any(t <= 0 for t in periods):
        raise InputError("return periods must be positive")
    ddc = [ddc_by_period[t] for t in periods]
    if any(d < 0.0 for d in ddc):
        raise InputError("damage costs must be >= 0")

    total = 0.0
    for k in range(len(periods) - 1):
        total += (ddc[k] + ddc[k + 1]) * (1.0 / periods[k] - 1.0 / periods[k + 1])
    tail = d_infin(ddc[-1], ddc[-2], periods[-1], periods[-2])
    total += (ddc[-1] + tail) * (1.0 / periods[-1])
    return 0.5 * total


def benefit_cost(
    ead_baseline: float, ead_bgi: float, lifespan_yr: float, lcc: float
) -> float | None:
    """Lifetime benefit-cost ratio; None for the zero-cost baseline solution."""
    if lcc < 0.0:
        raise InputError("life-cycle cost must be >= 0")
    if lcc == 0.0:
        return None
    return (ead_baseline - ead_bgi) * lifespan_yr / lcc
