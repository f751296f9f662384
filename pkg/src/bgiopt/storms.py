"""Design rainstorm generation.

Total storm depth comes from a depth-duration-frequency relation driven by
four catchment descriptors; the within-storm timing follows a symmetric,
peak-centred cumulative profile. Climate uplifts scale a finished storm and
can be mapped back to an equivalent return period on the baseline scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, InputError

__all__ = [
    "DdfDescriptors",
    "ProfileParams",
    "DesignStorm",
    "ClimateUplift",
    "gumbel_reduced_variate",
    "ddf_total_depth",
    "profile_fraction",
    "build_hyetograph",
    "apply_uplift",
    "equivalent_return_period",
]


@dataclass(frozen=True)
class DdfDescriptors:
    """Catchment descriptors of the depth-duration-frequency relation."""

    c: float
    d1: float
    e: float
    f: float

    def __post_init__(self) -> None:
        for name in ("c", "d1", "e", "f"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"DDF descriptor {name!r} must be finite")


@dataclass(frozen=True)
class ProfileParams:
    """Parameters of the cumulative rainfall profile y = (1 - a^(x^b)) / (1 - a)."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (0.0 < self.a < 1.0):
            raise InputError(f"profile parameter a must lie in (0, 1), got {self.a}")
        if self.b <= 0.0:
            raise InputError(f"profile parameter b must be positive, got {self.b}")


@dataclass(frozen=True)
class DesignStorm:
    """A discretized design storm.

    steps holds (interval length in seconds, intensity in mm/h) pairs; the
    step depths are symmetric about the storm midpoint and sum to
    total_depth_mm.
    """

    return_period_yr: float
    duration_min: float
    total_depth_mm: float
    steps: tuple[tuple[float, float], ...]

    def validate(self) -> None:
        if not self.steps:
            raise InputError("storm has no steps")
        if any(i < 0.0 for _, i in self.steps):
            raise InputError("storm intensities must be non-negative")
        total = sum(dt * i / 3600.0 for dt, i in self.steps)
        if abs(total - self.total_depth_mm) > 1e-9 * max(abs(self.total_depth_mm), 1e-30):
            raise InputError(
                f"step depths sum to {total} mm, expected {self.total_depth_mm} mm"
            )
        n = len(self.steps)
        for k in range(n // 2):
            if not math.isclose(self.steps[k][1], self.steps[n - 1 - k][1], rel_tol=1e-9):
                raise InputError("storm profile is not symmetric about its midpoint")

    def step_depths_mm(self) -> list[float]:
        return [dt * i / 3600.0 for dt, i in self.steps]


@dataclass(frozen=True)
class ClimateUplift:
    """Fractional rainfall increase (0.15 / 0.30 / 0.45 are the named levels)."""

    fraction: float

    def __post_init__(self) -> None:
        if self.fraction < 0.0:
            raise InputError(f"uplift fraction must be >= 0, got {self.fraction}")


def gumbel_reduced_variate(return_period_yr: float) -> float:
    """Return y = -ln(-ln(1 - 1/T)) for a return period T > 1."""
    if return_period_yr <= 1.0:
        raise InputError(f"return period must exceed 1 year, got {return_period_yr}")
    return -math.log(-math.log(1.0 - 1.0 / return_period_yr))


def ddf_total_depth(
    return_period_yr: float, duration_hr: float, desc: DdfDescriptors
) -> float:
    """Total rainfall depth (mm) via ln(R) = (c*y + d1)*ln(D) + e*y + f.

    D is the storm duration in hours.
    """
    if duration_hr <= 0.0:
        raise InputError(f"duration must be positive, got {duration_hr} h")
    y = gumbel_reduced_variate(return_period_yr)
    ln_r = (desc.c * y + desc.d1) * math.log(duration_hr) + desc.e * y + desc.f
    return math.exp(ln_r)


def profile_fraction(x: float, p: ProfileParams) -> float:
    """Cumulative rainfall fraction in the central window spanning proportion x."""
    if not 0.0 <= x <= 1.0:
        raise InputError(f"profile argument must lie in [0, 1], got {x}")
    z = x**p.b
    return (1.0 - p.a**z) / (1.0 - p.a)


def build_hyetograph(
    total_depth_mm: float,
    duration_min: float,
    n_steps: int,
    p: ProfileParams,
    return_period_yr: float = 0.0,
) -> DesignStorm:
    """Discretize a storm into an even number of peak-centred steps.

    The cumulative depth of the central window covering proportion x of the
    duration is total_depth * profile_fraction(x); each window increment is
    split equally between the mirrored step pair, so the result is symmetric
    and conserves the total by construction.
    """
    if n_steps < 2 or n_steps % 2 != 0:
        raise ConfigError(f"step count must be even and >= 2, got {n_steps}")
    if total_depth_mm <= 0.0:
        raise InputError(f"total depth must be positive, got {total_depth_mm}")
    if duration_min <= 0.0:
        raise InputError(f"duration must be positive, got {duration_min}")

    half = n_steps // 2
    depths = [0.0] * n_steps
    cum_prev = 0.0
    for k in range(1, half + 1):
        cum = total_depth_mm * profile_fraction(k / half, p)
        pair_depth = 0.5 * (cum - cum_prev)
        depths[half - k] = pair_depth
        depths[half + k - 1] = pair_depth
        cum_prev = cum

    dt_s = duration_min * 60.0 / n_steps
    steps = tuple((dt_s, d / dt_s * 3600.0) for d in depths)
    storm = DesignStorm(
        return_period_yr=return_period_yr,
        duration_min=duration_min,
        total_depth_mm=total_depth_mm,
        steps=steps,
    )
    storm.validate()
    return storm


def design_storm(
    return_period_yr: float,
    duration_min: float,
    n_steps: int,
    desc: DdfDescriptors,
    p: ProfileParams,
) -> DesignStorm:
    """Build the design storm for one return period from DDF descriptors."""
    depth = ddf_total_depth(return_period_yr, duration_min / 60.0, desc)
    return build_hyetograph(depth, duration_min, n_steps, p, return_period_yr)


def apply_uplift(storm: DesignStorm, uplift: ClimateUplift) -> DesignStorm:
    """Scale every intensity and the total depth by (1 + fraction)."""
    factor = 1.0 + uplift.fraction
    return DesignStorm(
        return_period_yr=storm.return_period_yr,
        duration_min=storm.duration_min,
        total_depth_mm=storm.total_depth_mm * factor,
        steps=tuple((dt, i * factor) for dt, i in storm.steps),
    )


def equivalent_return_period(
    base_period_yr: float,
    uplift: ClimateUplift,
    duration_hr: float,
    desc: DdfDescriptors,
) -> float:
    """Return period whose baseline depth equals the uplifted base-period depth.

    Closed form: the DDF relation is linear in the reduced variate with slope
    c*ln(D) + e, so the uplift shifts y by ln(1+u) / slope.
    """
    if duration_hr <= 0.0:
        raise InputError(f"duration must be positive, got {duration_hr} h")
    slope = desc.c * math.log(duration_hr) + desc.e
    if slope == 0.0:
        raise InputError(
            "uplift cannot be expressed as a return-period shift: c*ln(D) + e is zero"
        )
    y = gumbel_reduced_variate(base_period_yr)
    y_shifted = y + math.log(1.0 + uplift.fraction) / slope
    return 1.0 / (1.0 - math.exp(-math.exp(-y_shifted)))


def storm_to_csv(storm: DesignStorm) -> str:
    """Serialize a storm as the two-column time_s,intensity_mm_per_hr CSV."""
    lines = ["time_s,intensity_mm_per_hr"]
    t = 0.0
    for dt, intensity in storm.steps:
        lines.append(f"{t!r},{intensity!r}")
        t += dt
    return "\n".join(lines) + "\n"


def storm_from_csv(text: str, return_period_yr: float = 0.0) -> DesignStorm:
    """Parse a storm CSV produced by storm_to_csv (uniform step length)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "time_s,intensity_mm_per_hr":
        raise InputError("storm CSV must start with header 'time_s,intensity_mm_per_hr'")
    times: list[float] = []
    intensities: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise InputError(f"storm CSV line {lineno}: expected two columns")
        try:
            times.append(float(parts[0]))
            intensities.append(float(parts[1]))
        except ValueError as exc:
            raise InputError(f"storm CSV line {lineno}: non-numeric value") from exc
    if len(times) < 1:
        raise InputError("storm CSV has no data rows")
    if len(times) > 1:
        dt = times[1] - times[0]
        for a, b in zip(times, times[1:]):
            if not math.isclose(b - a, dt, rel_tol=1e-9, abs_tol=1e-9):
                raise InputError("storm CSV time steps must be uniform")
    else:
        raise InputError("storm CSV needs at least two rows to infer the step length")
    steps = tuple((dt, i) for i in intensities)
    total = sum(dt * i / 3600.0 for dt, i in steps)
    return DesignStorm(
        return_period_yr=return_period_yr,
        duration_min=(times[-1] + dt) / 60.0,
        total_depth_mm=total,
        steps=steps,
    )
