"""Building flood risk: buffer statistics, at-risk gate, direct damage cost.

Depths are sampled on non-building cells whose centres fall inside a buffer
around each building (offset 150% of the cell size) but outside its
footprint. A building is not at risk only when both the mean and the 90th
percentile of the sampled maximum depths sit below fixed thresholds; at-risk
buildings are costed from depth-damage curves at the 90th percentile depth.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .catchment import Building, Catchment, Polygon, rasterize_polygons
from .errors import ConfigError, InputError
from .flood.engine import DepthField

__all__ = [
    "DamageCurve",
    "BuildingRisk",
    "BUFFER_CELLS",
    "MEAN_DEPTH_THRESHOLD_M",
    "P90_DEPTH_THRESHOLD_M",
    "building_buffer",
    "depth_stats",
    "classify_risk",
    "damage_lookup",
    "candidate_ddc",
    "RiskEvaluator",
]

BUFFER_CELLS = 1.5  # buffer offset as a multiple of the cell size
MEAN_DEPTH_THRESHOLD_M = 0.1
P90_DEPTH_THRESHOLD_M = 0.3


@dataclass(frozen=True)
class DamageCurve:
    """Depth-damage points: per property for residential buildings, per m²
    for non-residential ones. Lookups clamp beyond the last point."""

    category: str
    depths: np.ndarray
    damages: np.ndarray

    def __post_init__(self) -> None:
        if len(self.depths) < 2:
            raise InputError("damage curve needs at least two points")
        if self.depths[0] != 0.0 or self.damages[0] != 0.0:
            raise InputError("damage curve must start at (0, 0)")
        if not (np.diff(self.depths) > 0).all():
            raise InputError("damage curve depths must be strictly increasing")
        if (self.damages < 0).any() or not (np.diff(self.damages) >= 0).all():
            raise InputError("damage curve values must be non-negative and non-decreasing")

    @staticmethod
    def from_csv(path: str, category: str) -> "DamageCurve":
        """Read a `depth_m,value` CSV."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = [ln.strip() for ln in fh if ln.strip()]
        except OSError as exc:
            raise InputError(f"cannot read damage curve {path}: {exc}") from exc
        if not lines or lines[0] != "depth_m,value":
            raise InputError(f"{path}: damage curve header must be 'depth_m,value'")
        depths, damages = [], []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 2:
                raise InputError(f"{path} line {lineno}: expected two columns")
            try:
                depths.append(float(parts[0]))
                damages.append(float(parts[1]))
            except ValueError as exc:
                raise InputError(f"{path} line {lineno}: non-numeric value") from exc
        return DamageCurve(category, np.asarray(depths), np.asarray(damages))


@dataclass(frozen=True)
class BuildingRisk:
    building_id: str
    category: str
    d_mean: float
    d_p90: float
    at_risk: int
    ddc: float
    assessable: bool = True


class UnassessableBuilding(InputError):
    """Raised when a building's buffer contains no sampling cells."""


def building_buffer(building: Building, cellsize: float):
    """Outward rounded-corner offset of the footprint by 1.5 cell sizes."""
    if cellsize <= 0.0:
        raise InputError(f"cellsize must be positive, got {cellsize}")
    from shapely.geometry import Polygon as ShapelyPolygon

    footprint = building.footprint
    shp = ShapelyPolygon(footprint[0], holes=footprint[1:])
    if shp.is_empty or not shp.is_valid:
        raise InputError(f"building {building.id!r}: degenerate footprint")
    return shp.buffer(BUFFER_CELLS * cellsize)


def depth_stats(field: DepthField, sample_cells: np.ndarray) -> tuple[float, float]:
    """(mean, 90th percentile) of max depths over the sampling cells.

    The percentile interpolates linearly at rank 0.9*(n-1) of the ascending
    sample.
    """
    if len(sample_cells) == 0:
        raise UnassessableBuilding("no sampling cells inside the buffer")
    vals = field.max_depth.ravel()[sample_cells]
    return float(np.mean(vals)), float(np.percentile(vals, 90.0, method="linear"))


def classify_risk(d_mean: float, d_p90: float) -> int:
    """0 only when the mean and 90th percentile both sit below threshold."""
    if not (np.isfinite(d_mean) and np.isfinite(d_p90)) or d_mean < 0 or d_p90 < 0:
        raise InputError(f"depth statistics must be finite and >= 0, got ({d_mean}, {d_p90})")
    if d_mean < MEAN_DEPTH_THRESHOLD_M and d_p90 < P90_DEPTH_THRESHOLD_M:
        return 0
    return 1


def damage_lookup(curve: DamageCurve, depth: float) -> float:
    """Piecewise-linear interpolation, clamped at the last curve point."""
    if depth < 0.0:
        raise InputError(f"depth must be >= 0, got {depth}")
    return float(np.interp(depth, curve.depths, curve.damages))


def _buffer_ring(buffer_poly) -> Polygon:
    xy = np.asarray(buffer_poly.exterior.coords, dtype=np.float64)
    return [xy]


class RiskEvaluator:
    """Precomputes per-building sampling cells for repeated evaluations."""

    def __init__(self, catchment: Catchment, curves: dict[str, DamageCurve]):
        for cat in ("residential", "non_residential"):
            if cat not in curves:
                raise ConfigError(f"missing damage curve for category {cat!r}")
        self.catchment = catchment
        self.curves = curves
        grid = catchment.grid
        building_flat = catchment.building_mask().ravel()
        self.sample_cells: list[np.ndarray] = []
        for b in catchment.buildings:
            buf = building_buffer(b, grid.cellsize)
            in_buffer = rasterize_polygons([_buffer_ring(buf)], grid)
            in_footprint = rasterize_polygons([b.footprint], grid)
            cells = np.setdiff1d(in_buffer, in_footprint, assume_unique=True)
            cells = cells[~building_flat[cells]]
            self.sample_cells.append(cells)

    def evaluate(self, field: DepthField) -> tuple[float, list[BuildingRisk]]:
        total = 0.0
        rows: list[BuildingRisk] = []
        for b, cells in zip(self.catchment.buildings, self.sample_cells):
            try:
                d_mean, d_p90 = depth_stats(field, cells)
            except UnassessableBuilding:
                rows.append(
                    BuildingRisk(b.id, b.category, np.nan, np.nan, 0, 0.0, assessable=False)
                )
                continue
            at_risk = classify_risk(d_mean, d_p90)
            if at_risk:
                damage = damage_lookup(self.curves[b.category], d_p90)
                ddc = damage if b.category == "residential" else b.area_m2 * damage
            else:
                ddc = 0.0
            total += ddc
            rows.append(BuildingRisk(b.id, b.category, d_mean, d_p90, at_risk, ddc))
        return total, rows


_evaluator_cache: "weakref.WeakKeyDictionary[Catchment, RiskEvaluator]" = (
    weakref.WeakKeyDictionary()
)


def candidate_ddc(
    field: DepthField, catchment: Catchment, curves: dict[str, DamageCurve]
) -> tuple[float, list[BuildingRisk]]:
    """Total direct damage cost and the per-building breakdown."""
    ev = _evaluator_cache.get(catchment)
    if ev is None or ev.curves is not curves:
        ev = RiskEvaluator(catchment, curves)
        _evaluator_cache[catchment] = ev
    return ev.evaluate(field)


def building_risk_csv(rows: list[BuildingRisk]) -> str:
    """Per-building export: building_id,category,d_mean,d_p90,at_risk,ddc."""
    out = ["building_id,category,d_mean,d_p90,at_risk,ddc"]
    for r in rows:
        out.append(
            f"{r.building_id},{r.category},{r.d_mean!r},{r.d_p90!r},{r.at_risk},{r.ddc!r}"
        )
    return "\n".join(out) + "\n"
