"""Catchment assembly: DEM, land-use masks, buildings, and permeable zones.

Vector layers come in as GeoJSON; everything is rasterized onto the DEM grid
by cell-centre membership (even-odd rule) so the hydrology and the costing
see the same footprints.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .rasters import Grid

logger = logging.getLogger(__name__)

__all__ = [
    "MASK_IMPERVIOUS",
    "MASK_GREEN",
    "MASK_BUILDING",
    "Building",
    "Zone",
    "Catchment",
    "rasterize_polygons",
    "assemble_catchment",
    "load_catchment",
]

MASK_IMPERVIOUS = 0
MASK_GREEN = 1
MASK_BUILDING = 2

# A ring is an (n, 2) vertex array; a polygon is its exterior ring followed
# by any hole rings.
Ring = np.ndarray
Polygon = list[Ring]

RESIDENTIAL = "residential"
NON_RESIDENTIAL = "non_residential"
CATEGORIES = (RESIDENTIAL, NON_RESIDENTIAL)


@dataclass(frozen=True, eq=False)
class Building:
    id: str
    category: str
    footprint: Polygon
    area_m2: float


@dataclass(frozen=True, eq=False)
class Zone:
    index: int
    polygons: list[Polygon]
    area_m2: float
    cells: np.ndarray  # sorted flat cell indices


@dataclass(frozen=True, eq=False)
class Catchment:
    grid: Grid
    elevation: np.ndarray
    masks: np.ndarray
    buildings: list[Building]
    zones: list[Zone]
    warnings: list[str] = field(default_factory=list)

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def building_mask(self) -> np.ndarray:
        return self.masks == MASK_BUILDING


def _as_ring(vertices) -> Ring:
    ring = np.asarray(vertices, dtype=np.float64)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise InputError("polygon ring must be a sequence of (x, y) pairs")
    if len(ring) >= 2 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        raise InputError("degenerate polygon: fewer than 3 distinct vertices")
    return ring


def ring_area(ring: Ring) -> float:
    """Unsigned shoelace area of one ring."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_area(poly: Polygon) -> float:
    """Exterior area minus hole areas."""
    area = ring_area(poly[0])
    for hole in poly[1:]:
        area -= ring_area(hole)
    return area


def _points_in_polygon(px: np.ndarray, py: np.ndarray, poly: Polygon) -> np.ndarray:
    """Even-odd ray-casting membership test for a batch of points."""
    inside = np.zeros(px.shape, dtype=bool)
    for ring in poly:
        xa, ya = ring[:, 0], ring[:, 1]
        xb, yb = np.roll(xa, -1), np.roll(ya, -1)
        for k in range(len(ring)):
            y1, y2 = ya[k], yb[k]
            if y1 == y2:
                continue
            crosses = (y1 > py) != (y2 > py)
            if not crosses.any():
                continue
            x_int = xa[k] + (py - y1) * (xb[k] - xa[k]) / (y2 - y1)
            inside ^= crosses & (px < x_int)
    return inside


def rasterize_polygons(polygons: list[Polygon], grid: Grid) -> np.ndarray:
    """Flat indices of cells whose centre lies inside any of the polygons."""
    for poly in polygons:
        if not poly:
            raise InputError("empty polygon")
        for ring in poly:
            if len(ring) < 3:
                raise InputError("degenerate polygon: fewer than 3 distinct vertices")

    cx, cy = grid.cell_centers()
    hit = np.zeros(grid.shape, dtype=bool)
    for poly in polygons:
        allv = np.concatenate(poly)
        # clip the candidate window to the polygon's bounding box
        c0 = int(np.searchsorted(cx, allv[:, 0].min()))
        c1 = int(np.searchsorted(cx, allv[:, 0].max(), side="right"))
        rows = np.nonzero((cy >= allv[:, 1].min()) & (cy <= allv[:, 1].max()))[0]
        if c0 >= c1 or len(rows) == 0:
            continue
        r0, r1 = int(rows[0]), int(rows[-1]) + 1
        gx, gy = np.meshgrid(cx[c0:c1], cy[r0:r1])
        sub = _points_in_polygon(gx.ravel(), gy.ravel(), poly)
        hit[r0:r1, c0:c1] |= sub.reshape(r1 - r0, c1 - c0)
    return np.flatnonzero(hit).astype(np.int64)


def _check_extent(poly: Polygon, grid: Grid, what: str) -> None:
    allv = np.concatenate(poly)
    if (
        allv[:, 0].min() < grid.xll
        or allv[:, 0].max() > grid.xmax
        or allv[:, 1].min() < grid.yll
        or allv[:, 1].max() > grid.ymax
    ):
        raise InputError(f"{what} extends beyond the DEM extent")


def assemble_catchment(
    dem: tuple[Grid, np.ndarray],
    landuse: list[Polygon],
    buildings: list[tuple[str, str, Polygon]],
    zones: list[tuple[int, list[Polygon]]],
) -> Catchment:
    """Rasterize all layers onto the DEM grid.

    Mask precedence is building > green > impervious; zone membership is kept
    separately per zone. Zone cells under buildings are dropped with a
    warning, and a zone left with no cells is a validation error.
    """
    grid, elevation = dem
    if np.isnan(elevation).any():
        raise InputError("DEM contains NODATA cells; a complete elevation grid is required")

    from shapely.geometry import Polygon as ShapelyPolygon

    warnings: list[str] = []
    masks = np.full(grid.shape, MASK_IMPERVIOUS, dtype=np.uint8)

    for poly in landuse:
        _check_extent(poly, grid, "green-area polygon")
    green_cells = rasterize_polygons(landuse, grid) if landuse else np.empty(0, np.int64)
    masks.ravel()[green_cells] = MASK_GREEN

    built: list[Building] = []
    building_cells_all: list[np.ndarray] = []
    for bid, category, poly in buildings:
        if category not in CATEGORIES:
            raise InputError(f"building {bid!r}: unknown category {category!r}")
        _check_extent(poly, grid, f"building {bid!r}")
        shp = ShapelyPolygon(poly[0], holes=poly[1:])
        if not shp.is_valid:
            raise InputError(f"building {bid!r}: footprint polygon is invalid")
        area = polygon_area(poly)
        if area <= 0.0:
            raise InputError(f"building {bid!r}: footprint area must be positive")
        built.append(Building(id=bid, category=category, footprint=poly, area_m2=area))
        building_cells_all.append(rasterize_polygons([poly], grid))
    if building_cells_all:
        bcells = np.unique(np.concatenate(building_cells_all))
        masks.ravel()[bcells] = MASK_BUILDING

    building_flat = masks.ravel() == MASK_BUILDING
    zone_records: list[Zone] = []
    seen = np.zeros(grid.ncols * grid.nrows, dtype=bool)
    for index, polys in sorted(zones, key=lambda zp: zp[0]):
        if index < 1:
            raise InputError(f"zone index must be >= 1, got {index}")
        for poly in polys:
            _check_extent(poly, grid, f"zone {index}")
        cells = rasterize_polygons(polys, grid)
        keep = cells[~building_flat[cells]]
        if len(keep) < len(cells):
            msg = f"zone {index}: dropped {len(cells) - len(keep)} cell(s) overlapping buildings"
            warnings.append(msg)
            logger.warning(msg)
        if len(keep) == 0:
            raise InputError(
                f"zone {index} has no usable cells (swallowed by buildings or off-grid)"
            )
        if seen[keep].any():
            raise InputError(f"zone {index} overlaps another zone")
        seen[keep] = True
        zone_records.append(
            Zone(
                index=index,
                polygons=polys,
                area_m2=len(keep) * grid.cellsize**2,
                cells=keep,
            )
        )

    indices = [z.index for z in zone_records]
    if len(set(indices)) != len(indices):
        raise InputError("duplicate zone indices")

    return Catchment(
        grid=grid,
        elevation=elevation,
        masks=masks,
        buildings=built,
        zones=zone_records,
        warnings=warnings,
    )


def _geojson_polygons(geometry: dict, what: str) -> list[Polygon]:
    gtype = geometry.get("type")
    if gtype == "Polygon":
        return [[_as_ring(r) for r in geometry["coordinates"]]]
    if gtype == "MultiPolygon":
        return [[_as_ring(r) for r in part] for part in geometry["coordinates"]]
    raise InputError(f"{what}: geometry type must be Polygon or MultiPolygon, got {gtype!r}")


def _load_feature_collection(path: str) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if doc.get("type") != "FeatureCollection" or "features" not in doc:
        raise InputError(f"{path}: expected a GeoJSON FeatureCollection")
    return doc["features"]


def load_buildings_geojson(path: str) -> list[tuple[str, str, Polygon]]:
    """Building features need properties id (string) and category."""
    out = []
    for i, feat in enumerate(_load_feature_collection(path)):
        props = feat.get("properties") or {}
        if "id" not in props:
            raise InputError(f"{path}: building feature {i} lacks an 'id' property")
        bid = str(props["id"])
        category = props.get("category")
        if category not in CATEGORIES:
            raise InputError(
                f"{path}: building {bid!r} category must be one of {CATEGORIES}, got {category!r}"
            )
        polys = _geojson_polygons(feat.get("geometry") or {}, f"building {bid!r}")
        if len(polys) != 1:
            raise InputError(f"{path}: building {bid!r} must be a single Polygon")
        out.append((bid, category, polys[0]))
    return out


def load_zones_geojson(path: str) -> list[tuple[int, list[Polygon]]]:
    """Zone features need an integer 'index' property >= 1; shared indices merge."""
    by_index: dict[int, list[Polygon]] = {}
    for i, feat in enumerate(_load_feature_collection(path)):
        props = feat.get("properties") or {}
        if "index" not in props:
            raise InputError(f"{path}: zone feature {i} lacks an 'index' property")
        try:
            index = int(props["index"])
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: zone feature {i} index must be an integer") from exc
        if index < 1:
            raise InputError(f"{path}: zone index must be >= 1, got {index}")
        polys = _geojson_polygons(feat.get("geometry") or {}, f"zone {index}")
        by_index.setdefault(index, []).extend(polys)
    return sorted(by_index.items())


def load_green_geojson(path: str) -> list[Polygon]:
    out: list[Polygon] = []
    for i, feat in enumerate(_load_feature_collection(path)):
        out.extend(_geojson_polygons(feat.get("geometry") or {}, f"green feature {i}"))
    return out


def load_catchment(
    dem_path: str, green_path: str, buildings_path: str, zones_path: str
) -> Catchment:
    from .rasters import read_ascii_grid_file

    dem = read_ascii_grid_file(dem_path)
    return assemble_catchment(
        dem,
        load_green_geojson(green_path),
        load_buildings_geojson(buildings_path),
        load_zones_geojson(zones_path),
    )
