"""Shared fixtures: a small fast catchment for pipeline-level tests."""

import json

import numpy as np
import pytest

from bgiopt.rasters import Grid, write_ascii_grid

RES_CURVE_TEXT = "depth_m,value\n0.0,0.0\n0.1,6000.0\n0.3,15000.0\n0.5,21000.0\n1.0,30000.0\n2.0,38000.0\n"
NONRES_CURVE_TEXT = "depth_m,value\n0.0,0.0\n0.1,45.0\n0.3,110.0\n0.5,160.0\n1.0,230.0\n2.0,300.0\n"


def rect_feature(x0, y0, w, h, props):
    return {
        "type": "Feature",
        "geometry": {
            "type": "Polygon",
            "coordinates": [[[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h], [x0, y0]]],
        },
        "properties": props,
    }


def write_tiny_fixture(out_dir, workers=1, output_dir="out", return_periods="10,100",
                       uplifts="0.3", population=4, generations=2, seed=7):
    """A 30 x 30 sloped catchment with one pond bowl, 4 buildings, 4 zones.

    Small enough that one simulation runs in milliseconds.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    n = 30
    cs = 5.0
    ii, jj = np.mgrid[0:n, 0:n]
    z = 0.04 * (n - 1 - ii) * cs / 5.0
    r = np.sqrt((ii - 20.0) ** 2 + (jj - 15.0) ** 2)
    z = z - 0.6 * np.where(
        r < 3.0, 1.0, np.where(r < 8.0, 0.5 * (1 + np.cos(np.pi * (r - 3.0) / 5.0)), 0.0)
    )
    grid = Grid(ncols=n, nrows=n, xll=0.0, yll=0.0, cellsize=cs)
    (out_dir / "dem.asc").write_text(write_ascii_grid(grid, z))

    def cell_rect(i, j, w_cells, h_cells, props):
        return rect_feature(j * cs, (n - i - h_cells) * cs, w_cells * cs, h_cells * cs, props)

    buildings = [
        cell_rect(17, 13, 2, 2, {"id": "R1", "category": "residential"}),
        cell_rect(21, 17, 2, 2, {"id": "R2", "category": "residential"}),
        cell_rect(22, 11, 2, 2, {"id": "R3", "category": "residential"}),
        cell_rect(8, 22, 3, 2, {"id": "N1", "category": "non_residential"}),
    ]
    (out_dir / "buildings.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": buildings})
    )
    zones = [
        cell_rect(4, 4, 4, 4, {"index": 1}),
        cell_rect(4, 13, 4, 4, {"index": 2}),
        cell_rect(4, 22, 4, 4, {"index": 3}),
        cell_rect(11, 9, 4, 4, {"index": 4}),
    ]
    (out_dir / "zones.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": zones})
    )
    (out_dir / "green.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": [
            rect_feature(5.0, 5.0, 30.0, 10.0, {})
        ]})
    )
    (out_dir / "res_curve.csv").write_text(RES_CURVE_TEXT)
    (out_dir / "nonres_curve.csv").write_text(NONRES_CURVE_TEXT)
    (out_dir / "config.ini").write_text(
        f"""[paths]
dem = dem.asc
buildings = buildings.geojson
zones = zones.geojson
green = green.geojson
residential_curve = res_curve.csv
non_residential_curve = nonres_curve.csv

[storm]
c = 0.0
d1 = 0.30
e = 0.467
f = 2.60
profile_a = 0.1
profile_b = 0.8
duration_min = 10
timesteps = 4

[flood]
manning_green = 0.05
manning_impervious = 0.02
manning_permeable = 0.05
infil_green_mmhr = 12.0
infil_permeable_mmhr = 200.0
infil_impervious_mmhr = 0.0
cfl_alpha = 0.7
settle_time_s = 120.0
boundary = closed
min_flow_depth_m = 0.0001
dt_floor_s = 0.01
dt_cap_s = 30.0

[costs]
capital_per_m2 = 60.0
operational_per_m2_yr = 1.2
inflation = 0.029
inflate_years = 0
lifespan_years = 40

[ead]
return_periods = {return_periods}

[ga]
population = {population}
generations = {generations}
crossover_rate = 0.9
seed = {seed}

[uplift]
fractions = {uplifts}

[run]
output_dir = {output_dir}
workers = {workers}
"""
    )
    return str(out_dir / "config.ini")


@pytest.fixture(scope="session")
def tiny_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_catchment")
    return write_tiny_fixture(out)
