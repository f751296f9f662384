"""Synthetic demo catchment generator.

Produces a complete, self-consistent input set (DEM, buildings, zones, green
areas, damage curves, run config) for tests and demos. All values are
synthetic: the damage curves are NOT calibrated appraisal data and the DDF
descriptors are invented.

Terrain: a plane sloping from northwest to southeast with two flat-bottomed
basins fed by collector trenches. Small residential buildings sit inside the
shallow upper basin, which ponds even in frequent storms; large
non-residential buildings ring the deep lower basin, which floods hard only
in rare storms. Candidate permeable zones sit on a regular lattice crossing
both collector paths, so zone effectiveness differs strongly by return
period - which is what makes multi-period optimization interesting on this
fixture.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .rasters import Grid, write_ascii_grid

__all__ = ["generate_demo_catchment"]


def _bowl(ii, jj, ci: float, cj: float, depth: float, r_flat: float, r_out: float):
    r = np.sqrt((ii - ci) ** 2 + (jj - cj) ** 2)
    ramp = np.where(
        r < r_flat,
        1.0,
        np.where(r < r_out, 0.5 * (1 + np.cos(np.pi * (r - r_flat) / (r_out - r_flat))), 0.0),
    )
    return -depth * ramp


def _trench(ii, jj, p0, p1, depth: float, width: float):
    """Gaussian-section channel along the segment p0-p1 (cell coordinates)."""
    p = np.stack([ii.astype(float), jj.astype(float)], axis=-1)
    a = np.asarray(p0, float)
    b = np.asarray(p1, float)
    ab = b - a
    t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    proj = a + t[..., None] * ab
    dist = np.sqrt(((p - proj) ** 2).sum(-1))
    return -depth * np.exp(-((dist / width) ** 2))


def _rect(x0: float, y0: float, w: float, h: float) -> list[list[float]]:
    return [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h], [x0, y0]]


def _feature(coords: list[list[float]], props: dict) -> dict:
    return {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [coords]},
        "properties": props,
    }


def generate_demo_catchment(
    out_dir: str,
    nx: int = 100,
    ny: int = 100,
    cellsize: float = 5.0,
    n_zones: int = 64,
    seed: int = 4242,
    population: int = 8,
    generations: int = 6,
    ga_seed: int = 90125,
    workers: int = 1,
    settle_time_s: float = 600.0,
    output_dir: str = "out",
) -> str:
    """Write the fixture files into out_dir and return the config path."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    grid = Grid(ncols=nx, nrows=ny, xll=0.0, yll=0.0, cellsize=cellsize)

    ii, jj = np.mgrid[0:ny, 0:nx]
    z = 0.010 * cellsize * ((ny - 1 - ii) + (nx - 1 - jj))
    for _ in range(24):
        ci, cj = rng.uniform(0, ny), rng.uniform(0, nx)
        amp = rng.uniform(-0.08, 0.08)
        sig = rng.uniform(2.0, 6.0)
        z = z + amp * np.exp(-((ii - ci) ** 2 + (jj - cj) ** 2) / (2.0 * sig**2))
    deep_c = (0.72 * ny, 0.72 * nx)
    shal_c = (0.35 * ny, 0.45 * nx)
    shal2_c = (0.18 * ny, 0.60 * nx)
    carve = _bowl(ii, jj, *deep_c, 1.0, 0.08 * nx, 0.16 * nx)
    carve = carve + _bowl(ii, jj, *shal_c, 0.5, 0.06 * nx, 0.12 * nx)
    carve = carve + _bowl(ii, jj, *shal2_c, 0.4, 0.04 * nx, 0.09 * nx)
    carve = carve + _trench(ii, jj, (0.03 * ny, 0.10 * nx), (0.31 * ny, 0.42 * nx), 0.20, 1.5)
    carve = carve + _trench(ii, jj, (0.03 * ny, 0.35 * nx), (0.18 * ny, 0.60 * nx), 0.20, 2.0)
    carve = carve + _trench(ii, jj, (0.30 * ny, 0.72 * nx), (0.66 * ny, 0.72 * nx), 0.20, 1.5)
    z = z + carve
    dem_path = os.path.join(out_dir, "dem.asc")
    with open(dem_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_ascii_grid(grid, z))

    # buildings: grid-aligned rectangles; cell (i, j) maps to
    # x = j*cellsize, y = (ny - i)*cellsize at its northwest corner
    buildings: list[dict] = []
    occupied = np.zeros((ny, nx), dtype=bool)
    bid = 0

    def add_building(i: int, j: int, w_cells: int, h_cells: int, category: str):
        nonlocal bid
        if not (2 <= i < ny - 2 - h_cells and 2 <= j < nx - 2 - w_cells):
            return
        x, y = j * cellsize, (ny - i - h_cells) * cellsize
        buildings.append(
            _feature(
                _rect(x, y, w_cells * cellsize, h_cells * cellsize),
                {"id": f"B{bid:03d}", "category": category},
            )
        )
        occupied[max(i - 1, 0) : i + h_cells + 1, max(j - 1, 0) : j + w_cells + 1] = True
        bid += 1

    for k in range(10):
        ang = 2 * np.pi * k / 10
        add_building(
            int(round(deep_c[0] + 15.0 * np.sin(ang))),
            int(round(deep_c[1] + 15.0 * np.cos(ang))),
            4, 3, "non_residential",
        )
    for k in range(8):
        ang = 2 * np.pi * (k + 0.25) / 8
        rr = 2.5 if k % 2 else 4.5
        add_building(
            int(round(shal_c[0] + rr * np.sin(ang))),
            int(round(shal_c[1] + rr * np.cos(ang))),
            2, 2, "residential",
        )
    # second shallow basin, its own small catchment north-east of the first
    for k, rr in enumerate((2.5, 2.5, 5.0, 5.0)):
        ang = 2 * np.pi * (k + 0.5) / 4
        add_building(
            int(round(shal2_c[0] + rr * np.sin(ang))),
            int(round(shal2_c[1] + rr * np.cos(ang))),
            2, 2, "residential",
        )
    rng2 = np.random.Generator(np.random.PCG64(77))
    for k in range(4):
        add_building(
            int(rng2.uniform(8, ny - 12)),
            int(rng2.uniform(8, nx - 12)),
            2, 2, "residential" if k % 2 else "non_residential",
        )
    buildings_path = os.path.join(out_dir, "buildings.geojson")
    with open(buildings_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "FeatureCollection", "features": buildings}, fh, indent=1)
        fh.write("\n")

    # permeable-zone candidates: 5x5-cell squares on a regular lattice,
    # skipping buildings and basin interiors (trench crossings are allowed
    # and are the high-leverage interception sites)
    zone_side = 5
    zones = []
    index = 1
    for a in range(10):
        for b in range(10):
            if index > n_zones:
                break
            i = int(5 + a * (ny - 10) / 9.0 - 2)
            j = int(5 + b * (nx - 10) / 9.0 - 2)
            if occupied[i : i + zone_side, j : j + zone_side].any():
                continue
            if carve[i : i + zone_side, j : j + zone_side].min() < -0.25:
                continue
            x, y = j * cellsize, (ny - i - zone_side) * cellsize
            zones.append(
                _feature(
                    _rect(x, y, zone_side * cellsize, zone_side * cellsize),
                    {"index": index},
                )
            )
            index += 1
    if index <= n_zones:
        raise RuntimeError(f"could not place {n_zones} zones, managed {index - 1}")
    zones_path = os.path.join(out_dir, "zones.geojson")
    with open(zones_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "FeatureCollection", "features": zones}, fh, indent=1)
        fh.write("\n")

    green = [
        _feature(
            _rect(1 * cellsize, 1 * cellsize, (nx - 2) * cellsize, 3 * cellsize), {}
        )
    ]
    green_path = os.path.join(out_dir, "green.geojson")
    with open(green_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "FeatureCollection", "features": green}, fh, indent=1)
        fh.write("\n")

    # synthetic depth-damage curves (not calibrated appraisal data)
    res_curve = os.path.join(out_dir, "synthetic_residential_curve.csv")
    with open(res_curve, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "depth_m,value\n0.0,0.0\n0.1,6000.0\n0.3,15000.0\n0.5,21000.0\n"
            "1.0,30000.0\n2.0,38000.0\n"
        )
    nonres_curve = os.path.join(out_dir, "synthetic_non_residential_curve.csv")
    with open(nonres_curve, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "depth_m,value\n0.0,0.0\n0.1,45.0\n0.3,110.0\n0.5,160.0\n"
            "1.0,230.0\n2.0,300.0\n"
        )

    config_path = os.path.join(out_dir, "config.ini")
    with open(config_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"""[paths]
dem = dem.asc
buildings = buildings.geojson
zones = zones.geojson
green = green.geojson
residential_curve = synthetic_residential_curve.csv
non_residential_curve = synthetic_non_residential_curve.csv

[storm]
c = 0.0
d1 = 0.30
e = 0.467
f = 2.334
profile_a = 0.1
profile_b = 0.8
duration_min = 30
timesteps = 6

[flood]
manning_green = 0.05
manning_impervious = 0.02
manning_permeable = 0.05
infil_green_mmhr = 12.0
infil_permeable_mmhr = 200.0
infil_impervious_mmhr = 0.0
cfl_alpha = 0.7
settle_time_s = {settle_time_s:g}
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
return_periods = 10,20,30,50,100

[ga]
population = {population}
generations = {generations}
crossover_rate = 0.9
seed = {ga_seed}

[uplift]
fractions = 0.15,0.30,0.45

[run]
output_dir = {output_dir}
workers = {workers}
"""
        )
    return config_path


if __name__ == "__main__":
    import argparse

    ap = argparse.ArgumentParser(description="generate the synthetic demo catchment")
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=4242)
    ap.add_argument("--zones", type=int, default=64)
    args = ap.parse_args()
    print(generate_demo_catchment(args.out, seed=args.seed, n_zones=args.zones))
