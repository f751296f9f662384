"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The heavyweight optimization
chain (criteria 8 and 9) runs once in a session fixture and is shared.
"""

import os
import time

import numpy as np
import pytest

from bgiopt import front_metrics, nsga2, pipeline
from bgiopt.catchment import assemble_catchment
from bgiopt.cli import main
from bgiopt.config import load_run_config
from bgiopt.economics import d_infin, ead
from bgiopt.flood import mass_balance, simulate
from bgiopt.flood.engine import FloodParams
from bgiopt.rasters import Grid
from bgiopt.risk import classify_risk
from bgiopt.storms import DesignStorm
from bgiopt.synthetic import generate_demo_catchment

CANONICAL_PERIODS = [10.0, 20.0, 30.0, 50.0, 100.0]

# Criterion 9 regression values, computed once on the bundled fixture
# (generator seed 4242, GA seed 90125, P=8, N=6) and frozen; tolerance 1%.
FROZEN_DELTA_AUPF_PCT = {
    (10.0, "composite"): 72.81634701951725,
    (10.0, "t100"): 119.58420086209283,
    (20.0, "composite"): 38.370092811809265,
    (20.0, "t100"): 49.3075737413113,
}


def report(n, name):
    print(f"[acceptance] criterion {n:2d} ({name}): PASS")


# ---------------------------------------------------------------------------
# shared heavy chain (criteria 8 and 9)

@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo_catchment")
    generate_demo_catchment(str(out))
    return str(out)


@pytest.fixture(scope="session")
def optimization_chain(demo_dir):
    """Two CLI composite runs (worker counts 1 and 2) plus single-period
    references and cross-period evaluations reusing the first run's cache."""
    config = os.path.join(demo_dir, "config.ini")
    t0 = time.perf_counter()
    front_bytes = {}
    for workers in (1, 2):
        out_dir = os.path.join(demo_dir, f"run_w{workers}")
        rc = main([
            "optimize", "--config", config, "--composite",
            "--workers", str(workers), "--output-dir", out_dir,
        ])
        assert rc == 0
        with open(os.path.join(out_dir, "front_composite.csv"), "rb") as fh:
            front_bytes[workers] = fh.read()
    composite_elapsed = time.perf_counter() - t0

    # references and re-evaluations share the first run's output dir / cache
    out_dir = os.path.join(demo_dir, "run_w1")
    cfg = load_run_config(config)
    cfg.output_dir = out_dir

    singles = {}
    for T in (100.0, 20.0, 10.0):
        ctx = pipeline.build_context(cfg)
        front, paths = pipeline.optimize_single(ctx, T)
        singles[T] = paths["front"]

    ctx = pipeline.build_context(cfg)
    composite_rows = pipeline.read_front_csv(
        os.path.join(out_dir, "front_composite.csv"), ctx.n_zones
    )
    t100_rows = pipeline.read_front_csv(singles[100.0], ctx.n_zones)
    deltas = {}
    for T in (10.0, 20.0):
        ref_rows = pipeline.read_front_csv(singles[T], ctx.n_zones)
        for label, rows in (("composite", composite_rows), ("t100", t100_rows)):
            result = pipeline.evaluate_front_under(
                ctx, rows, return_period=T, ref_rows=ref_rows
            )
            metrics = {m[0]: (m[2], m[3]) for m in result.metrics}
            deltas[(T, label)] = float(metrics["delta_aupf"][1])

    return {
        "front_bytes": front_bytes,
        "composite_elapsed": composite_elapsed,
        "deltas": deltas,
    }


# ---------------------------------------------------------------------------

def test_criterion_01_ead_telescoping():
    t0 = time.perf_counter()
    for damage in (1.0, 37.25, 1.9e7):
        value = ead({T: damage for T in CANONICAL_PERIODS})
        assert abs(value - damage / 10.0) <= 1e-12 * abs(damage / 10.0)
    assert time.perf_counter() - t0 < 1.0
    report(1, "EAD telescoping identity")


def test_criterion_02_d_infin_closed_form():
    rng = np.random.default_rng(20240210)
    for _ in range(10_000):
        x100 = float(rng.uniform(0.0, 1e7))
        x50 = float(rng.uniform(0.0, 1e7))
        assert d_infin(x100, x50) == max(0.0, 2.0 * x100 - x50)
    report(2, "D_INFIN closed form, exact over 10^4 pairs")


def _flat_catchment(n):
    grid = Grid(ncols=n, nrows=n, xll=0.0, yll=0.0, cellsize=5.0)
    return assemble_catchment((grid, np.zeros((n, n))), [], [], [])


def test_criterion_03_flood_conservation():
    t0 = time.perf_counter()
    # closed flat 50x50, zero infiltration, uniform rain
    cat = _flat_catchment(50)
    params = FloodParams(
        infil_green_mmhr=0.0, infil_permeable_mmhr=0.0, infil_impervious_mmhr=0.0,
        settle_time_s=300.0,
    )
    storm = DesignStorm(0.0, 30.0, 10.0, ((900.0, 20.0), (900.0, 20.0)))
    field = simulate(cat, storm, [], params)
    assert mass_balance(field) < 1e-6
    assert field.final_depth.max() - field.final_depth.min() < 1e-9

    # lake at rest in a bowl: no drift over 1000 steps
    n = 20
    ii, jj = np.mgrid[0:n, 0:n]
    z = 0.02 * ((ii - 9.5) ** 2 + (jj - 9.5) ** 2)
    grid = Grid(ncols=n, nrows=n, xll=0.0, yll=0.0, cellsize=5.0)
    bowl = assemble_catchment((grid, z), [], [], [])
    d0 = np.maximum(1.0 - z, 0.0)
    still = FloodParams(
        infil_green_mmhr=0.0, infil_permeable_mmhr=0.0, infil_impervious_mmhr=0.0,
        settle_time_s=0.0, dt_cap_s=0.5,
    )
    no_rain = DesignStorm(0.0, 520.0 / 60.0, 0.0, ((260.0, 0.0), (260.0, 0.0)))
    lake = simulate(bowl, no_rain, [], still, initial_depth=d0)
    assert lake.n_steps >= 1000
    assert np.abs(lake.final_depth - d0).max() < 1e-8
    assert time.perf_counter() - t0 < 30.0
    report(3, "closed-domain conservation and lake at rest")


def test_criterion_04_valley_routing():
    t0 = time.perf_counter()
    n = 51
    z = np.abs(np.arange(n) - 25) * 0.20
    elevation = z[np.newaxis, :]
    grid = Grid(ncols=n, nrows=1, xll=0.0, yll=0.0, cellsize=5.0)
    cat = assemble_catchment((grid, elevation), [], [], [])
    d0 = np.zeros((1, n))
    d0[0, 0] = d0[0, -1] = 0.5
    params = FloodParams(
        infil_green_mmhr=0.0, infil_permeable_mmhr=0.0, infil_impervious_mmhr=0.0,
        settle_time_s=3000.0, min_flow_depth_m=1e-5,
    )
    no_rain = DesignStorm(0.0, 1.0, 0.0, ((30.0, 0.0), (30.0, 0.0)))
    field = simulate(cat, no_rain, [], params, initial_depth=d0)

    # independent level-fill oracle: pour the volume into the sorted DEM
    volume = d0.sum() * grid.cellsize**2
    cell_area = grid.cellsize**2
    order = np.argsort(elevation.ravel())
    zs = elevation.ravel()[order]
    level = None
    for k in range(1, len(zs) + 1):
        candidate = (volume / cell_area + zs[:k].sum()) / k
        upper = zs[k] if k < len(zs) else np.inf
        if zs[k - 1] <= candidate <= upper:
            level = candidate
            break
    assert level is not None
    oracle = np.maximum(level - elevation, 0.0)
    wet = oracle > 0
    dilated = wet.copy()
    dilated[:, 1:] |= wet[:, :-1]
    dilated[:, :-1] |= wet[:, 1:]
    pond_volume = field.final_depth[dilated].sum() * cell_area
    assert abs(pond_volume - volume) <= 0.01 * volume
    assert not (field.final_depth > 1e-4)[~dilated].any()
    assert time.perf_counter() - t0 < 30.0
    report(4, "valley routing matches level-fill oracle")


def test_criterion_05_nsga2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    costs = rng.uniform(1.0, 10.0, 12)
    benefits = rng.uniform(0.5, 8.0, 12)

    def evaluator(genomes):
        out = []
        for g in genomes:
            bits = np.asarray(g, dtype=float)
            out.append((float(costs @ bits), float(benefits.sum() - benefits @ bits), {}))
        return out

    front = nsga2.run(
        nsga2.GaConfig(population=60, generations=100, seed=7777), 12, evaluator
    )

    # exhaustive 4096-candidate enumeration
    points = []
    for v in range(4096):
        bits = np.array([(v >> k) & 1 for k in range(12)], dtype=np.uint8)
        lcc, risk, _ = evaluator([bits])[0]
        points.append((lcc, risk))
    true_front = [
        p for p in points
        if not any(q[0] <= p[0] and q[1] <= p[1] and q != p for q in points)
    ]
    true_keys = {(round(c, 9), round(r, 9)) for c, r in true_front}
    for sol in front:
        assert (round(sol.lcc, 9), round(sol.risk, 9)) in true_keys

    # area quality: within 5% of the true front's AUPF (1 - dAUPF >= 0.95)
    true_curve = front_metrics.FrontCurve.from_points(true_front)
    got_curve = front_metrics.FrontCurve.from_points([(s.lcc, s.risk) for s in front])
    aupf_true = front_metrics.aupf(true_curve)
    aupf_got = front_metrics.aupf(got_curve)
    _, delta_pct = front_metrics.delta_aupf(aupf_true, aupf_got)
    assert 1.0 - delta_pct / 100.0 >= 0.95
    assert time.perf_counter() - t0 < 120.0
    report(5, "NSGA-II front within the exhaustive-enumeration optimum")


def test_criterion_06_risk_gate_truth_table():
    assert classify_risk(0.05, 0.25) == 0
    assert classify_risk(0.12, 0.25) == 1
    assert classify_risk(0.05, 0.35) == 1
    assert classify_risk(0.12, 0.35) == 1
    report(6, "risk gate truth table")


def test_criterion_07_metrics_exactness():
    curve = front_metrics.FrontCurve.from_points
    # constant offset
    ref = curve([(0.0, 12.0), (3.0, 8.0), (9.0, 3.0)])
    trial = curve([(0.0, 10.0), (3.0, 6.0), (9.0, 1.0)])
    maxrd, medrd = front_metrics.risk_differences(ref, trial)
    assert abs(maxrd - 2.0) <= 1e-12 and abs(medrd - 2.0) <= 1e-12
    # single gap among zeros
    ref_risks = [100.0, 99, 98, 97, 96, 89, 88, 87, 86, 85]
    ref2 = curve(list(zip(range(10), ref_risks)))
    trial_risks = list(ref_risks)
    trial_risks[4] = 89.0
    trial2 = curve(list(zip(range(10), trial_risks)))
    maxrd2, medrd2 = front_metrics.risk_differences(ref2, trial2)
    assert abs(maxrd2 - 7.0) <= 1e-12 and abs(medrd2) <= 1e-12
    # AUPF and its delta
    assert abs(front_metrics.aupf(curve([(0.0, 10.0), (10.0, 0.0)])) - 50.0) <= 1e-12
    d_abs, d_pct = front_metrics.delta_aupf(50.0, 87.5)
    assert abs(d_abs - 37.5) <= 1e-12 and abs(d_pct - 75.0) <= 1e-12
    # percent of range
    rr = front_metrics.RiskRange(baseline=10.0, max_intervention=0.0)
    assert abs(front_metrics.as_percent_of_range(5.8, rr) - 58.0) <= 1e-12
    report(7, "metrics reproduce hand-computed values at 1e-12")


def test_criterion_08_determinism_across_worker_counts(optimization_chain):
    assert optimization_chain["composite_elapsed"] < 900.0
    assert optimization_chain["front_bytes"][1] == optimization_chain["front_bytes"][2]
    report(8, "composite optimization byte-identical for 1 vs 2 workers")


def test_criterion_09_directional_robustness(optimization_chain):
    deltas = optimization_chain["deltas"]
    for key in sorted(deltas):
        print(f"[acceptance] criterion  9 delta_aupf_pct{key} = {deltas[key]!r}")
    for T in (10.0, 20.0):
        assert deltas[(T, "composite")] <= deltas[(T, "t100")] + 1e-9
    for key, frozen in FROZEN_DELTA_AUPF_PCT.items():
        assert deltas[key] == pytest.approx(frozen, rel=0.01)
    report(9, "composite front no worse than 100-year front at T=10, 20")


def test_criterion_10_percentile_and_buffer():
    from bgiopt.risk import BUFFER_CELLS, building_buffer
    from bgiopt.catchment import Building

    sample = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    assert float(np.percentile(sample, 90.0, method="linear")) == pytest.approx(
        0.91, rel=1e-12
    )

    footprint = [np.array([[20.0, 20.0], [30.0, 20.0], [30.0, 30.0], [20.0, 30.0]])]
    b = Building(id="B", category="residential", footprint=footprint, area_m2=100.0)
    buf = building_buffer(b, 5.0)
    assert BUFFER_CELLS * 5.0 == 7.5
    minx, miny, maxx, maxy = buf.bounds
    assert maxx - minx == pytest.approx(25.0, rel=1e-12)
    assert maxy - miny == pytest.approx(25.0, rel=1e-12)
    # offset measured geometrically: along an edge normal the boundary sits
    # exactly 7.5 m out; the rounded corners are a polygonal arc within 1%
    from shapely.geometry import Point, Polygon as ShapelyPolygon

    shp = ShapelyPolygon(footprint[0])
    assert buf.exterior.distance(Point(25.0, 12.5)) == pytest.approx(0.0, abs=1e-9)
    assert 7.5 * 0.99 <= buf.exterior.distance(shp) <= 7.5 + 1e-9
    diag = 1.0 / np.sqrt(2.0)
    assert buf.contains(Point(20.0 - 7.4 * diag, 20.0 - 7.4 * diag))
    assert not buf.contains(Point(20.0 - 7.6 * diag, 20.0 - 7.6 * diag))
    report(10, "percentile rank and buffer offset verified geometrically")
