"""Workflow orchestration: optimization runs, front re-evaluation, stress
testing, and all file exports.

Candidate evaluations are memoized in a persistent cache and may fan out to
a process pool; results are always merged in genome-submission order so the
worker count never changes any exported number. A candidate whose simulation
fails numerically is assigned a worst-case risk and flagged rather than
aborting the run.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import economics, front_metrics, nsga2
from .cache import SimulationCache, candidate_key, scenario_digest
from .catchment import Catchment, load_catchment
from .config import RunConfig
from .errors import InputError, NumericalError
from .flood.engine import simulate
from .front_metrics import FrontCurve, RiskRange
from .risk import BuildingRisk, DamageCurve, RiskEvaluator, building_risk_csv
from .storms import ClimateUplift, DesignStorm, apply_uplift

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineContext",
    "build_context",
    "evaluate_candidate",
    "genome_to_hex",
    "genome_from_hex",
    "optimize_single",
    "optimize_composite",
    "evaluate_front_under",
    "stress_test",
    "metrics_report",
    "bca_table",
    "write_front_csv",
    "read_front_csv",
]

POISON_RISK = 1e30  # assigned to candidates whose simulation failed


# ---------------------------------------------------------------------------
# genome encoding

def genome_to_hex(genome: np.ndarray) -> str:
    """Bits packed little-endian (bit j = zone j in index order) as hex."""
    value = 0
    for j, b in enumerate(genome):
        if b:
            value |= 1 << j
    width = (len(genome) + 3) // 4
    return format(value, f"0{width}x")


def genome_from_hex(text: str, n_zones: int) -> np.ndarray:
    try:
        value = int(text, 16)
    except ValueError as exc:
        raise InputError(f"invalid genome hex {text!r}") from exc
    if value >> n_zones:
        raise InputError(f"genome hex {text!r} has bits beyond {n_zones} zones")
    return np.array([(value >> j) & 1 for j in range(n_zones)], dtype=np.uint8)


# ---------------------------------------------------------------------------
# evaluation context

@dataclass
class PipelineContext:
    cfg: RunConfig
    catchment: Catchment
    curves: dict[str, DamageCurve]
    risk: RiskEvaluator
    cache: SimulationCache
    scenario: str
    workers: int = 1
    sim_runs: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_zones(self) -> int:
        return self.catchment.n_zones

    def candidate_lcc(self, genome: np.ndarray) -> float:
        return economics.candidate_lcc(genome, self.catchment.zones, self.cfg.costs)


def build_context(cfg: RunConfig, use_cache: bool = True) -> PipelineContext:
    catchment = load_catchment(
        cfg.dem_path, cfg.green_path, cfg.buildings_path, cfg.zones_path
    )
    curves = {
        "residential": DamageCurve.from_csv(cfg.residential_curve, "residential"),
        "non_residential": DamageCurve.from_csv(
            cfg.non_residential_curve, "non_residential"
        ),
    }
    os.makedirs(cfg.output_dir, exist_ok=True)
    cache_dir = os.path.join(cfg.output_dir, "cache") if use_cache else None
    return PipelineContext(
        cfg=cfg,
        catchment=catchment,
        curves=curves,
        risk=RiskEvaluator(catchment, curves),
        cache=SimulationCache(cache_dir),
        scenario=scenario_digest(cfg.input_paths),
        workers=max(1, cfg.workers),
    )


# ---------------------------------------------------------------------------
# candidate evaluation (cache + worker pool)

_WORKER_CTX: PipelineContext | None = None


def _worker_eval(payload: tuple[bytes, DesignStorm]) -> tuple[str, float | str]:
    genome_bytes, storm = payload
    ctx = _WORKER_CTX
    assert ctx is not None
    genome = np.frombuffer(genome_bytes, dtype=np.uint8)
    try:
        field_ = simulate(ctx.catchment, storm, genome, ctx.cfg.flood)
        ddc, _ = ctx.risk.evaluate(field_)
        return ("ok", ddc)
    except NumericalError as exc:
        return ("fail", str(exc))


def _ddc_batch(ctx: PipelineContext, genomes: list[np.ndarray], storm: DesignStorm) -> list[float]:
    """Damage cost per genome under one storm; cached, order-preserving."""
    global _WORKER_CTX
    keys = [candidate_key(g, storm, ctx.cfg.flood, ctx.scenario) for g in genomes]
    results: dict[str, float] = {}
    pending: list[tuple[str, np.ndarray]] = []
    pending_keys: set[str] = set()
    for key, genome in zip(keys, genomes):
        if key in results or key in pending_keys:
            continue
        cached = ctx.cache.get(key)
        if cached is not None:
            results[key] = cached
        else:
            pending.append((key, genome))
            pending_keys.add(key)

    if pending:
        payloads = [(g.tobytes(), storm) for _, g in pending]
        if ctx.workers > 1 and len(payloads) > 1:
            _WORKER_CTX = ctx
            try:
                mp = multiprocessing.get_context("fork")
                with ProcessPoolExecutor(max_workers=ctx.workers, mp_context=mp) as pool:
                    outcomes = list(pool.map(_worker_eval, payloads))
            finally:
                _WORKER_CTX = None
        else:
            _WORKER_CTX = ctx
            try:
                outcomes = [_worker_eval(p) for p in payloads]
            finally:
                _WORKER_CTX = None
        for (key, genome), (status, value) in zip(pending, outcomes):
            ctx.sim_runs += 1
            if status == "ok":
                results[key] = float(value)
                ctx.cache.put(key, float(value))
            else:
                ctx.failures.append((genome_to_hex(genome), str(value)))
                logger.warning(
                    "simulation failed for genome %s: %s; assigning worst-case risk",
                    genome_to_hex(genome),
                    value,
                )
                results[key] = POISON_RISK

    return [results[key] for key in keys]


def evaluate_candidate(
    ctx: PipelineContext,
    genome: np.ndarray,
    storm: DesignStorm,
    want_details: bool = False,
) -> tuple[float, float, list[BuildingRisk] | None]:
    """(LCC, DDC, per-building risks) for one candidate under one storm.

    The damage cost is served from the cache when possible; per-building
    details require depth fields, so requesting them re-runs the simulation.
    """
    ddc = _ddc_batch(ctx, [genome], storm)[0]
    details = None
    if want_details:
        field_ = simulate(ctx.catchment, storm, genome, ctx.cfg.flood)
        ctx.sim_runs += 1
        _, details = ctx.risk.evaluate(field_)
    return ctx.candidate_lcc(genome), ddc, details


class SinglePeriodEvaluator:
    """Objectives (LCC, DDC at one return period)."""

    def __init__(self, ctx: PipelineContext, storm: DesignStorm):
        self.ctx = ctx
        self.storm = storm

    def __call__(self, genomes):
        ddcs = _ddc_batch(self.ctx, list(genomes), self.storm)
        return [
            (self.ctx.candidate_lcc(g), ddc, {}) for g, ddc in zip(genomes, ddcs)
        ]


class CompositeEvaluator:
    """Objectives (LCC, EAD over all configured return periods)."""

    def __init__(self, ctx: PipelineContext, storms: dict[float, DesignStorm]):
        self.ctx = ctx
        self.storms = dict(sorted(storms.items()))

    def __call__(self, genomes):
        genomes = list(genomes)
        per_period = {
            T: _ddc_batch(self.ctx, genomes, storm) for T, storm in self.storms.items()
        }
        out = []
        for i, g in enumerate(genomes):
            ddc_map = {T: per_period[T][i] for T in self.storms}
            out.append(
                (
                    self.ctx.candidate_lcc(g),
                    economics.ead(ddc_map),
                    {"ddc_by_period": ddc_map},
                )
            )
        return out


# ---------------------------------------------------------------------------
# exports

def _fmt(x: float) -> str:
    return repr(float(x))


def _period_label(T: float) -> str:
    return f"{T:g}"


def write_front_csv(
    path: str, solutions: list[nsga2.FrontSolution], periods: list[float] | None = None
) -> None:
    header = ["solution_id", "lcc", "risk", "genome_hex"]
    if periods:
        header += [f"ddc_T{_period_label(T)}" for T in periods]
    lines = [",".join(header)]
    for i, sol in enumerate(solutions):
        row = [str(i), _fmt(sol.lcc), _fmt(sol.risk), genome_to_hex(sol.genome)]
        if periods:
            ddc_map = sol.extras.get("ddc_by_period", {})
            row += [_fmt(ddc_map[T]) for T in periods]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_front_csv(path: str, n_zones: int) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            raw = list(reader)
            fields = reader.fieldnames or []
    except OSError as exc:
        raise InputError(f"cannot read front CSV {path}: {exc}") from exc
    for col in ("solution_id", "lcc", "risk", "genome_hex"):
        if col not in fields:
            raise InputError(f"{path}: front CSV missing column {col!r}")
    period_cols = [c for c in fields if c.startswith("ddc_T")]
    rows = []
    for r in raw:
        row = {
            "solution_id": int(r["solution_id"]),
            "lcc": float(r["lcc"]),
            "risk": float(r["risk"]),
            "genome": genome_from_hex(r["genome_hex"], n_zones),
            "ddc_by_period": {float(c[5:]): float(r[c]) for c in period_cols},
        }
        rows.append(row)
    return rows


def _poly_coords(poly) -> list:
    return [
        [[float(x), float(y)] for x, y in np.vstack([ring, ring[:1]])] for ring in poly
    ]


def write_zone_contribution_geojson(
    path: str, catchment: Catchment, contributions: np.ndarray
) -> None:
    features = []
    for zone, frac in zip(catchment.zones, contributions):
        if len(zone.polygons) == 1:
            geometry = {"type": "Polygon", "coordinates": _poly_coords(zone.polygons[0])}
        else:
            geometry = {
                "type": "MultiPolygon",
                "coordinates": [_poly_coords(p) for p in zone.polygons],
            }
        features.append(
            {
                "type": "Feature",
                "geometry": geometry,
                "properties": {"index": zone.index, "contribution": float(frac)},
            }
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1)
        fh.write("\n")


def write_metrics_csv(path: str, rows: list[tuple[str, str, float | str, float | str]]) -> None:
    lines = ["metric,return_period,value,percent"]
    for metric, period, value, percent in rows:
        v = _fmt(value) if isinstance(value, float) else str(value)
        p = _fmt(percent) if isinstance(percent, float) else str(percent)
        lines.append(f"{metric},{period},{v},{p}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _export_building_details(
    ctx: PipelineContext, genome: np.ndarray, storm: DesignStorm, path: str
) -> tuple[float, list[BuildingRisk]]:
    field_ = simulate(ctx.catchment, storm, genome, ctx.cfg.flood)
    ctx.sim_runs += 1
    ddc, rows = ctx.risk.evaluate(field_)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(building_risk_csv(rows))
    return ddc, rows


def _zone_contribution_or_zero(solutions: list[nsga2.FrontSolution], n_zones: int) -> np.ndarray:
    genomes = [s.genome for s in solutions]
    try:
        return front_metrics.zone_contribution(genomes)
    except InputError:
        logger.warning("front has no non-baseline solutions; zone contributions set to 0")
        return np.zeros(n_zones)


# ---------------------------------------------------------------------------
# workflows

def _ga_config(cfg: RunConfig) -> nsga2.GaConfig:
    return nsga2.GaConfig(
        population=cfg.ga_population,
        generations=cfg.ga_generations,
        crossover_rate=cfg.ga_crossover_rate,
        mutation_rate=cfg.ga_mutation_rate,
        seed=cfg.ga_seed,
    )


def _snapshot_hook(ctx: PipelineContext, label: str, every: int | None):
    if not every:
        return None
    snap_dir = os.path.join(ctx.cfg.output_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)

    def hook(gen: int, population):
        if gen % every != 0:
            return
        # non-mutating dominance filter: the GA's own rank bookkeeping must
        # not be disturbed by snapshotting
        objs = [(ind.lcc, ind.risk) for ind in population]
        best = [
            ind
            for ind, p in zip(population, objs)
            if not any(nsga2.dominates(q, p) for q in objs)
        ]
        best = sorted(best, key=lambda ind: (ind.lcc, ind.risk, ind.genome.tobytes()))
        sols = [
            nsga2.FrontSolution(genome=b.genome, lcc=b.lcc, risk=b.risk, extras=b.extras)
            for b in best
        ]
        write_front_csv(os.path.join(snap_dir, f"{label}_gen{gen:04d}.csv"), sols)

    return hook


def optimize_single(
    ctx: PipelineContext, return_period: float, snapshot_every: int | None = None
) -> tuple[list[nsga2.FrontSolution], dict[str, str]]:
    """Single-return-period optimization: minimize (LCC, DDC at T)."""
    cfg = ctx.cfg
    label = f"T{_period_label(return_period)}"
    storm = cfg.storm_for(return_period)
    evaluator = SinglePeriodEvaluator(ctx, storm)
    front = nsga2.run(
        _ga_config(cfg),
        ctx.n_zones,
        evaluator,
        on_generation=_snapshot_hook(ctx, f"front_{label}", snapshot_every),
    )

    out = cfg.output_dir
    front_path = os.path.join(out, f"front_{label}.csv")
    write_front_csv(front_path, front)
    zones_path = os.path.join(out, f"zone_contribution_{label}.geojson")
    write_zone_contribution_geojson(
        zones_path, ctx.catchment, _zone_contribution_or_zero(front, ctx.n_zones)
    )
    details_dir = os.path.join(out, "building_risks")
    os.makedirs(details_dir, exist_ok=True)
    for i, sol in enumerate(front):
        _export_building_details(
            ctx, sol.genome, storm,
            os.path.join(details_dir, f"front_{label}_sol{i:03d}.csv"),
        )
    return front, {"front": front_path, "zones": zones_path}


def optimize_composite(
    ctx: PipelineContext, snapshot_every: int | None = None
) -> tuple[list[nsga2.FrontSolution], dict[str, str]]:
    """Composite optimization: minimize (LCC, EAD across all periods)."""
    cfg = ctx.cfg
    if len(cfg.return_periods) < 2:
        raise InputError("composite optimization needs >= 2 return periods")
    storms = {T: cfg.storm_for(T) for T in cfg.return_periods}
    evaluator = CompositeEvaluator(ctx, storms)
    front = nsga2.run(
        _ga_config(cfg),
        ctx.n_zones,
        evaluator,
        on_generation=_snapshot_hook(ctx, "front_composite", snapshot_every),
    )

    out = cfg.output_dir
    front_path = os.path.join(out, "front_composite.csv")
    write_front_csv(front_path, front, periods=cfg.return_periods)
    zones_path = os.path.join(out, "zone_contribution_composite.geojson")
    write_zone_contribution_geojson(
        zones_path, ctx.catchment, _zone_contribution_or_zero(front, ctx.n_zones)
    )
    details_dir = os.path.join(out, "building_risks")
    os.makedirs(details_dir, exist_ok=True)
    for i, sol in enumerate(front):
        for T in cfg.return_periods:
            _export_building_details(
                ctx, sol.genome, storms[T],
                os.path.join(
                    details_dir, f"front_composite_sol{i:03d}_T{_period_label(T)}.csv"
                ),
            )
    return front, {"front": front_path, "zones": zones_path}


def _range_under(
    ctx: PipelineContext, risk_of_genome, n_zones: int
) -> RiskRange:
    baseline = risk_of_genome(np.zeros(n_zones, dtype=np.uint8))
    max_int = risk_of_genome(np.ones(n_zones, dtype=np.uint8))
    return RiskRange(baseline=baseline, max_intervention=max_int)


def _metrics_rows(
    ref: FrontCurve, trial: FrontCurve, rr: RiskRange, period_label: str
) -> list[tuple[str, str, float | str, float | str]]:
    maxrd, medrd = front_metrics.risk_differences(ref, trial)
    aupf_ref = front_metrics.aupf(ref)
    aupf_trial = front_metrics.aupf(trial)
    aupf_trial_env = front_metrics.aupf(front_metrics.envelope_curve(trial))
    d_abs, d_pct = front_metrics.delta_aupf(aupf_ref, aupf_trial)
    return [
        ("maxrd", period_label, maxrd, front_metrics.as_percent_of_range(maxrd, rr)),
        ("medrd", period_label, medrd, front_metrics.as_percent_of_range(medrd, rr)),
        ("aupf_ref", period_label, aupf_ref, ""),
        ("aupf_trial", period_label, aupf_trial, ""),
        ("aupf_trial_envelope", period_label, aupf_trial_env, ""),
        ("delta_aupf", period_label, d_abs, d_pct),
    ]


@dataclass
class FrontEvaluation:
    curve: FrontCurve
    rows: list[dict]
    metrics: list[tuple[str, str, float | str, float | str]]
    reeval_path: str
    metrics_path: str | None


def evaluate_front_under(
    ctx: PipelineContext,
    front_rows: list[dict],
    return_period: float | None = None,
    uplift: float | None = None,
    ref_rows: list[dict] | None = None,
) -> FrontEvaluation:
    """Re-simulate a front's genomes under another storm (or uplift) and
    compare against a reference front for that target."""
    cfg = ctx.cfg
    if (return_period is None) == (uplift is None):
        raise InputError("specify exactly one of return_period or uplift")
    genomes = [r["genome"] for r in front_rows]
    lccs = [ctx.candidate_lcc(g) for g in genomes]

    if return_period is not None:
        label = f"T{_period_label(return_period)}"
        storm = cfg.storm_for(return_period)
        risks = _ddc_batch(ctx, genomes, storm)

        def risk_of(genome: np.ndarray) -> float:
            return _ddc_batch(ctx, [genome], storm)[0]

        if ref_rows is None:
            default_ref = os.path.join(cfg.output_dir, f"front_{label}.csv")
            if os.path.exists(default_ref):
                ref_rows = read_front_csv(default_ref, ctx.n_zones)
    else:
        label = f"u{int(round(uplift * 100))}"
        storms = {
            T: apply_uplift(cfg.storm_for(T), ClimateUplift(uplift))
            for T in cfg.return_periods
        }

        def _ead_of(genome_list: list[np.ndarray]) -> list[float]:
            per_period = {
                T: _ddc_batch(ctx, genome_list, storms[T]) for T in sorted(storms)
            }
            return [
                economics.ead({T: per_period[T][i] for T in storms})
                for i in range(len(genome_list))
            ]

        risks = _ead_of(genomes)

        def risk_of(genome: np.ndarray) -> float:
            return _ead_of([genome])[0]

        if ref_rows is None:
            ref_rows = front_rows  # compare the uplifted curve to the original

    trial = FrontCurve.from_points(list(zip(lccs, risks)), provenance=f"reeval_{label}")
    out_rows = []
    for r, lcc, risk in zip(front_rows, lccs, risks):
        out_rows.append({**r, "lcc": lcc, "risk": risk})
    reeval_path = os.path.join(cfg.output_dir, f"reeval_{label}.csv")
    sols = [
        nsga2.FrontSolution(genome=r["genome"], lcc=r["lcc"], risk=r["risk"], extras={})
        for r in out_rows
    ]
    write_front_csv(reeval_path, sols)

    metrics_rows: list[tuple[str, str, float | str, float | str]] = []
    metrics_path = None
    if ref_rows is not None:
        ref = FrontCurve.from_points(
            [(r["lcc"], r["risk"]) for r in ref_rows], provenance=f"ref_{label}"
        )
        rr = _range_under(ctx, risk_of, ctx.n_zones)
        metrics_rows = _metrics_rows(ref, trial, rr, label)
        metrics_path = os.path.join(cfg.output_dir, f"metrics_{label}.csv")
        write_metrics_csv(metrics_path, metrics_rows)

    return FrontEvaluation(
        curve=trial,
        rows=out_rows,
        metrics=metrics_rows,
        reeval_path=reeval_path,
        metrics_path=metrics_path,
    )


def stress_test(ctx: PipelineContext, front_rows: list[dict]) -> dict[float, str]:
    """Re-evaluate a composite front under each configured climate uplift and
    attach lifetime benefit-cost ratios (baseline row reported NA)."""
    cfg = ctx.cfg
    out_paths: dict[float, str] = {}
    genomes = [r["genome"] for r in front_rows]
    lccs = [ctx.candidate_lcc(g) for g in genomes]
    for u in cfg.uplifts:
        storms = {
            T: apply_uplift(cfg.storm_for(T), ClimateUplift(u))
            for T in cfg.return_periods
        }
        per_period = {T: _ddc_batch(ctx, genomes, storms[T]) for T in sorted(storms)}
        eads = [
            economics.ead({T: per_period[T][i] for T in storms})
            for i in range(len(genomes))
        ]
        base_per_period = {
            T: _ddc_batch(ctx, [np.zeros(ctx.n_zones, dtype=np.uint8)], storms[T])[0]
            for T in sorted(storms)
        }
        ead_base = economics.ead(base_per_period)

        label = f"u{int(round(u * 100))}"
        lines = ["solution_id,lcc,ead,bc"]
        for i, (lcc, ead_val) in enumerate(zip(lccs, eads)):
            bc = economics.benefit_cost(ead_base, ead_val, cfg.costs.lifespan_yr, lcc)
            bc_text = "NA" if bc is None else _fmt(bc)
            lines.append(f"{i},{_fmt(lcc)},{_fmt(ead_val)},{bc_text}")
        path = os.path.join(cfg.output_dir, f"stress_{label}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        out_paths[u] = path
    return out_paths


def metrics_report(
    ref_rows: list[dict], trial_rows: list[dict], period_label: str = ""
) -> list[tuple[str, str, float | str, float | str]]:
    """Front-versus-front metrics with the risk range taken from the
    reference front (baseline row and highest-cost row)."""
    ref = FrontCurve.from_points([(r["lcc"], r["risk"]) for r in ref_rows], "ref")
    trial = FrontCurve.from_points([(r["lcc"], r["risk"]) for r in trial_rows], "trial")
    by_cost = sorted(ref_rows, key=lambda r: r["lcc"])
    if by_cost[0]["lcc"] != 0.0:
        raise InputError("reference front lacks the zero-cost baseline solution")
    rr = RiskRange(baseline=by_cost[0]["risk"], max_intervention=by_cost[-1]["risk"])
    return _metrics_rows(ref, trial, rr, period_label)


def bca_table(ctx: PipelineContext, front_rows: list[dict]) -> list[tuple[int, float, float, float | None]]:
    """Benefit-cost ratio per composite front solution."""
    baseline = [r for r in front_rows if r["lcc"] == 0.0]
    if not baseline:
        raise InputError("front lacks the zero-cost baseline needed for benefit-cost")
    ead_base = baseline[0]["risk"]
    out = []
    for r in front_rows:
        bc = economics.benefit_cost(
            ead_base, r["risk"], ctx.cfg.costs.lifespan_yr, r["lcc"]
        )
        out.append((r["solution_id"], r["lcc"], r["risk"], bc))
    return out


def write_bca_csv(path: str, table: list[tuple[int, float, float, float | None]]) -> None:
    lines = ["solution_id,lcc,ead,bc"]
    for sid, lcc, ead_val, bc in table:
        lines.append(f"{sid},{_fmt(lcc)},{_fmt(ead_val)},{'NA' if bc is None else _fmt(bc)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
