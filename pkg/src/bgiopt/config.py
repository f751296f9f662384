"""Run configuration: INI-style file with strict key validation.

Sections and keys are a fixed schema; unknown sections or keys are errors so
typos cannot silently fall back to defaults. Relative paths resolve against
the config file's directory.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .economics import CostParams
from .errors import ConfigError
from .flood.engine import FloodParams
from .storms import DdfDescriptors, DesignStorm, ProfileParams, design_storm

__all__ = ["RunConfig", "load_run_config"]

_SCHEMA: dict[str, dict[str, str]] = {
    "paths": {
        "dem": "path",
        "buildings": "path",
        "zones": "path",
        "green": "path",
        "residential_curve": "path",
        "non_residential_curve": "path",
    },
    "storm": {
        "c": "float",
        "d1": "float",
        "e": "float",
        "f": "float",
        "profile_a": "float",
        "profile_b": "float",
        "duration_min": "float",
        "timesteps": "int",
    },
    "flood": {
        "manning_green": "float",
        "manning_impervious": "float",
        "manning_permeable": "float",
        "infil_green_mmhr": "float",
        "infil_permeable_mmhr": "float",
        "infil_impervious_mmhr": "float",
        "cfl_alpha": "float",
        "settle_time_s": "float",
        "boundary": "str",
        "min_flow_depth_m": "float",
        "dt_floor_s": "float",
        "dt_cap_s": "float",
    },
    "costs": {
        "capital_per_m2": "float",
        "operational_per_m2_yr": "float",
        "inflation": "float",
        "inflate_years": "int",
        "lifespan_years": "int",
    },
    "ead": {"return_periods": "floatlist"},
    "ga": {
        "population": "int",
        "generations": "int",
        "crossover_rate": "float",
        "mutation_rate": "float",
        "seed": "int",
    },
    "uplift": {"fractions": "floatlist"},
    "run": {"output_dir": "str", "workers": "int"},
}

_OPTIONAL_KEYS = {("ga", "mutation_rate"), ("uplift", "fractions"), ("run", "workers")}
_OPTIONAL_SECTIONS = {"uplift"}


@dataclass
class RunConfig:
    dem_path: str
    buildings_path: str
    zones_path: str
    green_path: str
    residential_curve: str
    non_residential_curve: str
    ddf: DdfDescriptors
    profile: ProfileParams
    duration_min: float
    timesteps: int
    flood: FloodParams
    costs: CostParams
    return_periods: list[float]
    uplifts: list[float]
    ga_population: int
    ga_generations: int
    ga_crossover_rate: float
    ga_mutation_rate: float | None
    ga_seed: int
    output_dir: str
    workers: int = 1
    config_path: str = ""
    input_paths: list[str] = field(default_factory=list)

    def storm_for(self, return_period_yr: float) -> DesignStorm:
        return design_storm(
            return_period_yr, self.duration_min, self.timesteps, self.ddf, self.profile
        )


def _coerce(section: str, key: str, kind: str, raw: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "floatlist":
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind}") from exc


def load_run_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    values: dict[tuple[str, str], object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[(section, key)] = _coerce(section, key, _SCHEMA[section][key], raw)

    for section, keys in _SCHEMA.items():
        if section in _OPTIONAL_SECTIONS and section not in parser.sections():
            continue
        if section not in parser.sections():
            raise ConfigError(f"{path}: missing section [{section}]")
        for key in keys:
            if (section, key) not in values and (section, key) not in _OPTIONAL_KEYS:
                raise ConfigError(f"{path}: missing key {key!r} in [{section}]")

    base = os.path.dirname(os.path.abspath(path))

    def respath(key: str) -> str:
        p = str(values[("paths", key)])
        return p if os.path.isabs(p) else os.path.join(base, p)

    input_paths = [
        respath(k)
        for k in (
            "dem",
            "buildings",
            "zones",
            "green",
            "residential_curve",
            "non_residential_curve",
        )
    ]
    for p in input_paths:
        if not os.path.exists(p):
            raise ConfigError(f"{path}: referenced file does not exist: {p}")

    periods = list(values[("ead", "return_periods")])
    if len(periods) < 2 or any(b <= a for a, b in zip(periods, periods[1:])):
        raise ConfigError(f"{path}: [ead] return_periods must be ascending with >= 2 entries")

    uplifts = list(values.get(("uplift", "fractions"), [0.15, 0.30, 0.45]))

    out_dir = str(values[("run", "output_dir")])
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base, out_dir)

    try:
        flood = FloodParams(
            manning_green=values[("flood", "manning_green")],
            manning_impervious=values[("flood", "manning_impervious")],
            manning_permeable=values[("flood", "manning_permeable")],
            infil_green_mmhr=values[("flood", "infil_green_mmhr")],
            infil_permeable_mmhr=values[("flood", "infil_permeable_mmhr")],
            infil_impervious_mmhr=values[("flood", "infil_impervious_mmhr")],
            cfl_alpha=values[("flood", "cfl_alpha")],
            settle_time_s=values[("flood", "settle_time_s")],
            boundary=values[("flood", "boundary")],
            min_flow_depth_m=values[("flood", "min_flow_depth_m")],
            dt_floor_s=values[("flood", "dt_floor_s")],
            dt_cap_s=values[("flood", "dt_cap_s")],
        )
        costs = CostParams(
            capital_per_m2=values[("costs", "capital_per_m2")],
            operational_per_m2_yr=values[("costs", "operational_per_m2_yr")],
            inflation=values[("costs", "inflation")],
            inflate_years=values[("costs", "inflate_years")],
            lifespan_yr=values[("costs", "lifespan_years")],
        )
        ddf = DdfDescriptors(
            c=values[("storm", "c")],
            d1=values[("storm", "d1")],
            e=values[("storm", "e")],
            f=values[("storm", "f")],
        )
        profile = ProfileParams(
            a=values[("storm", "profile_a")], b=values[("storm", "profile_b")]
        )
    except ConfigError:
        raise
    except Exception as exc:  # parameter validation failures
        raise ConfigError(f"{path}: {exc}") from exc

    return RunConfig(
        dem_path=input_paths[0],
        buildings_path=input_paths[1],
        zones_path=input_paths[2],
        green_path=input_paths[3],
        residential_curve=input_paths[4],
        non_residential_curve=input_paths[5],
        ddf=ddf,
        profile=profile,
        duration_min=float(values[("storm", "duration_min")]),
        timesteps=int(values[("storm", "timesteps")]),
        flood=flood,
        costs=costs,
        return_periods=[float(t) for t in periods],
        uplifts=[float(u) for u in uplifts],
        ga_population=int(values[("ga", "population")]),
        ga_generations=int(values[("ga", "generations")]),
        ga_crossover_rate=float(values[("ga", "crossover_rate")]),
        ga_mutation_rate=(
            float(values[("ga", "mutation_rate")])
            if ("ga", "mutation_rate") in values
            else None
        ),
        ga_seed=int(values[("ga", "seed")]),
        output_dir=out_dir,
        workers=int(values.get(("run", "workers"), 1)),
        config_path=os.path.abspath(path),
        input_paths=input_paths,
    )
