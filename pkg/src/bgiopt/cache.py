"""Persistent memoization of candidate damage evaluations.

Keys are SHA-256 digests over the genome, the storm, the flood parameters,
and a scenario digest covering the input files, so interrupted runs resume
and repeated genomes skip their simulations. Entries live as one small JSON
file each under the run's output directory; the parent process is the only
writer.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os

import numpy as np

from .flood.engine import FloodParams
from .storms import DesignStorm

__all__ = ["SimulationCache", "scenario_digest", "candidate_key"]


def scenario_digest(file_paths: list[str], extra: str = "") -> str:
    """Digest of the raw input files (plus any extra context string)."""
    h = hashlib.sha256()
    for p in file_paths:
        with open(p, "rb") as fh:
            h.update(hashlib.sha256(fh.read()).digest())
    h.update(extra.encode())
    return h.hexdigest()


def candidate_key(
    genome: np.ndarray, storm: DesignStorm, params: FloodParams, scenario: str
) -> str:
    payload = json.dumps(
        {
            "storm": {
                "T": storm.return_period_yr,
                "duration_min": storm.duration_min,
                "total_mm": storm.total_depth_mm,
                "steps": storm.steps,
            },
            "flood": dataclasses.asdict(params),
            "scenario": scenario,
        },
        sort_keys=True,
    )
    h = hashlib.sha256()
    h.update(bytes(bytearray(int(b) for b in genome)))
    h.update(payload.encode())
    return h.hexdigest()


class SimulationCache:
    """Two-level (memory over disk) store of per-candidate damage results."""

    def __init__(self, cache_dir: str | None):
        self.cache_dir = cache_dir
        self._mem: dict[str, float] = {}
        self.hits = 0
        self.misses = 0
        if cache_dir is not None:
            os.makedirs(cache_dir, exist_ok=True)

    def _path(self, key: str) -> str:
        assert self.cache_dir is not None
        return os.path.join(self.cache_dir, key + ".json")

    def get(self, key: str) -> float | None:
        if key in self._mem:
            self.hits += 1
            return self._mem[key]
        if self.cache_dir is not None:
            path = self._path(key)
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as fh:
                    value = float(json.load(fh)["ddc"])
                self._mem[key] = value
                self.hits += 1
                return value
        self.misses += 1
        return None

    def put(self, key: str, value: float) -> None:
        self._mem[key] = value
        if self.cache_dir is not None:
            tmp = self._path(key) + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump({"ddc": value}, fh)
            os.replace(tmp, self._path(key))
