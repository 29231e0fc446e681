"""Scenarios, end-to-end runs and convergence tables."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circle import CirclePointSet, cyclic_area_sum
from .forms import (
    HypothesisNotSatisfied,
    Tolerances,
    area_integral,
    pullback_density,
    sample_indices,
    stokes_residual,
    verify_main_inequality,
)
from .generators import GENERATORS, generate
from .geodesic import boundary_distance_matrix, domination_violation
from .mesh import area
from .special import SampleFields, special_field, tilde_field

SCHEMA_VERSION = 1


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def steiner_for_level(level: int) -> int:
    """Default Steiner count paired with a refinement level.

    The Steiner graph's direction error does not shrink with the mesh, so
    the two are refined together.
    """
    return max(1, int(level) - 1)


@dataclass
class Scenario:
    """Everything needed to replay a run.

    ``M`` and ``D`` are ``{"name": generator, "params": {...}}``; ``level``
    fills in the generators' ``level`` unless given explicitly.
    """

    M: dict
    D: dict = field(default_factory=lambda: {"name": "flat_disc", "params": {}})
    n_samples: int = 16
    steiner: int | None = None
    level: int = 5
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    scale_to_dominate: bool = False
    genus: int | None = None

    def __post_init__(self):
        for side in (self.M, self.D):
            if side.get("name") not in GENERATORS:
                raise ValueError(f"unknown generator {side.get('name')!r}")
            side.setdefault("params", {})
        tol = Tolerances(**self.tolerances)
        if any(v <= 0 for v in tol.to_dict().values()):
            raise ValueError("tolerances must be positive")
        self.tolerances = tol.to_dict()
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.steiner is None:
            self.steiner = steiner_for_level(self.level)

    def mesh_params(self, side: dict) -> dict:
        p = dict(side["params"])
        p.setdefault("level", self.level)
        p.setdefault("seed", self.seed)
        return p

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        data.pop("schema_version", None)
        return cls(**data)

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RunReport:
    scenario: dict
    results: dict
    scale_factor: float
    checks: dict
    timings: dict
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, timings: bool = True) -> dict:
        out = {"schema_version": self.schema_version, "scenario": self.scenario,
               "results": self.results, "scale_factor": self.scale_factor,
               "checks": self.checks, "passed": self.passed}
        if timings:
            out["timings"] = self.timings
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(_plain(self.to_dict(timings)), sort_keys=True, indent=2)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


class _Stage:
    def __init__(self, name: str, timings: dict):
        self.name, self.timings = name, timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if isinstance(exc, HypothesisNotSatisfied):
            exc.stage = self.name
        if exc is None or isinstance(exc, (HypothesisNotSatisfied, PipelineError)):
            return False
        raise PipelineError(self.name, str(exc)) from exc


def dominating_scale(d0, dM) -> float:
    """Smallest factor making ``dM`` dominate ``d0`` (1 when it already does)."""
    off = ~np.eye(len(d0), dtype=bool)
    ratio = float(np.max(d0.d[off] / dM.d[off]))
    return 1.0 if ratio <= 1.0 else ratio * (1 + 1e-12)


def run(scenario: Scenario) -> RunReport:
    """Generate, measure, and verify the filling inequality for one scenario.

    Raises
    ------
    HypothesisNotSatisfied
        If boundary domination fails (and scaling is off).
    PipelineError
        Any other failure, labelled with its stage.
    """
    timings = {}
    with _Stage("generate", timings):
        meshM = generate(scenario.M["name"], **scenario.mesh_params(scenario.M))
        meshD = generate(scenario.D["name"], **scenario.mesh_params(scenario.D))
    k = scenario.steiner
    with _Stage("distances", timings):
        d0 = boundary_distance_matrix(meshD, None, k)
        dM = boundary_distance_matrix(meshM, None, k)
    scale = 1.0
    tol = Tolerances(**scenario.tolerances)
    with _Stage("domination", timings):
        if scenario.scale_to_dominate and domination_violation(d0, dM) > tol.domination_slack:
            scale = dominating_scale(d0, dM)
            meshM = meshM.with_lengths_scaled(scale)
            dM = boundary_distance_matrix(meshM, None, k)
    with _Stage("verify", timings):
        rep = verify_main_inequality(meshM, meshD, scenario.n_samples, k, scenario.genus,
                                     tol, d0=d0, dM=dM)
    results = rep.to_dict()
    results.pop("checks")
    results.pop("passed")
    results["analytic_area_D"] = meshD.meta.get("analytic_area")
    results["analytic_area_M"] = (meshM.meta.get("analytic_area") or math.nan) * scale ** 2
    return RunReport(scenario.to_dict(), _plain(results), scale, dict(rep.checks), timings)


# -- convergence ----------------------------------------------------------------

CONVERGENCE_COLUMNS = [
    "n_samples", "steiner", "level", "disc_integral", "disc_target", "disc_error",
    "stokes_D", "stokes_M", "flagged_fraction_M",
]


def convergence_table(scenario: Scenario, sweep) -> list[dict]:
    """Disc-side integral and Stokes residuals over ``(n_samples, steiner, level)``.

    The filling side is computed only when the scenario's ``M`` differs from
    its ``D``; otherwise its columns repeat the disc side.
    """
    sweep = [tuple(int(v) for v in row) for row in sweep]
    if not sweep:
        raise ValueError("sweep must be nonempty")
    cache = {}
    rows = []
    for n, k, level in sweep:
        key = (k, level)
        if key not in cache:
            pD = dict(scenario.D["params"], level=level, seed=scenario.seed)
            pM = dict(scenario.M["params"], level=level, seed=scenario.seed)
            meshD = generate(scenario.D["name"], **pD)
            meshM = generate(scenario.M["name"], **pM)
            d0 = boundary_distance_matrix(meshD, None, k)
            dM = boundary_distance_matrix(meshM, None, k) if scenario.M != scenario.D else d0
            cache = {key: (meshD, meshM, d0, dM)}
        meshD, meshM, d0, dM = cache[key]
        ps = sample_indices(len(d0), n)
        fD = [tilde_field(meshD, int(p), d0) for p in ps]
        denD = pullback_density(meshD, fD)
        sD = stokes_residual(meshD, fD, density=denD)
        target = 2 * math.pi * area(meshD)
        if dM is d0:
            sM, flagged = sD, denD.flagged_area_fraction
        else:
            sf = SampleFields.from_matrix(dM)
            fM = [special_field(meshM, d0, int(p), sf) for p in ps]
            denM = pullback_density(meshM, fM)
            sM, flagged = stokes_residual(meshM, fM, density=denM), denM.flagged_area_fraction
        integral = area_integral(denD)
        rows.append({
            "n_samples": n, "steiner": k, "level": level,
            "disc_integral": integral, "disc_target": target,
            "disc_error": abs(integral - target) / target,
            "stokes_D": sD["relative_residual"], "stokes_M": sM["relative_residual"],
            "flagged_fraction_M": flagged,
        })
    return rows


def circle_convergence_table(ns) -> list[dict]:
    """Cyclic area sums of equally spaced points against ``pi`` and the closed form."""
    rows = []
    for n in ns:
        s = cyclic_area_sum(CirclePointSet.equally_spaced(int(n)))
        closed = 0.5 * n * math.sin(2 * math.pi / n)
        rows.append({"n": int(n), "sum": s, "closed_form": closed,
                     "error": abs(s - math.pi), "predicted_error": 2 * math.pi ** 3 / (3 * n * n)})
    return rows


def table_to_csv(rows: list[dict], path=None, columns=None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: (repr(float(r[c])) if isinstance(r[c], float) else r[c]) for c in columns})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: float(v) for k, v in r.items()} for r in rows]
