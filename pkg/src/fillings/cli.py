"""Command-line entry point.

Exit codes: 0 when every check passes, 2 when the hypothesis of the
inequality fails, 1 for any other check failure or error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bouquet as bq
from . import circle, forms, geodesic, pipeline, plots, special
from .generators import GENERATORS, generate
from .mesh import MeshError, genus, read_off, write_off

EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS = 0, 1, 2


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def _load_mesh(path):
    side = _sidecar(path)
    return read_off(path, side if side.exists() else None)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(pipeline._plain(obj), sort_keys=True, indent=2) + "\n"


# -- verbs ---------------------------------------------------------------------------

def cmd_gen_mesh(a) -> int:
    params = dict(kv.split("=", 1) for kv in a.param)
    params = {k: _parse_value(v) for k, v in params.items()}
    if a.level is not None:
        params["level"] = a.level
    mesh = generate(a.name, **params)
    write_off(mesh, a.out, _sidecar(a.out))
    print(f"wrote {a.out}: V={mesh.n_vertices} F={mesh.n_faces} genus={genus(mesh)}")
    return EXIT_OK


def cmd_distances(a) -> int:
    mesh = _load_mesh(a.mesh)
    if a.source is not None:
        f = geodesic.distance_field(mesh, a.source, a.steiner)
        rows = ["vertex,distance"] + [f"{i},{float(d)!r}" for i, d in enumerate(f.dist)]
        _emit("\n".join(rows) + "\n", a.out)
        return EXIT_OK
    m = geodesic.boundary_distance_matrix(mesh, a.samples, a.steiner)
    rows = [",".join(repr(float(t)) for t in m.params)]
    rows += [",".join(repr(float(v)) for v in row) for row in m.d]
    _emit("\n".join(rows) + "\n", a.out)
    return EXIT_OK


def cmd_special_field(a) -> int:
    M, D = _load_mesh(a.meshM), _load_mesh(a.meshD)
    d0 = geodesic.boundary_distance_matrix(D, a.samples, a.steiner)
    dM = geodesic.boundary_distance_matrix(M, a.samples, a.steiner)
    if geodesic.domination_violation(d0, dM) > a.slack:
        print("hypothesis not satisfied: boundary domination fails", file=sys.stderr)
        return EXIT_HYPOTHESIS
    f = special.special_field(M, d0, a.p, dM)
    f.grad_dir = special.gradient_directions(M, f)
    _emit(_json(f.to_dict()), a.out)
    return EXIT_OK


def cmd_bouquet(a) -> int:
    mesh = _load_mesh(a.mesh)
    x = a.basepoint if a.basepoint is not None else mesh.meta.get("corner")
    if x is None:
        print("no basepoint given and the mesh names none", file=sys.stderr)
        return EXIT_FAIL
    b = bq.build_bouquet(mesh, int(x))
    cert = bq.verify_bouquet(mesh, b, a.probes, a.seed)
    out = b.to_dict()
    out["certificate"] = cert.to_dict()
    _emit(_json(out), a.out)
    if a.svg:
        plots.plot_bouquet(mesh, b, a.svg)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_verify(a) -> int:
    try:
        if a.scenario:
            rep = pipeline.run(pipeline.Scenario.load(a.scenario))
            text, passed = rep.to_json() + "\n", rep.passed
        else:
            M, D = _load_mesh(a.meshM), _load_mesh(a.meshD)
            r = forms.verify_main_inequality(M, D, a.samples, a.steiner, a.genus)
            text, passed = _json(r.to_dict()), r.passed
    except forms.HypothesisNotSatisfied as exc:
        print(str(exc), file=sys.stderr)
        if a.report:
            Path(a.report).write_text(_json({"passed": False, "error": str(exc),
                                             "hypothesis_satisfied": False}))
        return EXIT_HYPOTHESIS
    _emit(text, a.report)
    return EXIT_OK if passed else EXIT_FAIL


def _parse_sweep(text: str):
    return [tuple(int(v) for v in item.split(",")) for item in text.split(";") if item.strip()]


def cmd_converge(a) -> int:
    if a.circle:
        rows = pipeline.circle_convergence_table([int(n) for n in a.circle.split(",")])
    else:
        sc = (pipeline.Scenario.load(a.scenario) if a.scenario
              else pipeline.Scenario(M={"name": a.M}, D={"name": a.D}))
        rows = pipeline.convergence_table(sc, _parse_sweep(a.sweep))
    _emit(pipeline.table_to_csv(rows), a.out)
    return EXIT_OK


def cmd_plot(a) -> int:
    if a.kind == "convergence":
        rows = pipeline.read_csv_table(a.input) if a.input else []
        cols = a.columns.split(",") if a.columns else [c for c in (rows[0] if rows else {})
                                                       if c != a.x]
        plots.plot_convergence(rows, a.x, cols, a.out)
    elif a.kind == "bouquet":
        mesh = _load_mesh(a.input)
        x = a.basepoint if a.basepoint is not None else mesh.meta.get("corner")
        plots.plot_bouquet(mesh, bq.build_bouquet(mesh, int(x)), a.out)
    else:
        M, D = _load_mesh(a.input), _load_mesh(a.meshD)
        d0 = geodesic.boundary_distance_matrix(D, None, a.steiner)
        dM = geodesic.boundary_distance_matrix(M, None, a.steiner)
        f = special.special_field(M, d0, a.p, dM)
        interior = np.flatnonzero(~M.boundary_vertex_mask)
        rng = np.random.default_rng(a.seed)
        pick = rng.choice(interior, size=min(24, len(interior)), replace=False)
        plots.plot_special_field(M, f, sorted(int(v) for v in pick), a.out)
    return EXIT_OK


def cmd_prop_verify(a) -> int:
    if a.config:
        part, vec = circle.load_configuration(a.config)
        r = circle.verify_grouped_bound(part, vec)
        reports = [r]
        n, bad, worst = 1, int(not (r.passed and r.groups_passed)), r.sum - r.bound
    else:
        reports = circle.batch_bound_trials(a.trials, tuple(a.genus), a.seed)
        n = len(reports)
        bad = int(np.sum(~(reports.passed & reports.groups_passed))) + reports.invalid
        worst = float(np.max(reports.sum - reports.bound))
    if a.csv:
        circle.write_trials_csv(a.csv, reports)
    print(f"{n} configurations, {bad} violations, max(sum - bound) = {worst:.3e}")
    return EXIT_OK if bad == 0 else EXIT_FAIL


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fillings", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("gen-mesh", help="write a generated surface as OFF + JSON lengths")
    s.add_argument("--name", required=True, choices=sorted(GENERATORS))
    s.add_argument("--level", type=int)
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_mesh)

    s = sub.add_parser("distances", help="distance field or boundary distance matrix as CSV")
    s.add_argument("--mesh", required=True)
    s.add_argument("--source", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--steiner", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_distances)

    s = sub.add_parser("special-field", help="boundary-distance function on a filling as JSON")
    s.add_argument("--meshM", required=True)
    s.add_argument("--meshD", required=True)
    s.add_argument("--samples", type=int)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--steiner", type=int, default=4)
    s.add_argument("--slack", type=float, default=1e-9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_special_field)

    s = sub.add_parser("bouquet", help="build and certify a bouquet of loops")
    s.add_argument("--mesh", required=True)
    s.add_argument("--basepoint", type=int)
    s.add_argument("--probes", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--svg")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bouquet)

    s = sub.add_parser("verify", help="check the filling inequality end to end")
    s.add_argument("--scenario")
    s.add_argument("--meshM")
    s.add_argument("--meshD")
    s.add_argument("--samples", type=int, default=16)
    s.add_argument("--steiner", type=int, default=4)
    s.add_argument("--genus", type=int)
    s.add_argument("--report")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("converge", help="convergence table as CSV")
    s.add_argument("--scenario")
    s.add_argument("--M", default="flat_disc")
    s.add_argument("--D", default="flat_disc")
    s.add_argument("--sweep", default="8,4,5;16,4,5;32,4,5;64,4,5",
                   help="semicolon-separated n,steiner,level triples")
    s.add_argument("--circle", help="comma-separated point counts for the circle sums")
    s.add_argument("--out")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("plot", help="deterministic SVG figures")
    s.add_argument("--kind", choices=["convergence", "bouquet", "special"], required=True)
    s.add_argument("--input", help="CSV table or OFF mesh")
    s.add_argument("--meshD")
    s.add_argument("--x", default="n_samples")
    s.add_argument("--columns")
    s.add_argument("--basepoint", type=int)
    s.add_argument("--p", type=int, default=0)
    s.add_argument("--steiner", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("prop-verify", help="brute-force check of the grouped circle bound")
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--genus", type=int, nargs="+", default=[1, 2])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="replay a saved configuration")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_prop_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "verify" and not args.scenario and not (args.meshM and args.meshD):
        print("verify needs --scenario or both --meshM and --meshD", file=sys.stderr)
        return EXIT_FAIL
    try:
        return args.func(args)
    except forms.HypothesisNotSatisfied as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (MeshError, ValueError, pipeline.PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
