import json
import math

import pytest

from fillings import pipeline
from fillings.forms import HypothesisNotSatisfied
from fillings.pipeline import PipelineError, Scenario


def small(**kw):
    base = dict(M={"name": "spherical_cap"}, level=3, n_samples=8)
    base.update(kw)
    return Scenario(**base)


def test_scenario_defaults_and_validation():
    sc = small()
    assert sc.steiner == pipeline.steiner_for_level(3) == 2
    assert sc.D == {"name": "flat_disc", "params": {}}
    assert sc.tolerances["stokes"] == 0.05
    with pytest.raises(ValueError, match="unknown generator"):
        Scenario(M={"name": "nope"})
    with pytest.raises(ValueError, match="positive"):
        small(tolerances={"stokes": 0.0})
    with pytest.raises(TypeError):
        small(tolerances={"bogus": 1.0})
    with pytest.raises(ValueError, match="n_samples"):
        small(n_samples=1)


def test_scenario_roundtrip(tmp_path):
    sc = small(seed=3, scale_to_dominate=True)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(dict(sc.to_dict(), schema_version=1)))
    assert Scenario.load(path) == sc


def test_run_is_deterministic():
    a = pipeline.run(small())
    b = pipeline.run(small())
    assert a.passed
    assert a.to_json(timings=False) == b.to_json(timings=False)
    d = json.loads(a.to_json())
    assert d["schema_version"] == pipeline.SCHEMA_VERSION
    assert set(d["timings"]) == {"generate", "distances", "domination", "verify"}
    assert d["scale_factor"] == 1.0


def test_inverted_scenario_reports_stage():
    sc = Scenario(M={"name": "flat_disc"}, D={"name": "spherical_cap"}, level=3, n_samples=8)
    with pytest.raises(HypothesisNotSatisfied) as info:
        pipeline.run(sc)
    assert info.value.stage == "verify"


def test_failures_are_labelled_with_stage():
    sc = small(M={"name": "spherical_cap", "params": {"polar_angle": -1.0}})
    with pytest.raises(PipelineError) as info:
        pipeline.run(sc)
    assert info.value.stage in {"generate", "distances", "verify"}


def test_torus_scales_to_dominate():
    sc = Scenario(M={"name": "torus_with_hole"}, level=3, n_samples=8, scale_to_dominate=True)
    rep = pipeline.run(sc)
    assert rep.scale_factor >= 1.0
    assert rep.results["domination_violation"] <= 1e-9
    assert rep.results["G"] == 1


def test_dominating_scale_is_tight(d0_disc5, dM_cap5):
    assert pipeline.dominating_scale(d0_disc5, dM_cap5) == 1.0
    s = pipeline.dominating_scale(dM_cap5, d0_disc5)
    assert s == pytest.approx(math.pi / 2, rel=0.01)


def test_convergence_table_columns_and_trend():
    rows = pipeline.convergence_table(Scenario(M={"name": "flat_disc"}, level=4),
                                      [(8, 2, 4), (16, 2, 4), (32, 2, 4)])
    assert [list(r) for r in rows] == [pipeline.CONVERGENCE_COLUMNS] * 3
    errs = [r["disc_error"] for r in rows]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(ValueError):
        pipeline.convergence_table(small(), [])


def test_circle_table():
    rows = pipeline.circle_convergence_table([10, 100, 1000])
    for r in rows:
        assert r["sum"] == pytest.approx(r["closed_form"], abs=1e-12)
        assert r["error"] == pytest.approx(r["predicted_error"], rel=0.05)


def test_csv_roundtrip(tmp_path):
    rows = pipeline.circle_convergence_table([8, 16])
    text = pipeline.table_to_csv(rows, tmp_path / "c.csv")
    assert text.splitlines()[0] == "n,sum,closed_form,error,predicted_error"
    back = pipeline.read_csv_table(tmp_path / "c.csv")
    assert back[1]["sum"] == rows[1]["sum"]
