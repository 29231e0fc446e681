import json

import pytest

from fillings import circle
from fillings.cli import EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_OK, main


@pytest.fixture(scope="module")
def meshes(tmp_path_factory):
    d = tmp_path_factory.mktemp("meshes")
    paths = {}
    for name, level in (("flat_disc", 3), ("spherical_cap", 3), ("torus_with_hole", 3)):
        p = d / f"{name}.off"
        assert main(["gen-mesh", "--name", name, "--level", str(level), "--out", str(p)]) == 0
        paths[name] = p
    return paths


def test_gen_mesh_writes_sidecar(meshes):
    assert meshes["flat_disc"].with_name("flat_disc.off.json").exists()


def test_gen_mesh_bad_param(tmp_path, capsys):
    rc = main(["gen-mesh", "--name", "flat_disc", "--param", "colour=red",
               "--out", str(tmp_path / "x.off")])
    assert rc == EXIT_FAIL
    assert "invalid parameters" in capsys.readouterr().err


def test_distances(meshes, tmp_path):
    out = tmp_path / "d.csv"
    assert main(["distances", "--mesh", str(meshes["flat_disc"]), "--samples", "6",
                 "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert len(rows) == 7 and len(rows[1].split(",")) == 6
    assert main(["distances", "--mesh", str(meshes["flat_disc"]), "--source", "0",
                 "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("vertex,distance\n0,0.0\n")


def test_special_field(meshes, tmp_path):
    out = tmp_path / "f.json"
    rc = main(["special-field", "--meshM", str(meshes["spherical_cap"]),
               "--meshD", str(meshes["flat_disc"]), "--p", "0", "--steiner", "2",
               "--out", str(out)])
    assert rc == EXIT_OK
    assert json.loads(out.read_text())["p"] == 0
    rc = main(["special-field", "--meshM", str(meshes["flat_disc"]),
               "--meshD", str(meshes["spherical_cap"]), "--p", "0", "--steiner", "2"])
    assert rc == EXIT_HYPOTHESIS


def test_verify_exit_codes(meshes, tmp_path):
    rep = tmp_path / "r.json"
    ok = main(["verify", "--meshM", str(meshes["spherical_cap"]),
               "--meshD", str(meshes["flat_disc"]), "--samples", "8", "--steiner", "2",
               "--report", str(rep)])
    assert ok == EXIT_OK and json.loads(rep.read_text())["passed"]
    bad = main(["verify", "--meshM", str(meshes["flat_disc"]),
                "--meshD", str(meshes["spherical_cap"]), "--samples", "8", "--steiner", "2",
                "--report", str(rep)])
    assert bad == EXIT_HYPOTHESIS
    assert json.loads(rep.read_text())["hypothesis_satisfied"] is False
    assert main(["verify"]) == EXIT_FAIL


def test_verify_scenario(tmp_path):
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"M": {"name": "spherical_cap"}, "level": 3, "n_samples": 8}))
    rep = tmp_path / "r.json"
    assert main(["verify", "--scenario", str(sc), "--report", str(rep)]) == EXIT_OK
    assert json.loads(rep.read_text())["schema_version"] == 1


def test_bouquet_verb(meshes, tmp_path):
    out, svg = tmp_path / "b.json", tmp_path / "b.svg"
    assert main(["bouquet", "--mesh", str(meshes["torus_with_hole"]), "--out", str(out),
                 "--svg", str(svg)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["certificate"]["passed"] and len(data["loops"]) == 2
    assert svg.read_text().count('class="loop"') == 2
    assert main(["bouquet", "--mesh", str(meshes["flat_disc"]), "--basepoint", "0"]) == EXIT_FAIL


def test_converge_and_plot(tmp_path):
    csv = tmp_path / "c.csv"
    assert main(["converge", "--circle", "8,16,32", "--out", str(csv)]) == EXIT_OK
    svg = tmp_path / "c.svg"
    assert main(["plot", "--kind", "convergence", "--input", str(csv), "--x", "n",
                 "--columns", "error", "--out", str(svg)]) == EXIT_OK
    assert svg.read_text().startswith("<svg")


def test_prop_verify(tmp_path, capsys):
    assert main(["prop-verify", "--trials", "200", "--csv", str(tmp_path / "t.csv")]) == EXIT_OK
    assert "200 configurations, 0 violations" in capsys.readouterr().out
    import numpy as np
    part, vec = circle.random_configuration(np.random.default_rng(0), 1)
    cfg = tmp_path / "cfg.json"
    circle.save_configuration(cfg, part, vec)
    assert main(["prop-verify", "--config", str(cfg)]) == EXIT_OK
