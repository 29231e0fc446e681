import xml.etree.ElementTree as ET

from fillings import generators as gen
from fillings import pipeline, plots
from fillings.bouquet import build_bouquet
from fillings.geodesic import boundary_distance_matrix
from fillings.special import special_field

NS = "{http://www.w3.org/2000/svg}"


def test_bouquet_svg_is_deterministic(tmp_path):
    m = gen.torus_with_hole(level=3)
    b = build_bouquet(m, m.meta["corner"])
    a = plots.plot_bouquet(m, b, tmp_path / "b.svg")
    assert a == plots.plot_bouquet(m, build_bouquet(m, m.meta["corner"]))
    assert (tmp_path / "b.svg").read_text() == a
    root = ET.fromstring(a)
    loops = [g for g in root.iter(NS + "g") if g.get("class") == "loop"]
    assert len(loops) == 2


def test_special_field_svg():
    m = gen.spherical_cap(level=3)
    d = boundary_distance_matrix(gen.flat_disc(level=3), None, 1)
    f = special_field(m, d, 0, boundary_distance_matrix(m, None, 1))
    svg = plots.plot_special_field(m, f, [0, 5, 9])
    ET.fromstring(svg)
    assert svg == plots.plot_special_field(m, f, [0, 5, 9])


def test_convergence_svg():
    rows = pipeline.circle_convergence_table([8, 16, 32])
    svg = plots.plot_convergence(rows, "n", ["error", "predicted_error"])
    root = ET.fromstring(svg)
    series = [p for p in root.iter() if p.get("class") == "series"]
    assert len(series) == 2


def test_empty_convergence_svg():
    ET.fromstring(plots.plot_convergence([], "n", []))
