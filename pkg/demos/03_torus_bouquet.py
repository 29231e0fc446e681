"""A bouquet of shortest loops on a punctured torus and a genus-2 surface.

Each loop cut should leave three boundary circles, each arc cut two; after
all cuts the surface is an annulus.
"""

from pathlib import Path

from fillings import generators as gen
from fillings import plots
from fillings.bouquet import build_bouquet, verify_bouquet

for name in ("torus_with_hole", "genus2_with_hole"):
    mesh = gen.generate(name, level=4)
    b = build_bouquet(mesh, mesh.meta["corner"])
    print(f"\n{name}: basepoint {b.basepoint}, {len(b.loops)} loops")
    print("  step kind    V     E     F   chi  b  genus  length")
    for a in b.cut_log:
        print(f"  {a.step:4d} {a.kind:5s} {a.V:5d} {a.E:5d} {a.F:5d} {a.chi:4d} {a.b:2d} "
              f"{a.genus:5d}  {a.path_length:.4f}")
    cert = verify_bouquet(mesh, b, probe_count=32)
    print(f"  annulus {cert.annulus}, disjoint {cert.disjoint}, "
          f"probes clear {cert.n_probes - len(cert.probe_failures)}/{cert.n_probes}")
    out = Path(__file__).with_name(f"{name}_bouquet.svg")
    plots.plot_bouquet(mesh, b, out)
    print(f"  wrote {out.name}")
