"""How the discrete quantities approach their limits.

The disc-side integral tends to ``2 pi Area(D)`` as the number of boundary
samples grows.  The Stokes residual shrinks when the mesh and the Steiner
graph are refined together.
"""

from pathlib import Path

from fillings import pipeline, plots

here = Path(__file__).parent
sc = pipeline.Scenario(M={"name": "spherical_cap"}, level=5)
rows = pipeline.convergence_table(sc, [(n, 4, 5) for n in (8, 16, 32, 64)])
print(pipeline.table_to_csv(rows, here / "convergence_n.csv"))
plots.plot_convergence(rows, "n_samples", ["disc_error", "stokes_D", "stokes_M"],
                       here / "convergence_n.svg")

rows = pipeline.convergence_table(sc, [(16, pipeline.steiner_for_level(l), l) for l in (3, 4, 5)])
print(pipeline.table_to_csv(rows, here / "convergence_level.csv"))
plots.plot_convergence(rows, "level", ["stokes_D", "stokes_M"], here / "convergence_level.svg")
