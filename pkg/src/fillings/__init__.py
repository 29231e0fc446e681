"""Discrete machinery for filling-area inequalities on triangle meshes.

Modules
-------
circle      oriented triangles on the unit circle and grouped-arc bounds
mesh        intrinsic triangle meshes, topology audits, cutting, I/O
generators  discs, caps, annuli, cylinders and genus-1/2 surfaces with a hole
geodesic    Steiner-graph distances and boundary distance matrices
special     boundary-distance functions, tangent frames, order checks
forms       cyclic 2-form pullback, Stokes check, the inequality verifier
bouquet     bouquets of loops at a basepoint and their certificates
pipeline    scenarios, end-to-end runs, convergence tables
plots       deterministic SVG output
cli         the ``fillings`` command
"""

__version__ = "0.1.0"
