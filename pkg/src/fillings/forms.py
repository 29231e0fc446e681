"""Pullback of the cyclic 2-form and the Stokes check.

For fields ``f_1, ..., f_n`` the cyclic 2-form pulls back to ``A dA`` with

    A = sum_i det(grad f_i, grad f_{i+1})        (indices mod n)

on each face, where gradients are those of the piecewise-linear interpolant.
The primitive used on the boundary is ``mu = sum_i x_i dx_{i+1}``; on a
piecewise-linear trace its line integral is the trapezoid sum
``sum_segments sum_i mean(f_i) * delta(f_{i+1})``.

For piecewise-linear fields the raw density integrates to the trapezoid sum
exactly.  The density used for the area side normalises each gradient to
unit length, matching the smooth picture where every distance-like field has
``|df| = 1`` almost everywhere; the Stokes residual then measures how far the
discrete fields are from that picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circle import TWO_PI, oriented_area
from .geodesic import (
    boundary_distance_matrix,
    domination_violation,
    flatten_faces,
)
from .mesh import BoundaryLoop, MeshError, SurfaceMesh, area, boundary_loops, face_areas, genus
from .special import SampleFields, SpecialField, special_field, tilde_field

#: Faces whose doubled area falls below this are rejected as degenerate.
DEGENERATE_AREA = 1e-14


class HypothesisNotSatisfied(ValueError):
    pass


@dataclass(eq=False)
class PullbackDensity:
    """Per-face density of the pulled-back cyclic form.

    ``A`` uses unit-normalised gradients, ``A_raw`` the raw piecewise-linear
    ones.  ``angles`` are the gradient directions in each face's flattened
    frame (NaN where a gradient vanishes); ``flagged`` marks faces crossed
    by a jump of some field's point of maximum.
    """

    A: np.ndarray
    A_raw: np.ndarray
    area: np.ndarray
    angles: np.ndarray
    magnitudes: np.ndarray
    flagged: np.ndarray
    defined: np.ndarray

    @property
    def n_fields(self) -> int:
        return self.angles.shape[1]

    @property
    def flagged_area_fraction(self) -> float:
        tot = self.area.sum()
        return float(self.area[self.flagged].sum() / tot) if tot > 0 else 0.0


@dataclass(eq=False)
class BoundaryTrace:
    """Field values ``(m, n)`` at the vertices of a boundary loop, in loop order."""

    values: np.ndarray
    closed: bool = True

    @classmethod
    def from_fields(cls, loop: BoundaryLoop, fields) -> "BoundaryTrace":
        vals = np.stack([_values(f)[loop.vertices] for f in fields], axis=1)
        return cls(vals, True)


def _values(f) -> np.ndarray:
    return np.asarray(f.values if isinstance(f, SpecialField) else f, dtype=float)


def face_gradients(mesh: SurfaceMesh, values: np.ndarray) -> np.ndarray:
    """Gradients ``(F, n, 2)`` of the PL interpolants in each face's flat frame.

    ``values`` has shape ``(V, n)``.
    """
    P = flatten_faces(mesh)
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= DEGENERATE_AREA):
        raise MeshError("degenerate triangle")
    vals = values[mesh.faces]  # (F, 3, n)
    d1 = vals[:, 1] - vals[:, 0]
    d2 = vals[:, 2] - vals[:, 0]
    # solve [e1; e2] g = [d1; d2] per face
    gx = (d1 * e2[:, 1:2] - d2 * e1[:, 1:2]) / det[:, None]
    gy = (d2 * e1[:, 0:1] - d1 * e2[:, 0:1]) / det[:, None]
    return np.stack([gx, gy], axis=-1)


def _argmax_jumps(mesh: SurfaceMesh, fields, jump_tol: float) -> np.ndarray:
    out = np.zeros(mesh.n_faces, dtype=bool)
    for f in fields:
        # plain distances on the disc are smooth away from p
        if not isinstance(f, SpecialField) or f.kind != "filling":
            continue
        t = f.samples.params[f.argmax][mesh.faces]  # (F, 3)
        for a, b in ((0, 1), (1, 2), (2, 0)):
            gap = np.abs(t[:, a] - t[:, b])
            out |= np.minimum(gap, 1 - gap) > jump_tol
    return out


def pullback_density(mesh: SurfaceMesh, fields, jump_tol: float = 0.05) -> PullbackDensity:
    """Per-face density of the cyclic form pulled back through ``fields``.

    Parameters
    ----------
    mesh : SurfaceMesh
    fields : sequence of SpecialField or (V,) arrays
        ``n >= 2`` fields, in cyclic order.
    jump_tol : float
        A face is flagged when the points of maximum at two of its corners
        are more than this far apart in boundary parameter.
    """
    fields = list(fields)
    if len(fields) < 2:
        raise ValueError("need at least two fields")
    vals = np.stack([_values(f) for f in fields], axis=1)
    if vals.shape[0] != mesh.n_vertices:
        raise ValueError("field length does not match mesh")
    g = face_gradients(mesh, vals)
    gn = np.roll(g, -1, axis=1)
    raw = np.sum(g[..., 0] * gn[..., 1] - g[..., 1] * gn[..., 0], axis=1)
    mag = np.linalg.norm(g, axis=-1)
    defined = mag > 1e-12
    ang = np.where(defined, np.arctan2(g[..., 1], g[..., 0]), np.nan)
    # unit density via the circle module, so the two agree by construction
    terms = oriented_area(ang, np.roll(ang, -1, axis=1))
    ok = defined & np.roll(defined, -1, axis=1)
    A = 2.0 * np.sum(np.where(ok, terms, 0.0), axis=1)
    flagged = _argmax_jumps(mesh, fields, jump_tol)
    return PullbackDensity(A, raw, face_areas(mesh), ang, mag, flagged, defined.all(axis=1))


def area_integral(density: PullbackDensity, raw: bool = False) -> float:
    """``sum_faces A * area`` (fixed summation order)."""
    A = density.A_raw if raw else density.A
    return float(math.fsum(A * density.area))


def boundary_integral(loop: BoundaryLoop, trace: BoundaryTrace) -> float:
    """Trapezoid line integral of ``sum_i x_i dx_{i+1}`` around ``loop``."""
    if not trace.closed:
        raise ValueError("open trace: boundary integral needs the full closed loop")
    v = np.asarray(trace.values, dtype=float)
    if v.ndim != 2 or len(v) != len(loop):
        raise ValueError("trace does not match loop")
    if v.shape[1] < 2:
        raise ValueError("need at least two fields")
    nxt = np.roll(v, -1, axis=0)
    mean = 0.5 * (v + nxt)
    delta = nxt - v
    return float(math.fsum((mean * np.roll(delta, -1, axis=1)).ravel()))


def stokes_residual(mesh: SurfaceMesh, fields, loop: BoundaryLoop | None = None,
                    density: PullbackDensity | None = None) -> dict:
    """Compare the area side with the boundary side.

    ``residual`` uses the unit-gradient density; ``pl_residual`` the raw
    piecewise-linear one, which vanishes up to round-off.
    """
    if loop is None:
        loops = boundary_loops(mesh)
        if len(loops) != 1:
            raise MeshError("expected exactly one boundary loop")
        loop = loops[0]
    if density is None:
        density = pullback_density(mesh, fields)
    a = area_integral(density)
    a_raw = area_integral(density, raw=True)
    b = boundary_integral(loop, BoundaryTrace.from_fields(loop, fields))
    res = abs(a - b)
    return {
        "area_side": a,
        "area_side_pl": a_raw,
        "boundary_side": b,
        "residual": res,
        "relative_residual": res / (abs(b) + 1.0),
        "pl_residual": abs(a_raw - b),
    }


def density_bound_violations(density: PullbackDensity, G: int, margin: float) -> dict:
    """Faces with ``A/2 > pi + 2G + margin``, split by flag."""
    bad = density.A / 2 > math.pi + 2 * G + margin
    return {
        "unflagged": int(np.sum(bad & ~density.flagged)),
        "flagged": int(np.sum(bad & density.flagged)),
        "max_half_density": float(np.max(density.A / 2)) if len(density.A) else 0.0,
    }


@dataclass
class Tolerances:
    """Tolerances for :func:`verify_main_inequality`; all relative unless noted."""

    domination_slack: float = 1e-9
    area: float = 0.02
    stokes: float = 0.05
    density_margin: float = 0.5
    integral: float = 0.05
    jump_tol: float = 0.05

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class InequalityReport:
    area_D: float
    area_M: float
    G: int
    bound: float
    integral_M: float
    integral_D: float
    integral_bound_M: float
    boundary_integral: float
    stokes_M: dict
    stokes_D: dict
    density_M: dict
    density_D: dict
    flagged_fraction_M: float
    flagged_fraction_D: float
    disc_gap: float
    domination_violation: float
    boundary_agreement: float
    n_samples: int
    steiner: int
    tolerances: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def sample_indices(n_total: int, n: int) -> np.ndarray:
    """``n`` equally spaced indices into ``n_total`` boundary samples."""
    if not 2 <= n <= n_total:
        raise ValueError("n_samples out of range")
    return np.floor(np.arange(n) * n_total / n + 1e-9).astype(int)


def verify_main_inequality(meshM: SurfaceMesh, meshD: SurfaceMesh, n_samples: int,
                           steiner: int = 4, G: int | None = None,
                           tol: Tolerances | None = None, d0=None, dM=None) -> InequalityReport:
    """Check the filling-area inequality and every identity along the way.

    ``d0`` and ``dM`` may be passed in to reuse boundary distance matrices
    (all boundary vertices, with fields).

    Raises
    ------
    HypothesisNotSatisfied
        If the boundary distances of ``meshM`` do not dominate those of ``meshD``.
    """
    tol = tol or Tolerances()
    gM = genus(meshM)
    if G is None:
        G = gM
    elif G != gM:
        raise ValueError(f"genus mismatch: mesh has genus {gM}, expected {G}")
    if genus(meshD) != 0 or len(boundary_loops(meshD)) != 1:
        raise MeshError("meshD must be a disc")
    d0 = d0 if d0 is not None else boundary_distance_matrix(meshD, None, steiner)
    dM = dM if dM is not None else boundary_distance_matrix(meshM, None, steiner)
    if len(d0) != len(dM) or not np.allclose(d0.params, dM.params, atol=1e-9):
        raise MeshError("boundary samples of meshM and meshD do not correspond")
    viol = domination_violation(d0, dM)
    if viol > tol.domination_slack:
        raise HypothesisNotSatisfied(
            f"hypothesis not satisfied: boundary domination fails by {viol:.3g}")

    ps = sample_indices(len(d0), n_samples)
    sfM = SampleFields.from_matrix(dM)
    fM = [special_field(meshM, d0, int(p), sfM) for p in ps]
    fD = [tilde_field(meshD, int(p), d0) for p in ps]
    loopM = boundary_loops(meshM)[0]
    loopD = boundary_loops(meshD)[0]
    agree = max(float(np.max(np.abs(a.values[dM.vertices] - b.values[d0.vertices])))
                for a, b in zip(fM, fD))

    denM = pullback_density(meshM, fM, tol.jump_tol)
    denD = pullback_density(meshD, fD, tol.jump_tol)
    sM = stokes_residual(meshM, fM, loopM, denM)
    sD = stokes_residual(meshD, fD, loopD, denD)
    aM, aD = area(meshM), area(meshD)
    factor = 1 + 2 * G / math.pi
    bound = factor * aM
    iM, iD = sM["area_side"], sD["area_side"]
    ibound = TWO_PI * factor * aM
    dvM = density_bound_violations(denM, G, tol.density_margin)
    dvD = density_bound_violations(denD, 0, tol.density_margin)

    # finite n: the disc side sits below its limit 2*pi*Area(D); the gap closes as n grows
    disc_gap = 1.0 - iD / (TWO_PI * aD)
    checks = {
        "area_inequality": aD <= bound * (1 + tol.area),
        "integral_bound_M": iM <= ibound * (1 + tol.integral),
        "stokes_M": sM["relative_residual"] <= tol.stokes,
        "stokes_D": sD["relative_residual"] <= tol.stokes,
        "stokes_pl": max(sM["pl_residual"], sD["pl_residual"]) <= 1e-8 * (1 + abs(sM["boundary_side"])),
        "disc_limit": iD <= TWO_PI * aD * (1 + tol.integral),
        "boundary_agreement": agree <= tol.area * max(1.0, float(np.max(d0.d))),
        "density_bound_M": dvM["unflagged"] == 0,
        "density_bound_D": dvD["unflagged"] == 0,
    }
    return InequalityReport(
        area_D=aD, area_M=aM, G=G, bound=bound, integral_M=iM, integral_D=iD,
        integral_bound_M=ibound, boundary_integral=sM["boundary_side"],
        stokes_M=sM, stokes_D=sD, density_M=dvM, density_D=dvD,
        flagged_fraction_M=denM.flagged_area_fraction,
        flagged_fraction_D=denD.flagged_area_fraction,
        disc_gap=disc_gap, domination_violation=viol, boundary_agreement=agree,
        n_samples=int(n_samples), steiner=int(steiner), tolerances=tol.to_dict(),
        checks=checks,
    )
