"""Test surfaces: flat disc, spherical cap, annulus, and handle bodies with a hole.

Every generator with a single boundary circle places that circle's vertices
at uniform angles ``2*pi*k/N`` with the lowest-index boundary vertex at angle
0 and orients the faces so the boundary loop runs in increasing angle.  Two
surfaces from the same ``level`` therefore share a boundary parametrisation
vertex by vertex, which is how a filling ``M`` and a disc ``D`` are glued
along their common boundary.

``level`` controls resolution: the boundary has ``N = 6 * 2**(level - 1)``
vertices.
"""

from __future__ import annotations

import numpy as np

from .mesh import MeshError, SurfaceMesh


def boundary_count(level: int) -> int:
    if level < 1:
        raise ValueError("level must be >= 1")
    return 6 * 2 ** (level - 1)


def _zip_rings(inner, outer, a_in, a_out):
    """Triangulate the band between two closed rings sorted by angle."""
    m, n = len(inner), len(outer)
    ai = np.r_[a_in, a_in[0] + 2 * np.pi]
    ao = np.r_[a_out, a_out[0] + 2 * np.pi]
    i = j = 0
    tris = []
    while i < m or j < n:
        adv_inner = j == n or (i < m and ai[i + 1] < ao[j + 1] - 1e-12)
        if adv_inner:
            tris.append((inner[i % m], outer[j % n], inner[(i + 1) % m]))
            i += 1
        else:
            tris.append((inner[i % m], outer[j % n], outer[(j + 1) % n]))
            j += 1
    return tris


def _orient(faces, xy, sign=1.0):
    """Flip faces whose planar signed area disagrees with ``sign``."""
    faces = np.asarray(faces, dtype=np.int64)
    p = xy[faces]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = cross * sign < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def _jitter(rng, pos, movable, scale):
    out = pos.copy()
    if scale > 0:
        d = rng.uniform(-scale, scale, size=(int(movable.sum()), pos.shape[1]))
        out[movable] += d
    return out


def _polar_rings(R: int):
    """Ring structure shared by the disc and the cap: centre plus rings of 6j."""
    angles = [np.zeros(1)]
    ids = [np.array([0])]
    nxt = 1
    for j in range(1, R + 1):
        k = 6 * j
        angles.append(2 * np.pi * np.arange(k) / k)
        ids.append(np.arange(nxt, nxt + k))
        nxt += k
    faces = [(0, int(ids[1][t]), int(ids[1][(t + 1) % 6])) for t in range(6)]
    for j in range(1, R):
        faces += _zip_rings(ids[j], ids[j + 1], angles[j], angles[j + 1])
    return ids, angles, nxt, faces


def flat_disc(radius: float = 1.0, level: int = 4, jitter: float = 1e-6,
              seed: int = 0) -> SurfaceMesh:
    """Flat disc of the given radius; area tends to ``pi * radius**2``.

    Geodesics between interior points are straight segments, so they are
    unique.  Interior vertices are jittered by at most ``jitter * radius``.
    """
    R = 2 ** (level - 1)
    ids, angles, nv, faces = _polar_rings(R)
    xy = np.zeros((nv, 2))
    for j in range(1, R + 1):
        r = radius * j / R
        xy[ids[j]] = np.column_stack([r * np.cos(angles[j]), r * np.sin(angles[j])])
    faces = _orient(faces, xy)
    rng = np.random.default_rng(seed)
    movable = np.ones(nv, dtype=bool)
    movable[ids[R]] = False
    xy = _jitter(rng, xy, movable, jitter * radius)
    return SurfaceMesh.from_positions(
        xy, faces,
        meta={"generator": "flat_disc", "radius": radius, "level": level,
              "jitter": jitter, "seed": seed, "center": 0,
              "analytic_area": float(np.pi * radius ** 2)})


def spherical_cap(polar_angle: float = np.pi / 2, level: int = 4, radius: float = 1.0,
                  jitter: float = 1e-6, seed: int = 0) -> SurfaceMesh:
    """Cap of the sphere around the north pole; ``polar_angle = pi/2`` is a hemisphere.

    Caps strictly smaller than a hemisphere have unique geodesics.
    """
    if not 0 < polar_angle <= np.pi * (1 - 1e-9):
        raise ValueError("polar_angle must lie in (0, pi)")
    R = 2 ** (level - 1)
    ids, angles, nv, faces = _polar_rings(R)
    xyz = np.zeros((nv, 3))
    xyz[0] = (0, 0, radius)
    flat = np.zeros((nv, 2))
    for j in range(1, R + 1):
        t = polar_angle * j / R
        c, s = np.cos(angles[j]), np.sin(angles[j])
        xyz[ids[j]] = radius * np.column_stack([np.sin(t) * c, np.sin(t) * s,
                                                np.full_like(c, np.cos(t))])
        flat[ids[j]] = np.column_stack([j * c, j * s])
    faces = _orient(faces, flat)
    rng = np.random.default_rng(seed)
    movable = np.ones(nv, dtype=bool)
    movable[ids[R]] = False
    xyz = _jitter(rng, xyz, movable, jitter * radius)
    cap_area = 2 * np.pi * radius ** 2 * (1 - np.cos(polar_angle))
    return SurfaceMesh.from_positions(
        xyz, faces,
        meta={"generator": "spherical_cap", "polar_angle": polar_angle, "level": level,
              "radius": radius, "jitter": jitter, "seed": seed, "center": 0,
              "analytic_area": float(cap_area)})


def annulus(inner_radius: float = 1.0, outer_radius: float = 2.0, level: int = 3,
            rings: int | None = None, jitter: float = 1e-6, seed: int = 0) -> SurfaceMesh:
    """Flat annulus with ``N`` vertices on every ring.

    ``meta['core']`` lists the vertices of the middle ring.
    """
    N = boundary_count(level)
    if rings is None:
        rings = max(2, int(round((outer_radius - inner_radius) * N / (2 * np.pi * inner_radius))))
    if rings % 2:
        rings += 1
    ang = 2 * np.pi * np.arange(N) / N
    xy = []
    ids = []
    for j in range(rings + 1):
        r = inner_radius + (outer_radius - inner_radius) * j / rings
        xy.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        ids.append(np.arange(j * N, (j + 1) * N))
    xy = np.vstack(xy)
    faces = []
    for j in range(rings):
        faces += _zip_rings(ids[j], ids[j + 1], ang, ang)
    faces = _orient(faces, xy)
    movable = np.ones(len(xy), dtype=bool)
    movable[ids[0]] = movable[ids[-1]] = False
    xy = _jitter(np.random.default_rng(seed), xy, movable, jitter * inner_radius)
    return SurfaceMesh.from_positions(
        xy, faces,
        meta={"generator": "annulus", "inner_radius": inner_radius,
              "outer_radius": outer_radius, "level": level, "seed": seed,
              "core": ids[rings // 2].tolist(),
              "analytic_area": float(np.pi * (outer_radius ** 2 - inner_radius ** 2))})


def flat_cylinder(circumference: float = 2 * np.pi, height: float = 1.0, level: int = 3,
                  jitter: float = 1e-6, seed: int = 0) -> SurfaceMesh:
    """Flat cylinder ``S^1 x [0, height]``: an annulus whose core circles are geodesics.

    Lengths are intrinsic (unrolled); positions embed it in 3D.
    ``meta['core']`` lists the vertices of the middle ring.
    """
    if circumference <= 0 or height <= 0:
        raise ValueError("circumference and height must be positive")
    N = boundary_count(level)
    rings = max(2, int(round(height * N / circumference)))
    rings += rings % 2
    ang = 2 * np.pi * np.arange(N) / N
    ids = [np.arange(j * N, (j + 1) * N) for j in range(rings + 1)]
    z = np.repeat(height * np.arange(rings + 1) / rings, N)
    theta = np.tile(ang, rings + 1)
    # orientation from the planar picture r = 1 + z
    plane = np.column_stack([(1 + z) * np.cos(theta), (1 + z) * np.sin(theta)])
    faces = []
    for j in range(rings):
        faces += _zip_rings(ids[j], ids[j + 1], ang, ang)
    faces = _orient(faces, plane)
    movable = np.ones(len(z), dtype=bool)
    movable[ids[0]] = movable[ids[-1]] = False
    rng = np.random.default_rng(seed)
    R = circumference / (2 * np.pi)
    uv = _jitter(rng, np.column_stack([R * theta, z]), movable, jitter * circumference)
    lengths = {}
    for f in faces:
        for k in range(3):
            a, b = int(f[k]), int(f[(k + 1) % 3])
            du = (uv[b, 0] - uv[a, 0] + circumference / 2) % circumference - circumference / 2
            lengths[(min(a, b), max(a, b))] = float(np.hypot(du, uv[b, 1] - uv[a, 1]))
    th = uv[:, 0] / R
    pos = np.column_stack([R * np.cos(th), R * np.sin(th), uv[:, 1]])
    return SurfaceMesh(len(z), faces, lengths, pos, meta={
        "generator": "flat_cylinder", "circumference": circumference, "height": height,
        "level": level, "seed": seed, "core": ids[rings // 2].tolist(),
        "analytic_area": float(circumference * height)})


def _polygon_with_hole(level, radial, hole_radius, jitter, seed):
    """Rings blending the hole circle into a polygon given by ``radial(phi)``.

    Returns planar positions (before identification), faces oriented so the
    hole is traversed counterclockwise, and the ids of the outer ring.
    """
    N = boundary_count(level)
    if N % 8:
        raise ValueError("level must be >= 3 for polygon surfaces")
    ang = 2 * np.pi * np.arange(N) / N
    rad_out = radial(ang)
    spacing = 2 * np.pi * hole_radius / N
    rings = max(2, int(np.ceil((np.mean(rad_out) - hole_radius) / spacing)))
    xy, ids = [], []
    for j in range(rings + 1):
        s = j / rings
        r = (1 - s) * hole_radius + s * rad_out
        xy.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        ids.append(np.arange(j * N, (j + 1) * N))
    xy = np.vstack(xy)
    faces = []
    for j in range(rings):
        faces += _zip_rings(ids[j], ids[j + 1], ang, ang)
    # reversed orientation: the inner circle then runs counterclockwise
    faces = _orient(faces, xy, sign=-1.0)
    movable = np.ones(len(xy), dtype=bool)
    movable[ids[0]] = movable[ids[-1]] = False
    xy = _jitter(np.random.default_rng(seed), xy, movable, jitter * hole_radius)
    return xy, faces, ids[-1], N


def _identify(xy, faces, outer, partner):
    """Glue outer-ring vertices pairwise; lengths come from the unglued faces."""
    nv = len(xy)
    parent = np.arange(nv)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in partner:
        ra, rb = find(outer[a]), find(outer[b])
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(v) for v in range(nv)])
    uniq, new_id = np.unique(roots, return_inverse=True)
    lengths = {}
    for f in faces:
        for k in range(3):
            a, b = int(f[k]), int(f[(k + 1) % 3])
            l = float(np.linalg.norm(xy[a] - xy[b]))
            na, nb = int(new_id[a]), int(new_id[b])
            key = (min(na, nb), max(na, nb))
            if key in lengths and abs(lengths[key] - l) > 1e-9 * max(l, 1.0):
                raise MeshError("gluing is not an isometry")
            lengths[key] = l
    new_faces = new_id[np.asarray(faces)]
    return len(uniq), new_faces, lengths, xy[uniq], new_id


def torus_with_hole(level: int = 4, side: float = 4.0, hole_radius: float = 1.0,
                    jitter: float = 1e-6, seed: int = 0) -> SurfaceMesh:
    """Flat square torus of the given side with a round hole; genus 1, one boundary.

    Boundary distances go around the hole, so they dominate the chords of a
    unit disc whenever ``hole_radius >= 1``.  ``meta['corner']`` is the vertex
    where the four corners of the square meet.
    """
    h = side / 2.0

    def radial(phi):
        return h / np.maximum(np.abs(np.cos(phi)), np.abs(np.sin(phi)))

    xy, faces, outer, N = _polygon_with_hole(level, radial, hole_radius, jitter, seed)
    pts = xy[outer]
    key = {}
    for j, (x, y) in enumerate(pts):
        kx = -h if abs(x - h) < 1e-9 else x
        ky = -h if abs(y - h) < 1e-9 else y
        key.setdefault((round(kx, 9), round(ky, 9)), []).append(j)
    partner = [(g[0], o) for g in key.values() for o in g[1:]]
    nv, new_faces, lengths, pos, new_id = _identify(xy, faces, outer, partner)
    corner = int(new_id[outer[N // 8]])
    return SurfaceMesh(nv, new_faces, lengths, pos, None,
                       {"generator": "torus_with_hole", "level": level, "side": side,
                        "hole_radius": hole_radius, "jitter": jitter, "seed": seed,
                        "corner": corner, "genus": 1,
                        "analytic_area": float(side ** 2 - np.pi * hole_radius ** 2)})


def genus2_with_hole(level: int = 4, inradius: float = 3.0, hole_radius: float = 1.0,
                     jitter: float = 1e-6, seed: int = 0) -> SurfaceMesh:
    """Regular octagon glued by ``a b a^-1 b^-1 c d c^-1 d^-1`` with a round hole.

    Flat except for a cone point of total angle ``6*pi`` at the glued corner
    (``meta['corner']``).  Genus 2, one boundary.
    """
    sector = np.pi / 4

    def radial(phi):
        k = np.floor(np.mod(phi, 2 * np.pi) / sector + 1e-12)
        return inradius / np.cos(phi - (k + 0.5) * sector)

    xy, faces, outer, N = _polygon_with_hole(level, radial, hole_radius, jitter, seed)
    m = N // 8
    partner = []
    for k in (0, 1, 4, 5):
        for j in range(k * m, (k + 1) * m + 1):
            partner.append((j % N, ((2 * k + 3) * m - j) % N))
    nv, new_faces, lengths, pos, new_id = _identify(xy, faces, outer, partner)
    side = 2 * inradius * np.tan(np.pi / 8)
    octagon_area = 8 * 0.5 * side * inradius
    return SurfaceMesh(nv, new_faces, lengths, pos, None,
                       {"generator": "genus2_with_hole", "level": level,
                        "inradius": inradius, "hole_radius": hole_radius,
                        "jitter": jitter, "seed": seed, "corner": int(new_id[outer[0]]),
                        "genus": 2,
                        "analytic_area": float(octagon_area - np.pi * hole_radius ** 2)})


GENERATORS = {
    "flat_disc": flat_disc,
    "spherical_cap": spherical_cap,
    "annulus": annulus,
    "flat_cylinder": flat_cylinder,
    "torus_with_hole": torus_with_hole,
    "genus2_with_hole": genus2_with_hole,
}


def generate(name: str, **params) -> SurfaceMesh:
    """Build a named test surface."""
    try:
        fn = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {name}: {exc}") from None
