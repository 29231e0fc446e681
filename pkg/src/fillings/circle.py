"""Oriented triangle calculus on the unit circle.

Points on the circle are plain floats (radians).  The triangle spanned by
the origin and two unit vectors ``a`` and ``b`` carries the signed area
``sin(b - a) / 2``: positive when the shorter arc runs counterclockwise from
``a`` to ``b``, negative when it runs clockwise, and zero when the points
coincide or are antipodal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi

#: Wraparound tolerance used for angle equality.
ANGLE_TOL = 1e-12

#: Slack used by the bound checks.
BOUND_TOL = 1e-9


class InvalidConfiguration(ValueError):
    """Raised when grouped vectors do not fit their arc partition."""


def wrap_angle(theta):
    """Canonical representative(s) in ``[0, 2*pi)``."""
    t = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    t = np.where(t >= TWO_PI - ANGLE_TOL, 0.0, t)
    return t if t.ndim else float(t)


def oriented_area(a, b):
    """Signed area of the triangle (origin, a, b) for unit vectors at angles a, b.

    Vectorised over numpy inputs.  Exactly antisymmetric, and exactly zero for
    equal or antipodal points.
    """
    s = np.sin(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
    s = np.where(np.abs(s) <= ANGLE_TOL, 0.0, s)
    out = 0.5 * s
    return out if out.ndim else float(out)


def oriented_area_by_cases(a: float, b: float) -> float:
    """Oriented area computed from the case analysis and a planar shoelace.

    Independent of :func:`oriented_area`; used as a test oracle.
    """
    pa = np.array([np.cos(a), np.sin(a)])
    pb = np.array([np.cos(b), np.sin(b)])
    ccw = float(np.mod(b - a, TWO_PI))
    if ccw < ANGLE_TOL or abs(ccw - np.pi) < ANGLE_TOL or TWO_PI - ccw < ANGLE_TOL:
        return 0.0
    # unsigned shoelace area of (0, pa, pb)
    area = 0.5 * abs(pa[0] * pb[1] - pa[1] * pb[0])
    return area if ccw < np.pi else -area


@dataclass(frozen=True)
class CirclePointSet:
    """Ordered angles on the circle.

    ``cyclic`` selects the closure convention of :func:`cyclic_area_sum`:
    with ``True`` the last point is paired with the first.
    """

    angles: np.ndarray
    cyclic: bool = True

    def __post_init__(self):
        a = wrap_angle(np.atleast_1d(np.asarray(self.angles, dtype=float)))
        object.__setattr__(self, "angles", np.atleast_1d(a))

    def __len__(self):
        return len(self.angles)

    @classmethod
    def equally_spaced(cls, n: int, offset: float = 0.0) -> "CirclePointSet":
        return cls(offset + TWO_PI * np.arange(n) / n)

    def is_distinct(self) -> bool:
        s = np.sort(self.angles)
        if len(s) < 2:
            return True
        gaps = np.diff(np.append(s, s[0] + TWO_PI))
        return bool(np.all(gaps > ANGLE_TOL))

    def sorted_ccw(self) -> "CirclePointSet":
        return CirclePointSet(np.sort(self.angles), self.cyclic)


def cyclic_area_sum(points) -> float:
    """Sum of oriented areas of consecutive triangles, closing the cycle.

    Parameters
    ----------
    points : CirclePointSet or array_like
        Angles in their given order.
    """
    if not isinstance(points, CirclePointSet):
        points = CirclePointSet(points)
    a = points.angles
    if len(a) < 2:
        raise ValueError("degenerate point set")
    nxt = np.roll(a, -1) if points.cyclic else a[1:]
    cur = a if points.cyclic else a[:-1]
    return float(np.sum(oriented_area(cur, nxt)))


def longest_gap(points) -> float:
    """Length of the longest arc of the circle missing the points."""
    if not isinstance(points, CirclePointSet):
        points = CirclePointSet(points)
    if len(points) == 0:
        raise ValueError("empty point set")
    s = np.sort(points.angles)
    gaps = np.diff(np.append(s, s[0] + TWO_PI))
    return float(np.max(gaps))


def _ccw_rank(angles: np.ndarray) -> np.ndarray:
    return np.argsort(np.argsort(angles, kind="stable"), kind="stable")


def check_cyclic_order(reference, candidate) -> bool:
    """True iff ``candidate`` visits its points in the same cyclic order as ``reference``.

    Both sets are read index-by-index; the i-th candidate point corresponds to
    the i-th reference point.
    """
    ref = reference if isinstance(reference, CirclePointSet) else CirclePointSet(reference)
    cand = candidate if isinstance(candidate, CirclePointSet) else CirclePointSet(candidate)
    if len(ref) != len(cand):
        raise ValueError("point sets differ in size")
    if not (ref.is_distinct() and cand.is_distinct()):
        raise ValueError("duplicate points")
    n = len(ref)
    if n <= 2:
        return True
    r = _ccw_rank(ref.angles)
    c = _ccw_rank(cand.angles)
    # same cyclic order iff rank difference is constant mod n
    return bool(np.all(np.mod(c - r, n) == np.mod(c[0] - r[0], n)))


@dataclass(frozen=True)
class ArcPartition:
    """``4 * genus`` half-open arcs ``[start, start + length)`` covering the circle."""

    starts: np.ndarray
    lengths: np.ndarray
    genus: int

    def __post_init__(self):
        starts = wrap_angle(np.atleast_1d(np.asarray(self.starts, dtype=float)))
        lengths = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        object.__setattr__(self, "starts", np.atleast_1d(starts))
        object.__setattr__(self, "lengths", lengths)
        if self.genus < 1:
            raise ValueError("genus must be positive")
        if len(starts) != 4 * self.genus or len(lengths) != 4 * self.genus:
            raise ValueError("expected 4G arcs")
        if np.any(lengths <= 0):
            raise ValueError("arc lengths must be positive")
        if abs(lengths.sum() - TWO_PI) > 1e-9:
            raise ValueError("arc lengths must sum to 2*pi")
        # consecutive arcs must abut
        ends = wrap_angle(starts + lengths)
        gap = np.mod(np.roll(starts, -1) - ends + np.pi, TWO_PI) - np.pi
        if np.any(np.abs(gap) > 1e-9):
            raise ValueError("arcs do not tile the circle")

    def contains_interior(self, i: int, theta) -> np.ndarray:
        off = np.mod(np.asarray(theta, dtype=float) - self.starts[i], TWO_PI)
        return (off > ANGLE_TOL) & (off < self.lengths[i] - ANGLE_TOL)


@dataclass(frozen=True)
class GroupedVectors:
    """Per-arc ordered lists of angles; ``ccw[i]`` gives the order of group i."""

    groups: tuple
    ccw: tuple

    def __post_init__(self):
        groups = tuple(np.atleast_1d(np.asarray(g, dtype=float)) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "ccw", tuple(bool(c) for c in self.ccw))
        if len(self.ccw) != len(groups):
            raise ValueError("one orientation flag per group")

    def concatenated(self) -> np.ndarray:
        if not self.groups:
            return np.empty(0)
        return np.concatenate(self.groups)


@dataclass
class BoundReport:
    sum: float
    bound: float
    slack: float
    passed: bool
    group_sums: np.ndarray = field(default_factory=lambda: np.empty(0))
    group_bounds: np.ndarray = field(default_factory=lambda: np.empty(0))
    groups_passed: bool = True

    def to_dict(self) -> dict:
        return {
            "sum": self.sum,
            "bound": self.bound,
            "slack": self.slack,
            "pass": self.passed,
            "group_sums": [float(x) for x in self.group_sums],
            "group_bounds": [float(x) for x in self.group_bounds],
            "groups_pass": self.groups_passed,
        }


def _check_groups(partition: ArcPartition, vectors: GroupedVectors):
    if len(vectors.groups) != len(partition.lengths):
        raise InvalidConfiguration("invalid configuration: one group per arc required")
    for i, (g, ccw) in enumerate(zip(vectors.groups, vectors.ccw)):
        if len(g) == 0:
            continue
        if not np.all(partition.contains_interior(i, g)):
            raise InvalidConfiguration(f"invalid configuration: vector outside arc {i}")
        off = np.mod(g - partition.starts[i], TWO_PI)
        steps = np.diff(off)
        if (ccw and np.any(steps <= 0)) or (not ccw and np.any(steps >= 0)):
            raise InvalidConfiguration(f"invalid configuration: group {i} not monotone")


def verify_grouped_bound(partition: ArcPartition, vectors: GroupedVectors,
                         tol: float = BOUND_TOL) -> BoundReport:
    """Check the grouped-arc bound ``sum <= pi + 2G`` for one configuration.

    Groups are visited in arc order; inside a group, vectors keep their stored
    order.  Per-group partial sums (consecutive pairs inside one group) are
    checked against half the arc length.
    """
    _check_groups(partition, vectors)
    order = np.argsort(partition.starts, kind="stable")
    seq = [vectors.groups[i] for i in order]
    allv = np.concatenate(seq) if seq else np.empty(0)
    total = cyclic_area_sum(allv) if len(allv) >= 2 else 0.0
    bound = np.pi + 2 * partition.genus
    gsums = np.array([
        float(np.sum(oriented_area(g[:-1], g[1:]))) if len(g) >= 2 else 0.0
        for g in vectors.groups
    ])
    gbounds = partition.lengths / 2.0
    return BoundReport(
        sum=total,
        bound=bound,
        slack=bound - total,
        passed=bool(total <= bound + tol),
        group_sums=gsums,
        group_bounds=gbounds,
        groups_passed=bool(np.all(gsums <= gbounds + tol)),
    )


def random_configuration(rng: np.random.Generator, genus: int,
                         max_per_group: int = 12) -> tuple[ArcPartition, GroupedVectors]:
    """Draw a valid (partition, grouped vectors) pair.

    Arc endpoints are uniform on the circle after a random rotation; group
    sizes are uniform in ``0..max_per_group``; each group is sorted ccw or cw
    with equal probability.
    """
    k = 4 * genus
    cuts = np.sort(rng.uniform(0.0, TWO_PI, size=k))
    lengths = np.diff(np.append(cuts, cuts[0] + TWO_PI))
    while np.any(lengths < 1e-6):
        cuts = np.sort(rng.uniform(0.0, TWO_PI, size=k))
        lengths = np.diff(np.append(cuts, cuts[0] + TWO_PI))
    part = ArcPartition(cuts, lengths, genus)
    groups, flags = [], []
    for i in range(k):
        m = int(rng.integers(0, max_per_group + 1))
        off = np.unique(rng.uniform(1e-6, 1.0 - 1e-6, size=m)) * lengths[i]
        ccw = bool(rng.integers(0, 2))
        if not ccw:
            off = off[::-1]
        groups.append(wrap_angle(part.starts[i] + off))
        flags.append(ccw)
    return part, GroupedVectors(tuple(groups), tuple(flags))


def random_bound_trials(n_trials: int, genera=(1, 2), seed: int = 0,
                        max_per_group: int = 12) -> list[BoundReport]:
    """Run :func:`verify_grouped_bound` on seeded random configurations."""
    rng = np.random.default_rng(seed)
    out = []
    for t in range(n_trials):
        g = genera[t % len(genera)]
        part, vec = random_configuration(rng, g, max_per_group)
        out.append(verify_grouped_bound(part, vec))
    return out


# -- batched trials ------------------------------------------------------------

@dataclass
class ConfigurationBatch:
    """Many same-genus configurations stored as padded arrays.

    ``angles[t, i, :sizes[t, i]]`` is group ``i`` of trial ``t`` in its stored
    order; padding is NaN.
    """

    genus: int
    starts: np.ndarray
    lengths: np.ndarray
    angles: np.ndarray
    sizes: np.ndarray
    ccw: np.ndarray

    def __len__(self):
        return len(self.starts)

    def configuration(self, t: int) -> tuple[ArcPartition, GroupedVectors]:
        part = ArcPartition(self.starts[t], self.lengths[t], self.genus)
        groups = tuple(self.angles[t, i, :self.sizes[t, i]] for i in range(4 * self.genus))
        return part, GroupedVectors(groups, tuple(bool(c) for c in self.ccw[t]))


def random_batch(rng: np.random.Generator, genus: int, n: int,
                 max_per_group: int = 12) -> ConfigurationBatch:
    """Vectorised counterpart of :func:`random_configuration` (same distribution)."""
    k, P = 4 * genus, max_per_group
    cuts = np.sort(rng.uniform(0.0, TWO_PI, size=(n, k)), axis=1)
    lengths = np.diff(np.concatenate([cuts, cuts[:, :1] + TWO_PI], axis=1), axis=1)
    bad = np.any(lengths < 1e-6, axis=1)
    while bad.any():
        c = np.sort(rng.uniform(0.0, TWO_PI, size=(int(bad.sum()), k)), axis=1)
        cuts[bad] = c
        lengths[bad] = np.diff(np.concatenate([c, c[:, :1] + TWO_PI], axis=1), axis=1)
        bad = np.any(lengths < 1e-6, axis=1)
    sizes = rng.integers(0, P + 1, size=(n, k))
    j = np.arange(P)
    valid = j[None, None, :] < sizes[..., None]
    off = np.where(valid, rng.uniform(1e-6, 1.0 - 1e-6, size=(n, k, P)), np.inf)
    off = np.sort(off, axis=2)
    ccw = rng.integers(0, 2, size=(n, k)).astype(bool)
    idx = np.where(~ccw[..., None] & valid, sizes[..., None] - 1 - j, j)
    off = np.where(valid, np.take_along_axis(off, idx, axis=2), 0.0)
    ang = np.where(valid, wrap_angle(cuts[..., None] + off * lengths[..., None]), np.nan)
    return ConfigurationBatch(genus, wrap_angle(cuts), lengths, ang, sizes, ccw)


@dataclass
class BatchReport:
    genus: np.ndarray
    sum: np.ndarray
    bound: np.ndarray
    passed: np.ndarray
    groups_passed: np.ndarray
    #: number of configurations failing the validity checks (expected 0)
    invalid: int = 0

    def __len__(self):
        return len(self.sum)


def verify_batch(batch: ConfigurationBatch, tol: float = BOUND_TOL) -> BatchReport:
    """:func:`verify_grouped_bound` applied to every configuration of a batch."""
    n, k, P = batch.angles.shape
    j = np.arange(P)
    valid = j[None, None, :] < batch.sizes[..., None]
    # validity: inside the arc's interior and monotone in the stated direction
    off = np.mod(np.nan_to_num(batch.angles) - batch.starts[..., None], TWO_PI)
    inside = (off > ANGLE_TOL) & (off < batch.lengths[..., None] - ANGLE_TOL)
    step = np.diff(off, axis=2)
    pair = valid[..., 1:]
    mono = np.where(batch.ccw[..., None], step > 0, step < 0)
    ok = np.all(inside | ~valid, axis=(1, 2)) & np.all(mono | ~pair, axis=(1, 2))

    # group partial sums
    terms = np.where(pair, oriented_area(np.nan_to_num(batch.angles[..., :-1]),
                                         np.nan_to_num(batch.angles[..., 1:])), 0.0)
    gsums = terms.sum(axis=2)
    gpass = np.all(gsums <= batch.lengths / 2 + tol, axis=1)

    # whole cyclic sum: valid entries in row-major order are the visiting order
    flat = batch.angles[valid]
    tid = np.repeat(np.arange(n), batch.sizes.sum(axis=1))
    counts = np.bincount(tid, minlength=n)
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    nxt_idx = np.arange(len(flat)) + 1
    last = first + counts - 1
    nxt_idx[last[counts > 0]] = first[counts > 0]
    sums = np.bincount(tid, oriented_area(flat, flat[nxt_idx]), minlength=n)
    sums[counts < 2] = 0.0
    bound = np.full(n, np.pi + 2 * batch.genus)
    return BatchReport(np.full(n, batch.genus), sums, bound, sums <= bound + tol, gpass,
                       int(np.sum(~ok)))


def batch_bound_trials(n_trials: int, genera=(1, 2), seed: int = 0,
                       max_per_group: int = 12, chunk: int = 20_000) -> BatchReport:
    """Seeded random trials, split evenly across ``genera``, checked in vectorised chunks."""
    rng = np.random.default_rng(seed)
    parts = []
    per = [n_trials // len(genera) + (i < n_trials % len(genera)) for i in range(len(genera))]
    for g, m in zip(genera, per):
        done = 0
        while done < m:
            c = min(chunk, m - done)
            parts.append(verify_batch(random_batch(rng, g, c, max_per_group)))
            done += c
    cat = lambda name: np.concatenate([getattr(r, name) for r in parts]) if parts else np.empty(0)
    return BatchReport(cat("genus"), cat("sum"), cat("bound"), cat("passed"),
                       cat("groups_passed"), sum(r.invalid for r in parts))


# -- replayable configuration files -----------------------------------------

def save_configuration(path, partition: ArcPartition, vectors: GroupedVectors):
    data = {
        "genus": partition.genus,
        "arcs": [{"start": float(s), "length": float(l)}
                 for s, l in zip(partition.starts, partition.lengths)],
        "groups": [{"angles": [float(a) for a in g], "ccw": c}
                   for g, c in zip(vectors.groups, vectors.ccw)],
    }
    Path(path).write_text(json.dumps(data, indent=2))


def load_configuration(path) -> tuple[ArcPartition, GroupedVectors]:
    data = json.loads(Path(path).read_text())
    part = ArcPartition([a["start"] for a in data["arcs"]],
                        [a["length"] for a in data["arcs"]], int(data["genus"]))
    vec = GroupedVectors(tuple(g["angles"] for g in data["groups"]),
                         tuple(g["ccw"] for g in data["groups"]))
    return part, vec


def write_trials_csv(path, reports):
    """One row per trial; ``reports`` is a list of :class:`BoundReport` or a :class:`BatchReport`."""
    if isinstance(reports, BatchReport):
        rows = zip(reports.sum.tolist(), reports.bound.tolist(), reports.passed.tolist())
    else:
        rows = ((r.sum, r.bound, r.passed) for r in reports)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "sum", "bound", "slack", "pass"])
        for i, (sm, bd, ok) in enumerate(rows):
            w.writerow([i, repr(float(sm)), repr(float(bd)), repr(float(bd - sm)), int(ok)])
