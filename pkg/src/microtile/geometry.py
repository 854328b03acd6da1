"""Particle shapes, exact signed distances, and random shape samplers.

Shapes are defined relative to the particle center (the origin of their own
frame); translation happens where fields are evaluated, so a shape's signed
distance is exactly translation invariant by construction. Negative values
lie inside the particle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Degenerate shape or sampler that failed to produce a valid shape."""


def _as_points(points, dimension):
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != dimension:
        raise ValueError(f"expected trailing dimension {dimension}, got {pts.shape}")
    flat = pts.reshape(-1, dimension)
    return pts.shape[:-1], flat


@dataclass(frozen=True)
class Disk:
    """A disk of fixed radius (2D)."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ShapeError(f"radius must be positive, got {self.radius}")

    dimension = 2

    @property
    def reach(self) -> float:
        return self.radius

    def signed_distance(self, points):
        shape, flat = _as_points(points, self.dimension)
        return (np.sqrt(np.sum(flat * flat, axis=1)) - self.radius).reshape(shape)


@dataclass(frozen=True)
class Sphere:
    """A ball of fixed radius (3D)."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ShapeError(f"radius must be positive, got {self.radius}")

    dimension = 3

    @property
    def reach(self) -> float:
        return self.radius

    def signed_distance(self, points):
        shape, flat = _as_points(points, self.dimension)
        return (np.sqrt(np.sum(flat * flat, axis=1)) - self.radius).reshape(shape)


@dataclass(frozen=True)
class Polygon:
    """A simple polygon given by its vertices relative to the center, CCW.

    The polygon must be star-shaped around the origin; the samplers guarantee
    it, the constructor checks only cheap necessary conditions.
    """

    vertices: tuple

    dimension = 2

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ShapeError(f"polygon needs >= 3 vertices, got {len(verts)}")
        arr = np.asarray(verts)
        if not np.all(np.isfinite(arr)):
            raise ShapeError("polygon vertices must be finite")
        nxt = np.roll(arr, -1, axis=0)
        if np.any(np.all(arr == nxt, axis=1)):
            raise ShapeError("consecutive polygon vertices coincide")

    @property
    def reach(self) -> float:
        arr = np.asarray(self.vertices)
        return float(np.max(np.sqrt(np.sum(arr * arr, axis=1))))

    def signed_distance(self, points):
        shape, flat = _as_points(points, self.dimension)
        verts = np.asarray(self.vertices)
        px, py = flat[:, 0], flat[:, 1]
        d2 = np.full(flat.shape[0], np.inf)
        inside = np.zeros(flat.shape[0], dtype=bool)
        k = verts.shape[0]
        for j in range(k):
            ax, ay = verts[j]
            bx, by = verts[(j + 1) % k]
            ex, ey = bx - ax, by - ay
            rx, ry = px - ax, py - ay
            t = np.clip((rx * ex + ry * ey) / (ex * ex + ey * ey), 0.0, 1.0)
            dx, dy = rx - t * ex, ry - t * ey
            d2 = np.minimum(d2, dx * dx + dy * dy)
            if ey != 0.0:
                cond = (ay > py) != (by > py)
                xcross = ax + (py - ay) * ex / ey
                inside ^= cond & (px < xcross)
        sd = np.sqrt(d2)
        sd[inside] = -sd[inside]
        return sd.reshape(shape)


def _quaternion_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _ellipsoid_boundary_distance(semi, y):
    """Unsigned distance from body-frame points y (M, d) to the boundary.

    semi must be sorted in descending order. Damped Newton iteration on the
    standard root equation sum((e_i y_i / (t + e_i^2))^2) = 1, falling back
    to a bisection step whenever Newton would leave the current bracket.
    """
    d = len(semi)
    e = np.asarray(semi, dtype=np.float64)
    m = y.shape[0]
    out = np.empty(m)

    if d == 1:
        out[:] = np.abs(np.abs(y[:, 0]) - e[0])
        return out

    e_min = e[-1]
    on_plane = y[:, -1] == 0.0
    main = ~on_plane

    if np.any(main):
        ym = np.abs(y[main])
        e2 = e * e
        lo = -e_min * e_min + e_min * ym[:, -1]
        hi = -e_min * e_min + np.sqrt(np.sum((e * ym) ** 2, axis=1))
        t = 0.5 * (lo + hi)
        ey2 = (e * ym) ** 2
        # a point freezes once its Newton step or bracket falls below
        # round-off; the freeze depends only on the point's own trajectory,
        # so results never depend on how points are batched together
        done = np.zeros(t.shape, dtype=bool)
        tol = 1e-20 * e_min * e_min
        for _ in range(100):
            denom = t[:, None] + e2
            q = ey2 / (denom * denom)
            g = np.sum(q, axis=1) - 1.0
            gpos = g > 0
            lo = np.where(~done & gpos, t, lo)
            hi = np.where(done | gpos, hi, t)
            dg = -2.0 * np.sum(q / denom, axis=1)
            step = np.where(dg != 0, g / np.where(dg != 0, dg, 1.0), 0.0)
            nt = t - step
            bad = (nt <= lo) | (nt >= hi) | ~np.isfinite(nt)
            settled = np.where(
                bad,
                hi - lo <= 1e-14 * (np.abs(lo) + np.abs(hi)) + tol,
                np.abs(step) <= 1e-15 * np.abs(t) + tol,
            )
            t = np.where(done, t, np.where(bad, 0.5 * (lo + hi), nt))
            done |= settled
            if np.all(done):
                break
        denom = t[:, None] + e2
        foot = e2 * ym / denom
        out[main] = np.sqrt(np.sum((foot - ym) ** 2, axis=1))

    if np.any(on_plane):
        yp = y[on_plane][:, :-1]
        d_red = _ellipsoid_boundary_distance(tuple(e[:-1]), yp)
        denom = e[:-1] ** 2 - e_min * e_min
        usable = np.ones(yp.shape[0], dtype=bool)
        x = np.zeros_like(yp)
        for i in range(d - 1):
            yi = yp[:, i]
            if denom[i] <= 0.0:
                usable &= yi == 0.0
            else:
                x[:, i] = e[i] * e[i] * yi / denom[i]
        s = np.sum((x / e[:-1]) ** 2, axis=1)
        feasible = usable & (s < 1.0)
        d_off = np.sqrt(
            np.sum((x - yp) ** 2, axis=1) + e_min * e_min * np.maximum(1.0 - s, 0.0)
        )
        out[on_plane] = np.where(feasible, d_off, d_red)

    return out


def _ellipsoid_distance_lower_bound(semi, y):
    """Cheap pointwise lower bound on the signed boundary distance.

    For body-frame points y: outside, the scaled norm q = |y / e| exceeds 1
    and the boundary is at least (q - 1) * e_min away (q is 1/e_min
    Lipschitz); |y| - e_max holds everywhere. Inside points fall back to
    -e_max. Never exceeds the exact signed distance, so screening with it
    cannot drop a real update.
    """
    e = np.asarray(semi, dtype=np.float64)
    e_max = e[0]
    e_min = e[-1]
    q = np.sqrt(np.sum((y / e) ** 2, axis=1))
    lb = np.where(q >= 1.0, (q - 1.0) * e_min, -e_max)
    norm = np.sqrt(np.sum(y * y, axis=1))
    return np.maximum(lb, norm - e_max)


@dataclass(frozen=True)
class Ellipse:
    """An ellipse with semi-axes sorted descending and a rotation angle (2D)."""

    semi_axes: tuple
    angle: float = 0.0

    dimension = 2

    def __post_init__(self):
        semi = tuple(float(v) for v in self.semi_axes)
        if len(semi) != 2 or any(not (v > 0) for v in semi):
            raise ShapeError(f"need 2 positive semi-axes, got {semi}")
        object.__setattr__(self, "semi_axes", tuple(sorted(semi, reverse=True)))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def reach(self) -> float:
        return self.semi_axes[0]

    def _rotation(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def signed_distance(self, points):
        shape, flat = _as_points(points, self.dimension)
        y = flat @ self._rotation()  # world -> body: R^T p, as rows p @ R
        dist = _ellipsoid_boundary_distance(self.semi_axes, y)
        e = np.asarray(self.semi_axes)
        inside = np.sum((y / e) ** 2, axis=1) < 1.0
        dist[inside] = -dist[inside]
        return dist.reshape(shape)

    def distance_lower_bound(self, points):
        shape, flat = _as_points(points, self.dimension)
        y = flat @ self._rotation()
        return _ellipsoid_distance_lower_bound(self.semi_axes, y).reshape(shape)


@dataclass(frozen=True)
class Ellipsoid:
    """An ellipsoid with semi-axes sorted descending and a unit quaternion (3D)."""

    semi_axes: tuple
    quaternion: tuple = (1.0, 0.0, 0.0, 0.0)

    dimension = 3

    def __post_init__(self):
        semi = tuple(float(v) for v in self.semi_axes)
        if len(semi) != 3 or any(not (v > 0) for v in semi):
            raise ShapeError(f"need 3 positive semi-axes, got {semi}")
        q = np.asarray(self.quaternion, dtype=np.float64)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise ShapeError(f"bad quaternion {self.quaternion}")
        norm = float(np.sqrt(np.sum(q * q)))
        if norm == 0.0:
            raise ShapeError("zero quaternion")
        q = q / norm
        if q[0] < 0:
            q = -q
        order = np.argsort(-np.asarray(semi), kind="stable")
        object.__setattr__(self, "semi_axes", tuple(semi[i] for i in order))
        object.__setattr__(self, "quaternion", tuple(float(v) for v in q))
        # permuting columns keeps body axes aligned with the sorted semi-axes
        rot = _quaternion_matrix(self.quaternion)[:, order]
        object.__setattr__(self, "_rot", rot)

    @property
    def reach(self) -> float:
        return self.semi_axes[0]

    def signed_distance(self, points):
        shape, flat = _as_points(points, self.dimension)
        y = flat @ self._rot
        dist = _ellipsoid_boundary_distance(self.semi_axes, y)
        e = np.asarray(self.semi_axes)
        inside = np.sum((y / e) ** 2, axis=1) < 1.0
        dist[inside] = -dist[inside]
        return dist.reshape(shape)

    def distance_lower_bound(self, points):
        shape, flat = _as_points(points, self.dimension)
        y = flat @ self._rot
        return _ellipsoid_distance_lower_bound(self.semi_axes, y).reshape(shape)


@dataclass(frozen=True)
class Particle:
    """A placed particle: which tile hosts it, where, and its shape.

    provenance is "original" for directly inserted particles and "image" for
    copies propagated across tile boundaries.
    """

    tile_index: int
    center: tuple
    shape: object
    provenance: str = "original"

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if len(center) != self.shape.dimension:
            raise ShapeError(
                f"center {center} does not match shape dimension "
                f"{self.shape.dimension}"
            )
        object.__setattr__(self, "center", center)
        if self.provenance not in ("original", "image"):
            raise ShapeError(f"bad provenance {self.provenance!r}")

    @property
    def dimension(self) -> int:
        return self.shape.dimension

    @property
    def reach(self) -> float:
        return self.shape.reach

    def translated(self, offset) -> "Particle":
        center = tuple(c + float(o) for c, o in zip(self.center, offset))
        return Particle(self.tile_index, center, self.shape, self.provenance)


# ---------------------------------------------------------------------------
# samplers


def sample_polygon(rng, rbar: float, mean_vertices: float = 6.0,
                   max_retries: int = 100) -> Polygon:
    """Draw a nearly regular star-shaped polygon with reach at most rbar.

    Per attempt the draws are, in order: vertex count round(N(mean, 0.5^2)),
    base orientation U(0, 2pi), one N(0, 0.5^2) perturbation per ray angle,
    one N(0.95, 0.05^2) radius factor per vertex (capped at 1). Attempts
    failing the star-shape checks (>= 3 vertices, strictly increasing angles
    spanning less than a full turn, positive radii) are redrawn.
    """
    for _ in range(max_retries):
        k = int(round(rng.normal(mean_vertices, 0.5)))
        base = rng.uniform(0.0, 2.0 * math.pi)
        if k < 3:
            continue
        angles = base + 2.0 * math.pi * np.arange(k) / k + rng.normal(0.0, 0.5, size=k)
        radii = rbar * np.minimum(rng.normal(0.95, 0.05, size=k), 1.0)
        if np.any(np.diff(angles) <= 0.0):
            continue
        if angles[-1] - angles[0] >= 2.0 * math.pi:
            continue
        if np.any(radii <= 0.0):
            continue
        verts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        return Polygon(tuple(map(tuple, verts)))
    raise ShapeError(f"no valid polygon after {max_retries} attempts")


def sample_ellipsoid(rng, rbar: float, mid_range=(0.7, 0.9),
                     minor_range=(0.6, 0.7)) -> Ellipsoid:
    """Draw a uniformly oriented ellipsoid with major semi-axis rbar.

    Draw order: middle axis factor U(*mid_range), minor axis factor
    U(*minor_range), then four N(0,1) values normalized into a unit
    quaternion (uniform on the rotation group).
    """
    mid = rbar * rng.uniform(*mid_range)
    minor = rbar * rng.uniform(*minor_range)
    q = rng.normal(0.0, 1.0, size=4)
    return Ellipsoid((rbar, mid, minor), tuple(q))


# ---------------------------------------------------------------------------
# particle list text format


def _fmt(x: float) -> str:
    return repr(float(x))


def particle_to_line(p: Particle) -> str:
    parts = [str(p.tile_index)]
    s = p.shape
    if isinstance(s, Disk):
        parts += ["disk", *map(_fmt, p.center), _fmt(s.radius)]
    elif isinstance(s, Sphere):
        parts += ["sphere", *map(_fmt, p.center), _fmt(s.radius)]
    elif isinstance(s, Ellipse):
        parts += ["ellipse", *map(_fmt, p.center), *map(_fmt, s.semi_axes),
                  _fmt(s.angle)]
    elif isinstance(s, Ellipsoid):
        parts += ["ellipsoid", *map(_fmt, p.center), *map(_fmt, s.semi_axes),
                  *map(_fmt, s.quaternion)]
    elif isinstance(s, Polygon):
        parts += ["polygon", *map(_fmt, p.center), _fmt(s.reach),
                  str(len(s.vertices))]
        for vx, vy in s.vertices:
            parts += [_fmt(vx), _fmt(vy)]
    else:
        raise ShapeError(f"unknown shape {type(s).__name__}")
    parts.append(p.provenance)
    return " ".join(parts)


def particle_from_line(line: str) -> Particle:
    tokens = line.split()
    tile = int(tokens[0])
    kind = tokens[1]
    provenance = tokens[-1]
    vals = [float(v) for v in tokens[2:-1]]
    if kind == "disk":
        return Particle(tile, tuple(vals[:2]), Disk(vals[2]), provenance)
    if kind == "sphere":
        return Particle(tile, tuple(vals[:3]), Sphere(vals[3]), provenance)
    if kind == "ellipse":
        return Particle(tile, tuple(vals[:2]),
                        Ellipse(tuple(vals[2:4]), vals[4]), provenance)
    if kind == "ellipsoid":
        return Particle(tile, tuple(vals[:3]),
                        Ellipsoid(tuple(vals[3:6]), tuple(vals[6:10])), provenance)
    if kind == "polygon":
        center = tuple(vals[:2])
        reach = vals[2]
        k = int(vals[3])
        coords = vals[4:4 + 2 * k]
        verts = tuple((coords[2 * j], coords[2 * j + 1]) for j in range(k))
        poly = Polygon(verts)
        if poly.reach != reach:
            raise ShapeError(
                f"stored polygon reach {reach} does not match vertices "
                f"({poly.reach})"
            )
        return Particle(tile, center, poly, provenance)
    raise ShapeError(f"unknown shape kind {kind!r}")


def write_particles(particles, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# tile kind center... params... provenance\n")
        for p in particles:
            fh.write(particle_to_line(p) + "\n")


def read_particles(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(particle_from_line(line))
    return out
