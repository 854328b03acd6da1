import math

import numpy as np
import pytest
from matplotlib.path import Path

from microtile.geometry import (
    Disk,
    Ellipse,
    Ellipsoid,
    Particle,
    Polygon,
    ShapeError,
    Sphere,
    particle_from_line,
    particle_to_line,
    read_particles,
    sample_ellipsoid,
    sample_polygon,
    write_particles,
)


def test_disk_and_sphere_exact():
    d = Disk(0.25)
    pts = np.array([[0.0, 0.0], [0.25, 0.0], [0.3, 0.4]])
    assert np.allclose(d.signed_distance(pts), [-0.25, 0.0, 0.25], atol=1e-15)
    s = Sphere(1.0)
    assert s.signed_distance(np.array([[2.0, 0.0, 0.0]]))[0] == pytest.approx(1.0)
    assert s.signed_distance(np.zeros((1, 3)))[0] == pytest.approx(-1.0)


def test_disk_rejects_bad_radius():
    with pytest.raises(ShapeError):
        Disk(0.0)
    with pytest.raises(ShapeError):
        Sphere(-1.0)


def test_polygon_square_values():
    sq = Polygon(((1, 1), (-1, 1), (-1, -1), (1, -1)))
    pts = np.array(
        [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.9, 0.9], [0.0, 0.5]]
    )
    sd = sq.signed_distance(pts)
    assert sd[0] == pytest.approx(-1.0)
    assert sd[1] == pytest.approx(1.0)
    assert sd[2] == pytest.approx(math.sqrt(2.0))
    assert sd[3] == pytest.approx(-0.1)
    assert sd[4] == pytest.approx(-0.5)
    assert sq.reach == pytest.approx(math.sqrt(2.0))


def test_polygon_validation():
    with pytest.raises(ShapeError):
        Polygon(((0, 0), (1, 0)))
    with pytest.raises(ShapeError):
        Polygon(((0, 0), (0, 0), (1, 1)))


def test_polygon_sign_matches_independent_containment():
    rng = np.random.default_rng(42)
    for _ in range(10):
        poly = sample_polygon(rng, 0.3)
        verts = np.asarray(poly.vertices)
        pts = rng.uniform(-0.5, 0.5, size=(500, 2))
        sd = poly.signed_distance(pts)
        inside = Path(verts).contains_points(pts)
        disagree = (sd < 0) != inside
        # tolerate points within round-off of the boundary
        assert np.all(np.abs(sd[disagree]) < 1e-9)


def test_polygon_distance_against_dense_boundary():
    rng = np.random.default_rng(3)
    poly = sample_polygon(rng, 0.3)
    verts = np.asarray(poly.vertices)
    k = len(verts)
    samples = []
    for j in range(k):
        a, b = verts[j], verts[(j + 1) % k]
        t = np.linspace(0.0, 1.0, 4000, endpoint=False)[:, None]
        samples.append(a + t * (b - a))
    boundary = np.concatenate(samples)
    pts = rng.uniform(-0.6, 0.6, size=(100, 2))
    sd = poly.signed_distance(pts)
    for p, v in zip(pts, sd):
        ref = np.min(np.sqrt(np.sum((boundary - p) ** 2, axis=1)))
        assert abs(abs(v) - ref) < 1e-6


def test_ellipse_circle_limit():
    e = Ellipse((0.3, 0.3))
    pts = np.array([[0.0, 0.0], [0.3, 0.0], [0.6, 0.8]])
    assert np.allclose(
        e.signed_distance(pts), [-0.3, 0.0, 0.7], atol=1e-10
    )


def test_ellipse_axis_points_exact():
    e0, e1 = 0.4, 0.15
    e = Ellipse((e0, e1))
    # outside on the major axis: the pole is the foot
    assert e.signed_distance(np.array([[0.7, 0.0]]))[0] == pytest.approx(
        0.3, abs=1e-12
    )
    # inside on the minor axis: flat pole is always the foot
    assert e.signed_distance(np.array([[0.0, 0.05]]))[0] == pytest.approx(
        -0.1, abs=1e-12
    )
    # inside on the major axis beyond the evolute: off-axis feet
    x = 0.2  # (e0^2-e1^2)/e0 = 0.34375 > x -> off-axis regime
    x0 = e0 * e0 * x / (e0 * e0 - e1 * e1)
    x1 = e1 * math.sqrt(1.0 - (x0 / e0) ** 2)
    want = -math.hypot(x0 - x, x1)
    assert e.signed_distance(np.array([[x, 0.0]]))[0] == pytest.approx(
        want, abs=1e-12
    )
    # inside the evolute threshold on the major axis: pole is the foot
    x = 0.39
    assert e.signed_distance(np.array([[x, 0.0]]))[0] == pytest.approx(
        x - e0, abs=1e-12
    )


def _dense_ellipse_boundary(e, n=20000):
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    body = np.stack([e.semi_axes[0] * np.cos(t), e.semi_axes[1] * np.sin(t)], axis=1)
    c, s = math.cos(e.angle), math.sin(e.angle)
    rot = np.array([[c, -s], [s, c]])
    return body @ rot.T


def test_ellipse_distance_against_dense_boundary():
    rng = np.random.default_rng(9)
    for _ in range(5):
        axes = np.sort(rng.uniform(0.1, 0.5, size=2))[::-1]
        e = Ellipse(tuple(axes), rng.uniform(0.0, math.pi))
        boundary = _dense_ellipse_boundary(e)
        pts = rng.uniform(-0.8, 0.8, size=(60, 2))
        sd = e.signed_distance(pts)
        assert np.max(np.abs(e.signed_distance(boundary))) < 1e-9
        for p, v in zip(pts, sd):
            ref = np.min(np.sqrt(np.sum((boundary - p) ** 2, axis=1)))
            if ref < 1e-3:
                continue
            assert abs(abs(v) - ref) < 1e-5


def test_ellipsoid_axis_points_exact():
    e = Ellipsoid((0.5, 0.3, 0.2))
    pts = np.array(
        [
            [0.9, 0.0, 0.0],
            [0.0, 0.5, 0.0],
            [0.0, 0.0, 0.1],
            [0.0, 0.1, 0.0],
        ]
    )
    sd = e.signed_distance(pts)
    assert sd[0] == pytest.approx(0.4, abs=1e-12)
    assert sd[1] == pytest.approx(0.2, abs=1e-12)
    assert sd[2] == pytest.approx(-0.1, abs=1e-12)
    # middle axis inside: evolute radius e2^2/e1 < 0.1 -> pole is not the
    # foot; fall back to an independent fine parameter search
    t = np.linspace(0.0, 2.0 * math.pi, 2_000_001)
    ring = np.stack(
        [np.zeros_like(t), 0.3 * np.cos(t), 0.2 * np.sin(t)], axis=1
    )
    ref = np.min(np.sqrt(np.sum((ring - pts[3]) ** 2, axis=1)))
    assert sd[3] == pytest.approx(-ref, abs=1e-9)


def test_ellipsoid_boundary_zero_and_validity():
    rng = np.random.default_rng(17)
    for _ in range(3):
        shape = sample_ellipsoid(rng, 0.3)
        u = np.linspace(0.0, math.pi, 400)
        v = np.linspace(0.0, 2.0 * math.pi, 800, endpoint=False)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        e0, e1, e2 = shape.semi_axes
        body = np.stack(
            [
                e0 * np.sin(uu) * np.cos(vv),
                e1 * np.sin(uu) * np.sin(vv),
                e2 * np.cos(uu),
            ],
            axis=-1,
        ).reshape(-1, 3)
        world = body @ shape._rot.T
        assert np.max(np.abs(shape.signed_distance(world))) < 1e-9
        pts = rng.uniform(-0.5, 0.5, size=(40, 3))
        sd = shape.signed_distance(pts)
        for p, val in zip(pts, sd):
            ref = np.min(np.sqrt(np.sum((world - p) ** 2, axis=1)))
            if ref < 5e-3:
                continue
            assert abs(val) <= ref + 1e-10
            assert abs(val) >= ref - 1e-3


def test_ellipsoid_sign_independent_test():
    rng = np.random.default_rng(23)
    shape = sample_ellipsoid(rng, 0.25)
    pts = rng.uniform(-0.4, 0.4, size=(300, 3))
    y = pts @ shape._rot
    inside = np.sum((y / np.asarray(shape.semi_axes)) ** 2, axis=1) < 1.0
    sd = shape.signed_distance(pts)
    assert np.array_equal(sd < 0, inside)


def test_ellipsoid_canonicalization():
    e = Ellipsoid((0.2, 0.5, 0.3), (2.0, 0.0, 0.0, 0.0))
    assert e.semi_axes == (0.5, 0.3, 0.2)
    assert e.quaternion == (1.0, 0.0, 0.0, 0.0)
    rot = e._rot
    assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
    with pytest.raises(ShapeError):
        Ellipsoid((0.5, 0.3, 0.0))
    with pytest.raises(ShapeError):
        Ellipsoid((0.5, 0.3, 0.2), (0.0, 0.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# samplers


def test_sample_polygon_properties_and_determinism():
    a = sample_polygon(np.random.default_rng(5), 0.08)
    b = sample_polygon(np.random.default_rng(5), 0.08)
    assert a == b
    assert len(a.vertices) >= 3
    assert a.reach <= 0.08 + 1e-15
    verts = np.asarray(a.vertices)
    angles = np.arctan2(verts[:, 1], verts[:, 0])
    unwrapped = np.unwrap(angles)
    assert np.all(np.diff(unwrapped) > 0)
    assert unwrapped[-1] - unwrapped[0] < 2.0 * math.pi
    # star shaped around the origin: the center is inside
    assert a.signed_distance(np.zeros((1, 2)))[0] < 0


def test_sample_polygon_varies():
    rng = np.random.default_rng(6)
    polys = {sample_polygon(rng, 0.1).vertices for _ in range(10)}
    assert len(polys) == 10
    counts = {len(v) for v in polys}
    assert len(counts) > 1  # vertex count law has spread


def test_sample_ellipsoid_properties():
    rng = np.random.default_rng(7)
    for _ in range(20):
        e = sample_ellipsoid(rng, 0.1)
        e0, e1, e2 = e.semi_axes
        assert e0 == pytest.approx(0.1)
        assert 0.07 <= e1 <= 0.09
        assert 0.06 <= e2 <= 0.07
        assert e2 < e1 < e0
        q = np.asarray(e.quaternion)
        assert np.sum(q * q) == pytest.approx(1.0)
        assert q[0] >= 0
        assert e.reach == pytest.approx(0.1)


# ---------------------------------------------------------------------------
# particle io


def test_particle_roundtrip_all_kinds():
    rng = np.random.default_rng(8)
    particles = [
        Particle(3, (0.125, -0.25), Disk(0.1)),
        Particle(0, (0.1, 0.2, 0.3), Sphere(0.05), "image"),
        Particle(1, (0.0, 0.0), Ellipse((0.2, 0.1), 0.7)),
        Particle(2, (0.3, -0.1, 0.0), sample_ellipsoid(rng, 0.1), "image"),
        Particle(5, (-0.2, 0.4), sample_polygon(rng, 0.08)),
    ]
    for p in particles:
        assert particle_from_line(particle_to_line(p)) == p


def test_particle_file_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    particles = [
        Particle(0, (0.0, 0.0), sample_polygon(rng, 0.1)),
        Particle(1, (0.25, -0.125), Disk(0.0625), "image"),
    ]
    path = tmp_path / "particles.txt"
    write_particles(particles, path)
    assert read_particles(path) == particles
    # byte determinism of the writer
    first = path.read_bytes()
    write_particles(particles, path)
    assert path.read_bytes() == first


def test_particle_validation():
    with pytest.raises(ShapeError):
        Particle(0, (0.0, 0.0, 0.0), Disk(0.1))
    with pytest.raises(ShapeError):
        Particle(0, (0.0, 0.0), Disk(0.1), provenance="copy")


def test_particle_translated():
    p = Particle(0, (0.25, -0.5), Disk(0.1))
    q = p.translated((1.0, 2.0))
    assert q.center == (1.25, 1.5)
    assert q.shape is p.shape
