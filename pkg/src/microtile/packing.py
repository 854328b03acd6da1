"""Random sequential adsorption over a tile set's distance fields."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Disk,
    Particle,
    Sphere,
    read_particles,
    sample_ellipsoid,
    sample_polygon,
    write_particles,
)
from .levelset import (
    AdmissibilityTracker,
    EmptyAdmissibleDomain,
    TileFields,
    read_field,
    write_field,
)
from .tileset import TileSet, load_tileset, save_tileset


@dataclass(frozen=True)
class PackingPhase:
    """Acceptance window for one stretch of insertions.

    New particles must keep at least rbar + kappa and at most rbar + rho
    from their nearest neighbor (rho may be infinite), and at most
    rbar + sigma from their second nearest. The phase ends after max_steps
    insertions, at the target solid fraction, or when nothing fits.
    """

    rbar: float
    kappa: float = 0.0
    rho: float = np.inf
    sigma: float = np.inf
    max_steps: int | None = None
    target_fraction: float | None = None

    def __post_init__(self):
        if not (self.rbar > 0.0):
            raise ValueError(f"rbar must be positive, got {self.rbar}")
        if self.kappa < 0.0 or self.rho <= 0.0 or self.sigma <= 0.0:
            raise ValueError("kappa must be >= 0, rho and sigma > 0")


@dataclass(frozen=True)
class PhaseStats:
    phase: PackingPhase
    insertions: int
    reason: str  # "exhausted" | "max_steps" | "target"


@dataclass
class PackResult:
    fields: TileFields
    phase_stats: list[PhaseStats] = field(default_factory=list)
    seed: int | None = None

    @property
    def particles(self):
        return self.fields.particles

    @property
    def insertions(self):
        return self.fields.insertions

    @property
    def status(self) -> str:
        return self.phase_stats[-1].reason if self.phase_stats else "empty"


_SHAPES_2D = ("disk", "polygon")
_SHAPES_3D = ("sphere", "ellipsoid")


def _make_shape(rng, kind: str, rbar: float, options: dict):
    if kind == "disk":
        return Disk(rbar)
    if kind == "sphere":
        return Sphere(rbar)
    if kind == "polygon":
        return sample_polygon(rng, rbar, options.get("mean_vertices", 6.0))
    if kind == "ellipsoid":
        return sample_ellipsoid(
            rng,
            rbar,
            mid_range=options.get("mid_range", (0.7, 0.9)),
            minor_range=options.get("minor_range", (0.6, 0.7)),
        )
    raise ValueError(f"unknown shape kind {kind!r}")


def pack(ts: TileSet, phases, seed, n_nodes: int, shape: str = "disk",
         shape_options: dict | None = None, track_ls3: bool = True,
         inset: float | None = None, exclude_vertices: bool = False,
         use_patch="auto", fields: TileFields | None = None) -> PackResult:
    """Run the insertion phases and return the filled fields.

    One generator seeded once drives every draw; per step it is consumed in
    a fixed order (node pick, jitter, shape), so equal seeds give equal
    packings. inset=None uses each phase's rbar while LS3 is tracked and 0
    otherwise.
    """
    allowed = _SHAPES_2D if ts.dimension == 2 else _SHAPES_3D
    if shape not in allowed:
        raise ValueError(
            f"shape {shape!r} does not fit a {ts.dimension}D tile set"
        )
    options = shape_options or {}
    rng = np.random.default_rng(seed)
    if fields is None:
        fields = TileFields(ts, n_nodes, track_ls3=track_ls3)
    result = PackResult(fields=fields, seed=seed)

    for phase in phases:
        inset_w = inset if inset is not None else (
            phase.rbar if fields.track_ls3 else 0.0
        )
        tracker = AdmissibilityTracker(
            fields,
            phase.rbar,
            kappa=phase.kappa,
            rho=phase.rho,
            sigma=phase.sigma,
            width=phase.rbar + inset_w,
            exclude_vertices=exclude_vertices,
        )
        finite = [v for v in (phase.rho, phase.sigma) if np.isfinite(v)]
        halfwidth = phase.rbar + max(finite + [2 * fields.h]) + 4 * fields.h

        steps = 0
        reason = None
        while True:
            if phase.max_steps is not None and steps >= phase.max_steps:
                reason = "max_steps"
                break
            if (
                phase.target_fraction is not None
                and fields.volume_fraction() >= phase.target_fraction
            ):
                reason = "target"
                break
            try:
                tile, node = tracker.draw_node(rng)
            except EmptyAdmissibleDomain:
                reason = "exhausted"
                break
            center = tracker.jitter(rng, tile, node)
            shape_obj = _make_shape(rng, shape, phase.rbar, options)
            particle = Particle(tile, center, shape_obj, "original")
            _, changed = fields.insert(
                particle, inset_w, use_patch=use_patch,
                patch_halfwidth=halfwidth,
            )
            tracker.refresh(changed)
            steps += 1
        result.phase_stats.append(PhaseStats(phase, steps, reason))

    return result


# ---------------------------------------------------------------------------
# state directories


_TILESET_FILE = "tileset.txt"
_PARTICLES_FILE = "particles.txt"


def save_state(directory, fields: TileFields) -> None:
    """Write tileset, particle list and field dumps into a directory."""
    os.makedirs(directory, exist_ok=True)
    save_tileset(fields.tileset, os.path.join(directory, _TILESET_FILE))
    write_particles(fields.particles, os.path.join(directory, _PARTICLES_FILE))
    write_field(os.path.join(directory, "ls1.field"), fields.ls1, "ls1")
    write_field(os.path.join(directory, "ls2.field"), fields.ls2, "ls2")
    if fields.track_ls3:
        write_field(os.path.join(directory, "ls3.field"), fields.ls3, "ls3")


def load_state(directory) -> TileFields:
    """Rebuild TileFields from a saved state directory.

    Insertion records are not stored; the loaded object carries fields and
    particles, which is all that morphing, rendering and statistics need.
    """
    ts = load_tileset(os.path.join(directory, _TILESET_FILE))
    ls1, _ = read_field(os.path.join(directory, "ls1.field"))
    ls3_path = os.path.join(directory, "ls3.field")
    track = os.path.exists(ls3_path)
    fields = TileFields(ts, ls1.shape[1], track_ls3=track)
    fields.ls1 = ls1
    fields.ls2, _ = read_field(os.path.join(directory, "ls2.field"))
    if track:
        fields.ls3, _ = read_field(ls3_path)
    particles_path = os.path.join(directory, _PARTICLES_FILE)
    if os.path.exists(particles_path):
        fields.particles = read_particles(particles_path)
    return fields
