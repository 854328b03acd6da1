"""Per-tile distance fields and their incremental particle updates.

Each tile of the set carries fields LS1 <= LS2 (<= LS3) holding the exact
distances to the nearest, second and third nearest particle occurrences.
Inserting a particle propagates copies across matching boundary codes and
fans the resulting images through every tile's neighbor grid, so that a
tile's fields already account for everything its possible surroundings can
contain. Untouched entries hold a large sentinel, never NaN.

All evaluations shift the integer node lattice instead of adding offsets to
coordinates: a node shared by two compatible tiles sees bit-identical
values on both sides.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import Particle
from .tileset import TileSet, analyze_codes, neighbor_grids

SENTINEL_FACTOR = 10.0
_SCREEN_MARGIN = 1e-9


class GridError(ValueError):
    """Invalid node count (grids must be odd so tile centers are nodes)."""


class OversizedParticleError(ValueError):
    """A particle reaches across opposite inset lines of one tile."""


class EmptyAdmissibleDomain(RuntimeError):
    """No admissible node is left; packing has exhausted the phase."""


def sentinel_value(dimension: int) -> float:
    return SENTINEL_FACTOR * float(np.sqrt(dimension))


# ---------------------------------------------------------------------------
# copy inducers and copy propagation


def find_copy_inducers(ts: TileSet, tile_index: int, center, reach: float,
                       inset: float, analysis=None):
    """All boundary entities whose inset lines the particle crosses.

    Returns a tuple of descriptors: ("tile",) when nothing is crossed, else
    one ("edge"/"face", axis, sign) per crossed side plus the induced
    ("vertex", corner) / ("cube_edge", direction, cross_signs) /
    ("cube_vertex", corner) entities. A particle crossing both inset lines
    of one axis does not fit the tile and raises OversizedParticleError.
    """
    d = ts.dimension
    center = tuple(float(v) for v in center)
    crossed = []
    for axis in range(d):
        signs = []
        for sign in (-1, +1):
            line = sign * (0.5 - inset)
            if abs(center[axis] - line) <= reach:
                signs.append(sign)
        if len(signs) == 2:
            raise OversizedParticleError(
                f"particle at {center} with reach {reach} crosses both inset "
                f"lines of axis {axis}"
            )
        if signs:
            crossed.append((axis, signs[0]))

    if not crossed:
        return (("tile",),)

    side_kind = "edge" if d == 2 else "face"
    inducers = [(side_kind, axis, sign) for axis, sign in crossed]

    if d == 2 and len(crossed) == 2:
        corner = tuple(dict(crossed)[a] for a in range(2))
        inducers.append(("vertex", corner))
    elif d == 3 and len(crossed) >= 2:
        by_axis = dict(crossed)
        for pair in itertools.combinations(sorted(by_axis), 2):
            direction = next(a for a in range(3) if a not in pair)
            cross = tuple(by_axis[a] for a in pair)
            inducers.append(("cube_edge", direction, cross))
        if len(crossed) == 3:
            corner = tuple(by_axis[a] for a in range(3))
            inducers.append(("cube_vertex", corner))
    return tuple(inducers)


_DOMINANCE = {"tile": 0, "edge": 1, "face": 1, "cube_edge": 2,
              "vertex": 3, "cube_vertex": 3}


def find_copy_inducer(ts: TileSet, tile_index: int, center, reach: float,
                      inset: float, analysis=None):
    """The dominant copy inducer (vertex beats edge beats tile)."""
    inducers = find_copy_inducers(ts, tile_index, center, reach, inset, analysis)
    return max(inducers, key=lambda ind: _DOMINANCE[ind[0]])


def propagate_copies(ts: TileSet, analysis, tile_index: int, inducers):
    """Image placements (host tile, translation) for the given inducers.

    The original placement (tile_index, zero translation) is excluded; one
    image per distinct (host, translation) pair even when several inducers
    agree on it.
    """
    d = ts.dimension
    zero = (0,) * d
    out = []
    seen = {(tile_index, zero)}

    def add(host, tau):
        key = (host, tau)
        if key not in seen:
            seen.add(key)
            out.append(key)

    for ind in inducers:
        kind = ind[0]
        if kind == "tile":
            continue
        if kind in ("edge", "face"):
            _, axis, sign = ind
            mine = ts.tiles[tile_index].code_on(axis, sign)
            tau = tuple(-sign if a == axis else 0 for a in range(d))
            for u in ts.tiles:
                if u.code_on(axis, -sign) == mine:
                    add(u.index, tau)
        elif kind == "vertex" or kind == "cube_vertex":
            corner = ind[1]
            cls = analysis.vertex_class[(tile_index, corner)]
            for (u, s2) in analysis.vertex_members[cls]:
                tau = tuple((s2[a] - corner[a]) // 2 for a in range(d))
                add(u, tau)
        elif kind == "cube_edge":
            _, direction, cross = ind
            cls = analysis.edge_class[direction][(tile_index, cross)]
            cross_axes = [a for a in range(3) if a != direction]
            for (u, c2) in analysis.edge_members[direction][cls]:
                tau = [0, 0, 0]
                for k, a in enumerate(cross_axes):
                    tau[a] = (c2[k] - cross[k]) // 2
                add(u, tuple(tau))
        else:
            raise ValueError(f"unknown inducer {ind!r}")
    return tuple(out)


def occurrence_fan(grids, n_tiles: int, placements):
    """Total offsets at which the placements appear relative to each tile.

    placements are (host, translation) pairs including the original. A host
    appearing at grid offset delta from tile C contributes the occurrence
    translation + delta; duplicates reached through different bookkeeping
    paths count once. Returns {tile: sorted tuple of offsets}.
    """
    fan = {}
    for c in range(n_tiles):
        taus = set()
        for delta, members in grids[c].items():
            mem = set(members)
            for host, off in placements:
                if host in mem:
                    taus.add(tuple(o + dl for o, dl in zip(off, delta)))
        if taus:
            fan[c] = tuple(sorted(taus))
    return fan


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class InsertionRecord:
    """Everything needed to replay one insertion."""

    particle: Particle
    images: tuple
    inducers: tuple
    incidences: tuple  # ((tile, translation), ...) after deduplication


class TileFields:
    """LS1/LS2(/LS3) node fields for every tile of a set."""

    def __init__(self, ts: TileSet, n_nodes: int, track_ls3: bool = True,
                 analysis=None):
        if n_nodes < 3 or n_nodes % 2 == 0:
            raise GridError(f"node count must be odd and >= 3, got {n_nodes}")
        self.tileset = ts
        self.analysis = analysis if analysis is not None else analyze_codes(ts)
        self.grids = neighbor_grids(ts, self.analysis)
        self.n_nodes = n_nodes
        self.dimension = ts.dimension
        self.h = 1.0 / (n_nodes - 1)
        self.track_ls3 = track_ls3
        self.sentinel = sentinel_value(ts.dimension)
        shape = (len(ts),) + (n_nodes,) * ts.dimension
        self.ls1 = np.full(shape, self.sentinel)
        self.ls2 = np.full(shape, self.sentinel)
        self.ls3 = np.full(shape, self.sentinel) if track_ls3 else None
        self.particles: list[Particle] = []
        self.insertions: list[InsertionRecord] = []
        self.update_count = 0

    def node_coords(self):
        """Node coordinates along one axis, identical for all axes."""
        return np.arange(self.n_nodes) * self.h - 0.5

    def volume_fraction(self) -> float:
        return float(np.count_nonzero(self.ls1 <= 0.0)) / self.ls1.size

    def _relative_axes(self, tau, center):
        """Per-axis node coordinates relative to the occurrence center.

        The integer lattice is shifted by tau*(n-1) before scaling so equal
        global indices produce bit-identical coordinates everywhere.
        """
        n = self.n_nodes
        return [
            (np.arange(n, dtype=np.int64) - tau[a] * (n - 1)) * self.h
            - 0.5
            - center[a]
            for a in range(self.dimension)
        ]

    def _screen_field(self, c):
        return self.ls3[c] if self.track_ls3 else self.ls2[c]

    def _occurrence_values_full(self, rel, memo, memo_lo, tau, shape_sd):
        """Distances to one occurrence on the whole node grid.

        In-box nodes come from the memo, everything else is evaluated
        directly, exactly as in the gathered per-candidate path, so both
        paths yield bit-identical values for any node.
        """
        n = self.n_nodes
        d = self.dimension
        values = np.empty((n,) * d)
        remaining = np.ones((n,) * d, dtype=bool)
        if memo is not None:
            sl_tile = []
            sl_memo = []
            fits = True
            for a in range(d):
                shift = tau[a] * (n - 1) + memo_lo[a]
                i_lo = max(0, shift)
                i_hi = min(n - 1, shift + memo.shape[a] - 1)
                if i_lo > i_hi:
                    fits = False
                    break
                sl_tile.append(slice(i_lo, i_hi + 1))
                sl_memo.append(slice(i_lo - shift, i_hi - shift + 1))
            if fits:
                values[tuple(sl_tile)] = memo[tuple(sl_memo)]
                remaining[tuple(sl_tile)] = False
        if np.any(remaining):
            idx = np.nonzero(remaining)
            pts = np.stack([rel[a][idx[a]] for a in range(d)], axis=1)
            values[idx] = shape_sd(pts)
        return values

    def _cascade_at(self, c, idx, values):
        """Keep the three smallest occurrence distances per selected node."""
        f1 = self.ls1[c][idx]
        f2 = self.ls2[c][idx]
        m1 = values < f1
        m2 = ~m1 & (values < f2)
        if self.track_ls3:
            f3 = self.ls3[c][idx]
            m3 = ~m1 & ~m2 & (values < f3)
            self.ls3[c][idx] = np.where(m1 | m2, f2, np.where(m3, values, f3))
            changed = m1 | m2 | m3
        else:
            changed = m1 | m2
        self.ls2[c][idx] = np.where(m1, f1, np.where(m2, values, f2))
        self.ls1[c][idx] = np.where(m1, values, f1)
        return changed

    def insert(self, particle: Particle, inset: float, use_patch="auto",
               patch_halfwidth=None, screen: bool = True):
        """Insert a particle, fan its occurrences, update all fields.

        screen=False disables the distance prescreening (results are bitwise
        identical either way; screening only skips evaluations that cannot
        enter the kept top values). Returns (record, changed) where changed
        maps tile index to the boolean mask of nodes whose values moved.
        """
        ts = self.tileset
        d = self.dimension
        n = self.n_nodes
        t = particle.tile_index
        center = particle.center
        reach = particle.reach
        shape_sd = particle.shape.signed_distance

        inducers = find_copy_inducers(ts, t, center, reach, inset, self.analysis)
        images = propagate_copies(ts, self.analysis, t, inducers)
        zero = (0,) * d
        fan = occurrence_fan(self.grids, len(ts), ((t, zero),) + images)

        patch_active = use_patch is True or (
            use_patch == "auto" and any(ind[0] != "tile" for ind in inducers)
        )
        memo = None
        if patch_active:
            w = patch_halfwidth if patch_halfwidth is not None else reach + 6 * self.h
            g_lo = [int(np.floor((center[a] + 0.5 - w) / self.h)) - 1
                    for a in range(d)]
            g_hi = [int(np.ceil((center[a] + 0.5 + w) / self.h)) + 1
                    for a in range(d)]
            axes = [
                (np.arange(g_lo[a], g_hi[a] + 1, dtype=np.int64)) * self.h
                - 0.5
                - center[a]
                for a in range(d)
            ]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            memo = shape_sd(pts).reshape([len(ax) for ax in axes])

        changed = {}
        incidences = []
        screen_max = {c: float(np.max(self._screen_field(c))) for c in fan}
        lower_bound = getattr(particle.shape, "distance_lower_bound", None)
        # tiles sharing a translation see identical occurrence distances, so
        # dense candidate sets are evaluated once per translation and reused
        tau_cache = {}
        cache_cutoff = n**d // 8

        for c in sorted(fan):
            taus = sorted(
                fan[c],
                key=lambda tau: (
                    sum(
                        max(abs(center[a] + tau[a]) - 0.5, 0.0) ** 2
                        for a in range(d)
                    ),
                    tau,
                ),
            )
            for tau in taus:
                incidences.append((c, tau))
                box_gap = np.sqrt(
                    sum(
                        max(abs(center[a] + tau[a]) - 0.5, 0.0) ** 2
                        for a in range(d)
                    )
                ) - reach
                if screen and box_gap >= screen_max[c] + _SCREEN_MARGIN:
                    continue

                rel = self._relative_axes(tau, center)

                # candidate nodes: the rest provably cannot enter the kept
                # distances, so skipping them leaves the cascade unchanged
                if screen:
                    if d == 2:
                        d2 = rel[0][:, None] ** 2 + rel[1][None, :] ** 2
                    else:
                        d2 = (
                            rel[0][:, None, None] ** 2
                            + rel[1][None, :, None] ** 2
                            + rel[2][None, None, :] ** 2
                        )
                    scr = self._screen_field(c)
                    rhs = scr + (reach + _SCREEN_MARGIN)
                    idx = np.nonzero((rhs <= 0.0) | (d2 < rhs * rhs))
                else:
                    idx = np.nonzero(np.ones((n,) * d, dtype=bool))
                if idx[0].size == 0:
                    continue
                pts = np.stack([rel[a][idx[a]] for a in range(d)], axis=1)

                if screen and lower_bound is not None:
                    tight = lower_bound(pts) < scr[idx] + _SCREEN_MARGIN
                    if not np.all(tight):
                        idx = tuple(ix[tight] for ix in idx)
                        if idx[0].size == 0:
                            continue
                        pts = pts[tight]

                full = tau_cache.get(tau)
                if (full is None and idx[0].size > cache_cutoff
                        and len(tau_cache) < 32):
                    full = self._occurrence_values_full(
                        rel, memo, g_lo if memo is not None else None,
                        tau, shape_sd
                    )
                    tau_cache[tau] = full
                if full is not None:
                    values = full[idx]
                else:
                    values = np.empty(idx[0].size)
                    direct = np.ones(idx[0].size, dtype=bool)
                    if memo is not None:
                        in_box = np.ones(idx[0].size, dtype=bool)
                        gi = []
                        for a in range(d):
                            g = idx[a] - (tau[a] * (n - 1) + g_lo[a])
                            gi.append(g)
                            in_box &= (g >= 0) & (g < memo.shape[a])
                        if np.any(in_box):
                            values[in_box] = memo[tuple(g[in_box] for g in gi)]
                            direct = ~in_box
                    if np.any(direct):
                        values[direct] = shape_sd(pts[direct])

                delta = self._cascade_at(c, idx, values)
                if np.any(delta):
                    mask = changed.get(c)
                    if mask is None:
                        mask = np.zeros((n,) * d, dtype=bool)
                        changed[c] = mask
                    mask[tuple(ix[delta] for ix in idx)] = True

        image_particles = tuple(
            Particle(
                host,
                tuple(center[a] + off[a] for a in range(d)),
                particle.shape,
                "image",
            )
            for host, off in images
        )
        record = InsertionRecord(
            particle=particle,
            images=image_particles,
            inducers=inducers,
            incidences=tuple(incidences),
        )
        self.particles.append(particle)
        self.particles.extend(image_particles)
        self.insertions.append(record)
        self.update_count += len(incidences)
        return record, changed


# ---------------------------------------------------------------------------
# artificial field and admissibility


def _strip_nodes(n_nodes: int, width: float):
    h = 1.0 / (n_nodes - 1)
    count = int(np.floor(width / h + 1e-9)) + 1
    return min(max(count, 1), n_nodes)


def _side_slice(n_nodes: int, sign: int, count: int):
    return slice(n_nodes - count, n_nodes) if sign > 0 else slice(0, count)


def _apply_group_minima(fields: TileFields, width: float, art) -> None:
    """Re-minimize the boundary strips of art over code/class groups.

    Exact whether art holds fresh LS1 or stale strip values: LS1 only ever
    decreases, so every stale strip entry is an upper bound of the new group
    minimum and the pointwise minimum lands on the correct value.
    """
    ts = fields.tileset
    d = fields.dimension
    n = fields.n_nodes
    count = _strip_nodes(n, width)

    def full(axis_slices):
        sl = [slice(None)] * d
        for a, s in axis_slices.items():
            sl[a] = s
        return tuple(sl)

    # side strips grouped by (axis, sign, code)
    for axis in range(d):
        for sign in (-1, +1):
            groups = {}
            for t in ts.tiles:
                groups.setdefault(t.code_on(axis, sign), []).append(t.index)
            sl = full({axis: _side_slice(n, sign, count)})
            for members in groups.values():
                if len(members) < 2:
                    continue
                gmin = fields.ls1[members[0]][sl]
                for m in members[1:]:
                    gmin = np.minimum(gmin, fields.ls1[m][sl])
                for m in members:
                    art[m][sl] = np.minimum(art[m][sl], gmin)

    # corner blocks grouped by (class, corner orientation)
    corner_groups = {}
    for (t, corner), cls in fields.analysis.vertex_class.items():
        corner_groups.setdefault((cls, corner), []).append(t)
    for (cls, corner), members in sorted(corner_groups.items()):
        if len(members) < 2:
            continue
        sl = full({a: _side_slice(n, corner[a], count) for a in range(d)})
        gmin = fields.ls1[members[0]][sl]
        for m in members[1:]:
            gmin = np.minimum(gmin, fields.ls1[m][sl])
        for m in members:
            art[m][sl] = np.minimum(art[m][sl], gmin)

    # 3D: edge prisms grouped by (direction, class, cross orientation)
    if d == 3:
        for direction in range(3):
            cross_axes = [a for a in range(3) if a != direction]
            prism_groups = {}
            for (t, cross), cls in fields.analysis.edge_class[direction].items():
                prism_groups.setdefault((cls, cross), []).append(t)
            for (cls, cross), members in sorted(prism_groups.items()):
                if len(members) < 2:
                    continue
                sl = full({
                    cross_axes[k]: _side_slice(n, cross[k], count)
                    for k in range(2)
                })
                gmin = fields.ls1[members[0]][sl]
                for m in members[1:]:
                    gmin = np.minimum(gmin, fields.ls1[m][sl])
                for m in members:
                    art[m][sl] = np.minimum(art[m][sl], gmin)


def build_artificial_field(fields: TileFields, width: float) -> np.ndarray:
    """LS1 with boundary regions minimized over like-coded tiles.

    Strips of the given width along each side are replaced by the pointwise
    minimum of LS1 over all tiles carrying the same code on the same side;
    corner (and 3D edge) blocks take the minimum over all instances of the
    same connectivity class at the same corner orientation. Interior nodes
    keep plain LS1. This makes a placement admissible only if all of its
    future copies keep their distances in every tile they can land in.
    """
    art = fields.ls1.copy()
    _apply_group_minima(fields, width, art)
    return art


class AdmissibilityTracker:
    """Admissible placement nodes for one set of packing parameters.

    A node is admissible when the artificial nearest distance lies in
    [rbar + kappa, rbar + rho] and the raw second-nearest distance is at
    most rbar + sigma (rho and sigma may be infinite; either upper bound is
    suspended while its field is still everywhere at the sentinel, otherwise
    nothing could ever be placed). Optionally nodes within rbar of a tile
    corner are excluded.
    """

    def __init__(self, fields: TileFields, rbar: float, kappa: float = 0.0,
                 rho: float = np.inf, sigma: float = np.inf,
                 width: float | None = None, exclude_vertices: bool = False):
        self.fields = fields
        self.rbar = float(rbar)
        self.kappa = float(kappa)
        self.rho = float(rho)
        self.sigma = float(sigma)
        self.width = float(width) if width is not None else self.rbar
        self.exclude_vertices = exclude_vertices
        self.jitter_enabled = fields.h <= self.rbar / 5.0

        d = fields.dimension
        n = fields.n_nodes
        count = _strip_nodes(n, self.width)
        border = np.zeros((n,) * d, dtype=bool)
        for axis in range(d):
            for sign in (-1, +1):
                sl = [slice(None)] * d
                sl[axis] = _side_slice(n, sign, count)
                border[tuple(sl)] = True
        self._border = border

        if exclude_vertices:
            x = fields.node_coords()
            near = np.minimum(np.abs(x - 0.5), np.abs(x + 0.5))
            if d == 2:
                corner_d2 = near[:, None] ** 2 + near[None, :] ** 2
            else:
                corner_d2 = (
                    near[:, None, None] ** 2
                    + near[None, :, None] ** 2
                    + near[None, None, :] ** 2
                )
            self._allowed = corner_d2 > self.rbar * self.rbar
        else:
            self._allowed = None

        self.art = None
        self.mask = None
        self.counts = None
        self.rebuild()

    def _bounds_active(self):
        """Upper bounds engage once they are satisfiable at all.

        A fresh domain has nothing to measure distances to and a single
        particle's occurrence copies sit at least a tile apart, so demanding
        a small second-nearest distance right away would empty the domain
        permanently. Fields never increase, so once a bound can be met it
        stays on.
        """
        f = self.fields
        rho_active = np.isfinite(self.rho) and bool(
            np.min(self.art) <= self.rbar + self.rho
        )
        sigma_active = np.isfinite(self.sigma) and bool(
            np.min(f.ls2) <= self.rbar + self.sigma
        )
        return rho_active, sigma_active

    def _mask_from(self, art, region=None):
        f = self.fields
        rho_active, sigma_active = self._bounds_active()
        lo = self.rbar + self.kappa
        if region is None:
            m = art >= lo
            if rho_active:
                m &= art <= self.rbar + self.rho
            if sigma_active:
                m &= f.ls2 <= self.rbar + self.sigma
            if self._allowed is not None:
                m &= self._allowed[None, ...]
            return m
        m = art[region] >= lo
        if rho_active:
            m &= art[region] <= self.rbar + self.rho
        if sigma_active:
            m &= f.ls2[region] <= self.rbar + self.sigma
        if self._allowed is not None:
            m &= np.broadcast_to(
                self._allowed[None, ...], art.shape
            )[region]
        return m

    def rebuild(self):
        self.art = build_artificial_field(self.fields, self.width)
        self._flags = self._bounds_active()
        self.mask = self._mask_from(self.art)
        axes = tuple(range(1, self.fields.dimension + 1))
        self.counts = np.count_nonzero(self.mask, axis=axes)

    def refresh(self, changed):
        """Update art/mask/counts after an insertion.

        changed maps tile -> boolean node mask from TileFields.insert.
        Changed nodes take their new LS1 and the boundary strips are
        re-minimized in place, which is exact because LS1 never increases.
        Results are bitwise equal to a full rebuild().
        """
        f = self.fields
        region = np.zeros(self.mask.shape, dtype=bool)
        for t, delta in changed.items():
            region[t] = delta
        self.art[region] = f.ls1[region]
        _apply_group_minima(f, self.width, self.art)
        flags = self._bounds_active()
        if flags != self._flags:
            # an upper bound switched on; the whole mask changes shape
            self._flags = flags
            self.mask = self._mask_from(self.art)
        else:
            region |= np.broadcast_to(self._border[None, ...], region.shape)
            self.mask[region] = self._mask_from(self.art, region)
        axes = tuple(range(1, f.dimension + 1))
        self.counts = np.count_nonzero(self.mask, axis=axes)

    def draw_node(self, rng):
        """One uniform draw over all admissible (tile, node) pairs."""
        total = int(self.counts.sum())
        if total == 0:
            raise EmptyAdmissibleDomain(
                f"no admissible node for rbar={self.rbar} kappa={self.kappa} "
                f"rho={self.rho} sigma={self.sigma}"
            )
        u = int(rng.integers(total))
        cum = np.cumsum(self.counts)
        tile = int(np.searchsorted(cum, u, side="right"))
        local = u - (int(cum[tile - 1]) if tile > 0 else 0)
        flat = np.flatnonzero(self.mask[tile].ravel())[local]
        node = np.unravel_index(int(flat), self.mask.shape[1:])
        return tile, tuple(int(i) for i in node)

    def jitter(self, rng, tile: int, node):
        """Shift a drawn node uniformly into a fully admissible quadrant.

        Active only on grids fine enough (h <= rbar/5). Without any valid
        quadrant the node coordinates are returned exactly and no random
        numbers are consumed.
        """
        f = self.fields
        h = f.h
        coords = tuple(idx * h - 0.5 for idx in node)
        if not self.jitter_enabled:
            return coords
        d = f.dimension
        n = f.n_nodes
        m = self.mask[tile]
        valid = []
        for quad in itertools.product((-1, 1), repeat=d):
            ok = True
            for offs in itertools.product((0, 1), repeat=d):
                idx = tuple(node[a] + quad[a] * offs[a] for a in range(d))
                if any(i < 0 or i >= n for i in idx) or not m[idx]:
                    ok = False
                    break
            if not ok:
                continue
            valid.append(quad)
        if not valid:
            return coords
        quad = valid[int(rng.integers(len(valid)))]
        shift = rng.uniform(0.0, h, size=d)
        return tuple(coords[a] + quad[a] * shift[a] for a in range(d))


# ---------------------------------------------------------------------------
# field dumps


_FIELD_MAGIC = "mtfield"


def write_field(path, array, field_id: str) -> None:
    """Binary field dump: 64-byte text header + little-endian float64."""
    arr = np.ascontiguousarray(array, dtype="<f8")
    tiles = arr.shape[0]
    dim = arr.ndim - 1
    n = arr.shape[1]
    header = f"{_FIELD_MAGIC} dim={dim} n={n} tiles={tiles} id={field_id}"
    if len(header) > 63:
        raise ValueError(f"field id {field_id!r} too long for the header")
    with open(path, "wb") as fh:
        fh.write(header.ljust(64).encode("ascii"))
        fh.write(arr.tobytes(order="C"))


def read_field(path):
    """Returns (array, field_id) from a field dump."""
    with open(path, "rb") as fh:
        header = fh.read(64).decode("ascii").strip()
        parts = header.split()
        if not parts or parts[0] != _FIELD_MAGIC:
            raise ValueError(f"{path}: not a field dump")
        kv = dict(p.split("=", 1) for p in parts[1:])
        dim = int(kv["dim"])
        n = int(kv["n"])
        tiles = int(kv["tiles"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = (tiles,) + (n,) * dim
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated field dump")
    return data.reshape(shape).copy(), kv["id"]
