"""Wang tile sets: edge/face codes, corner connectivity, stochastic assembly.

A tile is a unit square (cube) carrying one integer code per side. Two tiles
may sit next to each other exactly when the codes on the touching sides are
equal. Corner (and, in 3D, edge) connectivity classes group together all
corner instances that can represent the same lattice corner of an assembly;
they drive both copy propagation of boundary-crossing particles and the
diagonal entries of the neighbor grids used during level-set updates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

SIDES_2D = ("N", "E", "S", "W")
SIDES_3D = ("N", "E", "S", "W", "T", "B")

# side -> (axis, sign); E/W bound axis 0 (x), N/S axis 1 (y), T/B axis 2 (z)
SIDE_AXIS_SIGN = {
    "E": (0, +1),
    "W": (0, -1),
    "N": (1, +1),
    "S": (1, -1),
    "T": (2, +1),
    "B": (2, -1),
}

_SIDE_BY_AXIS_SIGN = {v: k for k, v in SIDE_AXIS_SIGN.items()}


def side_name(axis: int, sign: int) -> str:
    return _SIDE_BY_AXIS_SIGN[(axis, sign)]


class TileSetError(ValueError):
    """Structurally invalid tile set (bad codes, duplicate tiles, ...)."""


class TileSetFormatError(TileSetError):
    """Unparseable tile-set file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoCandidateError(RuntimeError):
    """Raised by assemble() when a cell has no compatible tile."""

    def __init__(self, cell: tuple[int, ...], constraints: tuple):
        self.cell = cell
        self.constraints = constraints
        super().__init__(
            f"no candidate tile for cell {cell} under (north, west"
            f"{', top' if len(cell) == 3 else ''}) constraints {constraints}"
        )


@dataclass(frozen=True)
class Tile:
    """One tile: its index within the set and its side codes.

    Codes are stored in side order N, E, S, W for squares and
    N, E, S, W, T, B for cubes.
    """

    index: int
    codes: tuple[int, ...]

    def __post_init__(self):
        if len(self.codes) not in (4, 6):
            raise TileSetError(
                f"tile {self.index}: expected 4 or 6 codes, got {len(self.codes)}"
            )
        if any((not isinstance(c, (int, np.integer))) or c < 0 for c in self.codes):
            raise TileSetError(f"tile {self.index}: codes must be non-negative ints")

    @property
    def dimension(self) -> int:
        return 2 if len(self.codes) == 4 else 3

    def code(self, side: str) -> int:
        sides = SIDES_2D if self.dimension == 2 else SIDES_3D
        return self.codes[sides.index(side)]

    def code_on(self, axis: int, sign: int) -> int:
        return self.code(side_name(axis, sign))

    def corner_signs(self):
        """All corners as sign tuples, lexicographic with -1 before +1."""
        return list(itertools.product((-1, 1), repeat=self.dimension))


@dataclass(frozen=True)
class TileSet:
    """An ordered collection of mutually distinct tiles of one dimension."""

    tiles: tuple[Tile, ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.tiles:
            raise TileSetError("tile set must contain at least one tile")
        dims = {t.dimension for t in self.tiles}
        if len(dims) != 1:
            raise TileSetError("mixed 2D/3D tiles in one set")
        for pos, t in enumerate(self.tiles):
            if t.index != pos:
                raise TileSetError(
                    f"tile indices must be sequential from 0; "
                    f"position {pos} holds index {t.index}"
                )
        seen: dict[tuple[int, ...], int] = {}
        for t in self.tiles:
            if t.codes in seen:
                raise TileSetError(
                    f"tiles {seen[t.codes]} and {t.index} carry identical codes "
                    f"{t.codes}"
                )
            seen[t.codes] = t.index

    @property
    def dimension(self) -> int:
        return self.tiles[0].dimension

    def __len__(self) -> int:
        return len(self.tiles)

    def __getitem__(self, i: int) -> Tile:
        return self.tiles[i]

    def codes_on_family(self, axis: int) -> tuple[int, ...]:
        vals = set()
        for t in self.tiles:
            vals.add(t.code_on(axis, +1))
            vals.add(t.code_on(axis, -1))
        return tuple(sorted(vals))


class _DSU:
    def __init__(self):
        self._parent: dict = {}

    def find(self, key):
        parent = self._parent
        if key not in parent:
            parent[key] = key
            return key
        root = key
        while parent[root] != root:
            root = parent[root]
        while parent[key] != root:
            parent[key], key = root, parent[key]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[ra] = rb


def _vertex_nodes(tile: Tile, corner: tuple[int, ...]):
    """Face-lattice nodes a corner instance lies on, one per axis family.

    The node key is (axis, code, other-corner-signs); the sign along the
    keyed axis is dropped on purpose: equal-coded faces glue regardless of
    which of the two tiles provides which side.
    """
    d = tile.dimension
    nodes = []
    for axis in range(d):
        rest = tuple(corner[b] for b in range(d) if b != axis)
        nodes.append((axis, tile.code_on(axis, corner[axis]), rest))
    return nodes


def _classes_from_dsu(instances, nodes_of, dsu: _DSU):
    """Deterministic class ids by first appearance in instance order."""
    class_of: dict = {}
    ids: dict = {}
    members: list[list] = []
    for inst in instances:
        root = dsu.find(nodes_of(inst)[0])
        if root not in ids:
            ids[root] = len(ids)
            members.append([])
        class_of[inst] = ids[root]
        members[ids[root]].append(inst)
    return class_of, tuple(tuple(m) for m in members)


@dataclass
class CodeAnalysis:
    """Connectivity classes of a tile set.

    vertex_class maps (tile_index, corner_signs) to a class id; in 3D
    edge_class[direction] maps (tile_index, cross_signs) to a class id where
    cross_signs are the corner signs on the two axes other than direction,
    in ascending axis order.
    """

    dimension: int
    vertex_class: dict
    vertex_members: tuple
    edge_class: dict = field(default_factory=dict)
    edge_members: dict = field(default_factory=dict)

    @property
    def n_vertex_classes(self) -> int:
        return len(self.vertex_members)

    def n_edge_classes(self, direction: int) -> int:
        return len(self.edge_members[direction])


def analyze_codes(ts: TileSet) -> CodeAnalysis:
    """Partition corner (and 3D edge) instances into connectivity classes.

    Two instances fall in one class when a chain of face-code matches links
    them; every tile around an assembled lattice corner maps that corner to
    the same class.
    """
    d = ts.dimension
    corners = list(itertools.product((-1, 1), repeat=d))
    instances = [(t.index, c) for t in ts.tiles for c in corners]

    dsu = _DSU()
    for t in ts.tiles:
        for c in corners:
            nodes = _vertex_nodes(t, c)
            for other in nodes[1:]:
                dsu.union(nodes[0], other)
    vclass, vmembers = _classes_from_dsu(
        instances, lambda inst: _vertex_nodes(ts.tiles[inst[0]], inst[1]), dsu
    )

    analysis = CodeAnalysis(dimension=d, vertex_class=vclass, vertex_members=vmembers)

    if d == 3:
        for direction in range(3):
            cross_axes = [a for a in range(3) if a != direction]
            cross = list(itertools.product((-1, 1), repeat=2))
            edsu = _DSU()

            def nodes_of_signs(tile: Tile, signs):
                # 2D-style corner nodes on the cross axes; codes on faces
                # perpendicular to the edge direction are ignored
                out = []
                for k, axis in enumerate(cross_axes):
                    rest = signs[1 - k]
                    out.append((axis, tile.code_on(axis, signs[k]), rest))
                return out

            for t in ts.tiles:
                for signs in cross:
                    nodes = nodes_of_signs(t, signs)
                    edsu.union(nodes[0], nodes[1])
            einstances = [(t.index, signs) for t in ts.tiles for signs in cross]
            eclass, emembers = _classes_from_dsu(
                einstances,
                lambda inst: nodes_of_signs(ts.tiles[inst[0]], inst[1]),
                edsu,
            )
            analysis.edge_class[direction] = eclass
            analysis.edge_members[direction] = emembers

    return analysis


@dataclass(frozen=True)
class StochasticityReport:
    """Candidate counts over every constraint combination reachable in an
    assembly, plus the resulting verdict."""

    is_stochastic: bool
    counts: dict
    deficient_combinations: tuple
    warnings: tuple


def _candidates(ts: TileSet, north, west, top=None) -> list[int]:
    """Tile indices compatible with the given (possibly None) constraints."""
    out = []
    for t in ts.tiles:
        if north is not None and t.code("N") != north:
            continue
        if west is not None and t.code("W") != west:
            continue
        if top is not None and t.code("T") != top:
            continue
        out.append(t.index)
    return out


def _reachable_combinations_2d(ts: TileSet):
    tiles = ts.tiles
    combos = {(None, None)}
    for b in tiles:
        combos.add((None, b.code("E")))
    for a in tiles:
        combos.add((a.code("S"), None))
    # full combos: witness block X | A over B | target, with A west-bound to X
    # and B north-bound to X
    by_e = {}
    by_s = {}
    for x in tiles:
        by_e.setdefault(x.code("E"), set()).add(x.index)
        by_s.setdefault(x.code("S"), set()).add(x.index)
    for a in tiles:
        xs_a = by_e.get(a.code("W"), set())
        if not xs_a:
            continue
        for b in tiles:
            xs_b = by_s.get(b.code("N"), set())
            if xs_a & xs_b:
                combos.add((a.code("S"), b.code("E")))
    return combos


def _reachable_combinations_3d(ts: TileSet):
    tiles = ts.tiles
    combos = {(None, None, None)}
    for t in tiles:
        combos.add((t.code("S"), None, None))
        combos.add((None, t.code("E"), None))
        combos.add((None, None, t.code("B")))

    by_es = {}
    by_bs = {}
    by_be = {}
    full = {}
    for x in tiles:
        by_es.setdefault((x.code("E"), x.code("S")), set()).add(x.index)
        by_bs.setdefault((x.code("B"), x.code("S")), set()).add(x.index)
        by_be.setdefault((x.code("B"), x.code("E")), set()).add(x.index)
        full.setdefault((x.code("B"), x.code("E"), x.code("S")), []).append(x.index)

    # two-constraint combos: 2D-style witness in the first layer/row/col plane
    for a in tiles:
        for b in tiles:
            if by_es.get((a.code("W"), b.code("N"))):
                combos.add((a.code("S"), b.code("E"), None))
    for a in tiles:
        for c in tiles:
            if by_bs.get((a.code("T"), c.code("N"))):
                combos.add((a.code("S"), None, c.code("B")))
    for b in tiles:
        for c in tiles:
            if by_be.get((b.code("T"), c.code("W"))):
                combos.add((None, b.code("E"), c.code("B")))

    # full combos via a 2x2x2 origin block: A north of target, B west, C top
    t_of_ab = {}
    w_of_ac = {}
    n_of_bc = {}
    for key, idxs in by_es.items():
        t_of_ab[key] = {tiles[i].code("T") for i in idxs}
    for key, idxs in by_bs.items():
        w_of_ac[key] = {tiles[i].code("W") for i in idxs}
    for key, idxs in by_be.items():
        n_of_bc[key] = {tiles[i].code("N") for i in idxs}

    for a in tiles:
        for b in tiles:
            s_ab = t_of_ab.get((a.code("W"), b.code("N")))
            if not s_ab:
                continue
            for c in tiles:
                s_ac = w_of_ac.get((a.code("T"), c.code("N")))
                if not s_ac:
                    continue
                s_bc = n_of_bc.get((b.code("T"), c.code("W")))
                if not s_bc:
                    continue
                ok = any(
                    x.code("B") in s_ab and x.code("E") in s_ac and x.code("S") in s_bc
                    for x in tiles
                )
                if ok:
                    combos.add((a.code("S"), b.code("E"), c.code("B")))
    return combos


def validate_stochastic(ts: TileSet) -> StochasticityReport:
    """Count candidate tiles for every reachable constraint combination.

    A set is stochastic when every combination that can actually arise during
    scanline assembly admits at least one tile; combinations with exactly one
    candidate are reported as warnings since they make the assembly locally
    deterministic.
    """
    if ts.dimension == 2:
        combos = _reachable_combinations_2d(ts)
        counts = {c: len(_candidates(ts, c[0], c[1])) for c in sorted(
            combos, key=lambda c: tuple(-1 if v is None else v for v in c))}
    else:
        combos = _reachable_combinations_3d(ts)
        counts = {c: len(_candidates(ts, c[0], c[1], c[2])) for c in sorted(
            combos, key=lambda c: tuple(-1 if v is None else v for v in c))}
    deficient = tuple(c for c, n in counts.items() if n == 0)
    warnings = tuple(c for c, n in counts.items() if n == 1)
    return StochasticityReport(
        is_stochastic=not deficient,
        counts=counts,
        deficient_combinations=deficient,
        warnings=warnings,
    )


def neighbor_grids(ts: TileSet, analysis: CodeAnalysis | None = None):
    """For every tile, the tiles that may occupy each relative cell offset.

    Returns grids[tile_index][delta] -> tuple of tile indices, for every
    delta in {-1,0,1}^d. The center offset holds the tile itself; offsets
    along one axis match face codes; diagonal offsets match the vertex (or,
    in 3D, edge) class of the touching corner entity.
    """
    if analysis is None:
        analysis = analyze_codes(ts)
    d = ts.dimension
    deltas = [dl for dl in itertools.product((-1, 0, 1), repeat=d)]
    grids = []
    for t in ts.tiles:
        grid = {}
        for dl in deltas:
            nz = [a for a in range(d) if dl[a] != 0]
            if not nz:
                grid[dl] = (t.index,)
                continue
            if len(nz) == 1:
                axis = nz[0]
                sign = dl[axis]
                mine = t.code_on(axis, sign)
                grid[dl] = tuple(
                    u.index for u in ts.tiles if u.code_on(axis, -sign) == mine
                )
                continue
            if len(nz) == d:
                mine = analysis.vertex_class[(t.index, dl)]
                opp = tuple(-s for s in dl)
                grid[dl] = tuple(
                    u.index
                    for u in ts.tiles
                    if analysis.vertex_class[(u.index, opp)] == mine
                )
                continue
            # 3D, exactly two nonzero components: shared cube edge
            direction = next(a for a in range(d) if dl[a] == 0)
            cross = tuple(dl[a] for a in range(d) if a != direction)
            opp = tuple(-s for s in cross)
            emap = analysis.edge_class[direction]
            mine = emap[(t.index, cross)]
            grid[dl] = tuple(
                u.index for u in ts.tiles if emap[(u.index, opp)] == mine
            )
        grids.append(grid)
    return grids


@dataclass(frozen=True)
class Assembly:
    """A concrete tiling: cells[j, i] (or cells[k, j, i]) holds tile indices.

    Row j=0 is the north row, column i=0 the west column and, in 3D, layer
    k=0 the top layer.
    """

    tileset: TileSet
    cells: np.ndarray
    seed: int

    @property
    def dimension(self) -> int:
        return self.cells.ndim


def assemble(ts: TileSet, shape: tuple[int, ...], seed: int) -> Assembly:
    """Scanline-assemble a tiling of the given grid shape.

    shape is (ny, nx) in 2D and (nz, ny, nx) in 3D. Each cell draws once,
    uniformly, from its compatible candidates using a counter RNG keyed by
    (seed, linear cell index), so any cell's choice is reproducible without
    replaying the others.
    """
    d = ts.dimension
    if len(shape) != d:
        raise ValueError(f"shape {shape} does not match {d}D tile set")
    if any(n < 1 for n in shape):
        raise ValueError(f"empty assembly shape {shape}")

    cells = np.full(shape, -1, dtype=np.int64)
    if d == 2:
        ny, nx = shape
        for j in range(ny):
            for i in range(nx):
                north = ts.tiles[cells[j - 1, i]].code("S") if j > 0 else None
                west = ts.tiles[cells[j, i - 1]].code("E") if i > 0 else None
                cand = _candidates(ts, north, west)
                if not cand:
                    raise NoCandidateError((j, i), (north, west))
                rng = np.random.Generator(
                    np.random.Philox(key=[seed, j * nx + i])
                )
                cells[j, i] = cand[rng.integers(len(cand))]
    else:
        nz, ny, nx = shape
        for k in range(nz):
            for j in range(ny):
                for i in range(nx):
                    north = ts.tiles[cells[k, j - 1, i]].code("S") if j > 0 else None
                    west = ts.tiles[cells[k, j, i - 1]].code("E") if i > 0 else None
                    top = ts.tiles[cells[k - 1, j, i]].code("B") if k > 0 else None
                    cand = _candidates(ts, north, west, top)
                    if not cand:
                        raise NoCandidateError((k, j, i), (north, west, top))
                    rng = np.random.Generator(
                        np.random.Philox(key=[seed, (k * ny + j) * nx + i])
                    )
                    cells[k, j, i] = cand[rng.integers(len(cand))]
    return Assembly(tileset=ts, cells=cells, seed=seed)


# ---------------------------------------------------------------------------
# built-in sets


def make_c16() -> TileSet:
    """Complete 2-code edge set: all 16 (N,E,S,W) combinations over {0,1}."""
    tiles = []
    for i in range(16):
        n, e, s, w = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        tiles.append(Tile(i, (n, e, s, w)))
    return TileSet(tuple(tiles), name="C16")

def make_v16() -> TileSet:
    """Complete 2-label corner set: edge codes pair up the corner labels.

    Corner labels (nw, ne, sw, se) run over {0,1}^4; each edge code packs its
    two corner labels as 2*first + second, reading W->E on horizontal edges
    and N->S on vertical ones.
    """
    tiles = []
    for i in range(16):
        nw, ne, sw, se = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        n = 2 * nw + ne
        s = 2 * sw + se
        w = 2 * nw + sw
        e = 2 * ne + se
        tiles.append(Tile(i, (n, e, s, w)))
    return TileSet(tuple(tiles), name="V16")

def make_p4() -> TileSet:
    """Four tiles tiling a deterministic 2x2 torus.

    Every code appears on exactly one tile per side, so each neighbor grid
    entry is a singleton and every tile's surroundings are fully determined;
    useful wherever exact field periodicity across tile boundaries matters.
    """
    tiles = []
    for t in range(4):
        bj, bi = t >> 1, t & 1
        n = 2 * bj + bi
        s = 2 * ((bj + 1) % 2) + bi
        w = 2 * bj + bi
        e = 2 * bj + (bi + 1) % 2
        tiles.append(Tile(t, (n, e, s, w)))
    return TileSet(tuple(tiles), name="P4")

def make_w16() -> TileSet:
    """16 Wang cubes, two codes per face family, two candidates everywhere.

    For every (s, w, b) in {0,1}^3 the set holds (N,E,S,W,T,B) = (s,w,s,w,b,b)
    and (1-s,1-w,s,w,1-b,b); any (north, west, top) constraint then matches
    exactly one cube of each kind.
    """
    tiles = []
    idx = 0
    for s, w, b in itertools.product((0, 1), repeat=3):
        tiles.append(Tile(idx, (s, w, s, w, b, b)))
        idx += 1
    for s, w, b in itertools.product((0, 1), repeat=3):
        tiles.append(Tile(idx, (1 - s, 1 - w, s, w, 1 - b, b)))
        idx += 1
    return TileSet(tuple(tiles), name="W16")

def make_puc(dimension: int = 2) -> TileSet:
    """Single all-zero tile: the periodic unit cell."""
    codes = (0,) * (4 if dimension == 2 else 6)
    return TileSet((Tile(0, codes),), name=f"PUC{dimension}D")


BUILTIN_SETS = {
    "C16": make_c16,
    "V16": make_v16,
    "P4": make_p4,
    "W16": make_w16,
    "PUC2": lambda: make_puc(2),
    "PUC3": lambda: make_puc(3),
}


def get_builtin(name: str) -> TileSet:
    try:
        return BUILTIN_SETS[name]()
    except KeyError:
        raise TileSetError(
            f"unknown built-in tile set {name!r}; "
            f"available: {', '.join(sorted(BUILTIN_SETS))}"
        ) from None


# ---------------------------------------------------------------------------
# file format


def parse_tileset(text: str, name: str = "custom") -> TileSet:
    """Parse the plain-text tile-set format.

    Header lines `dimension=`, `codes_x=`, `codes_y=` (and `codes_z=` for
    cubes) precede one line per tile: `index: N E S W [T B]`. `#` starts a
    comment; tile indices must be sequential from 0.
    """
    dimension = None
    alphabets: dict[int, list[int]] = {}
    tiles: list[Tile] = []
    tile_lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and ":" not in line:
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "dimension":
                try:
                    dimension = int(value)
                except ValueError:
                    raise TileSetFormatError(f"bad dimension {value!r}", lineno)
                if dimension not in (2, 3):
                    raise TileSetFormatError(
                        f"dimension must be 2 or 3, got {dimension}", lineno
                    )
            elif key in ("codes_x", "codes_y", "codes_z"):
                axis = {"codes_x": 0, "codes_y": 1, "codes_z": 2}[key]
                try:
                    alphabets[axis] = [int(v) for v in value.split(",") if v.strip()]
                except ValueError:
                    raise TileSetFormatError(f"bad code list {value!r}", lineno)
            else:
                raise TileSetFormatError(f"unknown header {key!r}", lineno)
            continue
        if ":" in line:
            idx_part, _, codes_part = line.partition(":")
            try:
                idx = int(idx_part)
            except ValueError:
                raise TileSetFormatError(f"bad tile index {idx_part!r}", lineno)
            try:
                codes = tuple(int(v) for v in codes_part.split())
            except ValueError:
                raise TileSetFormatError(f"bad codes {codes_part!r}", lineno)
            if dimension is None:
                raise TileSetFormatError(
                    "tile line before dimension header", lineno
                )
            expected = 4 if dimension == 2 else 6
            if len(codes) != expected:
                raise TileSetFormatError(
                    f"expected {expected} codes, got {len(codes)}", lineno
                )
            if idx != len(tiles):
                raise TileSetFormatError(
                    f"tile indices must be sequential; expected {len(tiles)}, "
                    f"got {idx}",
                    lineno,
                )
            tiles.append(Tile(idx, codes))
            tile_lines.append(lineno)
            continue
        raise TileSetFormatError(f"unrecognized line {line!r}", lineno)

    if dimension is None:
        raise TileSetFormatError("missing dimension header")
    if not tiles:
        raise TileSetFormatError("tile set holds no tiles")
    for axis in range(dimension):
        if axis not in alphabets:
            raise TileSetFormatError(
                f"missing codes_{'xyz'[axis]} header"
            )
    for t, lineno in zip(tiles, tile_lines):
        for axis in range(dimension):
            allowed = alphabets[axis]
            for sign in (-1, +1):
                c = t.code_on(axis, sign)
                if c not in allowed:
                    raise TileSetFormatError(
                        f"tile {t.index}: code {c} on the "
                        f"{'xyz'[axis]} family is not in codes_{'xyz'[axis]}",
                        lineno,
                    )
    try:
        return TileSet(tuple(tiles), name=name)
    except TileSetError as exc:
        raise TileSetFormatError(str(exc)) from exc


def format_tileset(ts: TileSet) -> str:
    lines = [f"dimension={ts.dimension}"]
    for axis in range(ts.dimension):
        codes = ",".join(str(c) for c in ts.codes_on_family(axis))
        lines.append(f"codes_{'xyz'[axis]}={codes}")
    for t in ts.tiles:
        lines.append(f"{t.index}: " + " ".join(str(c) for c in t.codes))
    return "\n".join(lines) + "\n"


def load_tileset(path) -> TileSet:
    import os

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_tileset(text, name=os.path.splitext(os.path.basename(path))[0])


def save_tileset(ts: TileSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_tileset(ts))
