"""Stitching assemblies into global fields and writing image output.

Global arrays are indexed [gx, gy] (2D) or [gx, gy, gz] (3D) with gx
growing east, gy north, gz up. Assembly cell (j, i) lands at x offset
i*(n-1) and y offset (ny-1-j)*(n-1); in 3D layer k lands at z offset
(nz-1-k)*(n-1). Abutting tiles share one node row, which must carry equal
values on both sides; a mismatch means the tile set's fields are not
mutually compatible and raises ContinuityViolation.
"""

from __future__ import annotations

import numpy as np

from .tileset import Assembly, TileSet


class ContinuityViolation(RuntimeError):
    """Two abutting tiles disagree on their shared boundary nodes."""

    def __init__(self, cell, axis, message=None):
        self.cell = cell
        self.axis = axis
        super().__init__(
            message
            or f"shared nodes differ at cell {cell} along axis {axis}"
        )


def render(assembly: Assembly, tile_arrays: np.ndarray) -> np.ndarray:
    """Stitch per-tile node arrays into one global array.

    tile_arrays has shape (tiles, n, ...) matching the assembly's tile set.
    The result has n_cells*(n-1)+1 nodes per axis. Equality of every shared
    node row is enforced exactly.
    """
    cells = assembly.cells
    tile_arrays = np.asarray(tile_arrays)
    d = tile_arrays.ndim - 1
    if cells.ndim != d:
        raise ValueError(
            f"assembly is {cells.ndim}D but tile arrays are {d}D"
        )
    n = tile_arrays.shape[1]
    pitch = n - 1

    if d == 2:
        ny, nx = cells.shape
        out = np.zeros((nx * pitch + 1, ny * pitch + 1),
                       dtype=tile_arrays.dtype)
        written = np.zeros(out.shape, dtype=bool)
        for j in range(ny):
            for i in range(nx):
                block = tile_arrays[cells[j, i]]
                x0 = i * pitch
                y0 = (ny - 1 - j) * pitch
                sl = (slice(x0, x0 + n), slice(y0, y0 + n))
                overlap = written[sl]
                if np.any(overlap) and not np.array_equal(
                    out[sl][overlap], block[overlap]
                ):
                    raise ContinuityViolation((j, i), _overlap_axis(overlap))
                out[sl] = block
                written[sl] = True
        return out

    nz, ny, nx = cells.shape
    out = np.zeros(
        (nx * pitch + 1, ny * pitch + 1, nz * pitch + 1),
        dtype=tile_arrays.dtype,
    )
    written = np.zeros(out.shape, dtype=bool)
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                block = tile_arrays[cells[k, j, i]]
                x0 = i * pitch
                y0 = (ny - 1 - j) * pitch
                z0 = (nz - 1 - k) * pitch
                sl = (
                    slice(x0, x0 + n),
                    slice(y0, y0 + n),
                    slice(z0, z0 + n),
                )
                overlap = written[sl]
                if np.any(overlap) and not np.array_equal(
                    out[sl][overlap], block[overlap]
                ):
                    raise ContinuityViolation(
                        (k, j, i), _overlap_axis(overlap)
                    )
                out[sl] = block
                written[sl] = True
    return out


def _overlap_axis(overlap: np.ndarray):
    """Best-effort name of the boundary plane an overlap sits on."""
    for axis in range(overlap.ndim):
        first = np.take(overlap, 0, axis=axis)
        if np.all(first) and np.count_nonzero(overlap) == first.size:
            return axis
    return None


# ---------------------------------------------------------------------------
# assembly files


def save_assembly(assembly: Assembly, path) -> None:
    cells = assembly.cells
    lines = [f"# assembly dimension={cells.ndim} shape="
             + "x".join(str(s) for s in cells.shape)
             + (f" seed={assembly.seed}" if assembly.seed is not None else "")]
    if cells.ndim == 2:
        for row in cells:
            lines.append(" ".join(str(int(v)) for v in row))
    else:
        for k, layer in enumerate(cells):
            lines.append(f"# layer {k}")
            for row in layer:
                lines.append(" ".join(str(int(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_assembly(path, tileset: TileSet) -> Assembly:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# assembly"):
            raise ValueError(f"{path}: not an assembly file")
        fields = dict(
            part.split("=", 1) for part in header[2:].split() if "=" in part
        )
        dim = int(fields["dimension"])
        shape = tuple(int(v) for v in fields["shape"].split("x"))
        # hand-written files may omit the seed; -1 marks "unknown"
        seed = int(fields.get("seed", -1))
        rows = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([int(v) for v in line.split()])
    cells = np.array(rows, dtype=np.int64).reshape(shape)
    if dim != cells.ndim:
        raise ValueError(f"{path}: dimension mismatch")
    return Assembly(tileset=tileset, cells=cells, seed=seed)


# ---------------------------------------------------------------------------
# images


def write_png(field2d: np.ndarray, path) -> None:
    """Binary 2D field to grayscale PNG, solid black on white void.

    Image row 0 shows the top of the domain (largest y).
    """
    from PIL import Image

    solid = (
        field2d
        if field2d.dtype == bool
        else np.asarray(field2d) <= 0.0
    )
    nx, ny = solid.shape
    img = np.where(solid.T[::-1, :], 0, 255).astype(np.uint8)
    assert img.shape == (ny, nx)
    Image.fromarray(img, mode="L").save(path)


def write_vtk(field3d: np.ndarray, path, spacing: float = 1.0,
              name: str = "phase") -> None:
    """Binary 3D field as a legacy ASCII structured-points dataset."""
    solid = (
        field3d
        if field3d.dtype == bool
        else np.asarray(field3d) <= 0.0
    )
    nx, ny, nz = solid.shape
    values = solid.astype(np.uint8).ravel(order="F")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("stitched phase field\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        fh.write("ORIGIN 0 0 0\n")
        fh.write(f"SPACING {spacing!r} {spacing!r} {spacing!r}\n")
        fh.write(f"POINT_DATA {values.size}\n")
        fh.write(f"SCALARS {name} unsigned_char 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for start in range(0, values.size, 30):
            fh.write(" ".join(str(v) for v in values[start:start + 30]))
            fh.write("\n")


# ---------------------------------------------------------------------------
# figures


def _matplotlib():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def figure_phase(field2d: np.ndarray, path, title: str = "") -> None:
    """Grayscale snapshot of a stitched 2D phase field."""
    plt = _matplotlib()
    solid = field2d if field2d.dtype == bool else field2d <= 0.0
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(
        solid.T[::-1, :], cmap="gray_r", interpolation="nearest",
        origin="upper",
    )
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_tile_mosaic(tile_fields: np.ndarray, path, cols: int = 4,
                       title: str = "") -> None:
    """All tiles of a 2D set side by side."""
    plt = _matplotlib()
    tiles = tile_fields.shape[0]
    rows = (tiles + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(2.2 * cols, 2.2 * rows))
    axes = np.atleast_1d(axes).ravel()
    for t in range(tiles):
        fld = tile_fields[t]
        solid = fld if fld.dtype == bool else fld <= 0.0
        axes[t].imshow(
            solid.T[::-1, :], cmap="gray_r", interpolation="nearest",
        )
        axes[t].set_title(str(t), fontsize=8)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_s2(s2: np.ndarray, pitch: int, path, title: str = "") -> None:
    """Center slice of S2 with the integer-pitch lattice marked."""
    plt = _matplotlib()
    view = s2 if s2.ndim == 2 else s2[:, :, 0]
    shifted = np.fft.fftshift(view)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(shifted.T[::-1, :], interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    cx = view.shape[0] // 2
    cy = view.shape[1] // 2
    for kx in range(view.shape[0] // pitch + 1):
        for ky in range(view.shape[1] // pitch + 1):
            px = (kx * pitch + cx) % view.shape[0]
            py = (ky * pitch + cy) % view.shape[1]
            ax.plot(px, view.shape[1] - 1 - py, "r+", markersize=4)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
