import numpy as np
import pytest

from microtile.tileset import Assembly, assemble, get_builtin
from microtile.report import (
    ContinuityViolation,
    figure_phase,
    figure_s2,
    figure_tile_mosaic,
    load_assembly,
    render,
    save_assembly,
    write_png,
    write_vtk,
)


def _periodic_tiles(n_tiles, n, dimension):
    """Per-tile arrays that agree on all boundaries.

    cos(2*pi*x) takes the same value on opposite tile faces, so every tile
    stitches seamlessly against every other.
    """
    coords = -0.5 + np.arange(n) / (n - 1)
    wave = np.cos(2.0 * np.pi * coords)
    tiles = np.zeros((n_tiles,) + (n,) * dimension)
    if dimension == 2:
        tiles[:] = wave[:, None] + wave[None, :]
    else:
        tiles[:] = (
            wave[:, None, None] + wave[None, :, None] + wave[None, None, :]
        )
    return tiles


def test_render_2d_offsets_and_size():
    ts = get_builtin("P4")
    asm = assemble(ts, (2, 3), seed=5)
    n = 9
    tiles = _periodic_tiles(len(ts.tiles), n, 2)
    # tag tile interiors so cell placement is visible after stitching
    for t in range(len(ts.tiles)):
        tiles[t, n // 2, n // 2] = 100 + t
    out = render(asm, tiles)
    assert out.shape == (3 * 8 + 1, 2 * 8 + 1)
    for j in range(2):
        for i in range(3):
            x = i * 8 + n // 2
            y = (2 - 1 - j) * 8 + n // 2
            assert out[x, y] == 100 + asm.cells[j, i]


def test_render_shares_one_node_row():
    ts = get_builtin("P4")
    asm = assemble(ts, (1, 2), seed=3)
    tiles = _periodic_tiles(len(ts.tiles), 5, 2)
    out = render(asm, tiles)
    assert out.shape == (9, 5)
    assert np.all(out[4, :] == tiles[asm.cells[0, 0], 4, :])


def test_render_rejects_boundary_mismatch():
    ts = get_builtin("P4")
    asm = assemble(ts, (1, 2), seed=3)
    tiles = _periodic_tiles(len(ts.tiles), 5, 2)
    east_tile = asm.cells[0, 1]
    tiles[east_tile, 0, 2] += 1e-9
    with pytest.raises(ContinuityViolation) as err:
        render(asm, tiles)
    assert err.value.cell == (0, 1)


def test_render_3d_offsets():
    ts = get_builtin("PUC3")
    asm = assemble(ts, (2, 2, 2), seed=1)
    n = 5
    tiles = _periodic_tiles(len(ts.tiles), n, 3)
    out = render(asm, tiles)
    assert out.shape == (9, 9, 9)
    # the stitched result is the periodic wave evaluated on the global grid
    wave = np.cos(2.0 * np.pi * (-0.5 + (np.arange(9) % 4) / 4.0))
    want = (
        wave[:, None, None] + wave[None, :, None] + wave[None, None, :]
    )
    assert np.allclose(out, want, atol=1e-12)


def test_render_3d_boundary_mismatch_names_cell():
    ts = get_builtin("PUC3")
    asm = assemble(ts, (1, 1, 2), seed=1)
    tiles = _periodic_tiles(len(ts.tiles), 5, 3)
    tiles[asm.cells[0, 0, 1], 0, 2, 2] += 1.0
    with pytest.raises(ContinuityViolation) as err:
        render(asm, tiles)
    assert err.value.cell == (0, 0, 1)


def test_assembly_round_trip_2d(tmp_path):
    ts = get_builtin("V16")
    asm = assemble(ts, (4, 6), seed=11)
    path = tmp_path / "asm.txt"
    save_assembly(asm, path)
    back = load_assembly(path, ts)
    assert np.array_equal(back.cells, asm.cells)
    assert back.seed == 11


def test_assembly_round_trip_3d(tmp_path):
    ts = get_builtin("W16")
    asm = assemble(ts, (2, 3, 2), seed=7)
    path = tmp_path / "asm3.txt"
    save_assembly(asm, path)
    back = load_assembly(path, ts)
    assert np.array_equal(back.cells, asm.cells)
    assert back.cells.shape == (2, 3, 2)


def test_load_assembly_rejects_other_files(tmp_path):
    path = tmp_path / "bogus.txt"
    path.write_text("just some text\n")
    with pytest.raises(ValueError):
        load_assembly(path, get_builtin("P4"))


def test_png_orientation(tmp_path):
    from PIL import Image

    field = np.ones((4, 6))  # all void
    field[0, 5] = -1.0  # solid at west edge, top row
    path = tmp_path / "img.png"
    write_png(field, path)
    img = np.asarray(Image.open(path))
    assert img.shape == (6, 4)
    assert img[0, 0] == 0
    assert img[0, 1] == 255
    assert np.count_nonzero(img == 0) == 1


def test_png_accepts_boolean_mask(tmp_path):
    from PIL import Image

    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    write_png(mask, tmp_path / "m.png")
    img = np.asarray(Image.open(tmp_path / "m.png"))
    assert img[1, 1] == 0


def test_png_bytes_deterministic(tmp_path):
    rng = np.random.default_rng(2)
    field = rng.standard_normal((17, 17))
    write_png(field, tmp_path / "a.png")
    write_png(field, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_vtk_header_and_values(tmp_path):
    field = np.full((2, 3, 4), 1.0)
    field[1, 2, 3] = -0.5
    path = tmp_path / "out.vtk"
    write_vtk(field, path, spacing=0.25)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 2 3 4" in lines
    assert f"SPACING {0.25!r} {0.25!r} {0.25!r}" in lines
    assert "POINT_DATA 24" in lines
    assert "SCALARS phase unsigned_char 1" in lines
    values = []
    for line in lines[lines.index("LOOKUP_TABLE default") + 1:]:
        values.extend(int(v) for v in line.split())
    got = np.array(values, dtype=np.uint8)
    want = (field <= 0).astype(np.uint8).ravel(order="F")
    assert np.array_equal(got, want)


def test_figures_write_files(tmp_path):
    rng = np.random.default_rng(3)
    field = rng.standard_normal((9, 9))
    figure_phase(field, tmp_path / "phase.png", title="demo")
    tiles = rng.standard_normal((4, 5, 5))
    figure_tile_mosaic(tiles, tmp_path / "mosaic.png")
    ind = rng.random((16, 16)) < 0.4
    from microtile.stats import s2_fft

    figure_s2(s2_fft(ind), 8, tmp_path / "s2.png")
    for name in ("phase.png", "mosaic.png", "s2.png"):
        assert (tmp_path / name).stat().st_size > 0
