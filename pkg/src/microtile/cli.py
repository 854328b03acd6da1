"""Command-line front end.

Every subcommand is a thin shell over the library: anything it produces can
be reproduced programmatically from the same configuration and seed, and
reruns are byte-identical except for matplotlib figures (whose PNG encoder
embeds library-version metadata).

    microtile analyze V16
    microtile pack --config run.cfg
    microtile morph --config run.cfg
    microtile assemble --config run.cfg
    microtile render --config run.cfg
    microtile stats --config run.cfg --threads 8

Exit codes: 0 success, 2 invalid input or configuration, 3 stitched
boundary mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .levelset import read_field, write_field
from .morphology import (
    MorphologyError,
    closed_cell,
    combined_cell,
    extract_phase,
    offset_field,
    open_cell,
)
from .packing import load_state, pack, save_state
from .report import (
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
from .stats import (
    s2_fft,
    secondary_peaks,
    trim_shared_edges,
    write_peak_summary_csv,
    write_peaks_csv,
    write_s2_csv,
)
from .tileset import (
    TileSet,
    TileSetError,
    analyze_codes,
    assemble,
    get_builtin,
    load_tileset,
    validate_stochastic,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3


def _resolve_tileset(name: str) -> TileSet:
    """A built-in set name, else a path to a tile-set file."""
    if not name:
        raise ConfigError("no tile set given (config key: tileset)")
    if os.path.exists(name):
        return load_tileset(name)
    return get_builtin(name)


def _load_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg


def _state_dir(cfg: RunConfig) -> str:
    return cfg.state or os.path.join(cfg.out, "state")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(cfg: RunConfig, args) -> int:
    ts = _resolve_tileset(getattr(args, "tileset", None) or cfg.tileset)
    analysis = analyze_codes(ts)
    print(f"tile set: {ts.name}")
    print(f"dimension: {ts.dimension}")
    print(f"tiles: {len(ts)}")
    for axis in range(ts.dimension):
        fam = "xyz"[axis]
        print(f"codes_{fam}: {len(ts.codes_on_family(axis))}")
    if ts.dimension == 3:
        for direction in range(3):
            print(
                f"edge classes along {'xyz'[direction]}: "
                f"{analysis.n_edge_classes(direction)}"
            )
    print(f"vertex classes: {analysis.n_vertex_classes}")
    for cid, members in enumerate(analysis.vertex_members):
        print(f"  class {cid}: {len(members)} corners")
    report = validate_stochastic(ts)
    print(f"stochastic: {'yes' if report.is_stochastic else 'NO'}")
    worst = min(report.counts.values())
    print(
        f"constraint combinations: {len(report.counts)} "
        f"(fewest candidates: {worst})"
    )
    for combo in report.deficient_combinations:
        print(f"  deficient: {combo}")
    for warning in report.warnings:
        print(f"  warning: {warning}")
    return EXIT_OK


def _cmd_pack(cfg: RunConfig, args) -> int:
    ts = _resolve_tileset(cfg.tileset)
    if not cfg.phases:
        raise ConfigError("packing needs at least one [phase] section")
    if cfg.n_nodes < 3:
        raise ConfigError("packing needs n_nodes >= 3")
    result = pack(
        ts,
        cfg.phases,
        seed=cfg.seed,
        n_nodes=cfg.n_nodes,
        shape=cfg.shape,
        shape_options=cfg.shape_options,
        track_ls3=cfg.track_ls3,
        inset=cfg.inset,
        exclude_vertices=cfg.exclude_vertices,
        use_patch=cfg.use_patch,
    )
    os.makedirs(cfg.out, exist_ok=True)
    save_state(_state_dir(cfg), result.fields)
    for t in range(len(ts)):
        write_field(
            os.path.join(cfg.out, f"ls1_tile{t:02d}.field"),
            result.fields.ls1[t:t + 1],
            f"ls1-tile{t}",
        )
    for i, st in enumerate(result.phase_stats):
        print(
            f"phase {i}: {st.insertions} insertions "
            f"(rbar={st.phase.rbar}, {st.reason})"
        )
    ls1 = result.fields.ls1
    per_tile = (ls1 <= 0.0).reshape(ls1.shape[0], -1).mean(axis=1)
    print(f"particles: {len(result.particles)}")
    print(f"status: {result.status}")
    print(
        "particle volume fraction per tile: "
        + " ".join(f"{v:.4f}" for v in per_tile)
    )
    return EXIT_OK


def _morph_field(cfg: RunConfig, fields) -> np.ndarray:
    if cfg.morphology == "closed":
        out = closed_cell(fields, cfg.closed_thickness)
    elif cfg.morphology == "open":
        out = open_cell(fields, cfg.open_thickness)
    else:
        out = combined_cell(fields, cfg.closed_thickness, cfg.open_thickness)
    if cfg.offset != 0.0:
        out = offset_field(out, cfg.offset)
    return out


def _cmd_morph(cfg: RunConfig, args) -> int:
    fields = load_state(_state_dir(cfg))
    morphed = _morph_field(cfg, fields)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "phase.field")
    write_field(path, morphed, f"phase-{cfg.morphology}")
    solid = extract_phase(morphed)
    per_tile = solid.reshape(solid.shape[0], -1).mean(axis=1)
    print(f"wrote {path}")
    print(f"morphology: {cfg.morphology} (offset {cfg.offset})")
    print(
        "solid fraction per tile: "
        + " ".join(f"{v:.4f}" for v in per_tile)
    )
    return EXIT_OK


def _cmd_assemble(cfg: RunConfig, args) -> int:
    ts = _resolve_tileset(cfg.tileset)
    if not cfg.assembly:
        raise ConfigError("assembling needs the assembly key (e.g. 10x5)")
    seed = cfg.assembly_seed if cfg.assembly_seed is not None else cfg.seed
    asm = assemble(ts, cfg.cells_shape, seed)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "assembly.txt")
    save_assembly(asm, path)
    print(f"wrote {path}")
    print(
        "cells: "
        + "x".join(str(s) for s in asm.cells.shape)
        + f" (seed {seed})"
    )
    return EXIT_OK


def _tile_phase_arrays(cfg: RunConfig) -> np.ndarray:
    """Morphed per-tile fields: a phase.field dump if present, else the
    saved packing state morphed on the fly."""
    path = os.path.join(cfg.out, "phase.field")
    if os.path.exists(path):
        arrays, _ = read_field(path)
        return arrays
    return _morph_field(cfg, load_state(_state_dir(cfg)))


def _cmd_render(cfg: RunConfig, args) -> int:
    ts = _resolve_tileset(cfg.tileset)
    asm_path = os.path.join(cfg.out, "assembly.txt")
    if os.path.exists(asm_path):
        asm = load_assembly(asm_path, ts)
    else:
        if not cfg.assembly:
            raise ConfigError(
                "no assembly.txt in the output directory and no assembly "
                "key to build one"
            )
        seed = cfg.assembly_seed if cfg.assembly_seed is not None else cfg.seed
        asm = assemble(ts, cfg.cells_shape, seed)
        os.makedirs(cfg.out, exist_ok=True)
        save_assembly(asm, asm_path)
    arrays = _tile_phase_arrays(cfg)
    if len(ts) != arrays.shape[0]:
        raise ConfigError(
            f"tile set has {len(ts)} tiles but the phase field has "
            f"{arrays.shape[0]}"
        )
    # stitch the binary phase: shared-node equality is guaranteed for the
    # solid/void split, not for raw morph distances above the inset
    stitched = render(asm, extract_phase(arrays))
    os.makedirs(cfg.out, exist_ok=True)
    if stitched.ndim == 2:
        out_path = os.path.join(cfg.out, "sample.png")
        write_png(stitched, out_path)
        figure_phase(
            stitched, os.path.join(cfg.out, "sample_overview.png"),
            title=f"{ts.name} {asm.cells.shape[1]}x{asm.cells.shape[0]}",
        )
        figure_tile_mosaic(
            arrays, os.path.join(cfg.out, "tiles_overview.png"),
            title=ts.name,
        )
    else:
        out_path = os.path.join(cfg.out, "sample.vtk")
        write_vtk(stitched, out_path, spacing=1.0 / (arrays.shape[1] - 1))
    print(f"wrote {out_path}")
    print("nodes: " + "x".join(str(s) for s in stitched.shape))
    return EXIT_OK


def _stats_one(job) -> tuple:
    """One realization: assemble, stitch, trim, correlate."""
    cells_shape, seed, arrays, ts_file = job
    ts = load_tileset(ts_file) if os.path.exists(ts_file) else get_builtin(ts_file)
    asm = assemble(ts, cells_shape, seed)
    stitched = render(asm, extract_phase(arrays))
    solid = trim_shared_edges(stitched)
    s2 = s2_fft(solid)
    pitch = arrays.shape[1] - 1
    return s2, secondary_peaks(s2, pitch)


def _cmd_stats(cfg: RunConfig, args) -> int:
    ts = _resolve_tileset(cfg.tileset)
    if cfg.realizations < 1:
        raise ConfigError("stats needs realizations >= 1")
    if not cfg.assembly:
        raise ConfigError("stats needs the assembly key (e.g. 10x10)")
    arrays = _tile_phase_arrays(cfg)
    if len(ts) != arrays.shape[0]:
        raise ConfigError(
            f"tile set has {len(ts)} tiles but the phase field has "
            f"{arrays.shape[0]}"
        )
    seeds = np.random.SeedSequence(cfg.seed).generate_state(
        cfg.realizations, dtype=np.uint64
    )
    ts_ref = cfg.tileset
    jobs = [
        (cfg.cells_shape, int(seeds[i]), arrays, ts_ref)
        for i in range(cfg.realizations)
    ]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_stats_one, jobs, chunksize=1))
    else:
        results = [_stats_one(job) for job in jobs]
    reports = [rep for _, rep in results]
    mean_s2 = np.mean([s2 for s2, _ in results], axis=0)
    pitch = arrays.shape[1] - 1
    os.makedirs(cfg.out, exist_ok=True)
    write_s2_csv(mean_s2, pitch, os.path.join(cfg.out, "s2_mean.csv"))
    write_peak_summary_csv(reports, os.path.join(cfg.out, "peaks.csv"))
    write_peaks_csv(reports, os.path.join(cfg.out, "peak_lags.csv"))
    figure_s2(mean_s2, pitch, os.path.join(cfg.out, "s2_overview.png"))
    norms = [rep.max_normalized for rep in reports]
    print(f"realizations: {cfg.realizations}")
    print(f"volume fraction (mean): {np.mean([r.phi for r in reports]):.4f}")
    print(f"max normalized peak (median): {float(np.median(norms)):.4f}")
    print(f"wrote {os.path.join(cfg.out, 'peaks.csv')}")
    return EXIT_OK


_DISPATCH = {
    "analyze": _cmd_analyze,
    "pack": _cmd_pack,
    "morph": _cmd_morph,
    "assemble": _cmd_assemble,
    "render": _cmd_render,
    "stats": _cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microtile",
        description="Compressed stochastic microstructures on Wang tile sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "connectivity classes and stochasticity of a tile set"),
        ("pack", "fill a tile set with particles"),
        ("morph", "turn packed distance fields into a phase field"),
        ("assemble", "lay out a compatible tiling"),
        ("render", "stitch a tiling into an image or voxel file"),
        ("stats", "two-point statistics over many realizations"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument(
            "--threads", type=int, help="worker processes for stats"
        )
        if name == "analyze":
            p.add_argument(
                "tileset", nargs="?",
                help="built-in set name or tile-set file "
                     "(default: the config's tileset)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return _DISPATCH[args.command](cfg, args)
    except ContinuityViolation as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ConfigError, TileSetError, MorphologyError, ValueError,
            OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
