"""Compressed stochastic microstructures on Wang tile sets.

The package packs hard particles into a small set of mutually compatible
tiles, morphs the resulting distance fields into foam-like geometries,
assembles arbitrarily large samples from the compressed set and validates
them with two-point statistics.
"""

from .tileset import (
    Assembly,
    CodeAnalysis,
    NoCandidateError,
    StochasticityReport,
    Tile,
    TileSet,
    TileSetError,
    TileSetFormatError,
    analyze_codes,
    assemble,
    format_tileset,
    get_builtin,
    load_tileset,
    make_c16,
    make_p4,
    make_puc,
    make_v16,
    make_w16,
    neighbor_grids,
    parse_tileset,
    save_tileset,
    validate_stochastic,
)
from .levelset import (
    AdmissibilityTracker,
    EmptyAdmissibleDomain,
    GridError,
    InsertionRecord,
    OversizedParticleError,
    TileFields,
    build_artificial_field,
    find_copy_inducers,
    occurrence_fan,
    propagate_copies,
    read_field,
    sentinel_value,
    write_field,
)
from .packing import (
    PackingPhase,
    PackResult,
    PhaseStats,
    load_state,
    pack,
    save_state,
)
from .morphology import (
    MorphologyError,
    closed_cell,
    combined_cell,
    extract_phase,
    offset_field,
    open_cell,
)
from .stats import (
    PeakReport,
    s2_fft,
    secondary_peaks,
    trim_shared_edges,
    write_peak_summary_csv,
    write_peaks_csv,
    write_s2_csv,
)
from .report import (
    ContinuityViolation,
    load_assembly,
    render,
    save_assembly,
    write_png,
    write_vtk,
)
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityTracker",
    "Assembly",
    "CodeAnalysis",
    "ConfigError",
    "ContinuityViolation",
    "EmptyAdmissibleDomain",
    "GridError",
    "InsertionRecord",
    "MorphologyError",
    "NoCandidateError",
    "OversizedParticleError",
    "PackResult",
    "PackingPhase",
    "PeakReport",
    "PhaseStats",
    "RunConfig",
    "StochasticityReport",
    "Tile",
    "TileFields",
    "TileSet",
    "TileSetError",
    "TileSetFormatError",
    "analyze_codes",
    "assemble",
    "build_artificial_field",
    "closed_cell",
    "combined_cell",
    "extract_phase",
    "find_copy_inducers",
    "format_tileset",
    "get_builtin",
    "load_assembly",
    "load_config",
    "load_state",
    "load_tileset",
    "make_c16",
    "make_p4",
    "make_puc",
    "make_v16",
    "make_w16",
    "neighbor_grids",
    "occurrence_fan",
    "offset_field",
    "open_cell",
    "pack",
    "parse_config",
    "parse_tileset",
    "propagate_copies",
    "read_field",
    "render",
    "s2_fft",
    "save_assembly",
    "save_state",
    "save_tileset",
    "secondary_peaks",
    "sentinel_value",
    "trim_shared_edges",
    "validate_stochastic",
    "write_field",
    "write_peak_summary_csv",
    "write_peaks_csv",
    "write_png",
    "write_s2_csv",
    "write_vtk",
    "__version__",
]
