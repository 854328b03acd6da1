"""Foam morphologies derived from the packed distance fields.

The packed particles are never the product; the solid phase is carved out
of the gaps between them. Walls midway between nearest neighbors give a
closed-cell foam, struts along the seams where second and third neighbors
meet give an open-cell one. Fields are per-tile arrays; a negative value
means solid after extraction.

Regions no particle ever reached sit at the sentinel in every field, where
the differences below vanish and the thickness term makes them solid. A
packing must fill the domain before morphing means anything.
"""

from __future__ import annotations

import numpy as np

from .levelset import TileFields


class MorphologyError(RuntimeError):
    """The requested morphology needs a field that was not tracked."""


def closed_cell(fields: TileFields, thickness: float) -> np.ndarray:
    """Walls where nearest and second-nearest distances nearly agree.

    Negative inside walls of the given half-thickness.
    """
    return (fields.ls2 - fields.ls1) - thickness


def open_cell(fields: TileFields, thickness: float) -> np.ndarray:
    """Struts where the three nearest distances nearly agree."""
    if not fields.track_ls3:
        raise MorphologyError(
            "open-cell morphology needs the third field; repack with "
            "track_ls3 enabled"
        )
    return (0.5 * (fields.ls3 + fields.ls2) - fields.ls1) - thickness


def combined_cell(fields: TileFields, closed_thickness: float,
                  open_thickness: float) -> np.ndarray:
    """Union of closed walls and open struts."""
    return np.minimum(
        closed_cell(fields, closed_thickness),
        open_cell(fields, open_thickness),
    )


def offset_field(field: np.ndarray, gamma: float) -> np.ndarray:
    """Shift the zero isosurface; positive gamma erodes the solid."""
    return field + gamma


def extract_phase(field: np.ndarray) -> np.ndarray:
    """Boolean solid indicator (field <= 0)."""
    return field <= 0.0
