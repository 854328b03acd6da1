"""Run configuration files.

Flat, line-oriented text: one `key = value` pair per line, `#` starts a
comment, blank lines are skipped. A `[phase]` line opens one packing phase;
phase keys (rbar, kappa, rho, sigma, max_steps, target_fraction) belong to
the most recent section. Values are coerced by the key's declared type;
`inf` is accepted where floats are.

    tileset = V16
    n_nodes = 201
    seed = 42
    shape = disk

    [phase]
    rbar = 0.1
    kappa = 0.01
    rho = 0.03
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .packing import PackingPhase


class ConfigError(ValueError):
    """Malformed configuration; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(
            f"line {line}: {message}" if line is not None else message
        )


def _as_int(raw: str) -> int:
    return int(raw, 10)


def _as_float(raw: str) -> float:
    value = float(raw)
    if math.isnan(value):
        raise ValueError("nan is not a valid value")
    return value


def _as_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _as_str(raw: str) -> str:
    return raw


def _as_inset(raw: str):
    return None if raw.lower() == "auto" else _as_float(raw)


def _as_patch(raw: str):
    return "auto" if raw.lower() == "auto" else _as_bool(raw)


def _as_dims(raw: str) -> tuple[int, ...]:
    parts = raw.lower().replace("x", " ").split()
    dims = tuple(int(p) for p in parts)
    if len(dims) not in (2, 3) or any(d < 1 for d in dims):
        raise ValueError(f"expected WxH or WxHxD, got {raw!r}")
    return dims


_MAIN_KEYS = {
    "tileset": _as_str,
    "n_nodes": _as_int,
    "seed": _as_int,
    "out": _as_str,
    "threads": _as_int,
    "shape": _as_str,
    "mean_vertices": _as_float,
    "mid_low": _as_float,
    "mid_high": _as_float,
    "minor_low": _as_float,
    "minor_high": _as_float,
    "track_ls3": _as_bool,
    "exclude_vertices": _as_bool,
    "inset": _as_inset,
    "use_patch": _as_patch,
    "morphology": _as_str,
    "closed_thickness": _as_float,
    "open_thickness": _as_float,
    "offset": _as_float,
    "assembly": _as_dims,
    "assembly_seed": _as_int,
    "realizations": _as_int,
    "state": _as_str,
}

_PHASE_KEYS = {
    "rbar": _as_float,
    "kappa": _as_float,
    "rho": _as_float,
    "sigma": _as_float,
    "max_steps": _as_int,
    "target_fraction": _as_float,
}

_MORPHOLOGIES = ("closed", "open", "combined")


@dataclass
class RunConfig:
    """Everything a pipeline run needs, one value per key.

    assembly is (nx, ny[, nz]) as written in the file; the raster shape
    used for Assembly.cells is its reverse.
    """

    tileset: str = ""
    n_nodes: int = 0
    seed: int = 0
    out: str = "out"
    threads: int = 1
    shape: str = "disk"
    mean_vertices: float = 6.0
    mid_low: float = 0.7
    mid_high: float = 0.9
    minor_low: float = 0.6
    minor_high: float = 0.7
    track_ls3: bool = True
    exclude_vertices: bool = False
    inset: float | None = None
    use_patch: bool | str = "auto"
    morphology: str = "closed"
    closed_thickness: float = 0.02
    open_thickness: float = 0.03
    offset: float = 0.0
    assembly: tuple[int, ...] = ()
    assembly_seed: int | None = None
    realizations: int = 0
    state: str = ""
    phases: list[PackingPhase] = field(default_factory=list)

    @property
    def shape_options(self) -> dict:
        return {
            "mean_vertices": self.mean_vertices,
            "mid_range": (self.mid_low, self.mid_high),
            "minor_range": (self.minor_low, self.minor_high),
        }

    @property
    def cells_shape(self) -> tuple[int, ...]:
        return tuple(reversed(self.assembly))


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    seen: dict[str, int] = {}
    phase_rows: list[tuple[int, dict]] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line != "[phase]":
                raise ConfigError(f"unknown section {line!r}", lineno)
            current = {}
            phase_rows.append((lineno, current))
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, _, raw_value = line.partition("=")
        key = key.strip()
        value = raw_value.strip()
        if current is not None:
            if key not in _PHASE_KEYS:
                raise ConfigError(f"unknown phase key {key!r}", lineno)
            if key in current:
                raise ConfigError(f"duplicate phase key {key!r}", lineno)
            try:
                current[key] = _PHASE_KEYS[key](value)
            except ValueError as err:
                raise ConfigError(f"bad value for {key}: {err}", lineno)
            continue
        if key not in _MAIN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(
                f"duplicate key {key!r} (first on line {seen[key]})", lineno
            )
        seen[key] = lineno
        try:
            setattr(cfg, key, _MAIN_KEYS[key](value))
        except ValueError as err:
            raise ConfigError(f"bad value for {key}: {err}", lineno)
    for lineno, row in phase_rows:
        if "rbar" not in row:
            raise ConfigError("phase is missing rbar", lineno)
        try:
            cfg.phases.append(PackingPhase(**row))
        except ValueError as err:
            raise ConfigError(str(err), lineno)
    if cfg.morphology not in _MORPHOLOGIES:
        raise ConfigError(
            f"morphology must be one of {_MORPHOLOGIES}, "
            f"got {cfg.morphology!r}",
            seen.get("morphology"),
        )
    if cfg.n_nodes and cfg.n_nodes % 2 == 0:
        raise ConfigError(
            f"n_nodes must be odd, got {cfg.n_nodes}", seen.get("n_nodes")
        )
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
