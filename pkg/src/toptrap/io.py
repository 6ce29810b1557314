"""Configuration and dataset serialization.

One flat JSON document configures the trap and its non-idealities; the
datasets move as small CSV tables with fixed headers (see FORMATS.md at
the repository root).  All writers go through a write-then-rename so a
failure never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .calibrate import PositionDataset, SpectrumDataset
from .errors import ConfigParseError, SchemaError
from .fields import NonIdealities, PhysicalConstants, TrapConfig

__all__ = [
    "atomic_write_text",
    "config_to_dict",
    "load_config",
    "read_oscillation_samples",
    "read_positions_csv",
    "read_spectrum_csv",
    "write_csv",
    "write_json",
    "write_manifest",
]

SCHEMA_VERSION = 1

_TRAP_KEYS = {
    "B0_G": ("B0", 24.0),
    "B1p_Gpcm": ("B1p", 30.7),
    "B2p_Gpcm": ("B2p", 2.5),
    "Omega1_rad_per_s": ("Omega1", 2.0 * np.pi * 12.8e3),
    "Omega2_rad_per_s": ("Omega2", 2.0 * np.pi * 1.0e3),
}
_NI_KEYS = {
    "Delta": ("Delta", 0.0),
    "psi1_rad": ("psi1", 0.0),
    "psi2_rad": ("psi2", 0.0),
    "xi1_rad": ("xi1", 0.0),
    "xi2_rad": ("xi2", 0.0),
}
_CONST_KEYS = {
    "mu_J_per_T": "mu",
    "mass_kg": "mass",
    "g_m_per_s2": "g",
    "gF_ground": "gF_ground",
    "h_J_s": "h",
}
_BE_KEYS = ("BEx_G", "BEy_G", "BEz_G")


def load_config(path) -> tuple[TrapConfig, NonIdealities]:
    """Parse the flat JSON configuration document.

    Unknown keys are rejected so typos fail loudly.  All keys are
    optional and default to the nominal operating point.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigParseError("config document must be a JSON object")

    known = (
        {"schema_version"}
        | set(_TRAP_KEYS)
        | set(_NI_KEYS)
        | set(_CONST_KEYS)
        | set(_BE_KEYS)
    )
    unknown = set(doc) - known
    if unknown:
        raise ConfigParseError(f"unknown config keys: {sorted(unknown)}")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigParseError(f"unsupported schema_version {version}")

    def grab(key, default):
        v = doc.get(key, default)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v):
            raise ConfigParseError(f"config key {key} must be a finite number")
        return float(v)

    try:
        const_kw = {attr: grab(key, getattr(PhysicalConstants(), attr)) for key, attr in _CONST_KEYS.items()}
        constants = PhysicalConstants(**const_kw)
        trap_kw = {attr: grab(key, default) for key, (attr, default) in _TRAP_KEYS.items()}
        cfg = TrapConfig(constants=constants, **trap_kw)
        ni_kw = {attr: grab(key, default) for key, (attr, default) in _NI_KEYS.items()}
        be = tuple(grab(k, 0.0) for k in _BE_KEYS)
        ni = NonIdealities(BE=be, **ni_kw)
    except ValueError as exc:
        raise ConfigParseError(str(exc)) from exc
    return cfg, ni


def config_to_dict(cfg: TrapConfig, ni: NonIdealities) -> dict:
    """Inverse of ``load_config``; useful for writing fixtures."""
    doc = {"schema_version": SCHEMA_VERSION}
    for key, (attr, _) in _TRAP_KEYS.items():
        doc[key] = getattr(cfg, attr)
    for key, (attr, _) in _NI_KEYS.items():
        doc[key] = getattr(ni, attr)
    for key, value in zip(_BE_KEYS, ni.BE):
        doc[key] = value
    return doc


def atomic_write_text(path, text: str):
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict):
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def write_csv(path, header: list[str], rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    atomic_write_text(path, buf.getvalue())


def _read_table(path, expected_header: list[str]) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected_header:
                raise SchemaError(
                    f"{path}: header {header} does not match {expected_header}"
                )
            try:
                rows = [[float(v) for v in row] for row in reader if row]
            except ValueError as exc:
                raise SchemaError(f"{path}: non-numeric cell: {exc}") from exc
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows or any(len(r) != len(expected_header) for r in rows):
        raise SchemaError(f"{path}: empty table or ragged rows")
    return np.asarray(rows, dtype=float)


def read_spectrum_csv(path) -> SpectrumDataset:
    """Read a `freq_Hz,survival` table."""
    data = _read_table(path, ["freq_Hz", "survival"])
    try:
        return SpectrumDataset(frequency=data[:, 0], survival=data[:, 1])
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def read_oscillation_samples(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a `delay_s,center_Hz,sigma_Hz` table."""
    data = _read_table(path, ["delay_s", "center_Hz", "sigma_Hz"])
    if np.any(data[:, 2] <= 0):
        raise SchemaError(f"{path}: sigma_Hz must be positive")
    return data[:, 0], data[:, 1], data[:, 2]


def read_positions_csv(path) -> PositionDataset:
    """Read a `BQp_Gpcm,y0_cm` table."""
    data = _read_table(path, ["BQp_Gpcm", "y0_cm"])
    try:
        return PositionDataset(BQp=data[:, 0], y0=data[:, 1])
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def write_manifest(out_dir, command: str, config_path, input_paths, seed):
    """Record what produced the files in ``out_dir``.

    Deliberately timestamp-free, so re-running a manifest reproduces the
    outputs byte for byte.
    """
    from . import __version__

    write_json(
        Path(out_dir) / "manifest.json",
        {
            "command": command,
            "config_path": str(config_path) if config_path else None,
            "input_paths": [str(p) for p in input_paths],
            "output_dir": str(out_dir),
            "seed": seed,
            "tool_version": __version__,
        },
    )
