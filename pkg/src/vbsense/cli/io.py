"""CSV tables with unit-bearing headers, measured-trace ingestion and run manifests.

Column headers are ``<quantity>_<unit>`` (``freq_hz``, ``sweep_ns``) or one of
the dimensionless quantity names in DIMENSIONLESS. Values are written with
``repr`` so that reading a file back reproduces every float exactly.
"""

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TraceFormatError

# unit suffix -> factor to SI
UNITS = {
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "w": 1.0, "mw": 1e-3,
    "nm": 1e-9, "t": 1.0, "mt": 1e-3, "ev": 1.0,
    "t_per_sqrthz": 1.0,
}
DIMENSIONLESS = {"counts", "contrast", "enhancement", "vacancies", "ions", "sigma", "fit"}
SI_NAMES = {"hz": "Hz", "s": "s", "w": "W", "nm": "m", "t": "T", "ev": "eV"}
KINDS = ("odmr", "saturation", "decay", "rabi")
_KIND_UNITS = {"odmr": {"hz", "khz", "mhz", "ghz"}, "saturation": {"w", "mw"},
               "decay": {"s", "ms", "us", "ns"}, "rabi": {"s", "ms", "us", "ns"}}
MIN_POINTS = 4


def split_header(name):
    """(quantity, unit) for a column header; unit is "" for dimensionless columns."""
    key = name.strip().lower()
    if key in DIMENSIONLESS:
        return key, ""
    for unit in sorted(UNITS, key=len, reverse=True):
        if key.endswith("_" + unit) and len(key) > len(unit) + 1:
            return key[: -len(unit) - 1], unit
    raise TraceFormatError(f"column {name!r} carries no recognized unit suffix")


def _fmt(v):
    v = float(v)
    if np.isfinite(v) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def write_csv(path, header, columns):
    """Write equal-length ``columns`` under ``header``; returns the path."""
    for name in header:
        split_header(name)
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len({c.size for c in cols}) != 1 or len(cols) != len(header):
        raise ValueError("header and columns must match in number and length")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """(header, 2-D array) from a unit-headed CSV; errors name the offending line."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise TraceFormatError(f"{path}: empty file")
    _, header = rows[0]
    header = [h.strip() for h in header]
    for h in header:
        split_header(h)
    data = []
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise TraceFormatError(
                f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise TraceFormatError(f"{path}: line {lineno} has a non-numeric field") from None
    return header, np.array(data, dtype=float).reshape(-1, len(header))


@dataclass
class MeasuredTrace:
    """One measured curve with x converted to SI (Hz, s or W)."""

    kind: str
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None = None
    x_unit: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TraceFormatError(f"unknown trace kind {self.kind!r}; expected one of {KINDS}")
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise TraceFormatError("x and y must be 1-D arrays of equal length")
        if self.x.size < MIN_POINTS:
            raise TraceFormatError(f"a trace needs at least {MIN_POINTS} points")
        if np.any(np.diff(self.x) <= 0):
            raise TraceFormatError("x must be strictly increasing")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != self.x.shape or np.any(self.sigma <= 0):
                raise TraceFormatError("sigma must be positive and match x")


def read_trace(path, kind=None):
    """Ingest a trace CSV: first column x (with unit), then y, optional ``sigma``.

    The kind is inferred from the x unit when not given (frequency -> odmr,
    power -> saturation, time -> decay).
    """
    header, data = read_csv(path)
    if len(header) < 2:
        raise TraceFormatError(f"{path}: need at least an x and a y column")
    _, xu = split_header(header[0])
    if not xu:
        raise TraceFormatError(f"{path}: first column {header[0]!r} must carry a unit")
    if kind is None:
        kind = next((k for k in ("odmr", "saturation", "decay") if xu in _KIND_UNITS[k]), None)
        if kind is None:
            raise TraceFormatError(f"{path}: cannot infer the trace kind from unit {xu!r}")
    elif xu not in _KIND_UNITS.get(kind, ()):
        raise TraceFormatError(f"{path}: unit {xu!r} does not fit a {kind} trace")
    names = [split_header(h)[0] for h in header]
    sigma = data[:, names.index("sigma")] if "sigma" in names[2:] else None
    return MeasuredTrace(kind, data[:, 0] * UNITS[xu], data[:, 1], sigma, xu)


def sha256_file(path):
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(out_dir, command, inputs, seed, version, outputs):
    """manifest.json listing inputs, seed, version and a sha256 per output file."""
    out_dir = Path(out_dir)
    hashes = {Path(p).name: sha256_file(p) for p in sorted(outputs, key=lambda p: Path(p).name)}
    return write_json(out_dir / "manifest.json", {
        "command": command,
        "inputs": inputs,
        "seed": seed,
        "version": version,
        "outputs": hashes,
    })
