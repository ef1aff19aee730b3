"""Strict TOML configuration for the command-line toolkit.

Every section is optional and defaults to the built-in calibration. Unknown
sections or keys are errors, so a misspelled calibration constant never
passes silently. Complex permittivities are written as ``[re, im]``.

Example::

    seed = 7
    out_dir = "results"

    [spin]
    d_gs = 3.47e9
    e_gs = 50e6

    [[calibration]]
    laser_mw = 5.0
    c_inf = 0.55
    p_sat_w = 0.1824
    linewidth_0_hz = 110e6
    count_rate = 3.6e6

    [stack]
    gold_eps = [-24.8, 1.5]
"""

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..errors import ConfigError
from ..ionrange import TargetMaterial
from ..plasmonics import EnhancementModel, LayerStack
from ..pulsed import BlochState
from ..pulsed.rates import K_P_PER_MW, LevelSystem
from ..sensitivity import LASER_CALIBRATIONS, LaserCalibration
from ..spectra import PowerResponse
from ..spin import ZfsSpinParams


@dataclass(frozen=True)
class OdmrSettings:
    dwell_s: float = 0.01
    f_min_hz: float = 3.1e9
    f_max_hz: float = 3.84e9
    n_points: int = 371

    def __post_init__(self):
        if not self.dwell_s > 0:
            raise ValueError("dwell_s must be positive")
        if not self.f_max_hz > self.f_min_hz > 0:
            raise ValueError("need 0 < f_min_hz < f_max_hz")
        if self.n_points < 10:
            raise ValueError("n_points must be at least 10")


@dataclass(frozen=True)
class LevelSettings:
    k_p_per_mw: float = K_P_PER_MW
    k_r: float = 2.5e8
    k_isc0: float = 5.0e8
    k_isc1: float = 1.5e9
    k_ms: float = 3.3e7
    beta: float = 0.1

    def __post_init__(self):
        if not self.k_p_per_mw >= 0:
            raise ValueError("k_p_per_mw must be nonnegative")

    def system(self, laser_mw):
        return LevelSystem(k_p=self.k_p_per_mw * laser_mw, k_r=self.k_r, k_isc0=self.k_isc0,
                           k_isc1=self.k_isc1, k_ms=self.k_ms, beta=self.beta)


@dataclass
class ToolkitConfig:
    spin: ZfsSpinParams = field(default_factory=ZfsSpinParams)
    odmr: OdmrSettings = field(default_factory=OdmrSettings)
    calibrations: dict = field(default_factory=lambda: dict(LASER_CALIBRATIONS))
    levels: LevelSettings = field(default_factory=LevelSettings)
    bloch: BlochState = field(default_factory=BlochState)
    target: TargetMaterial = field(default_factory=TargetMaterial)
    stack: LayerStack = field(default_factory=LayerStack)
    enhancement: EnhancementModel = field(default_factory=EnhancementModel)
    seed: int = 0
    out_dir: str = "vbsense-out"

    def calibration(self, laser_mw):
        """Calibration for ``laser_mw``; the closest tabulated laser power is used."""
        key = min(self.calibrations, key=lambda k: abs(k - laser_mw))
        if abs(key - laser_mw) > 1e-9 * max(1.0, laser_mw):
            raise ConfigError(f"no calibration for laser power {laser_mw:g} mW "
                              f"(available: {sorted(self.calibrations)})")
        return self.calibrations[key]

    def as_dict(self):
        """Plain-data view used in run manifests."""
        def plain(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)
                        if f.name != "populations"}
            if isinstance(obj, dict):
                return {str(k): plain(v) for k, v in sorted(obj.items())}
            if isinstance(obj, (list, tuple)):
                return [plain(v) for v in obj]
            if isinstance(obj, complex):
                return [obj.real, obj.imag]
            return obj
        return plain(self)


def _build(cls, section, data, renames=None, convert=None):
    renames = renames or {}
    convert = convert or {}
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for key in data:
        name = renames.get(key, key)
        if name not in allowed or name == "populations":
            raise ConfigError(f"unknown key '{section}.{key}'")
    try:
        for key, value in data.items():
            kwargs[renames.get(key, key)] = convert[key](value) if key in convert else value
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}]: {exc}") from None


def _complex(value):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ValueError(f"complex values are written as [re, im], got {value!r}")


def _calibrations(entries):
    if not isinstance(entries, list):
        raise ConfigError("'calibration' must be an array of tables ([[calibration]])")
    allowed = {"laser_mw", "c_inf", "p_sat_w", "linewidth_0_hz", "count_rate"}
    out = {}
    for i, entry in enumerate(entries):
        for key in entry:
            if key not in allowed:
                raise ConfigError(f"unknown key 'calibration[{i}].{key}'")
        missing = allowed - set(entry)
        if missing:
            raise ConfigError(f"calibration[{i}] is missing {sorted(missing)}")
        try:
            resp = PowerResponse(entry["c_inf"], entry["p_sat_w"], entry["linewidth_0_hz"])
            cal = LaserCalibration(float(entry["laser_mw"]), resp, float(entry["count_rate"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid calibration[{i}]: {exc}") from None
        if not (cal.laser_mw > 0 and cal.count_rate > 0):
            raise ConfigError(f"calibration[{i}]: laser_mw and count_rate must be positive")
        out[cal.laser_mw] = cal
    return out


SECTIONS = ("spin", "odmr", "calibration", "levels", "bloch", "target", "stack", "enhancement")
TOP_KEYS = ("seed", "out_dir")


def parse_config(data):
    """ToolkitConfig from an already-parsed TOML mapping."""
    cfg = ToolkitConfig()
    for key in data:
        if key not in SECTIONS and key not in TOP_KEYS:
            raise ConfigError(f"unknown key '{key}'")
    for key in SECTIONS:
        if key in data and key != "calibration" and not isinstance(data[key], dict):
            raise ConfigError(f"'{key}' must be a table")
    if "seed" in data:
        if not isinstance(data["seed"], int) or data["seed"] < 0:
            raise ConfigError("'seed' must be a nonnegative integer")
        cfg.seed = data["seed"]
    if "out_dir" in data:
        cfg.out_dir = str(data["out_dir"])
    if "spin" in data:
        cfg.spin = _build(ZfsSpinParams, "spin", data["spin"])
    if "odmr" in data:
        cfg.odmr = _build(OdmrSettings, "odmr", data["odmr"])
    if "calibration" in data:
        cfg.calibrations = _calibrations(data["calibration"])
    if "levels" in data:
        cfg.levels = _build(LevelSettings, "levels", data["levels"])
    if "bloch" in data:
        cfg.bloch = _build(BlochState, "bloch", data["bloch"],
                           convert={"tones": lambda v: tuple(tuple(map(float, t)) for t in v)})
    if "target" in data:
        cfg.target = _build(TargetMaterial, "target", data["target"],
                            convert={"composition": lambda v: tuple(sorted(v.items()))})
    if "stack" in data:
        cfg.stack = _build(LayerStack, "stack", data["stack"],
                           convert={"gold_eps": _complex, "gold_eps_exc": _complex})
    if "enhancement" in data:
        cfg.enhancement = _build(EnhancementModel, "enhancement", data["enhancement"])
    # exercise the level-system invariants once at load time
    try:
        cfg.levels.system(1.0)
    except ValueError as exc:
        raise ConfigError(f"invalid [levels]: {exc}") from None
    return cfg


def load_config(path=None):
    """Read and validate a config file; ``None`` gives the built-in defaults."""
    if path is None:
        return ToolkitConfig()
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
