"""Run configuration: INI-style sections with unit-suffixed keys.

Every key is optional; an empty file gives the reference scenario (500 nm
pump, w = 6.6e5 1/m, air / GaAs / SiO2, a = 0.01 pump wavelengths, a single
rate evaluation at 45 degrees).  Angles are degrees here and radians
everywhere else.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

SCAN_TYPES = (
    "rate",
    "phi-symmetric",
    "thickness",
    "theta-map",
    "idler-scan",
    "tomography",
    "schmidt-map",
    "wavelength-sweep",
)

# axes each scan reads from [scan]: name -> (default start, stop, count, unit suffix)
SCAN_AXES = {
    "rate": {},
    "tomography": {},
    "phi-symmetric": {"theta": (0.0, 89.5, 180, "deg"), "phi": (0.0, 355.0, 72, "deg")},
    "thickness": {"a": (2.0, 5.0, 600, "lp")},
    "theta-map": {"theta_s": (0.0, 89.5, 180, "deg"), "theta_i": (0.0, 89.5, 180, "deg")},
    "idler-scan": {"theta_i": (0.0, 89.5, 180, "deg")},
    "schmidt-map": {"theta_i": (0.0, 89.0, 90, "deg"), "phi_i": (0.0, 359.0, 360, "deg")},
    "wavelength-sweep": {"r": (0.8, 1.5, 71, "")},
}

KNOWN_KEYS = {
    "stack": {
        "thickness_m", "thickness_lp", "materials", "dispersion", "dispersion_files",
        "eps_pump", "eps_signal", "eps_idler",
    },
    "pump": {"wavelength_m", "width_per_m", "waist_m", "amplitude"},
    "detection": {
        "r", "theta_s_deg", "phi_s_deg", "theta_i_deg", "phi_i_deg",
        "medium_s", "medium_i", "state_s", "state_i",
    },
    "scan": {"type", "skip_lp", "threshold"},
    "run": {"threads"},
}
for _axes in SCAN_AXES.values():
    for _name, (_, _, _, _unit) in _axes.items():
        suffix = f"_{_unit}" if _unit else ""
        KNOWN_KEYS["scan"] |= {f"{_name}_start{suffix}", f"{_name}_stop{suffix}", f"{_name}_count"}
KNOWN_KEYS["scan"] |= {"a_start_m", "a_stop_m"}

STATE_LABELS = ("H", "V", "D", "A", "R", "L")


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration in config units (meters, degrees)."""

    thickness_m: float = 5e-9
    materials: tuple = ("air", "GaAs", "SiO2")
    dispersion: str = "flat"
    dispersion_files: dict = field(default_factory=dict)
    eps: dict = field(default_factory=dict)
    pump_wavelength_m: float = 500e-9
    pump_width_per_m: float = 6.6e5
    pump_amplitude: float = 1.0
    r: float = 1.0
    theta_s_deg: float = 45.0
    phi_s_deg: float = 0.0
    theta_i_deg: float = 45.0
    phi_i_deg: float = 180.0
    medium_s: int = 1
    medium_i: int = 1
    state_s: str | None = None
    state_i: str | None = None
    scan_type: str = "rate"
    axes: dict = field(default_factory=dict)
    skip_lp: float = 1.0
    threshold: float = 0.2
    threads: int = 1

    def to_dict(self):
        out = asdict(self)
        out["materials"] = list(self.materials)
        out["eps"] = {k: [[z.real, z.imag] for z in v] for k, v in self.eps.items()}
        out["axes"] = {k: list(v) for k, v in self.axes.items()}
        return out


def packaged_config(name):
    """Path of a config shipped with the package (``name`` with or without .cfg)."""
    fname = name if name.endswith(".cfg") else f"{name}.cfg"
    return resources.files("thinfilm_spdc").joinpath("configs", fname)


def packaged_config_names():
    folder = resources.files("thinfilm_spdc").joinpath("configs")
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))


def read_config_text(source):
    """Text of a config file, falling back to the shipped configs by name."""
    path = Path(source)
    if path.exists():
        return path.read_text()
    shipped = packaged_config(str(source))
    if shipped.is_file():
        return shipped.read_text()
    raise FileNotFoundError(f"config {source!r} not found (shipped: {', '.join(packaged_config_names())})")


def parse(text):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable config: {exc}"]) from None
    return {sec: dict(parser[sec]) for sec in parser.sections()}


class _Reader:
    """Collects conversion errors instead of stopping at the first one."""

    def __init__(self, raw):
        self.raw = raw
        self.errors = []

    def get(self, section, key, conv, default=None, check=None, message=None):
        value = self.raw.get(section, {}).get(key)
        if value is None or value.strip() == "":
            return default
        try:
            out = conv(value.strip())
        except (TypeError, ValueError):
            self.errors.append(f"[{section}] {key}: cannot read {value!r}")
            return default
        if check is not None and not check(out):
            self.errors.append(f"[{section}] {key}: {message or 'out of range'} (got {value.strip()})")
            return default
        return out

    def has(self, section, key):
        value = self.raw.get(section, {}).get(key)
        return value is not None and value.strip() != ""


def _complex_list(text):
    vals = [complex(v.strip().replace(" ", "")) for v in text.split(",")]
    if len(vals) != 3:
        raise ValueError("need three values")
    return tuple(vals)


def _name_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _file_map(text):
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, path = item.partition(":")
        if not path.strip():
            raise ValueError("expected name:path")
        out[name.strip()] = path.strip()
    return out


def _positive(x):
    return x > 0 and math.isfinite(x)


def validate(raw) -> RunConfig:
    """Resolve defaults and check every field; all problems are raised together."""
    if isinstance(raw, str):
        raw = parse(raw)
    errors = []
    for section, keys in raw.items():
        if section not in KNOWN_KEYS:
            errors.append(f"[{section}]: unknown section")
            continue
        for key in keys:
            if key not in KNOWN_KEYS[section]:
                errors.append(f"[{section}] {key}: unknown key")
    rd = _Reader(raw)

    wavelength = rd.get("pump", "wavelength_m", float, 500e-9, _positive, "must be positive")
    if rd.has("pump", "width_per_m") and rd.has("pump", "waist_m"):
        errors.append("[pump] width_per_m and waist_m are mutually exclusive")
    width = rd.get("pump", "width_per_m", float, 6.6e5, _positive, "must be positive")
    waist = rd.get("pump", "waist_m", float, None, _positive, "must be positive")
    if waist is not None and not rd.has("pump", "width_per_m"):
        width = 2.0 / waist
    amplitude = rd.get("pump", "amplitude", float, 1.0, math.isfinite, "must be finite")

    if rd.has("stack", "thickness_m") and rd.has("stack", "thickness_lp"):
        errors.append("[stack] thickness_m and thickness_lp are mutually exclusive")
    thickness = rd.get("stack", "thickness_m", float, None, _positive, "thickness must be positive")
    thickness_lp = rd.get("stack", "thickness_lp", float, None, _positive, "thickness must be positive")
    if thickness is None:
        thickness = (0.01 if thickness_lp is None else thickness_lp) * wavelength
    materials = rd.get("stack", "materials", _name_list, ("air", "GaAs", "SiO2"),
                       lambda m: len(m) == 3, "need exactly three materials (medium 1, 2, 3)")
    dispersion = rd.get("stack", "dispersion", str.lower, "flat", lambda d: d in ("flat", "table"),
                        "must be 'flat' or 'table'")
    files = rd.get("stack", "dispersion_files", _file_map, {})
    eps = {}
    for role in ("pump", "signal", "idler"):
        val = rd.get("stack", f"eps_{role}", _complex_list, None,
                     lambda v: all(z.imag >= 0 for z in v), "Im(eps) must be >= 0")
        if val is not None:
            eps[role] = val
    if dispersion == "flat" and files:
        errors.append("[stack] dispersion_files needs dispersion = table")
    if not errors and not eps:
        from .materials import known_materials

        known = set(known_materials()) | {n.lower() for n in files}
        for m in materials:
            if m.lower() not in known:
                errors.append(f"[stack] materials: unknown material {m!r}")

    r = rd.get("detection", "r", float, 1.0, _positive, "degeneracy factor must be positive")
    angle_ok = lambda t: 0 <= t < 90  # noqa: E731
    theta_s = rd.get("detection", "theta_s_deg", float, 45.0, angle_ok, "must lie in [0, 90)")
    phi_s = rd.get("detection", "phi_s_deg", float, 0.0, math.isfinite, "must be finite")
    theta_i = rd.get("detection", "theta_i_deg", float, theta_s, angle_ok, "must lie in [0, 90)")
    phi_i = rd.get("detection", "phi_i_deg", float, phi_s + 180.0, math.isfinite, "must be finite")
    medium_s = rd.get("detection", "medium_s", int, 1, lambda m: m in (1, 3), "must be 1 or 3")
    medium_i = rd.get("detection", "medium_i", int, 1, lambda m: m in (1, 3), "must be 1 or 3")
    if medium_s != medium_i:
        errors.append("[detection] medium_s/medium_i: both photons must be detected in the same medium")
    state_s = rd.get("detection", "state_s", str.upper, None, lambda s: s in STATE_LABELS,
                     f"must be one of {', '.join(STATE_LABELS)}")
    state_i = rd.get("detection", "state_i", str.upper, None, lambda s: s in STATE_LABELS,
                     f"must be one of {', '.join(STATE_LABELS)}")
    if (state_s is None) != (state_i is None):
        errors.append("[detection] state_s and state_i must be given together")

    scan_type = rd.get("scan", "type", str.lower, "rate", lambda t: t in SCAN_TYPES,
                       f"unknown scan type; expected one of {', '.join(SCAN_TYPES)}")
    axes = {}
    for name, (start, stop, count, unit) in SCAN_AXES[scan_type].items():
        suffix = f"_{unit}" if unit else ""
        lo = rd.get("scan", f"{name}_start{suffix}", float, start)
        hi = rd.get("scan", f"{name}_stop{suffix}", float, stop)
        if name == "a":
            # thickness may also be given in meters
            lo = rd.get("scan", "a_start_m", float, lo * wavelength)
            hi = rd.get("scan", "a_stop_m", float, hi * wavelength)
            if rd.has("scan", "a_start_m") and rd.has("scan", "a_start_lp"):
                errors.append("[scan] a_start_m and a_start_lp are mutually exclusive")
            if rd.has("scan", "a_stop_m") and rd.has("scan", "a_stop_lp"):
                errors.append("[scan] a_stop_m and a_stop_lp are mutually exclusive")
        n = rd.get("scan", f"{name}_count", int, count, lambda c: c >= 2, "need at least 2 points")
        if not lo < hi:
            errors.append(f"[scan] {name}: start must be below stop")
        elif name == "a" and lo <= 0:
            errors.append("[scan] a: thickness must be positive")
        elif unit == "deg" and name.startswith("theta") and not (lo >= 0 and hi < 90):
            errors.append(f"[scan] {name}: polar angles must lie in [0, 90)")
        elif name == "r" and lo <= 0:
            errors.append("[scan] r: degeneracy factor must be positive")
        axes[name] = (lo, hi, n)
    skip_lp = rd.get("scan", "skip_lp", float, 1.0, lambda x: x >= 0, "must be non-negative")
    threshold = rd.get("scan", "threshold", float, 0.2, lambda x: 0 <= x < 1, "must lie in [0, 1)")
    threads = rd.get("run", "threads", int, 1, lambda t: t >= 1, "must be at least 1")

    errors.extend(rd.errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        thickness_m=thickness, materials=materials, dispersion=dispersion, dispersion_files=files, eps=eps,
        pump_wavelength_m=wavelength, pump_width_per_m=width, pump_amplitude=amplitude,
        r=r, theta_s_deg=theta_s, phi_s_deg=phi_s, theta_i_deg=theta_i, phi_i_deg=phi_i,
        medium_s=medium_s, medium_i=medium_i, state_s=state_s, state_i=state_i,
        scan_type=scan_type, axes=axes, skip_lp=skip_lp, threshold=threshold, threads=threads,
    )
