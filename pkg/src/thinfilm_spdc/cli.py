"""Command-line driver.

    thinfilm-spdc run --config fig2f --out results/
    thinfilm-spdc validate --config my.cfg

Exit codes: 0 success, 2 invalid configuration, 3 physics error (resonance
pole, undefined state, ...), 4 file I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, tomography
from .config import RunConfig, read_config_text, validate
from .errors import ConfigError, IncompleteProfileError, MaterialLookupError, SpdcError
from .materials import build_stack, register_dispersion_file
from .optics import Medium
from .pump import PumpSpec
from .spdc import JointSetting, amplitude_matrix, farfield_rate, farfield_tensor, make_setting, unpolarized_rate_from_tensor

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4


def version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def build_setting(cfg: RunConfig, r=None) -> JointSetting:
    """JointSetting for the configured scenario (optionally at another degeneracy r)."""
    r = cfg.r if r is None else r
    for name, path in cfg.dispersion_files.items():
        register_dispersion_file(name, path)
    lam_p = cfg.pump_wavelength_m
    lam_s = (1 + r) * lam_p
    stack = build_stack(cfg.thickness_m, cfg.materials, (lam_p, lam_s, lam_s / r), cfg.dispersion)
    for role, values in cfg.eps.items():
        stack = stack.with_role(role, tuple(Medium(v) for v in values))
    pump = PumpSpec(lam_p, cfg.pump_width_per_m, cfg.pump_amplitude)
    setting = make_setting(
        math.radians(cfg.theta_s_deg),
        math.radians(cfg.phi_s_deg),
        math.radians(cfg.theta_i_deg),
        math.radians(cfg.phi_i_deg),
        r=r,
        pump=pump,
        stack=stack,
        medium_s=cfg.medium_s,
        medium_i=cfg.medium_i,
    )
    if cfg.state_s is not None:
        setting = setting.with_polarizations(cfg.state_s, cfg.state_i)
    return setting


def _axis(cfg, name):
    lo, hi, n = cfg.axes[name]
    if name == "a":
        return analysis.Axis.linspace("a", lo, hi, n, unit="m")
    if name == "r":
        return analysis.Axis.linspace("r", lo, hi, n, unit="1")
    return analysis.Axis.degrees(name, lo, hi, n)


def _column(axis):
    if axis.unit == "rad":
        return f"{axis.name}_deg", np.degrees(axis.values)
    if axis.unit == "m":
        return f"{axis.name}_m", axis.values
    return axis.name, axis.values


def _fmt(x):
    return f"{float(x):.17g}"


def write_grid_csv(path, grid: analysis.ScanGrid):
    """Row-major grid: axis columns (degrees for angles), then the value columns."""
    cols = [_column(ax) for ax in grid.axes]
    names = [c[0] for c in cols] + [grid.quantity] + list(grid.extra)
    mesh = np.meshgrid(*(c[1] for c in cols), indexing="ij")
    data = [m.reshape(-1) for m in mesh] + [grid.values.reshape(-1)]
    data += [np.asarray(v).reshape(-1) for v in grid.extra.values()]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(names)
        for row in zip(*data):
            out.writerow([_fmt(v) for v in row])


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _deg(pair):
    return [float(math.degrees(v)) for v in pair]


def _profile_summary(grid, unit_scale=1.0):
    try:
        s = analysis.fwhm(grid)
        return {"peak_location": s.peak_location * unit_scale, "peak_value": s.peak_value, "fwhm": s.fwhm * unit_scale}
    except IncompleteProfileError as exc:
        s = analysis.peak(grid)
        return {"peak_location": s.peak_location * unit_scale, "peak_value": s.peak_value, "fwhm": None,
                "fwhm_note": str(exc)}


def execute(cfg: RunConfig, out_dir: Path, threads=None):
    """Run the configured scan, write its files and return the summary dict."""
    threads = cfg.threads if threads is None else threads
    setting = build_setting(cfg)
    scan = cfg.scan_type
    lam_p = cfg.pump_wavelength_m
    summary = {}
    deg = math.degrees(1.0)

    if scan == "rate":
        tensor = farfield_tensor(setting)
        row = [cfg.theta_s_deg, cfg.phi_s_deg, cfg.theta_i_deg, cfg.phi_i_deg,
               float(unpolarized_rate_from_tensor(tensor))]
        header = ["theta_s_deg", "phi_s_deg", "theta_i_deg", "phi_i_deg", "rate"]
        if cfg.state_s is not None:
            header.append(f"rate_{cfg.state_s}{cfg.state_i}")
            row.append(farfield_rate(setting))
        write_rows_csv(out_dir / "grid.csv", header, [row])
        summary = dict(zip(header, row))
    elif scan == "phi-symmetric":
        grid = analysis.phi_symmetric_scan(setting, _axis(cfg, "theta"), _axis(cfg, "phi"), threads)
        write_grid_csv(out_dir / "grid.csv", grid)
        t_max, p_max = grid.argmax()
        j = int(np.argmin(np.abs(grid.axes[1].values - p_max)))
        profile = analysis.ScanGrid((grid.axes[0],), grid.values[:, j])
        summary = {"argmax_deg": _deg((t_max, p_max)), "peak_value": float(np.max(grid.values)),
                   "theta_profile": _profile_summary(profile, deg)}
    elif scan == "thickness":
        grid = analysis.thickness_scan(setting, _axis(cfg, "a"), threads)
        write_grid_csv(out_dir / "grid.csv", grid)
        pk = analysis.peak(grid)
        summary = {"peak_location_m": pk.peak_location, "peak_value": pk.peak_value}
        try:
            period = analysis.thickness_period(grid, cfg.skip_lp * lam_p, cfg.threshold).oscillation_period
            summary["period_m"] = period
            summary["period_lp"] = period / lam_p
        except IncompleteProfileError as exc:
            summary["period_m"] = None
            summary["period_note"] = str(exc)
        try:
            opd = analysis.opd_period(setting.stack, setting.signal.theta, (1 + cfg.r) * lam_p)
            summary["opd_period_m"] = opd
            summary["opd_period_lp"] = opd / lam_p
        except ValueError:
            summary["opd_period_m"] = None
    elif scan == "theta-map":
        grid = analysis.theta_map(setting, _axis(cfg, "theta_s"), _axis(cfg, "theta_i"), threads)
        write_grid_csv(out_dir / "grid.csv", grid)
        summary = {"argmax_deg": _deg(grid.argmax()), "peak_value": float(np.max(grid.values))}
    elif scan == "idler-scan":
        grid = analysis.idler_scan(setting, _axis(cfg, "theta_i"), threads)
        write_grid_csv(out_dir / "grid.csv", grid)
        summary = {"theta_i_profile": _profile_summary(grid, deg)}
        try:
            summary["idler_angle_deg"] = math.degrees(analysis.idler_angle(cfg.r, setting.signal.theta))
        except SpdcError as exc:
            summary["idler_angle_deg"] = None
            summary["idler_angle_note"] = str(exc)
    elif scan == "tomography":
        record = tomography.measure(setting)
        rho = tomography.reconstruct_rho(record)
        amps = amplitude_matrix(setting)
        record.write_csv(out_dir / "tomography.csv")
        rows = [(a, b, amps[j, k].real, amps[j, k].imag) for j, a in enumerate("HV") for k, b in enumerate("HV")]
        write_rows_csv(out_dir / "grid.csv", ["state_s", "state_i", "amplitude_re", "amplitude_im"], rows)
        with open(out_dir / "rho.json", "w") as fh:
            json.dump({"basis": ["HH", "HV", "VH", "VV"], "rho": rho.to_pairs()}, fh, indent=1)
            fh.write("\n")
        summary = {
            "schmidt_number": tomography.schmidt_number(rho),
            "purity": rho.purity(),
            "singlet_fidelity": rho.fidelity(tomography.singlet()),
        }
    elif scan == "schmidt-map":
        grid = tomography.schmidt_map(setting, _axis(cfg, "theta_i"), _axis(cfg, "phi_i"), threads)
        write_grid_csv(out_dir / "grid.csv", grid)
        summary = {name: _deg(loc) for name, loc in grid.markers.items()}
        summary["max_schmidt_number"] = float(np.nanmax(grid.values))
        summary["missing_points"] = int(np.isnan(grid.values).sum())
    elif scan == "wavelength-sweep":
        grid = tomography.wavelength_sweep(
            _axis(cfg, "r").values, lambda r: build_setting(replace(cfg, theta_i_deg=cfg.theta_s_deg,
                                                                    phi_i_deg=cfg.phi_s_deg + 180.0), r),
            threads,
        )
        write_grid_csv(out_dir / "grid.csv", grid)
        k = grid.values
        summary = {"min_schmidt_number": float(np.nanmin(k)),
                   "r_at_min": float(grid.axes[0].values[int(np.nanargmin(k))]),
                   "max_schmidt_number": float(np.nanmax(k))}
    else:  # validate() rules this out
        raise ConfigError([f"[scan] type: unknown scan type {scan!r}"])
    return summary


def _envelope(cfg, text, summary):
    return {
        "code": "thinfilm_spdc",
        "version": version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "units": {"rate": "arbitrary", "angle": "deg", "length": "m"},
        "config_text": text,
        "config": cfg.to_dict(),
        "scan": cfg.scan_type,
        "summary": summary,
    }


def _build_parser():
    parser = argparse.ArgumentParser(prog="thinfilm-spdc", description="Photon pairs from a thin chi2 film.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the configured scan")
    val = sub.add_parser("validate", help="check a config and print the resolved values")
    for p in (run, val):
        p.add_argument("--config", default=None, help="config file, or the name of a shipped config")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--threads", type=int, default=None, help="worker threads (overrides [run] threads)")
    run.add_argument("--dry-run", action="store_true", help="validate and echo the resolved config only")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        text = "" if args.config is None else read_config_text(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = validate(text)
        if getattr(args, "threads", None) is not None:
            if args.threads < 1:
                raise ConfigError(["--threads: must be at least 1"])
            cfg = replace(cfg, threads=args.threads)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate" or args.dry_run:
        print(json.dumps(cfg.to_dict(), indent=1))
        return EXIT_OK
    try:
        build_setting(cfg)
    except (MaterialLookupError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            summary = execute(cfg, out_dir)
        with open(out_dir / "summary.json", "w") as fh:
            json.dump(_envelope(cfg, text, summary), fh, indent=1)
            fh.write("\n")
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except SpdcError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(summary, indent=1))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
