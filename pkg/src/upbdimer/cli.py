"""Command-line front end emitting plot-ready CSV.

Physical inputs are given in the same absolute units as ``--gamma``
(default 1). Angles are in degrees on the command line.

Configuration files are INI-style::

    [params]
    J = 0.4
    gamma = 1.0

    [drive]
    F1 = 0.05
    phi = 90

    [grid.Delta]
    start = -0.3
    stop = 0.3
    count = 61

Command-line flags override file values.
"""
from __future__ import annotations

import argparse
import configparser
import io
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from . import analytic, experiments, lindblad
from .csvio import render_csv
from .exceptions import UPBError
from .params import DimerParams, DriveSpec

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTPUT = 4

SUBCOMMANDS = ("locus", "phase-scan", "g2tau", "landscape", "pulsed", "disorder",
               "compensate", "overshoot", "single-site", "convert", "verify")

LOCUS_J = (0.3, 0.4, 0.6, 0.7, 0.8, 1.0)
OVERSHOOT_J = (0.26, 0.3, 0.4, 0.55, 0.6, 0.7, 0.8, 0.9, 1.0)

# key -> (section, type)
CONFIG_KEYS = {
    "J": ("params", float), "U": ("params", float), "Delta": ("params", float),
    "gamma": ("params", float), "Ux": ("params", float),
    "delta_Delta": ("params", float), "delta_gamma": ("params", float),
    "delta_U": ("params", float),
    "F1": ("drive", float), "phi": ("drive", float), "ratio": ("drive", float),
    "sigma": ("drive", float),
    "Ncut": ("numerics", int), "method": ("numerics", str), "site": ("numerics", int),
    "axis": ("numerics", str), "threshold": ("numerics", float),
    "Q": ("convert", float), "wavelength": ("convert", float),
    "out": ("output", str),
}

DEFAULT_GRIDS = {
    "phi": (1.0, 179.0, 179),
    "tau": (0.0, 10.0, 400),
    "F1": (0.01, 0.25, 25),
    "Delta": (-0.3, 0.3, 61),
    "mismatch": (-0.2, 0.2, 81),
    "J": (0.75, 1.2, 10),
}


class ConfigError(ValueError):
    pass


class OutputError(OSError):
    pass


@dataclass
class RunConfig:
    values: Dict[str, object] = field(default_factory=dict)
    grids: Dict[str, tuple] = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def grid(self, name):
        start, stop, count = self.grids.get(name, DEFAULT_GRIDS[name])
        return np.linspace(start, stop, count)

    @property
    def gamma(self) -> float:
        return float(self.get("gamma", 1.0))

    @property
    def n_cut(self) -> int:
        return int(self.get("Ncut", lindblad.DEFAULT_CUTOFF))

    def params(self, J_default: float = 0.4) -> DimerParams:
        """Dimer parameters; unset ``U``/``Delta`` default to the locus at ``J``."""
        g = self.gamma
        J = float(self.get("J", J_default * g))
        U, Delta = self.values.get("U"), self.values.get("Delta")
        if U is None or Delta is None:
            loc = analytic.locus_quadrature(J, g)
            U = loc.U if U is None else U
            Delta = loc.Delta if Delta is None else Delta
        return DimerParams(Delta=float(Delta), U=float(U), J=J, gamma=g,
                           Ux=float(self.get("Ux", 0.0)),
                           delta_Delta=float(self.get("delta_Delta", 0.0)),
                           delta_gamma=float(self.get("delta_gamma", 0.0)),
                           delta_U=float(self.get("delta_U", 0.0)))

    def drive(self, F1_default: float = 0.01) -> DriveSpec:
        g = self.gamma
        sigma = self.values.get("sigma")
        return DriveSpec(F1=float(self.get("F1", F1_default * g)),
                         phi=np.radians(float(self.get("phi", 90.0))),
                         ratio=float(self.get("ratio", 1.0)),
                         pulse_sigma=None if sigma is None else float(sigma))


def parse_range(text: str) -> tuple:
    """``start:stop:count`` to a validated tuple."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range {text!r} is not start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"range {text!r}: {exc}") from None
    return _check_range(start, stop, count, text)


def _check_range(start, stop, count, label):
    if count < 1 or stop < start:
        raise ConfigError(f"range {label!r} needs count >= 1 and stop >= start")
    return start, stop, count


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = RunConfig()
    for section in parser.sections():
        if section.startswith("grid."):
            name = section[5:]
            sec = parser[section]
            try:
                cfg.grids[name] = _check_range(float(sec["start"]), float(sec["stop"]),
                                               int(sec["count"]), section)
            except (KeyError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"section [{section}]: {exc}") from None
            continue
        for key, raw in parser[section].items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            expected, typ = CONFIG_KEYS[key]
            if section != expected:
                raise ConfigError(f"key {key!r} belongs in section [{expected}]")
            try:
                cfg.values[key] = typ(raw)
            except ValueError:
                raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from None
    return cfg


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    for name in ("J", "U", "Delta", "F1", "ratio", "sigma", "gamma"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--phi", type=float, help="drive phase in degrees")
    p.add_argument("--Ncut", type=int, help="per-site Fock cutoff")
    p.add_argument("--out", help="output CSV path (stdout if omitted)")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--grid", action="append", default=[], metavar="NAME=START:STOP:COUNT",
                   help="override a scan grid, e.g. Delta=-0.3:0.3:61")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="upbdimer",
                                     description="Kerr-dimer photon blockade toolkit")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("locus", parents=[common], help="quadrature-drive locus rows")
    sub.add_parser("phase-scan", parents=[common], help="locus versus drive phase")
    p = sub.add_parser("g2tau", parents=[common], help="time-delayed correlator")
    p.add_argument("--method", choices=("analytic", "numeric", "both"))
    p.add_argument("--site", type=int, choices=(1, 2))
    sub.add_parser("landscape", parents=[common], help="master-equation (F1, Delta) map")
    sub.add_parser("pulsed", parents=[common], help="Gaussian pulse on site 2")
    p = sub.add_parser("disorder", parents=[common], help="mismatch tolerance scan")
    p.add_argument("--axis", choices=sorted(experiments.DISORDER_AXES))
    p.add_argument("--threshold", type=float)
    sub.add_parser("compensate", parents=[common], help="drive re-tuning under mismatch")
    sub.add_parser("overshoot", parents=[common], help="mode frequencies and overshoot")
    sub.add_parser("single-site", parents=[common], help="single-site versus bilateral")
    p = sub.add_parser("convert", parents=[common], help="quality factor to decay rate")
    p.add_argument("--Q", type=float)
    p.add_argument("--wavelength", type=float, help="wavelength in nm")
    sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg.values[key] = v
    for item in args.grid:
        name, sep, rng = item.partition("=")
        if not sep:
            raise ConfigError(f"grid override {item!r} is not NAME=START:STOP:COUNT")
        cfg.grids[name.strip()] = parse_range(rng)
    return cfg


def _check_writable(path):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path))
    if os.path.isdir(path) or not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise OutputError(f"cannot write {path}")
    if os.path.exists(path) and not os.access(path, os.W_OK):
        raise OutputError(f"cannot write {path}")


def _emit(text: str, path: Optional[str], stdout):
    if path is None:
        stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(str(exc)) from None


def _meta(cfg: RunConfig, **extra):
    meta = {"command": cfg.values.get("_command"), "gamma": cfg.gamma}
    meta.update({k: v for k, v in sorted(cfg.values.items(), key=lambda kv: kv[0])
                 if not k.startswith("_") and k != "out"})
    meta.update({f"grid_{k}": "%r:%r:%d" % v for k, v in sorted(cfg.grids.items())})
    meta.update(extra)
    return meta


def _resolved(params: DimerParams, drive: DriveSpec) -> dict:
    """Every model parameter actually used, for the comment block."""
    return {"J_used": params.J, "U_used": params.U, "Delta_used": params.Delta,
            "Ux_used": params.Ux, "delta_Delta_used": params.delta_Delta,
            "delta_gamma_used": params.delta_gamma, "delta_U_used": params.delta_U,
            "F1_used": drive.F1, "phi_deg_used": np.degrees(drive.phi),
            "ratio_used": drive.ratio, "sigma_used": drive.pulse_sigma}


def _display(x):
    return "" if x is None or not np.isfinite(x) else f"{x:.4g}"


# ---------------------------------------------------------------- subcommands


def cmd_locus(cfg):
    g = cfg.gamma
    Js = [cfg.values["J"]] if "J" in cfg.values else [j * g for j in LOCUS_J]
    rows = []
    for J in Js:
        pt = analytic.locus_quadrature(J, g)
        rows.append([J, pt.U, pt.U / J, pt.Delta, int(pt.dark_state_boundary),
                     _display(pt.U / J)])
    cols = ["J", "U_opt", "U_over_J", "Delta_opt", "dark_state_boundary",
            "U_over_J_display"]
    return render_csv(cols, rows, _meta(cfg, method="analytic"))


def cmd_phase_scan(cfg):
    g = cfg.gamma
    J = float(cfg.get("J", 0.4 * g))
    phi_deg = cfg.grid("phi")
    scan = experiments.phase_locus_scan([J], np.radians(phi_deg), g)
    scan.axes["phi"] = phi_deg
    extra = {"phi_unit": "deg"}
    if J > g / 4:
        lo, hi = analytic.phase_range(J, g)
        extra.update(phi_lo_deg=np.degrees(lo), phi_hi_deg=np.degrees(hi))
    scan.metadata = _meta(cfg, **extra)
    return scan.to_csv_text(display="U_over_J")


def cmd_g2tau(cfg):
    params, drive = cfg.params(), cfg.drive()
    method = cfg.get("method", "analytic")
    site = int(cfg.get("site", 2))
    tau = cfg.grid("tau") / cfg.gamma
    cols, data = ["tau"], [tau]
    if method in ("analytic", "both"):
        cols.append("g2_analytic")
        data.append(analytic.qrt_g2_tau(params, drive, site, tau).values)
    if method in ("numeric", "both"):
        cols.append("g2_numeric")
        data.append(lindblad.g2_tau_numeric(params, drive, (site, site), tau,
                                            cfg.n_cut).values)
    extra = {"site": site, "Ncut_used": cfg.n_cut, **_resolved(params, drive)}
    if method == "both":
        extra["max_abs_difference"] = float(np.max(np.abs(data[1] - data[2])))
    cols.append("g2_display")
    rows = [list(r) + [_display(r[1])] for r in zip(*data)]
    return render_csv(cols, rows, _meta(cfg, **extra))


def cmd_landscape(cfg):
    J = float(cfg.get("J", 0.4 * cfg.gamma))
    U = float(cfg.get("U", 0.052 * cfg.gamma))
    phi = np.radians(float(cfg.get("phi", 90.0)))
    F1 = cfg.grid("F1") * cfg.gamma if "F1" not in cfg.values else [cfg.values["F1"]]
    scan = experiments.landscape_scan(F1, cfg.grid("Delta") * cfg.gamma, J=J, U=U,
                                      phi=phi, gamma=cfg.gamma, n_cut=cfg.n_cut)
    scan.metadata = _meta(cfg, J_used=J, U_used=U, phi_deg_used=np.degrees(phi),
                          Ncut_used=cfg.n_cut)
    return scan.to_csv_text(display="g2_22")


def cmd_pulsed(cfg):
    params = cfg.params()
    drive = cfg.drive(F1_default=0.05)
    if drive.pulse_sigma is None:
        drive = drive.with_(pulse_sigma=10.0 / cfg.gamma)
    s = drive.pulse_sigma
    t = np.linspace(-6 * s, 6 * s, 1201)
    run = lindblad.time_evolve_pulsed(params, drive, t, cfg.n_cut)
    extra = {**_resolved(params, drive), "Ncut_used": cfg.n_cut,
             "g2_22_peak": _nan_str(run.g2_22_peak),
             "g2_11_peak": _nan_str(run.g2_11_peak),
             "n1_max": float(np.max(run.n1)), "n2_max": float(np.max(run.n2))}
    rows = [[ti, a, b, _display(b)] for ti, a, b in zip(run.t, run.n1, run.n2)]
    return render_csv(["t", "n1", "n2", "n2_display"], rows, _meta(cfg, **extra))


def _nan_str(x):
    return "undefined" if x is None else x


def cmd_disorder(cfg):
    axis = cfg.get("axis", "delta_Delta")
    params = (cfg.params() if "J" in cfg.values or "U" in cfg.values
              else experiments.NOMINAL_PARAMS)
    drive = cfg.drive(F1_default=0.05)
    scan, rep = experiments.disorder_scan(axis, cfg.grid("mismatch") * cfg.gamma,
                                          float(cfg.get("threshold", 0.1)), params, drive)
    scan.metadata = _meta(cfg, **_resolved(params, drive), axis_used=axis,
                          half_width=rep.half_width,
                          positive_crossing=rep.positive, negative_crossing=rep.negative)
    return scan.to_csv_text(display="g2_22")


def cmd_compensate(cfg):
    params = (cfg.params() if "J" in cfg.values or "U" in cfg.values
              else experiments.NOMINAL_PARAMS)
    drive = cfg.drive(F1_default=0.05)
    grid = cfg.grids.get("mismatch", (-0.4, 0.4, 41))
    scan = experiments.compensation_scan(np.linspace(*grid[:2], grid[2]) * cfg.gamma,
                                         params, drive)
    rep = experiments.compensation_tolerance("phase_only", 0.1, params, drive)
    slope = experiments.compensation_phase_slope("phase_only", params=params, drive=drive)
    scan.metadata = _meta(cfg, **_resolved(params, drive),
                          phase_only_half_width=rep.half_width,
                          phi_slope_deg_per_0p1_gamma=slope)
    return scan.to_csv_text(display="g2_phase")


def cmd_overshoot(cfg):
    g = cfg.gamma
    Js = [cfg.values["J"]] if "J" in cfg.values else [j * g for j in OVERSHOOT_J]
    scan = experiments.overshoot_scan(Js, g, float(cfg.get("F1", 0.05 * g)) / g)
    scan.metadata = _meta(cfg)
    return scan.to_csv_text(display="g2_max")


def cmd_single_site(cfg):
    g = cfg.gamma
    scan, cross = experiments.single_site_comparison(cfg.grid("J") * g, g)
    scan.metadata = _meta(cfg, **({"crossover_J": cross[0], "crossover_U": cross[1]}
                                  if cross else {"crossover": "none"}))
    return scan.to_csv_text(display="U_single_site")


def cmd_convert(cfg):
    Q = float(cfg.get("Q", 1e4))
    lam = float(cfg.get("wavelength", 810.0))
    gamma_ghz, life_ps = experiments.unit_convert(Q, lam)
    return render_csv(["Q", "wavelength_nm", "gamma_GHz", "lifetime_ps"],
                      [[Q, lam, gamma_ghz, life_ps]], _meta(cfg))


HANDLERS = {
    "locus": cmd_locus, "phase-scan": cmd_phase_scan, "g2tau": cmd_g2tau,
    "landscape": cmd_landscape, "pulsed": cmd_pulsed, "disorder": cmd_disorder,
    "compensate": cmd_compensate, "overshoot": cmd_overshoot,
    "single-site": cmd_single_site, "convert": cmd_convert,
}


def run_verify(stdout) -> int:
    from .acceptance import run_all

    results = run_all()
    width = max(len(r.name) for r in results)
    stdout.write(f"{'check':<{width}}  result  detail\n")
    for r in results:
        stdout.write(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}\n")
    failed = sum(not r.passed for r in results)
    stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        cfg.values["_command"] = args.command
        out = cfg.values.get("out")
        _check_writable(out)
        if args.command == "verify":
            buf = io.StringIO()
            code = run_verify(buf)
            _emit(buf.getvalue(), out, stdout)
            if out is not None:
                stdout.write(buf.getvalue())
            return code
        text = HANDLERS[args.command](cfg)
        _emit(text, out, stdout)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except OutputError as exc:
        stderr.write(f"output error: {exc}\n")
        return EXIT_OUTPUT
    except (UPBError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_FAILURE
    return EXIT_OK


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
