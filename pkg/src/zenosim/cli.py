"""Command-line front end: config parsing and the user commands.

One tool with subcommands (simulate, sweep, compare, scan-bloch, rates,
defaults). Sweep-sized runs are configured through a JSON file whose
sections mirror the protocol, sweep, and scan builders; command-line
flags override individual config keys. Identical configuration produces
byte-identical output files: no timestamps, hostnames, or worker counts
leak into CSVs, and the run manifest echoes the resolved configuration.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
from math import isnan, pi

import numpy as np

from . import __version__
from .dynamics import (
    ProtocolSpec, TruncationError, derive_schedule, run_piecewise,
)
from .experiments import (
    ADDRESSABILITY_WARN_BELOW, SMOKE_BETA_GRID, SMOKE_PHI1_GRID,
    SMOKE_PHI2_GRID, SMOKE_N_MAX, SMOKE_SUB_SAMPLES, SweepSpec,
    addressability_margin, compare_engines, emit_plot_script,
    sweep_single_pulse, sweep_two_pulse, write_manifest, write_results,
)
from .lindblad import LindbladParams, propagate_lindblad, rates_from_angle
from .measures import BlochAngles, bloch_scan, bloch_state
from .statespace import (
    DensityOperator, InvariantError, SpaceConfig, fock_state,
)

__all__ = ["DEFAULT_CONFIG", "TRAJECTORY_CSV_FORMAT", "SCAN_CSV_FORMAT",
           "load_config", "resolve_config", "cmd_simulate", "cmd_sweep",
           "cmd_compare", "cmd_scan_bloch", "cmd_rates", "cmd_defaults",
           "main"]

TRAJECTORY_CSV_FORMAT = "zenosim-trajectory-csv/1"
SCAN_CSV_FORMAT = "zenosim-scan-csv/1"

# Every config key, with its default. Unknown keys are rejected so typos
# fail loudly instead of silently running defaults.
DEFAULT_CONFIG = {
    "output": {
        "directory": ".",
        "stem": "zenosim",
    },
    "protocol": {
        "beta": 0.025,
        "phi2": 2 * pi,
        "phi1": 0.0,
        "engine": "piecewise",      # piecewise | lindblad
        "frame": "dressed",
        "n_max": 80,
        "sub_samples": 20,
        "omega_rabi": 1.0,
        "drive_ratio": 0.005,
        "initial": "fock:0",        # fock:<n> or bloch:<theta>,<phi>
    },
    "sweep": {
        "beta_grid": list(SMOKE_BETA_GRID),
        "phi2_grid": list(SMOKE_PHI2_GRID),
        "phi1_grid": [0.0],
        "two_pulse": False,         # True swaps in the smoke phi1 grid
        "pair_convention": None,    # preset name or [theta, phi]
        "engine": "piecewise",
        "n_max": SMOKE_N_MAX,
        "sub_samples": SMOKE_SUB_SAMPLES,
        "frame": "dressed",
        "omega_rabi": 1.0,
        "drive_ratio": 0.005,
        "jobs": 1,
    },
    "scan": {
        "beta": 0.025,
        "phi2": 4 * pi,
        "theta_points": 11,
        "phi_points": 16,
        "n_max": 115,
        "sub_samples": 12,
        "frame": "dressed",
        "omega_rabi": 1.0,
        "drive_ratio": 0.005,
    },
}


class ConfigError(ValueError):
    """The configuration file is missing, malformed, or has unknown keys."""


def load_config(path: str | None) -> dict:
    """Read a JSON config and merge it over the defaults.

    Precedence (weakest first): built-in defaults, ZENOSIM_OUTPUT_DIR,
    the config file, command-line flags (applied by resolve_config).
    """
    merged = copy.deepcopy(DEFAULT_CONFIG)
    env_dir = os.environ.get("ZENOSIM_OUTPUT_DIR")
    if env_dir:
        merged["output"]["directory"] = env_dir
    if path is None:
        return merged
    try:
        with open(path) as handle:
            user = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    for section, values in user.items():
        if section not in merged:
            raise ConfigError(f"unknown config section {section!r}; "
                              f"sections: {sorted(merged)}")
        if not isinstance(values, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        for key, value in values.items():
            if key not in merged[section]:
                raise ConfigError(
                    f"unknown config key {section}.{key}; "
                    f"keys: {sorted(merged[section])}")
            merged[section][key] = value
    return merged


def resolve_config(args: argparse.Namespace) -> dict:
    """Load the config file and apply flag overrides (flags win)."""
    config = load_config(getattr(args, "config", None))
    for flag, (section, key) in _FLAG_TARGETS.items():
        value = getattr(args, flag, None)
        if value is not None:
            config[section][key] = value
    return config


_FLAG_TARGETS = {
    "directory": ("output", "directory"),
    "stem": ("output", "stem"),
    "beta": ("protocol", "beta"),
    "phi2": ("protocol", "phi2"),
    "phi1": ("protocol", "phi1"),
    "engine": ("protocol", "engine"),
    "frame": ("protocol", "frame"),
    "n_max": ("protocol", "n_max"),
    "sub_samples": ("protocol", "sub_samples"),
    "initial": ("protocol", "initial"),
    "sweep_engine": ("sweep", "engine"),
    "sweep_n_max": ("sweep", "n_max"),
    "sweep_sub_samples": ("sweep", "sub_samples"),
    "pair": ("sweep", "pair_convention"),
    "two_pulse": ("sweep", "two_pulse"),
    "jobs": ("sweep", "jobs"),
    "scan_beta": ("scan", "beta"),
    "scan_phi2": ("scan", "phi2"),
}


def _fmt(value: float) -> str:
    return "" if isnan(value) else format(float(value), ".12g")


def _out_path(config: dict, suffix: str) -> str:
    return os.path.join(config["output"]["directory"],
                        f"{config['output']['stem']}_{suffix}")


def _parse_initial(text: str, space: SpaceConfig):
    kind, _, rest = str(text).partition(":")
    try:
        if kind == "fock":
            return fock_state(int(rest), space)
        if kind == "bloch":
            theta, phi = (float(v) for v in rest.split(","))
            return bloch_state(BlochAngles(theta, phi), space)
    except ValueError as exc:
        raise ConfigError(f"bad initial state {text!r}: {exc}") from exc
    raise ConfigError(f"initial must be 'fock:<n>' or 'bloch:<theta>,<phi>', "
                      f"got {text!r}")


def _warn_addressability(omega_rabi: float, tau: float, levels) -> None:
    for level in sorted(levels):
        margin = addressability_margin(omega_rabi, level, tau)
        if margin < ADDRESSABILITY_WARN_BELOW:
            print(f"warning: level-{level} pulse window gives addressability "
                  f"margin {margin:.3g} (< {ADDRESSABILITY_WARN_BELOW:g}); "
                  f"a real pulse this long cannot resolve the dressed "
                  f"splitting", file=sys.stderr)


def _write_trajectory_csv(trajectory, resolved_line: str, path: str) -> None:
    buffer = io.StringIO()
    buffer.write(f"# {TRAJECTORY_CSV_FORMAT}\n")
    buffer.write(f"# {resolved_line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    levels = list(range(trajectory.populations.shape[1]))
    writer.writerow(["time", "S_L", "P_escape"]
                    + [f"P_{n}" for n in levels] + ["boundary"])
    boundaries = set(int(i) for i in trajectory.boundary_indices)
    for i, t in enumerate(trajectory.times):
        writer.writerow([_fmt(t), _fmt(trajectory.linear_entropy[i]),
                         _fmt(trajectory.escape_population[i])]
                        + [_fmt(p) for p in trajectory.populations[i]]
                        + [int(i in boundaries)])
    with open(path, "w", newline="") as handle:
        handle.write(buffer.getvalue())


def cmd_simulate(config: dict) -> int:
    """Run one protocol realization and persist its trajectory."""
    section = config["protocol"]
    angles = {2: float(section["phi2"])}
    if float(section["phi1"]) != 0.0:
        angles[1] = float(section["phi1"])
    space = SpaceConfig(n_max=int(section["n_max"]))
    initial = _parse_initial(section["initial"], space)
    schedule = derive_schedule(float(section["beta"]), angles,
                               omega_rabi=float(section["omega_rabi"]),
                               drive_ratio=float(section["drive_ratio"]))
    _warn_addressability(float(section["omega_rabi"]), schedule.tau,
                         [p.level for p in schedule.pulses])
    if section["engine"] == "piecewise":
        spec = ProtocolSpec.build(
            beta=float(section["beta"]), rabi_angles=angles,
            n_max=int(section["n_max"]),
            sub_samples=int(section["sub_samples"]),
            frame=section["frame"], omega_rabi=float(section["omega_rabi"]),
            drive_ratio=float(section["drive_ratio"]),
            initial_state=DensityOperator.from_ket(initial), escape_level=2)
        trajectory = run_piecewise(spec, store_states="none")
    elif section["engine"] == "lindblad":
        if 1 in angles:
            raise ConfigError("the lindblad engine models the level-2 pulse "
                              "only; set phi1 = 0")
        params = LindbladParams.from_angle(
            float(section["phi2"]), schedule.tau, level=2,
            drive_amplitude=schedule.drive_amplitude)
        trajectory = propagate_lindblad(
            DensityOperator.from_ket(initial), params,
            schedule.intervals * schedule.tau,
            samples=schedule.intervals, store_states="none")
    else:
        raise ConfigError(f"protocol.engine must be piecewise or lindblad, "
                          f"got {section['engine']!r}")
    resolved = " ".join(f"{k}={section[k]}" for k in sorted(section))
    path = _out_path(config, "trajectory.csv")
    _write_trajectory_csv(trajectory, resolved, path)
    print(f"wrote {path} ({trajectory.times.shape[0]} samples)")
    print(f"final S_L = {_fmt(trajectory.linear_entropy[-1])}")
    print(f"final P_escape = {_fmt(trajectory.escape_population[-1])}")
    return 0


def _sweep_spec_from(config: dict) -> SweepSpec:
    section = config["sweep"]
    phi1_grid = section["phi1_grid"]
    if section["two_pulse"] and tuple(phi1_grid) == (0.0,):
        phi1_grid = list(SMOKE_PHI1_GRID)
    pair = section["pair_convention"]
    if isinstance(pair, (list, tuple)):
        pair = BlochAngles(float(pair[0]), float(pair[1]))
    return SweepSpec(beta_grid=tuple(section["beta_grid"]),
                     phi2_grid=tuple(section["phi2_grid"]),
                     phi1_grid=tuple(phi1_grid),
                     pair_convention=pair, engine=section["engine"],
                     output_path=_out_path(config, "sweep.csv"),
                     n_max=int(section["n_max"]),
                     sub_samples=int(section["sub_samples"]),
                     frame=section["frame"],
                     drive_ratio=float(section["drive_ratio"]),
                     omega_rabi=float(section["omega_rabi"]))


def cmd_sweep(config: dict) -> int:
    """Run a grid sweep; write CSV, manifest, and a plot script."""
    spec = _sweep_spec_from(config)
    jobs = int(config["sweep"]["jobs"])
    tau = min(spec.beta_grid) / (spec.drive_ratio * spec.omega_rabi)
    levels = (1, 2) if config["sweep"]["two_pulse"] else (2,)
    _warn_addressability(spec.omega_rabi, tau, levels)
    if config["sweep"]["two_pulse"]:
        result = sweep_two_pulse(spec, jobs=jobs)
    else:
        result = sweep_single_pulse(spec, jobs=jobs)
    write_results(result, spec.output_path)
    manifest_path = _out_path(config, "manifest.json")
    write_manifest(result, manifest_path, config=config)
    plot_path = _out_path(config, "plot.py")
    emit_plot_script(result, plot_path)
    print(f"wrote {spec.output_path} ({len(result.rows)} rows, "
          f"{result.error_count} errors)")
    print(f"wrote {manifest_path}")
    print(f"wrote {plot_path}")
    for point in result.turning_points:
        print(f"turning point beta={_fmt(point.beta)} "
              f"phi2={_fmt(point.phi2)}: phi1={_fmt(point.phi1_opt)} "
              f"S_L={_fmt(point.entropy_max)}")
    return 0


def cmd_compare(config: dict) -> int:
    """Difference the piecewise and master-equation engines on a grid."""
    section = config["sweep"]
    spec = _sweep_spec_from(config)
    if tuple(spec.phi1_grid) != (0.0,):
        raise ConfigError("engine comparison needs sweep.phi1_grid == [0]")
    comparison = compare_engines(spec, jobs=int(section["jobs"]))
    path = _out_path(config, "compare.csv")
    write_results(comparison, path)
    manifest_path = _out_path(config, "compare_manifest.json")
    write_manifest(comparison, manifest_path, config=config)
    deltas = [abs(row.delta_entropy) for row in comparison.rows
              if not row.error]
    print(f"wrote {path} ({len(comparison.rows)} rows, "
          f"{comparison.error_count} errors)")
    print(f"wrote {manifest_path}")
    if deltas:
        print(f"max |delta S_L| = {_fmt(max(deltas))}")
    print(f"correlation(|delta S_L|, phi2*beta) = "
          f"{_fmt(comparison.correlation)}")
    return 0


def cmd_scan_bloch(config: dict) -> int:
    """Map the memory witness over protected-sphere initial states."""
    section = config["scan"]
    spec = ProtocolSpec.build(
        beta=float(section["beta"]), rabi_angles={2: float(section["phi2"])},
        n_max=int(section["n_max"]), sub_samples=int(section["sub_samples"]),
        frame=section["frame"], omega_rabi=float(section["omega_rabi"]),
        drive_ratio=float(section["drive_ratio"]), escape_level=2)
    _warn_addressability(float(section["omega_rabi"]), spec.tau, [2])
    theta_grid = np.linspace(0.0, pi, int(section["theta_points"]))
    phi_grid = np.linspace(0.0, 2 * pi, int(section["phi_points"]),
                           endpoint=False)
    scan = bloch_scan(spec, theta_grid, phi_grid)
    buffer = io.StringIO()
    buffer.write(f"# {SCAN_CSV_FORMAT}\n")
    buffer.write("# " + " ".join(f"{k}={section[k]}"
                                 for k in sorted(section)) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["theta", "phi", "N_BLP"])
    for i, theta in enumerate(scan.theta_grid):
        for j, phi in enumerate(scan.phi_grid):
            writer.writerow([_fmt(theta), _fmt(phi), _fmt(scan.values[i, j])])
    path = _out_path(config, "bloch.csv")
    with open(path, "w", newline="") as handle:
        handle.write(buffer.getvalue())
    best, worst = scan.argmax(), scan.argmin()
    print(f"wrote {path} ({scan.values.size} points)")
    print(f"max N_BLP = {_fmt(float(scan.values.max()))} at "
          f"theta={_fmt(best.theta)} phi={_fmt(best.phi)}")
    print(f"min N_BLP = {_fmt(float(scan.values.min()))} at "
          f"theta={_fmt(worst.theta)} phi={_fmt(worst.phi)}")
    return 0


def cmd_rates(phi: float) -> int:
    """Print the coarse-grained rate coefficients of one pulse angle."""
    rates = rates_from_angle(phi)
    print(f"pulse angle phi = {_fmt(phi)}")
    print(f"gamma_A      (transfer z -> z-1)      = {_fmt(rates.transfer)}")
    print(f"gamma_Pi*    (partial dephasing)      = "
          f"{_fmt(rates.dephasing_partial)}")
    print(f"gamma_Pi     (total dephasing of z)   = {_fmt(rates.dephasing)}")
    print("multiply by kappa = 1/tau for physical rates")
    return 0


def cmd_defaults() -> int:
    """Print every config key with its default value."""
    print(json.dumps(DEFAULT_CONFIG, indent=2, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenosim",
        description="Measurement-engineered oscillator dynamics: exact "
                    "piecewise protocol, coarse-grained master equation, "
                    "and reproducible parameter sweeps.")
    parser.add_argument("--version", action="version",
                        version=f"zenosim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--dir", dest="directory", help="output directory")
        p.add_argument("--stem", help="output filename stem")

    p = sub.add_parser("simulate", help="run one protocol realization")
    add_common(p)
    p.add_argument("--beta", type=float, help="displacement per interval")
    p.add_argument("--phi2", type=float, help="level-2 pulse angle")
    p.add_argument("--phi1", type=float, help="level-1 pulse angle")
    p.add_argument("--engine", choices=("piecewise", "lindblad"))
    p.add_argument("--frame", choices=("resonant", "literal", "dressed"))
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--sub-samples", dest="sub_samples", type=int)
    p.add_argument("--initial", help="fock:<n> or bloch:<theta>,<phi>")

    p = sub.add_parser("sweep", help="grid sweep with CSV/manifest output")
    add_common(p)
    p.add_argument("--two-pulse", dest="two_pulse", action="store_const",
                   const=True, help="sweep the phi1 grid as well")
    p.add_argument("--engine", dest="sweep_engine",
                   choices=("piecewise", "lindblad", "both"))
    p.add_argument("--pair", help="witness pair preset (ground | plus)")
    p.add_argument("--n-max", dest="sweep_n_max", type=int)
    p.add_argument("--sub-samples", dest="sweep_sub_samples", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")

    p = sub.add_parser("compare", help="piecewise vs master equation")
    add_common(p)
    p.add_argument("--n-max", dest="sweep_n_max", type=int)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("scan-bloch", help="witness over initial states")
    add_common(p)
    p.add_argument("--beta", dest="scan_beta", type=float)
    p.add_argument("--phi2", dest="scan_phi2", type=float)

    p = sub.add_parser("rates", help="rate coefficients of a pulse angle")
    p.add_argument("phi", type=float, help="pulse angle in radians")

    sub.add_parser("defaults", help="print the full default configuration")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "rates":
            return cmd_rates(args.phi)
        if args.command == "defaults":
            return cmd_defaults()
        config = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "compare":
            return cmd_compare(config)
        if args.command == "scan-bloch":
            return cmd_scan_bloch(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TruncationError, InvariantError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
