"""Command line front end: scenario runs, config checks, wave and
limit tables.

Verbs: ``run <config>``, ``validate <config>``, ``list <dir>``,
``waves <kind>``, ``limits <config>``.  Exit codes: 0 success, 2 config
problem, 3 numerical failure (partial diagnostics are still written).
CSV cells carry 17 significant digits so doubles round-trip exactly;
figures are opt-in via ``--figures``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import (
    ScenarioConfig,
    build_datum,
    build_limits_datum,
    load_config,
    load_limits_config,
    validate_file,
)
from .convolution import KernelSpec
from .diagnostics import BumpTestFunction, diagnose, state_series
from .eulerian import TimeStepPolicy, blowup_report, evolve_smooth
from .grid import ConfigError, NumericsError
from .lagrangian import (
    CONSERVATIVE,
    DISSIPATIVE,
    evolve,
    init_lagrangian,
    lagrangian_energy,
    reconstruct_eulerian,
)
from .reference import limit_csv, limit_study
from .waves import (
    dissipation_rate,
    export_csv,
    half_period,
    sample_cuspon,
    sample_periodic_cuspon,
    sample_shock_layer,
)


def _say(args, message):
    if not args.quiet:
        print(message)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(cfg: ScenarioConfig, artifacts) -> dict:
    return {
        "name": cfg.name,
        "solver": cfg.solver,
        "ell": cfg.ell,
        "grid": {"n": cfg.n, "xmin": cfg.xmin, "xmax": cfg.xmax,
                 "boundary": cfg.boundary, "xi_n": cfg.xi_n},
        "config_sha256": cfg.sha256,
        "versions": {"regburgers": __version__,
                     "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "artifacts": sorted(artifacts),
    }


def _write_profiles(path: Path, times, states) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,u,u_x\n")
        for t, state in zip(times, states):
            ux = state.derivative().values
            for x, u, s in zip(state.xs, state.values, ux):
                fh.write(f"{t:.16e},{x:.16e},{u:.16e},{s:.16e}\n")


def _auto_bumps(times, xs):
    """One centered space-time bump when the run leaves room for it."""
    t0, t1 = float(times[0]), float(times[-1])
    if t1 - t0 <= 0.0 or len(times) < 5:
        return []
    return [BumpTestFunction(0.5 * (t0 + t1), 0.45 * (t1 - t0),
                             0.5 * (xs[0] + xs[-1]),
                             0.3 * (xs[-1] - xs[0]))]


def _run_eulerian(cfg: ScenarioConfig, datum):
    policy = TimeStepPolicy(cfl=cfg.cfl, max_steps=cfg.max_steps)
    traj = evolve_smooth(datum, KernelSpec(cfg.ell), cfg.t_end, policy,
                         output_times=list(cfg.output_times))
    extras = {}
    record = blowup_report(datum, traj)
    if record.detected:
        extras["blowup"] = {
            "t_estimate": record.t_estimate,
            "bracket_low": record.bracket_low,
            "bracket_high": record.bracket_high,
            "message": record.message,
        }
    return traj.times, list(traj.states), traj, None, extras


def _run_lagrangian(cfg: ScenarioConfig, datum):
    variant = (DISSIPATIVE if cfg.solver.endswith("dissipative")
               else CONSERVATIVE)
    state = init_lagrangian(datum, cfg.xi_n, cfg.ell, variant=variant)
    outputs = sorted(set(cfg.output_times) | {cfg.t_end}) \
        if cfg.output_times else [cfg.t_end]
    snaps = evolve(state, cfg.t_end, cfg.dt, output_times=outputs) \
        if cfg.t_end > 0.0 else [state]
    lo = max(np.max(np.maximum.accumulate(s.y)[0]) for s in snaps)
    hi = min(np.maximum.accumulate(s.y)[-1] for s in snaps)
    xs = datum.xs[(datum.xs >= lo) & (datum.xs <= hi)]
    states = [reconstruct_eulerian(s, xs)[0] for s in snaps]
    times = np.array([s.t for s in snaps])
    extras = {"modified_energy_lagrangian":
              [lagrangian_energy(s) for s in snaps]}
    if snaps[-1].tau is not None:
        taus = snaps[-1].tau[np.isfinite(snaps[-1].tau)]
        if taus.size:
            extras["first_crossing_time"] = float(np.min(taus))
            extras["crossed_cell_fraction"] = float(
                taus.size / snaps[-1].tau.size)
    modified = np.asarray(extras["modified_energy_lagrangian"])
    traj = state_series(times, states, cfg.ell)
    return times, states, traj, modified, extras


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.solver == "eulerian":
            times, states, traj, modified, extras = _run_eulerian(
                cfg, build_datum(cfg))
        else:
            times, states, traj, modified, extras = _run_lagrangian(
                cfg, build_datum(cfg))
    except NumericsError as exc:
        _write_json(out / "failure.json",
                    {"error": str(exc), "stage": "solver"})
        _write_json(out / "manifest.json",
                    _manifest(cfg, ["failure.json", "manifest.json"]))
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    artifacts = ["manifest.json", "profiles.csv", "diagnostics.json"]
    _write_profiles(out / "profiles.csv", times, states)

    bumps = _auto_bumps(times, states[0].xs) \
        if "weak_residuals" in cfg.diagnostics else []
    report = diagnose(traj, bumps, M=cfg.oleinik_m,
                      modified_energy=modified)
    payload = report.as_dict()
    if "total_variation" not in cfg.diagnostics:
        payload.pop("total_variation")
    if "oleinik" not in cfg.diagnostics:
        payload.pop("oleinik_margin")
    payload.update(extras)
    payload["solver"] = cfg.solver
    payload["ell"] = cfg.ell
    _write_json(out / "diagnostics.json", payload)

    if args.figures:
        from .figures import energy_figure, profile_figure
        profile_figure(times, states, out / "profiles.png")
        energy_figure(report, out / "energy.png")
        artifacts += ["profiles.png", "energy.png"]

    _write_json(out / "manifest.json", _manifest(cfg, artifacts))
    _say(args, f"wrote {', '.join(sorted(artifacts))} to {out}")
    return 0


def _cmd_validate(args) -> int:
    problems = validate_file(args.config)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    _say(args, f"{args.config}: OK")
    return 0


def _cmd_list(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        print(f"not a directory: {root}", file=sys.stderr)
        return 2
    names = []
    for path in sorted(root.glob("*.ini")):
        import configparser
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
            names.append(parser.get("scenario", "name",
                                    fallback=path.stem))
        except configparser.Error:
            names.append(path.stem)
    for name in names:
        print(name)
    return 0


def _build_wave(args):
    ell = args.ell
    if args.kind == "cuspon":
        span = min(half_period(args.u0, args.u0), 40.0) + 8.0
        grid = np.linspace(-span * ell, span * ell, args.n)
        return sample_cuspon(args.u0, ell, grid)
    if args.kind == "periodic":
        if args.u1 is None:
            raise ConfigError("periodic waves need --u1 above --u0")
        return sample_periodic_cuspon(args.u0, args.u1, ell)
    span = 8.0 * ell * max(1.0, abs(args.um), abs(args.up))
    grid = np.linspace(-span, span, args.n)
    return sample_shock_layer(args.um, args.up, ell, grid)


def _cmd_waves(args) -> int:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    wave = _build_wave(args)
    export_csv(wave, out / "wave.csv")
    payload = {
        "kind": wave.kind,
        "wave_class": wave.wave_class,
        "speed": wave.c,
        "ell": wave.ell,
        "S": wave.S,
        "F": wave.F if np.isscalar(wave.F) else list(wave.F),
        "period": wave.period,
        "junctions": list(wave.junctions),
        "flux_jumps": list(wave.jumps),
        "dissipation": float(-sum(wave.jumps)) if wave.jumps else 0.0,
    }
    if args.kind == "layer":
        payload["dissipation_rate"] = dissipation_rate(args.um, args.up)
    _write_json(out / "wave.json", payload)
    artifacts = ["wave.csv", "wave.json"]
    if args.figures:
        from .figures import wave_figure
        wave_figure(wave, out / "wave.png")
        artifacts.append("wave.png")
    _say(args, f"wrote {', '.join(artifacts)} to {out}")
    return 0


def _cmd_limits(args) -> int:
    cfg = load_limits_config(args.config)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datum = build_limits_datum(cfg)
    try:
        rows = limit_study(datum, list(cfg.ladder), cfg.t,
                           tuple(cfg.region), xi_count=cfg.xi_n,
                           dt=cfg.dt, threads=args.threads)
    except NumericsError as exc:
        _write_json(out / "failure.json",
                    {"error": str(exc), "stage": "limit_study"})
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    limit_csv(rows, out / "limits.csv")
    manifest = {
        "name": cfg.name,
        "ladder": list(cfg.ladder),
        "t": cfg.t,
        "region": list(cfg.region),
        "grid": {"n": cfg.n, "xmin": cfg.xmin, "xmax": cfg.xmax,
                 "xi_n": cfg.xi_n},
        "config_sha256": cfg.sha256,
        "versions": {"regburgers": __version__,
                     "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "artifacts": ["limits.csv", "manifest.json"],
    }
    if args.figures:
        from .figures import limits_figure
        limits_figure(rows, out / "limits.png")
        manifest["artifacts"].append("limits.png")
    _write_json(out / "manifest.json", manifest)
    _say(args, f"wrote limits.csv to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regburgers",
        description="Scenario runner for the nonlocally regularised "
                    "Burgers model.")
    parser.add_argument("--version", action="version",
                        version=f"regburgers {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for ladder rungs")
        p.add_argument("--quiet", action="store_true",
                       help="suppress status messages")
        p.add_argument("--figures", action="store_true",
                       help="also render PNG figures")

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config, touch nothing")
    p_val.add_argument("config")
    common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser("list", help="scenario names in a directory")
    p_list.add_argument("directory")
    common(p_list)
    p_list.set_defaults(func=_cmd_list)

    p_wave = sub.add_parser("waves", help="tabulate a traveling wave")
    p_wave.add_argument("kind", choices=("cuspon", "periodic", "layer"))
    p_wave.add_argument("--u0", type=float, default=1.0,
                        help="cuspon peak (cuspon, periodic)")
    p_wave.add_argument("--u1", type=float, default=None,
                        help="upper root for periodic waves")
    p_wave.add_argument("--um", type=float, default=1.0,
                        help="left state for layers")
    p_wave.add_argument("--up", type=float, default=-1.0,
                        help="right state for layers")
    p_wave.add_argument("--ell", type=float, default=1.0)
    p_wave.add_argument("--n", type=int, default=2001,
                        help="sample count for generated grids")
    common(p_wave)
    p_wave.set_defaults(func=_cmd_waves)

    p_lim = sub.add_parser("limits", help="run a width-ladder study")
    p_lim.add_argument("config")
    common(p_lim)
    p_lim.set_defaults(func=_cmd_limits)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
