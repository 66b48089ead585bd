"""Command-line front end.

    xxzbound spectrum|evolve|wstate [--config FILE] [--set key=value ...] [--out DIR]
    xxzbound verify [--filter GROUP ...]
    xxzbound verify-selfenergy [--e-min E] [--e-max E] [--points K]

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 numerical failure (or escalated accuracy warning under --strict).
"""
from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import boundstates, checks, config, evolution, output, selfenergy
from .errors import AccuracyWarning, ConfigurationError, DomainError, NumericalError

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
ORACLE_TOL = 1e-3


class StrictAccuracyError(NumericalError):
    pass


def _run_dir(cfg, command):
    return Path(cfg.output["directory"]) / f"{command}-{cfg.digest(command)}"


def _write_config(cfg, directory):
    output.atomic_write(Path(directory) / "config.json", output.json_text(cfg.to_dict()))


def run_spectrum(cfg, strict=False):
    report = boundstates.find_bound_states(cfg.chain, cfg.reservoir,
                                           threshold=cfg.spectrum["classify_threshold"])
    d = _run_dir(cfg, "spectrum")
    _write_config(cfg, d)
    output.write_spectrum(report, cfg.chain.N, d, cfg.output["format"], cfg.output["precision"])
    if report.n_roots_found == 0:
        return f"{d}: no bound states"
    pseudo = report.count(boundstates.PSEUDO_BOUND)
    return (f"{d}: N={cfg.chain.N} n_roots={report.n_roots_found} pseudo={pseudo} "
            f"E0={output.fmt(report.states[0].E, cfg.output['precision'])}")


def run_wstate(cfg, strict=False):
    if not boundstates.is_periodic_uniform(cfg.chain):
        raise ConfigurationError("wstate needs a periodic chain with a uniform field")
    ch = cfg.chain
    rows = [(N, boundstates.solve_uniform_state(N, cfg.reservoir, J=ch.J, h0=ch.field.h0, U=ch.U))
            for N in cfg.wstate["N_list"]]
    d = _run_dir(cfg, "wstate")
    _write_config(cfg, d)
    output.write_wstate(rows, d, cfg.output["format"], cfg.output["precision"])
    missing = [str(N) for N, st in rows if st is None]
    msg = f"{d}: {len(rows)} rows"
    if missing:
        msg += f" (no bound state for N={','.join(missing)})"
    return msg


def run_evolve(cfg, strict=False):
    e = cfg.evolve
    p = cfg.output["precision"]
    d = _run_dir(cfg, "evolve")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        traj = evolution.evolve_volterra(cfg.chain, cfg.reservoir, cfg.init, e["t_max"], e["h"],
                                         memory_window=e["memory_window"],
                                         check_convergence=e["check_convergence"])
        oracle = None
        if e["oracle"]:
            oracle = evolution.evolve_discrete_bath(cfg.chain, cfg.reservoir, cfg.init, e["t_max"],
                                                    e["M"], e["omega_max"], h=e["h"])
            dev = float(np.max(np.abs(oracle.alpha - traj.alpha)))
            if dev > ORACLE_TOL:
                warnings.warn(f"oracle deviation {dev:.2e} exceeds {ORACLE_TOL}", AccuracyWarning)
    messages = [str(w.message) for w in caught if issubclass(w.category, AccuracyWarning)]
    if strict and messages:
        raise StrictAccuracyError("; ".join(messages))
    _write_config(cfg, d)
    fmt_kind = cfg.output["format"]
    if fmt_kind in ("csv", "both"):
        output.write_trajectory(traj, d / "trajectory.csv", p, e["amplitudes"])
        if oracle is not None:
            output.write_trajectory(oracle, d / "trajectory_oracle.csv", p, e["amplitudes"])
    if fmt_kind in ("json", "both"):
        output.atomic_write(d / "trajectory.json", output.json_text(output.trajectory_dict(traj, p)))
        if oracle is not None:
            output.atomic_write(d / "trajectory_oracle.json",
                                output.json_text(output.trajectory_dict(oracle, p)))
    msg = f"{d}: {traj.times.size} steps, final spin_norm={output.fmt(traj.spin_norm[-1], p)}"
    if oracle is not None:
        msg += f", oracle max deviation={dev:.3e}"
    for m in messages:
        msg += f"\nwarning: {m}"
    return msg


RUNNERS = {"spectrum": run_spectrum, "wstate": run_wstate, "evolve": run_evolve}


def _dispatch(command, cfgs, workers, strict):
    runner = RUNNERS[command]
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(runner, c, strict) for c in cfgs]
            return [f.result() for f in futures]
    return [runner(c, strict) for c in cfgs]


def _common(p):
    p.add_argument("--config", metavar="PATH", help="TOML or JSON run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. chain.N=14 (repeatable)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--workers", type=int, default=1, metavar="K", help="worker processes for sweeps")
    p.add_argument("--strict", action="store_true", help="treat accuracy warnings as failures")
    p.add_argument("--precision", type=int, metavar="D", help="significant digits in output")
    p.add_argument("--format", choices=config.FORMATS, help="output file format")


def build_parser():
    parser = argparse.ArgumentParser(prog="xxzbound",
                                     description="Bound states and dynamics of an XXZ chain "
                                                 "coupled to a bosonic reservoir")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in (("spectrum", "all bound states of one chain"),
                      ("evolve", "single-excitation dynamics"),
                      ("wstate", "uniform-state energy and reservoir weight for many N")):
        _common(sub.add_parser(name, help=hlp))
    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--filter", action="append", default=[], metavar="GROUP",
                   help="restrict to a check group (model, selfenergy, boundstates, evolution)")
    vs = sub.add_parser("verify-selfenergy", help="dump Sigma and K on an energy grid")
    _common(vs)
    vs.add_argument("--e-min", type=float, default=-100.0)
    vs.add_argument("--e-max", type=float, default=-1e-3)
    vs.add_argument("--points", type=int, default=60)
    return parser


def cmd_verify(args):
    groups = set(args.filter) or None
    unknown = (groups or set()) - {c.group for c in checks.CHECKS}
    if unknown:
        print(f"error: unknown check group(s) {sorted(unknown)}", file=sys.stderr)
        return EXIT_CONFIG
    results = checks.run(groups)
    print(checks.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


def cmd_verify_selfenergy(args, cfg):
    if not (args.e_min < args.e_max <= -selfenergy.EPS_E) or args.points < 2:
        raise ConfigurationError("need e_min < e_max <= -1e-6 and at least 2 points")
    Es = -np.logspace(np.log10(-args.e_min), np.log10(-args.e_max), args.points)
    rows = selfenergy.table(Es, cfg.reservoir)
    p = cfg.output["precision"]
    text = output.csv_text(["E", "sigma", "kappa"],
                           [[output.fmt(x, p) for x in row] for row in rows])
    path = output.atomic_write(Path(cfg.output["directory"]) / "selfenergy.csv", text)
    return f"{path}: {len(rows)} rows"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify(args)
    try:
        cfgs = config.build(args.config, args.overrides, directory=args.out,
                            precision=args.precision, format=args.format)
        if args.command == "verify-selfenergy":
            print(cmd_verify_selfenergy(args, cfgs[0]))
            return EXIT_OK
        for line in _dispatch(args.command, cfgs, max(1, args.workers), args.strict):
            print(line)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
