"""Command line: ``rotlimit <subcommand> --config FILE --out DIR``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 convergence check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fieldio
from .config import ConfigError, RunConfig, load_config
from .euler import PositivityError, integrate
from .plots import emit_plots, load_summary
from .runner import (build_initial_data, eps_tag, read_csv, run_decay, run_sweep,
                     sweep_checks, write_csv)
from .target import target_integrate

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("rotlimit")


def _config(args) -> RunConfig:
    overrides = {"seed": args.seed}
    if args.config is None:
        return RunConfig(**{k: v for k, v in overrides.items() if v is not None})
    return load_config(args.config, **overrides)


def _out(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.out)


def cmd_gen_data(args):
    cfg = _config(args)
    out = _out(args, cfg)
    for eps in cfg.epsilons:
        init = build_initial_data(cfg, eps)
        d = out / eps_tag(eps)
        fieldio.save_fields(d / "initial", cfg.grid, {"rho": init.state.rho, "mom": init.state.mom},
                            0.0, {"epsilon": eps, "family": cfg.family})
        if init.decomposition is not None:
            dec = init.decomposition
            fieldio.save_fields(d / "decomposition_h", cfg.grid.horizontal(),
                                {"q0_delta": dec.q0_delta, "v0_delta": dec.v0_delta})
            fieldio.save_fields(d / "decomposition", cfg.grid,
                                {"s0_delta": dec.s0_delta, "V0_delta": dec.V0_delta})
        print(f"wrote initial data for epsilon={eps:g} to {d}")
    return EXIT_OK


def cmd_run_euler(args):
    cfg = _config(args)
    out = _out(args, cfg)
    for eps in cfg.epsilons:
        init = build_initial_data(cfg, eps)
        d = out / eps_tag(eps)
        try:
            traj = integrate(init.state, cfg.t_end, cfg.params(eps), cfl=cfg.cfl,
                             sample_interval=cfg.sample_interval, symmetry=cfg.symmetry,
                             hyperviscosity=cfg.hyperviscosity, keep_snapshots=False)
        except PositivityError as exc:
            if exc.snapshot is not None:
                s = exc.snapshot
                fieldio.save_fields(d / "abort_snapshot", cfg.grid, {"rho": s.rho, "mom": s.mom},
                                    s.time, {"error": str(exc)})
            print(f"numerical abort at epsilon={eps:g}: {exc}", file=sys.stderr)
            return EXIT_ABORT
        write_csv(d / "monitors.csv", traj.monitors)
        fin = traj.final
        fieldio.save_fields(d / "euler_final", cfg.grid, {"rho": fin.rho, "mom": fin.mom}, fin.time)
        m = traj.monitors
        print(f"epsilon={eps:g}: {traj.steps} steps, mass drift "
              f"{abs(m['mass'][-1] - m['mass'][0]):.2e}, energy defect {m['defect'][-1]:.3e}")
    return EXIT_OK


def cmd_run_target(args):
    cfg = _config(args)
    out = _out(args, cfg)
    eps = cfg.epsilons[0]
    init = build_initial_data(cfg, eps)
    tr = target_integrate(init.target, cfg.t_end, cfg.params(eps), cfl=cfg.cfl,
                          sample_interval=cfg.sample_interval, keep_snapshots=False)
    write_csv(out / "target" / "target.csv", tr.monitors)
    fin = tr.final
    fieldio.save_fields(out / "target" / "target_final", cfg.grid.horizontal(),
                        {"q": fin.q, "omega": fin.omega}, fin.time)
    e = tr.monitors["energy"]
    drift = abs(e[-1] / e[0] - 1) if e[0] else 0.0
    print(f"target: {tr.steps} steps, relative energy drift {drift:.2e}")
    return EXIT_OK


def cmd_run_acoustic(args):
    cfg = _config(args)
    out = _out(args, cfg) / "acoustic"
    res = run_decay(cfg, out_dir=out)
    emit_plots(None, out.parent, decay=res["profile"])
    print(f"acoustic decay factor {res['factor']:.4g} over window {res['window']:.4g}")
    return EXIT_OK


def _print_checks(summary, checks):
    for e, v in zip(summary.epsilons, summary.final_E):
        print(f"epsilon={e:<8g} final_E={v:.6e}")
    if summary.rate is not None:
        print(f"fitted rate p={summary.rate:.4f}  C={summary.constant:.4e}")
    if summary.ratios is not None:
        print("corrected/uncorrected ratios: " + ", ".join(f"{r:.3e}" for r in summary.ratios))
    for name, ok in checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")


def cmd_sweep(args):
    cfg = _config(args)
    out = _out(args, cfg)
    summary = run_sweep(cfg, jobs=args.jobs, out=out)
    emit_plots(summary, out)
    checks = sweep_checks(summary)
    _print_checks(summary, checks)
    if summary.failed:
        for k, err in summary.errors.items():
            print(f"{k}: {err}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK if all(checks.values()) else EXIT_CHECK


def cmd_report(args):
    out = Path(args.out or (load_config(args.config).out if args.config else "out"))
    summary = load_summary(out)
    decay_csv = out / "acoustic" / "acoustic_decay.csv"
    decay = read_csv(decay_csv) if decay_csv.exists() else None
    written = emit_plots(summary, out, decay=decay)
    if not written:
        print(f"warning: no sweep or decay artifacts under {out}", file=sys.stderr)
        return EXIT_OK
    if summary is not None:
        _print_checks(summary, sweep_checks(summary))
    if decay is not None:
        info = out / "acoustic" / "decay.json"
        if info.exists():
            print(f"acoustic decay factor {json.loads(info.read_text())['decay_factor']:.4g}")
    for p in written:
        print(p)
    return EXIT_OK


COMMANDS = {
    "gen-data": (cmd_gen_data, "build initial data and dump it in the binary field format"),
    "run-euler": (cmd_run_euler, "integrate the compressible system and write monitors"),
    "run-target": (cmd_run_target, "integrate the limit system"),
    "run-acoustic": (cmd_run_acoustic, "propagate the acoustic part and measure local decay"),
    "sweep": (cmd_sweep, "epsilon sweep with convergence-rate fit"),
    "report": (cmd_report, "regenerate figures and print a finished sweep's summary"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep members")
    common.add_argument("--seed", type=int, help="seed for randomized data families")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="rotlimit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
