"""Command-line entry points.

Subcommands: run an experiment config, list fixtures, evaluate standalone
oracles, and rebuild a report (CSV summary + figures) from a trial log.
Exit codes: 0 all criteria pass, 1 any criterion fails, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, plots, qma, qsim, tcf
from .compiler import azuma_bound
from .harness import ConfigError, ExperimentConfig


def _print_summary(summary):
    for c in summary.criteria:
        flag = "PASS" if c.passed else "FAIL"
        print(f"[{flag}] {summary.experiment} :: {c.name}: "
              f"{c.value:.6g} {c.op} {c.bound:.6g}")
    print(f"{summary.experiment}: {'PASS' if summary.passed else 'FAIL'} "
          f"({summary.n_trials} records)")


def cmd_run(args) -> int:
    try:
        config = harness.load_config(args.config)
    except (OSError, ConfigError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.max_dim is not None:
        config.max_dim = args.max_dim
    names = (sorted(harness.EXPERIMENTS) if config.experiment == "all"
             else [config.experiment])
    all_pass = True
    for name in names:
        sub = ExperimentConfig(name, config.seed, config.trials,
                               config.out_dir, config.max_dim,
                               dict(config.params))
        summary, records = harness.run_experiment(sub)
        _print_summary(summary)
        if sub.out_dir:
            plots.render_report(name, summary, records, sub.out_dir)
        all_pass &= summary.passed
    return 0 if all_pass else 1


def cmd_list_fixtures(args) -> int:
    print("experiments:")
    for name in sorted(harness.EXPERIMENTS):
        print(f"  {name}")
    print("verifier fixtures:")
    for name, spec in harness.FIXTURES["verifiers"].items():
        print(f"  {name}: {spec}")
    print("graphs:")
    for name, g in harness.FIXTURES["graphs"].items():
        print(f"  {name}: |V|={g.num_vertices} |E|={len(g.edges)}")
    print("lattice parameter sets:")
    for name, p in harness.FIXTURES["lattice"].items():
        print(f"  {name}: n={p.n} m={p.m} q={p.q} B={p.B} B'={p.B_prime}")
    return 0


def cmd_oracle(args) -> int:
    name = args.name
    if name == "azuma":
        t = float(args.args[0])
        m = int(args.args[1])
        c = float(args.args[2]) if len(args.args) > 2 else 1.0
        print(repr(azuma_bound(t, [c] * m)))
        return 0
    if name == "acceptance":
        spectrum = [float(x) for x in args.args[0].split(",")]
        amps = np.array([complex(x) for x in args.args[1].split(",")])
        amps = amps / np.linalg.norm(amps)
        v = qma.diagonal_verifier(spectrum)
        state = qsim.StateVector(amps, [("wit", len(amps))])
        print(repr(harness.brute_force_acceptance(v, state)))
        return 0
    if name == "preimages":
        # preimages <r_bits> <seed> <y...>: ideal recovery-mode enumeration
        r_bits = int(args.args[0])
        seed = int(args.args[1])
        ys = [int(x) for x in args.args[2:]]
        kp = tcf.setup(tcf.TcfMode.RECOVERY, "ideal", qsim.make_rng(seed),
                       domain_bits=len(ys), r_bits=r_bits)
        pres = harness.exhaustive_preimage_oracle(kp, ys)
        print(json.dumps([[x, list(r)] for x, r in pres]))
        return 0
    if name == "gadget-radius":
        q, k = int(args.args[0]), int(args.args[1])
        print(tcf.gadget_decode_radius(q, k))
        return 0
    print(f"unknown oracle {name!r}; available: azuma, acceptance, "
          f"preimages, gadget-radius", file=sys.stderr)
    return 2


def cmd_report(args) -> int:
    try:
        summary, records = harness.recount_from_log(args.log)
    except (OSError, KeyError, ConfigError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out_dir = Path(args.out_dir or Path(args.log).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    harness.write_summary_csv(out_dir / f"{summary.experiment}_summary.csv",
                              summary)
    files = plots.render_report(summary.experiment, summary, records, out_dir)
    _print_summary(summary)
    for f in files:
        print(f"wrote {f}")
    return 0 if summary.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpcvqc",
        description="Witness-preserving CVQC simulation and verification suite")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--max-dim", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list-fixtures", help="list shipped fixtures")
    p_list.set_defaults(func=cmd_list_fixtures)

    p_oracle = sub.add_parser("oracle", help="evaluate a standalone oracle")
    p_oracle.add_argument("name")
    p_oracle.add_argument("args", nargs="*")
    p_oracle.set_defaults(func=cmd_oracle)

    p_report = sub.add_parser("report",
                              help="recount a trial log into CSV + figures")
    p_report.add_argument("log")
    p_report.add_argument("--out-dir", default=None)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
