"""Command-line front end.

Exit codes: 0 ok, 1 config error, 2 validation failure, 3 numerical failure.
Failures print one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import oracle
from .config import ExperimentConfig, example1_text, load_config, parse_config
from .errors import (ConfigError, Diverged, DimensionMismatch, NotConverged, NotPSD,
                     SingularGain, SingularInnerMatrix, TooLarge)
from .gains import compute_gains, consensus_coefficients
from .model import NoiseModel, validate
from .riccati import solve
from .sim import (augmented_sequence, deviation_residual, evaluate_cost_decomposed,
                  evaluate_cost_direct, simulate)

log = logging.getLogger("mflqr")

ORACLE_TOL = 1e-8
ORACLE_T = 20


class _Exit(Exception):
    def __init__(self, code, payload):
        self.code = code
        self.payload = payload


def _fail(code, error, **info):
    raise _Exit(code, {"error": error, **info})


def _load(args) -> ExperimentConfig:
    if args.config is None:
        _fail(1, "config", message="--config is required for this subcommand")
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        _fail(1, "config", message=str(exc))
    return _override(cfg, args)


def _override(cfg, args):
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(cfg, args) -> Path:
    path = Path(args.out or cfg.out_dir or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _validated(cfg):
    report = validate(cfg.model, cfg.cost)
    if not report.ok:
        bad = report.failures[0]
        _fail(2, "validation", check=bad.name, witness=str(bad.witness),
              failed=[c.name for c in report.failures])
    return report


def _solve(cfg):
    _validated(cfg)
    sol = solve(cfg.model, cfg.cost)
    log.info("riccati solved: dims=%s", sol.solver_dims)
    return sol, compute_gains(sol, cfg.model, cfg.cost)


def _horizon(cfg):
    return cfg.T if cfg.T is not None else 80


def cmd_validate(cfg, args):
    report = validate(cfg.model, cfg.cost)
    print(report)
    if not report.ok:
        bad = report.failures[0]
        _fail(2, "validation", check=bad.name, witness=str(bad.witness),
              failed=[c.name for c in report.failures])
    return 0


def _consensus_table(g, n):
    rows = []
    for t in g.times():
        entry = {"t": t}
        try:
            cf = consensus_coefficients(g, n, [t])
        except SingularGain as exc:
            entry["singular"] = exc.which
            rows.append(entry)
            continue
        for name in ("alpha", "beta_c", "gamma", "mu", "lam"):
            arr = getattr(cf, name)
            entry[name] = None if arr is None else arr[0].tolist()
        rows.append(entry)
    return {"n": n, "steps": rows}


def cmd_gains(cfg, args):
    sol, g = _solve(cfg)
    out = _out_dir(cfg, args)
    (out / "gains.json").write_text(json.dumps(g.to_dict(), indent=1))
    written = ["gains.json"]
    if cfg.consensus_form or args.consensus:
        (out / "consensus.json").write_text(json.dumps(_consensus_table(g, cfg.n), indent=1))
        written.append("consensus.json")
    print(json.dumps({"written": written, "solver_dims": list(sol.solver_dims)}))
    return 0


def _run_one(cfg, g, T, seed):
    trace = simulate(cfg.model, g, T, seed=seed, cost=cfg.cost)
    direct = evaluate_cost_direct(trace, cfg.cost)
    decomposed = evaluate_cost_decomposed(trace, cfg.cost, augmented_sequence(cfg.model, cfg.cost, T)
                                          if cfg.cost.time_varying or cfg.model.time_varying else None)
    return trace, {
        "seed": seed,
        "cost_direct": direct,
        "cost_decomposed": decomposed,
        "relative_gap": abs(direct - decomposed) / max(abs(direct), 1e-300),
        "deviation_residual": deviation_residual(trace, cfg.model),
        "initial_mean_abs_dev": float(trace.mean_abs_dev[0]),
        "terminal_mean_abs_dev": float(trace.mean_abs_dev[T - 1]),
    }


def cmd_simulate(cfg, args):
    _, g = _solve(cfg)
    out = _out_dir(cfg, args)
    T = args.T or _horizon(cfg)
    summaries = []
    for k in range(cfg.num_runs):
        seed = cfg.seed + k
        trace, summary = _run_one(cfg, g, T, seed)
        stem = "trace" if cfg.num_runs == 1 else f"trace_run{k}"
        (out / f"{stem}.csv").write_text(trace.to_csv())
        if args.followers:
            (out / f"{stem}_followers.csv").write_text(trace.followers_csv())
        if args.json:
            (out / f"{stem}.json").write_text(trace.to_json())
        summaries.append(summary)
        print(json.dumps(summary))
    return 0


def oracle_check(cfg, n_small, T_small=ORACLE_T):
    """Max gain deviation between the centralized solution and the assembled
    per-agent strategies on a copy of ``cfg`` with ``n_small`` followers."""
    model = replace(cfg.model, n=n_small)
    cost = cfg.cost
    if cost.T is not None and not (model.time_varying or cost.time_varying):
        cost = replace(cost, T=min(cost.T, T_small))
    sol = solve(model, cost)
    g = compute_gains(sol, model, cost)
    cp = oracle.build_centralized(model, cost, n_small)
    K = oracle.solve_centralized(cp, cost.T, cost.beta)
    return oracle.compare(K, oracle.assemble_meanfield_as_centralized(g, n_small))


def cmd_oracle_check(cfg, args):
    _validated(cfg)
    n_small = args.n or cfg.oracle_n or 3
    dev = oracle_check(cfg, n_small)
    print(json.dumps({"n": n_small, "max_deviation": dev, "tolerance": ORACLE_TOL}))
    if not dev < ORACLE_TOL:
        _fail(3, "oracle-mismatch", max_deviation=dev)
    return 0


def cmd_reproduce(cfg, args):
    infinite = args.infinite
    cfg = _override(parse_config(example1_text(infinite)), args)
    out = _out_dir(cfg, args)
    tag = "infinite" if infinite else "finite"
    _, g = _solve(cfg)
    T = 80
    quiet = replace(cfg.model, noise=NoiseModel.noiseless(cfg.model.d_x, cfg.seed))
    runs = [("", cfg), ("_noiseless", replace(cfg, model=quiet))]
    for suffix, c in runs:
        trace, summary = _run_one(c, g, T, c.seed)
        stem = f"example1_{tag}{suffix}"
        (out / f"{stem}_trace.csv").write_text(trace.to_csv())
        (out / f"{stem}_followers.csv").write_text(trace.followers_csv())
        summary["run"] = stem
        summary["ratio"] = summary["terminal_mean_abs_dev"] / summary["initial_mean_abs_dev"]
        print(json.dumps(summary))
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "gains": cmd_gains,
    "simulate": cmd_simulate,
    "oracle-check": cmd_oracle_check,
    "reproduce-example1": cmd_reproduce,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="experiment JSON")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    parser = argparse.ArgumentParser(prog="mflqr", parents=[common],
                                     description="Leader-follower mean-field LQ control")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check model assumptions")
    p = sub.add_parser("gains", parents=[common], help="write the gain schedule")
    p.add_argument("--consensus", action="store_true", help="also write consensus coefficients")
    p = sub.add_parser("simulate", parents=[common], help="closed-loop simulation")
    p.add_argument("--T", type=int, default=None, help="rollout length (infinite horizon default 80)")
    p.add_argument("--followers", action="store_true", help="also write per-follower CSV")
    p.add_argument("--json", action="store_true", help="also write the full trace as JSON")
    p = sub.add_parser("oracle-check", parents=[common], help="compare against centralized LQR")
    p.add_argument("--n", type=int, default=None, help="follower count for the check")
    p = sub.add_parser("reproduce-example1", parents=[common], help="figure data for the bundled example")
    p.add_argument("--infinite", action="store_true")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MFLQR_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    for name in ("config", "seed", "out"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            _fail(1, "config", message="--seed must be an unsigned 64-bit integer")
        cfg = None if args.command == "reproduce-example1" else _load(args)
        return COMMANDS[args.command](cfg, args)
    except _Exit as exc:
        print(json.dumps(exc.payload), file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(json.dumps({"error": "config", "pointer": exc.pointer or "/", "message": exc.message}),
              file=sys.stderr)
        return 1
    except (DimensionMismatch, NotPSD) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 1
    except (NotConverged, Diverged, SingularInnerMatrix, TooLarge, FloatingPointError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
