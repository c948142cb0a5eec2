"""Command line interface.

Subcommands:
  run     one paired exact-vs-gated run -> per-frame CSV + JSON summary
  sweep   budget sweep -> CSV of (budget, error, MACs, savings)
  equiv   equivalence/invariant self-checks -> pass/fail exit code
  count   closed-form operation counts and state-memory report
  time    median per-frame wall times for the exact and gated variants

Configs are one JSON document:

  {
    "model":  {"blocks": 2, "N": 16, "D": 8, "H": 2, "mlp_ratio": 4,
               "mode": "full", "pool_p": 1, "seed": 0},
    "stream": {"mode": "sparse_change", "rho": 0.25, "sigma": 1.0,
               "eps": 0.1, "frames": 8, "seed": 0},
    "policy": {"kind": "top_r", "r": 4},
    "schedule": [16, 4, 4, 16]
  }

"schedule" (optional) lists per-frame budget overrides; a short list keeps
its last value for the remaining frames.
"""

from __future__ import annotations

import argparse
import json
import sys

from .archive import export_stream, import_stream
from .block import ModelConfig
from .checks import run_all_checks
from .costs import count_block_baseline, count_block_eventful, memory_report
from .gates import Policy
from .harness import (
    measure_walltime,
    run_pair,
    sweep_budget,
    write_run_csv,
    write_summary_json,
    write_sweep_csv,
)
from .streams import StreamConfig, gen_stream


def load_config(path) -> tuple[ModelConfig, StreamConfig, list[int] | None]:
    with open(path) as fh:
        doc = json.load(fh)
    model = doc.get("model", {})
    stream = doc.get("stream", {})
    policy_doc = doc.get("policy", {})
    policy = Policy(kind=policy_doc.get("kind", "top_r"),
                    r=policy_doc.get("r", 0),
                    h=policy_doc.get("h", 0.0))
    model_cfg = ModelConfig(
        blocks=model.get("blocks", 2),
        n=model.get("N", 16), d=model.get("D", 8), heads=model.get("H", 2),
        mlp_ratio=model.get("mlp_ratio", 4),
        mode=model.get("mode", "full"),
        pool_p=model.get("pool_p", 1),
        seed=model.get("seed", 0),
        policy=policy)
    stream_cfg = StreamConfig(
        n=model_cfg.n, d=model_cfg.d,
        frames=stream.get("frames", 8),
        mode=stream.get("mode", "sparse_change"),
        rho=stream.get("rho", 0.25),
        sigma=stream.get("sigma", 1.0),
        eps=stream.get("eps", 0.1),
        seed=stream.get("seed", 0))
    return model_cfg, stream_cfg, doc.get("schedule")


def _cmd_run(args) -> int:
    model_cfg, stream_cfg, schedule = load_config(args.config)
    frames = None
    if args.load_stream:
        frames = import_stream(args.load_stream)
    elif args.save_stream:
        export_stream(args.save_stream, gen_stream(stream_cfg))
        # run on the round-tripped frames so results match any later
        # consumer of the fixture (the archive stores 32-bit floats)
        frames = import_stream(args.save_stream)
    report = run_pair(model_cfg, stream_cfg, schedule=schedule, frames=frames)
    if args.out_csv:
        write_run_csv(report, args.out_csv)
    if args.out_json:
        write_summary_json(report, args.out_json)
    print(json.dumps(report.summary(), indent=2))
    return 0


def _cmd_sweep(args) -> int:
    model_cfg, stream_cfg, _ = load_config(args.config)
    r_values = [int(tok) for tok in args.r_values.split(",") if tok.strip()]
    rows = sweep_budget(model_cfg, stream_cfg, r_values)
    if args.out_csv:
        write_sweep_csv(rows, args.out_csv)
    for row in rows:
        print(f"r={row['r']:>5d}  err={row['mean_rel_l2_error']:.3e}  "
              f"macs={row['steady_macs_total']:>12d}  "
              f"savings={row['savings_ratio']:.3f}")
    return 0


def _cmd_equiv(args) -> int:
    failures = 0
    for name, passed, detail in run_all_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        failures += not passed
    return 1 if failures else 0


def _cmd_count(args) -> int:
    base = count_block_baseline(args.n, args.d, args.heads, args.mlp_ratio)
    doc = {
        "baseline": base.as_dict(),
        "memory": memory_report(args.n, args.d, args.heads,
                                args.bytes_per_element),
    }
    if args.mode in ("full", "tokenwise_only", "stgt"):
        gated = count_block_eventful(args.n, args.m, args.d, args.heads,
                                     args.mlp_ratio, mode=args.mode)
        doc["gated"] = gated.as_dict()
        doc["savings_ratio"] = base.macs_total / gated.macs_total
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_time(args) -> int:
    model_cfg, stream_cfg, _ = load_config(args.config)
    table = measure_walltime(model_cfg, stream_cfg, repetitions=args.reps)
    for variant, ms in table.items():
        print(f"{variant:>15s}  {ms:8.3f} ms/frame")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokengate",
        description="Temporal-redundancy-aware transformer inference toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one paired run -> CSV + JSON summary")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-csv")
    p_run.add_argument("--out-json")
    p_run.add_argument("--save-stream", help="export the frames as a tensor archive")
    p_run.add_argument("--load-stream", help="run on frames from a tensor archive")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="budget sweep -> CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--r-values", required=True,
                         help="comma-separated budgets, e.g. 2,4,8,16")
    p_sweep.add_argument("--out-csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_equiv = sub.add_parser("equiv", help="invariant self-checks, exit 0/1")
    p_equiv.set_defaults(func=_cmd_equiv)

    p_count = sub.add_parser("count", help="closed-form cost and memory report")
    p_count.add_argument("--n", type=int, required=True)
    p_count.add_argument("--m", type=int, default=0)
    p_count.add_argument("--d", type=int, required=True)
    p_count.add_argument("--heads", type=int, required=True)
    p_count.add_argument("--mlp-ratio", type=int, default=4)
    p_count.add_argument("--mode", default="full",
                         choices=["full", "tokenwise_only", "stgt", "none"])
    p_count.add_argument("--bytes-per-element", type=int, default=4,
                         choices=[2, 4])
    p_count.set_defaults(func=_cmd_count)

    p_time = sub.add_parser("time", help="median per-frame wall times")
    p_time.add_argument("--config", required=True)
    p_time.add_argument("--reps", type=int, default=5)
    p_time.set_defaults(func=_cmd_time)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
