"""Paired exact-vs-gated execution, budget sweeps, timing, and reports.

Every run drives the stateless exact model and a stateful gated model over
the same frames and records, per frame, the selection sizes, operation
counts, output error, and wall time.  Reports are deterministic given the
config seeds, wall-time columns aside.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .block import Model, ModelConfig
from .costs import CostLedger, savings_ratio
from .gates import Policy
from .streams import StreamConfig, gen_stream

CSV_COLUMNS = [
    "frame", "r_effective", "selected_qkv", "selected_p", "selected_mlp",
    "macs_total", "macs_qk", "macs_av", "macs_tokenwise", "adds_overhead",
    "rel_l2_error", "cosine", "argmax_match", "wall_ms",
]


def relative_l2(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = np.linalg.norm(exact)
    if scale == 0:
        return float(np.linalg.norm(approx))
    return float(np.linalg.norm(approx - exact) / scale)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a, b = a.ravel(), b.ravel()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float(a @ b / denom)


@dataclass
class RunReport:
    """Per-frame rows plus aggregates for one paired run."""

    rows: list[dict] = field(default_factory=list)
    mean_rel_l2_error: float = 0.0
    mean_cosine: float = 0.0
    argmax_agreement: float = 0.0
    steady_macs_total: int = 0
    baseline_macs_total: int = 0
    savings: float = 0.0

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def comparable_rows(self) -> list[dict]:
        """Rows with the timing column removed, for determinism checks."""
        return [{k: v for k, v in row.items() if k != "wall_ms"}
                for row in self.rows]

    def summary(self) -> dict:
        return {
            "frames": len(self.rows),
            "mean_rel_l2_error": self.mean_rel_l2_error,
            "mean_cosine": self.mean_cosine,
            "argmax_agreement": self.argmax_agreement,
            "steady_macs_total": self.steady_macs_total,
            "baseline_macs_total": self.baseline_macs_total,
            "savings_ratio": self.savings,
        }


def _effective_r(policy, schedule, frame_index):
    if schedule:
        return schedule[min(frame_index, len(schedule) - 1)]
    if policy.kind == "top_r":
        return policy.r
    return -1


def run_pair(model_cfg: ModelConfig, stream_cfg: StreamConfig,
             schedule: list[int] | None = None,
             frames: np.ndarray | None = None) -> RunReport:
    """Run the exact oracle and the gated model over one stream.

    ``schedule`` holds per-frame budget overrides; a short schedule keeps
    its last value for the remaining frames.  Precomputed ``frames``
    override the stream config's generator (fixture import).
    """
    if frames is None:
        frames = gen_stream(stream_cfg)
    if frames.shape[1:] != (model_cfg.n, model_cfg.d):
        raise ValueError("stream and model disagree on token shape")
    ledger = CostLedger()
    model = Model(model_cfg, ledger=ledger)
    baseline_ledger = CostLedger()

    report = RunReport()
    for t, frame in enumerate(frames):
        if schedule:
            model.set_budget(schedule[min(t, len(schedule) - 1)])
        baseline_ledger.begin_frame(flush=(t == 0))
        exact_tokens, exact_scores = model.baseline_frame(frame, baseline_ledger)
        baseline_ledger.end_frame()
        start = time.perf_counter()
        tokens, scores = model.step(frame)
        wall_ms = (time.perf_counter() - start) * 1e3
        snap = ledger.frames[-1]
        row = {
            "frame": t,
            "r_effective": _effective_r(model.policy, schedule, t),
            **model.selected_counts(),
            "macs_total": snap["macs_total"],
            "macs_qk": snap["macs_qk"],
            "macs_av": snap["macs_av"],
            "macs_tokenwise": snap["macs_token_wise"],
            "adds_overhead": snap["adds_overhead"],
            "rel_l2_error": relative_l2(tokens, exact_tokens),
            "cosine": cosine_similarity(tokens, exact_tokens),
            "argmax_match": int(np.argmax(scores) == np.argmax(exact_scores)),
            "wall_ms": wall_ms,
        }
        report.rows.append(row)

    steady = [row for row, snap in zip(report.rows, ledger.frames)
              if not snap["flush"]]
    if steady:
        report.mean_rel_l2_error = float(np.mean([r["rel_l2_error"] for r in steady]))
        report.mean_cosine = float(np.mean([r["cosine"] for r in steady]))
        report.argmax_agreement = float(np.mean([r["argmax_match"] for r in steady]))
    report.steady_macs_total = ledger.steady_state_totals()["macs_total"]
    # measured over the same frames the gated steady-state totals cover
    report.baseline_macs_total = baseline_ledger.steady_state_totals()["macs_total"]
    if report.steady_macs_total and report.baseline_macs_total:
        report.savings = savings_ratio(report.baseline_macs_total,
                                       report.steady_macs_total)
    return report


def sweep_budget(model_cfg: ModelConfig, stream_cfg: StreamConfig,
                 r_values: list[int]) -> list[dict]:
    """One fresh paired run per budget; rows sorted by budget."""
    if not r_values:
        raise ValueError("need at least one budget value")
    rows = []
    for r in sorted(r_values):
        report = run_pair(replace(model_cfg, policy=Policy("top_r", r=r)),
                          stream_cfg)
        rows.append({
            "r": r,
            "mean_rel_l2_error": report.mean_rel_l2_error,
            "steady_macs_total": report.steady_macs_total,
            "savings_ratio": report.savings,
        })
    return rows


def measure_walltime(model_cfg: ModelConfig, stream_cfg: StreamConfig,
                     repetitions: int = 5) -> dict:
    """Median per-frame milliseconds for the exact and gated variants.

    The flush frame is excluded as warm-up.  Variants: "baseline" (exact
    stateless), "full", and "tokenwise_only" at the configured budget.
    """
    if repetitions < 3:
        raise ValueError("need at least 3 repetitions")
    frames = gen_stream(stream_cfg)
    result = {}

    times = []
    probe = Model(model_cfg)
    for _ in range(repetitions):
        for t, frame in enumerate(frames):
            start = time.perf_counter()
            probe.baseline_frame(frame)
            elapsed = (time.perf_counter() - start) * 1e3
            if t > 0:
                times.append(elapsed)
    result["baseline"] = float(np.median(times))

    for mode in ("full", "tokenwise_only"):
        times = []
        for _ in range(repetitions):
            cfg = replace(model_cfg, mode=mode, pool_p=1,
                          policy=replace(model_cfg.policy))
            model = Model(cfg)
            for t, frame in enumerate(frames):
                start = time.perf_counter()
                model.step(frame)
                elapsed = (time.perf_counter() - start) * 1e3
                if t > 0:
                    times.append(elapsed)
        result[mode] = float(np.median(times))
    return result


def write_run_csv(report: RunReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow(row)


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["r", "mean_rel_l2_error", "steady_macs_total",
                            "savings_ratio"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_summary_json(report: RunReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.summary(), fh, indent=2)
        fh.write("\n")
