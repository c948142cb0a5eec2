import csv

import numpy as np
import pytest

from tokengate.block import ModelConfig
from tokengate.gates import Policy
from tokengate.harness import (
    CSV_COLUMNS,
    cosine_similarity,
    measure_walltime,
    relative_l2,
    run_pair,
    sweep_budget,
    write_run_csv,
    write_summary_json,
    write_sweep_csv,
)
from tokengate.streams import StreamConfig


def small_model(r=4, mode="full", seed=50, blocks=2):
    return ModelConfig(blocks=blocks, n=16, d=8, heads=2, seed=seed, mode=mode,
                       policy=Policy("top_r", r=r))


def small_stream(seed=51, frames=6, mode="sparse_change"):
    return StreamConfig(n=16, d=8, frames=frames, mode=mode, rho=0.25,
                        sigma=1.0, seed=seed)


class TestMetrics:
    def test_relative_l2(self):
        assert relative_l2(np.ones(4), np.ones(4)) == 0.0
        assert relative_l2(np.zeros(3), np.array([3.0, 0.0, 4.0])) == 1.0

    def test_cosine(self):
        assert cosine_similarity(np.ones(4), np.ones(4)) == pytest.approx(1.0)
        assert cosine_similarity(np.array([1.0, 0.0]),
                                 np.array([0.0, 1.0])) == pytest.approx(0.0)


class TestRunPair:
    def test_full_budget_all_frames_exact(self):
        report = run_pair(small_model(r=16), small_stream())
        assert all(err < 1e-5 for err in report.column("rel_l2_error"))
        assert all(match == 1 for match in report.column("argmax_match"))

    def test_flush_frame_error_zero(self):
        for mode in ("full", "tokenwise_only", "stgt", "spatial_pool"):
            pool = 2 if mode == "spatial_pool" else 1
            cfg = ModelConfig(blocks=2, n=16, d=8, heads=2, seed=50, mode=mode,
                              pool_p=pool, policy=Policy("top_r", r=2))
            report = run_pair(cfg, small_stream())
            assert report.rows[0]["rel_l2_error"] < 1e-5, mode

    def test_static_stream_stays_exact(self):
        report = run_pair(small_model(r=3), small_stream(mode="static"))
        assert all(err < 1e-5 for err in report.column("rel_l2_error"))

    def test_selected_counts_follow_budget(self):
        report = run_pair(small_model(r=5, blocks=2), small_stream())
        for row in report.rows[1:]:
            assert row["selected_qkv"] == 5 * 2  # summed over blocks
            assert row["selected_p"] == 5 * 2
            assert row["selected_mlp"] == 5 * 2

    def test_schedule_applies_per_frame(self):
        schedule = [16, 4, 8]
        report = run_pair(small_model(r=16, blocks=1),
                          small_stream(frames=5), schedule=schedule)
        assert report.column("r_effective") == [16, 4, 8, 8, 8]
        assert report.column("selected_qkv") == [16, 4, 8, 8, 8]

    def test_deterministic_reports(self):
        first = run_pair(small_model(), small_stream())
        second = run_pair(small_model(), small_stream())
        assert first.comparable_rows() == second.comparable_rows()
        assert first.summary() == second.summary()

    def test_threshold_policy_marks_r_effective(self):
        cfg = ModelConfig(blocks=1, n=16, d=8, heads=2, seed=52,
                          policy=Policy("threshold", h=1.0))
        report = run_pair(cfg, small_stream())
        assert report.column("r_effective") == [-1] * 6

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            run_pair(small_model(), StreamConfig(n=8, d=8, frames=2))

    def test_savings_reported(self):
        report = run_pair(small_model(r=2), small_stream())
        assert report.savings > 1.0
        full = run_pair(small_model(r=16), small_stream())
        assert full.savings < 1.0  # overlap penalty at full budget

    def test_measured_baseline_macs_match_formula(self):
        from tokengate.costs import count_block_baseline

        cfg = small_model(r=4, blocks=2)
        report = run_pair(cfg, small_stream(frames=6))
        per_frame = count_block_baseline(cfg.n, cfg.d, cfg.heads,
                                         cfg.mlp_ratio).macs_total * cfg.blocks
        assert report.baseline_macs_total == per_frame * 5  # 6 frames - flush


class TestSweep:
    def test_rows_sorted_and_monotone_macs(self):
        rows = sweep_budget(small_model(), small_stream(), [8, 2, 16, 4])
        assert [row["r"] for row in rows] == [2, 4, 8, 16]
        macs = [row["steady_macs_total"] for row in rows]
        assert all(a < b for a, b in zip(macs, macs[1:]))

    def test_single_full_budget_row(self):
        rows = sweep_budget(small_model(), small_stream(), [16])
        assert rows[0]["mean_rel_l2_error"] < 1e-5
        assert rows[0]["savings_ratio"] < 1.0

    def test_error_trend_over_seeds(self):
        lows, highs = [], []
        for seed in range(20):
            rows = sweep_budget(small_model(seed=seed),
                                small_stream(seed=700 + seed, frames=10),
                                [4, 12])
            lows.append(rows[0]["mean_rel_l2_error"])
            highs.append(rows[1]["mean_rel_l2_error"])
        assert np.mean(highs) <= np.mean(lows)

    def test_empty_budget_list_rejected(self):
        with pytest.raises(ValueError):
            sweep_budget(small_model(), small_stream(), [])


class TestWalltime:
    def test_reports_all_variants(self):
        table = measure_walltime(small_model(), small_stream(frames=3),
                                 repetitions=3)
        assert set(table) == {"baseline", "full", "tokenwise_only"}
        assert all(ms > 0 for ms in table.values())

    def test_minimum_repetitions(self):
        with pytest.raises(ValueError):
            measure_walltime(small_model(), small_stream(), repetitions=2)

    def _timing_config(self, r=16):
        # heavy enough per frame that scheduler jitter is a small fraction
        model = ModelConfig(blocks=2, n=128, d=64, heads=2, seed=53,
                            policy=Policy("top_r", r=r))
        stream = StreamConfig(n=128, d=64, frames=5, mode="sparse_change",
                              rho=0.1, sigma=1.0, seed=54)
        return model, stream

    def test_baseline_timing_is_budget_independent(self):
        model, stream = self._timing_config(r=16)
        low = measure_walltime(model, stream, repetitions=5)["baseline"]
        model_hi, _ = self._timing_config(r=128)
        high = measure_walltime(model_hi, stream, repetitions=5)["baseline"]
        assert max(low, high) / min(low, high) < 1.2

    def test_medians_reproducible(self):
        model, stream = self._timing_config()
        first = measure_walltime(model, stream, repetitions=5)
        second = measure_walltime(model, stream, repetitions=5)
        for variant in first:
            ratio = max(first[variant], second[variant]) / \
                min(first[variant], second[variant])
            assert ratio < 1.2, (variant, first[variant], second[variant])


class TestWriters:
    def test_run_csv_columns(self, tmp_path):
        report = run_pair(small_model(), small_stream())
        path = tmp_path / "run.csv"
        write_run_csv(report, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == CSV_COLUMNS
        assert len(rows) == 6
        assert int(rows[0]["selected_qkv"]) == 32  # flush selects everything

    def test_sweep_csv(self, tmp_path):
        rows = sweep_budget(small_model(), small_stream(), [2, 8])
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        with open(path) as fh:
            read = list(csv.DictReader(fh))
        assert [int(row["r"]) for row in read] == [2, 8]

    def test_summary_json(self, tmp_path):
        import json

        report = run_pair(small_model(), small_stream())
        path = tmp_path / "summary.json"
        write_summary_json(report, path)
        doc = json.loads(path.read_text())
        assert doc["frames"] == 6
        assert "savings_ratio" in doc
