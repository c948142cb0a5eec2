"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances are fixed here and must not be loosened.
"""

import time

import numpy as np
import pytest

from tokengate.attention import (
    av_delta_update,
    qk_sparse_update,
    qk_sparse_update_nonoverlap,
)
from tokengate.block import GatedBlock, Model, ModelConfig, init_model_weights
from tokengate.costs import (
    CostLedger,
    count_block_baseline,
    count_block_eventful,
    memory_report,
)
from tokengate.gates import DeltaGate, Policy, threshold_indices, top_r_indices
from tokengate.harness import measure_walltime, run_pair, sweep_budget
from tokengate.rng import SplitRng
from tokengate.streams import StreamConfig, gen_stream


def report(name, passed, detail):
    print(f"\n[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


def test_criterion_01_full_budget_exactness():
    started = time.perf_counter()
    cfg = ModelConfig(blocks=3, n=16, d=8, heads=2, mlp_ratio=4, seed=0,
                      policy=Policy("top_r", r=16))
    stream = StreamConfig(n=16, d=8, frames=8, mode="sparse_change", rho=0.25,
                          sigma=1.0, seed=1)
    rep = run_pair(cfg, stream)
    worst = max(rep.column("rel_l2_error"))
    elapsed = time.perf_counter() - started
    report("criterion 1: full-budget exactness",
           worst < 1e-5 and elapsed < 1.0,
           f"worst per-frame rel err {worst:.2e}, runtime {elapsed:.2f}s")


def test_criterion_02_qk_invariant_random_instances():
    rng = SplitRng(2)
    worst_scratch = worst_agree = 0.0
    for _ in range(200):
        n = 2 + int(rng.integers(1, 31)[0])
        dh = 1 + int(rng.integers(1, 8)[0])
        q, k = rng.normal((n, dh)), rng.normal((n, dh))
        b = q @ k.T
        b2 = b.copy()
        m = int(rng.integers(1, n + 1)[0])
        idx = rng.choice_without_replacement(n, m)
        q[idx] = rng.normal((m, dh))
        k[idx] = rng.normal((m, dh))
        qk_sparse_update(b, q, k, q[idx], k[idx], idx)
        qk_sparse_update_nonoverlap(b2, q, k, q[idx], k[idx], idx)
        worst_scratch = max(worst_scratch, float(np.abs(b - q @ k.T).max()))
        worst_agree = max(worst_agree, float(np.abs(b - b2).max()))
    report("criterion 2: QK invariant (200 instances)",
           worst_scratch < 1e-6 and worst_agree < 1e-6,
           f"worst from-scratch dev {worst_scratch:.2e}, "
           f"variant disagreement {worst_agree:.2e}")


def test_criterion_03_av_delta_exactness():
    rng = SplitRng(3)
    worst = 0.0
    for _ in range(200):
        n = 2 + int(rng.integers(1, 15)[0])
        dh = 1 + int(rng.integers(1, 8)[0])
        policy = Policy("top_r", r=n)
        a_gate = DeltaGate(n, n, policy)
        v_gate = DeltaGate(n, dh, policy)
        raw = rng.normal((n, n))
        attn = np.exp(raw - raw.max(axis=1, keepdims=True))
        attn /= attn.sum(axis=1, keepdims=True)
        a_gate(attn.T)
        _, u_v, _ = v_gate(rng.normal((n, dh)))
        av = attn @ u_v
        for _ in range(5):
            policy.r = int(rng.integers(1, n + 1)[0])
            raw = rng.normal((n, n))
            attn = np.exp(raw - raw.max(axis=1, keepdims=True))
            attn /= attn.sum(axis=1, keepdims=True)
            v_idx, u_v, v_changes = v_gate(rng.normal((n, dh)))
            av_delta_update(av, attn, a_gate, v_idx, v_changes, u_v[v_idx])
            worst = max(worst, float(np.abs(av - a_gate.u.T @ u_v).max()))
    report("criterion 3: AV delta exactness (200 x 5-step sequences)",
           worst < 1e-6, f"worst cache-vs-reference dev {worst:.2e}")


def test_criterion_04_cost_formula_agreement():
    d, heads, ratio = 16, 2, 4
    exact = True
    details = []
    for n in (8, 16, 32):
        base = count_block_baseline(n, d, heads, ratio)
        base_products = base.macs_qk + base.macs_av
        for m in (0, n // 4, n // 2, n):
            cfg = ModelConfig(blocks=1, n=n, d=d, heads=heads, mlp_ratio=ratio,
                              seed=4)
            weights = init_model_weights(cfg)
            ledger = CostLedger()
            block = GatedBlock(weights.blocks[0], n, Policy("top_r", r=m),
                               mode="full", ledger=ledger)
            stream_rng = SplitRng(5)
            for t in range(3):
                ledger.begin_frame(flush=(t == 0))
                block.step(stream_rng.normal((n, d)))
                ledger.end_frame()
            snap = ledger.frames[-1]
            formula = count_block_eventful(n, m, d, heads, ratio, "full")
            same = (snap["macs_token_wise"] == formula.macs_token_wise
                    and snap["macs_qk"] == formula.macs_qk
                    and snap["macs_av"] == formula.macs_av
                    and snap["macs_gate_overhead"] == formula.macs_gate_overhead
                    and snap["adds_overhead"] == formula.adds_overhead)
            crossover = ((formula.macs_qk + formula.macs_av < base_products)
                         == (m < n / 2))
            exact &= same and crossover
            if not (same and crossover):
                details.append(f"n={n} m={m}")
    report("criterion 4: ledger equals closed form + crossover at N/2",
           exact, "exact integer match for all (N, M)" if exact
           else "mismatch at " + ", ".join(details))


def test_criterion_05_memory_arithmetic():
    token = memory_report(4096, 768, 12, 4)["token_gate_reference"]
    attn = memory_report(4096, 768, 12, 4)["similarity_buffer"]
    report("criterion 5: state-memory arithmetic",
           token == 12_582_912 and attn == 805_306_368,
           f"token state {token} bytes, attention buffer {attn} bytes")


def test_criterion_06_policy_correctness():
    rng = SplitRng(6)
    ok = True
    for _ in range(1000):
        n = 1 + int(rng.integers(1, 48)[0])
        norms = np.abs(rng.normal(n))
        if int(rng.integers(1, 2)[0]):
            norms = np.round(norms, 1)  # provoke ties
        r = int(rng.integers(1, n + 3)[0])
        brute = sorted(sorted(range(n), key=lambda i: (-norms[i], i))[:min(r, n)])
        ok &= top_r_indices(norms, r).tolist() == brute
    for _ in range(1000):
        n = 1 + int(rng.integers(1, 48)[0])
        norms = np.abs(rng.normal(n))
        h = float(np.abs(rng.normal(1)[0]))
        brute = [i for i in range(n) if norms[i] > h]
        ok &= threshold_indices(norms, h).tolist() == brute
    report("criterion 6: policy correctness (1000 vectors each)",
           ok, "exact set equality with brute-force oracles")


def test_criterion_07_tradeoff_monotonicity():
    started = time.perf_counter()
    means = {}
    for r in (4, 12):
        errors = []
        for seed in range(20):
            cfg = ModelConfig(blocks=2, n=16, d=8, heads=2, seed=100 + seed,
                              policy=Policy("top_r", r=r))
            stream = StreamConfig(n=16, d=8, frames=20, mode="sparse_change",
                                  rho=0.1, sigma=1.0, seed=200 + seed)
            errors.append(run_pair(cfg, stream).mean_rel_l2_error)
        means[r] = float(np.mean(errors))
    rows = sweep_budget(
        ModelConfig(blocks=2, n=16, d=8, heads=2, seed=7),
        StreamConfig(n=16, d=8, frames=10, mode="sparse_change", rho=0.1,
                     sigma=1.0, seed=8),
        [2, 4, 8, 12, 16])
    macs = [row["steady_macs_total"] for row in rows]
    strictly_up = all(a < b for a, b in zip(macs, macs[1:]))
    elapsed = time.perf_counter() - started
    report("criterion 7: tradeoff monotonicity",
           means[12] <= means[4] and strictly_up and elapsed < 10.0,
           f"mean err r=12 {means[12]:.3f} <= r=4 {means[4]:.3f}, "
           f"MACs strictly increasing, runtime {elapsed:.1f}s")


def test_criterion_08_drift_robustness_vs_lossy_gating():
    n = 16
    finals = {"full": [], "stgt": []}
    for seed in range(20):
        stream = StreamConfig(n=n, d=8, frames=50, mode="drift", eps=0.05,
                              seed=300 + seed)
        for mode in ("full", "stgt"):
            cfg = ModelConfig(blocks=2, n=n, d=8, heads=2, seed=400 + seed,
                              mode=mode, policy=Policy("top_r", r=n // 8))
            rep = run_pair(cfg, stream)
            finals[mode].append(rep.column("rel_l2_error")[-1])
    ref, lossy = np.mean(finals["full"]), np.mean(finals["stgt"])
    report("criterion 8: reference gating beats lossy gating under drift",
           ref < lossy, f"final-frame err {ref:.3f} (reference) "
                        f"vs {lossy:.3f} (lossy), 20-seed mean")


def test_criterion_09_spatial_pool_mode():
    n = 16
    cfg = ModelConfig(blocks=2, n=n, d=8, heads=2, seed=9, mode="spatial_pool",
                      pool_p=2, policy=Policy("top_r", r=n))
    stream = StreamConfig(n=n, d=8, frames=6, mode="sparse_change", rho=0.25,
                          sigma=1.0, seed=10)
    rep = run_pair(cfg, stream)
    worst_exact = max(rep.column("rel_l2_error"))

    # invariants on the pooled shapes at r < N
    from tokengate.attention import head_split, pool_tokens

    weights = init_model_weights(cfg)
    block = GatedBlock(weights.blocks[0], n, Policy("top_r", r=3),
                       mode="spatial_pool", pool_p=2)
    worst_qk = worst_av = 0.0
    for frame in gen_stream(stream):
        block.step(frame)
        state = block.attn
        kp = pool_tokens(state.k_buf.b, state.grid, state.pool)
        qh = head_split(state.q_buf.b, state.heads)
        kh = head_split(kp, state.heads)
        vh = head_split(state.v_gate.u, state.heads)
        for h in range(state.heads):
            worst_qk = max(worst_qk,
                           float(np.abs(state.b[h] - qh[h] @ kh[h].T).max()))
            worst_av = max(worst_av,
                           float(np.abs(state.av[h]
                                        - state.a_gates[h].u.T @ vh[h]).max()))
    report("criterion 9: spatial-pool mode",
           worst_exact < 1e-5 and worst_qk < 1e-6 and worst_av < 1e-6,
           f"pooled-oracle err {worst_exact:.2e}, QK dev {worst_qk:.2e}, "
           f"AV dev {worst_av:.2e}")


def test_criterion_10_walltime_proof_of_concept():
    cfg = ModelConfig(blocks=4, n=256, d=128, heads=4, seed=11,
                      policy=Policy("top_r", r=256 // 8))
    stream = StreamConfig(n=256, d=128, frames=6, mode="sparse_change",
                          rho=0.1, sigma=1.0, seed=12)
    table = measure_walltime(cfg, stream, repetitions=3)
    report("criterion 10: wall-time proof of concept",
           table["full"] <= table["baseline"],
           f"median gated {table['full']:.1f} ms <= "
           f"baseline {table['baseline']:.1f} ms per frame")
