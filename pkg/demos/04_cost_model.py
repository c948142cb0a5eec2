"""Operation counting: closed forms, the N/2 crossover, and memory.

The incremental attention updates cost 2NMD each, against N^2 D from
scratch, so the products only get cheaper once fewer than half the tokens
update.  Token-wise work always scales with M.  The closed forms are not
estimates: an instrumented run of the gated block reproduces them to the
exact integer.
"""

from tokengate import (
    CostLedger,
    GatedBlock,
    ModelConfig,
    Policy,
    count_block_baseline,
    count_block_eventful,
    init_model_weights,
    memory_report,
    savings_ratio,
)
from tokengate.rng import SplitRng

n, d, heads, ratio = 32, 16, 2, 4
base = count_block_baseline(n, d, heads, ratio)
print(f"exact block, N={n} D={d}: {base.macs_total} MACs per frame")

print("\nupdated tokens M -> gated MACs (crossover in the products at N/2):")
for m in (0, 4, 8, 12, 16, 20, 32):
    gated = count_block_eventful(n, m, d, heads, ratio)
    products_cheaper = gated.macs_qk + gated.macs_av < base.macs_qk + base.macs_av
    print(f"  M={m:2d}: total {gated.macs_total:7d}  "
          f"savings x{savings_ratio(base.macs_total, gated.macs_total):5.2f}  "
          f"products cheaper: {products_cheaper}")

# instrumented run == closed form, integer for integer
m = 8
ledger = CostLedger()
weights = init_model_weights(ModelConfig(blocks=1, n=n, d=d, heads=heads,
                                         mlp_ratio=ratio, seed=1))
block = GatedBlock(weights.blocks[0], n, Policy("top_r", r=m), ledger=ledger)
rng = SplitRng(2)
for t in range(3):
    ledger.begin_frame(flush=(t == 0))
    block.step(rng.normal((n, d)))
    ledger.end_frame()
snap = ledger.frames[-1]
formula = count_block_eventful(n, m, d, heads, ratio)
print(f"\ninstrumented steady-state frame: {snap['macs_total']} MACs, "
      f"closed form {formula.macs_total} -> "
      f"{'match' if snap['macs_total'] == formula.macs_total else 'MISMATCH'}")

# state memory at a large-model scale
report = memory_report(4096, 768, 12, bytes_per_element=4)
print(f"\nstate memory at N=4096, D=768, H=12 (full precision):")
print(f"  one token gate/buffer: {report['token_gate_reference'] / 1e6:.1f} MB")
print(f"  similarity buffer:     {report['similarity_buffer'] / 1e6:.0f} MB")
print(f"  whole block:           {report['block_total'] / 1e6:.0f} MB")
