"""Temporal-redundancy-aware transformer inference on token streams.

Consecutive frames of a token stream differ in few tokens.  This library
recomputes only those tokens: reference-comparing gates decide which tokens
changed enough to matter, token-wise operators run on the selected subset,
and the self-attention products are patched incrementally (row/column
scatter for the similarity matrix, an aligned delta identity for the
attention-value product).  A runtime budget caps how many tokens each gate
may pass.

Also included: an exact oracle model, a multiply-accumulate cost model with
closed-form validators, a state-memory report, synthetic stream generators,
and a paired-execution harness with CSV/JSON reporting.
"""

from .attention import (
    AttentionState,
    AttentionWeights,
    av_delta_update,
    head_merge,
    head_split,
    msa_baseline,
    msa_baseline_pooled,
    pool_index_set,
    pool_tokens,
    pooled_kv,
    qk_sparse_update,
    qk_sparse_update_nonoverlap,
)
from .block import (
    BlockWeights,
    GatedBlock,
    Model,
    ModelConfig,
    ModelWeights,
    block_baseline,
    init_model_weights,
    weights_from_tensors,
    weights_to_tensors,
)
from .costs import (
    BlockCost,
    CostLedger,
    NullLedger,
    count_block_baseline,
    count_block_eventful,
    memory_report,
    savings_ratio,
)
from .gates import (
    Buffer,
    DeltaGate,
    Gate,
    Policy,
    StgtGate,
    THRESHOLD_PRESETS,
    threshold_indices,
    top_r_indices,
)
from .harness import (
    RunReport,
    measure_walltime,
    run_pair,
    sweep_budget,
    write_run_csv,
    write_summary_json,
    write_sweep_csv,
)
from .kernels import (
    gather_rows,
    gelu,
    layer_norm,
    matmul,
    mlp,
    row_l2_norms,
    scatter_cols,
    scatter_rows,
    softmax_rows,
)
from .rng import SplitRng
from .streams import StreamConfig, gen_stream

__version__ = "0.1.0"
