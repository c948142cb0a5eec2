"""Transformer blocks and the toy stacked model.

``block_baseline`` is the exact, stateless two-residual block.  GatedBlock
is the temporal-redundancy-aware counterpart: gate-buffer pairs wrap every
contiguous run of token-wise work (the query/key/value transform, the
output projection, the MLP), and the attention products are maintained by
AttentionState.  Layer norms are recomputed over all tokens every frame;
the buffers sit before both residual additions so each skip sees a full
token tensor.

Modes:
  full            gated token-wise ops plus incremental attention products
  tokenwise_only  gated token-wise ops, products recomputed from buffers
  stgt            like tokenwise_only but with the lossy previous-frame gates
  spatial_pool    full machinery with mean-pooled keys/values on the grid

The toy model stacks blocks behind an additive position embedding and ends
with token mean-pooling plus one linear classification head.  Nothing is
trained; weights are drawn from a seeded portable generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .attention import (
    AttentionState,
    AttentionWeights,
    msa_baseline,
    msa_baseline_pooled,
)
from .costs import CostLedger, NullLedger
from .gates import Buffer, Gate, Policy, StgtGate
from .kernels import TokenMatrix, gelu, layer_norm
from .rng import SplitRng

MODES = ("full", "tokenwise_only", "stgt", "spatial_pool")


@dataclass
class BlockWeights:
    """All parameters of one block."""

    attn: AttentionWeights
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray

    @property
    def width(self) -> int:
        return self.attn.width

    @property
    def mlp_ratio(self) -> int:
        return self.w1.shape[1] // self.w1.shape[0]


@dataclass
class ModelConfig:
    """Shape, policy, and mode of the toy stacked model."""

    blocks: int = 2
    n: int = 16
    d: int = 8
    heads: int = 2
    mlp_ratio: int = 4
    mode: str = "full"
    pool_p: int = 1
    seed: int = 0
    policy: Policy = field(default_factory=lambda: Policy("top_r", r=4))
    num_classes: int = 10

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.d % self.heads:
            raise ValueError("width must divide evenly across heads")
        if self.mode == "spatial_pool" and self.pool_p < 2:
            raise ValueError("spatial_pool mode needs pool_p >= 2")


def _mlp_forward(tokens, w, ledger):
    hidden = ledger.matmul("token_wise", tokens, w.w1) + w.b1
    hidden = gelu(hidden)
    ledger.count_nonlinear(hidden.size)
    return ledger.matmul("token_wise", hidden, w.w2) + w.b2


def block_baseline(x: TokenMatrix, w: BlockWeights, pool_p: int = 1,
                   ledger: CostLedger | None = None) -> TokenMatrix:
    """Exact stateless block: attention residual, then MLP residual."""
    ledger = ledger or NullLedger()
    xn = layer_norm(x, w.ln1_gamma, w.ln1_beta)
    ledger.count_nonlinear(xn.size)
    if pool_p > 1:
        y = msa_baseline_pooled(xn, w.attn, pool_p, ledger) + x
    else:
        y = msa_baseline(xn, w.attn, ledger) + x
    yn = layer_norm(y, w.ln2_gamma, w.ln2_beta)
    ledger.count_nonlinear(yn.size)
    return _mlp_forward(yn, w, ledger) + y


class GatedBlock:
    """Stateful temporal-redundancy-aware block for one token stream."""

    def __init__(self, weights: BlockWeights, n: int, policy: Policy,
                 mode: str = "full", pool_p: int = 1,
                 ledger: CostLedger | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        d = weights.width
        self.w = weights
        self.n = n
        self.mode = mode
        self.policy = policy
        self.ledger = ledger or NullLedger()
        gate_cls = StgtGate if mode == "stgt" else Gate
        self.gate_qkv = gate_cls(n, d, policy)
        self.gate_p = gate_cls(n, d, policy)
        self.gate_mlp = gate_cls(n, d, policy)
        self.p_buf = Buffer(n, d)
        self.mlp_buf = Buffer(n, d)
        attn_mode = "full" if mode in ("full", "spatial_pool") else "tokenwise_only"
        self.attn = AttentionState(
            n, d, weights.attn.heads, policy, mode=attn_mode,
            pool=pool_p if mode == "spatial_pool" else 1, ledger=self.ledger)

    @property
    def flushed(self) -> bool:
        return self.gate_qkv.initialized

    def set_budget(self, r: int):
        """Point every gate of this block at budget r from the next frame on.

        Only meaningful for the fixed-budget policy; a threshold policy
        ignores it.
        """
        if r < 0:
            raise ValueError("budget must be nonnegative")
        if self.policy.kind == "top_r":
            self.policy.r = r

    def selected_counts(self) -> dict:
        """Tokens processed by each gated operator on the most recent frame."""
        return {
            "selected_qkv": int(self.gate_qkv.last_idx.size),
            "selected_p": int(self.gate_p.last_idx.size),
            "selected_mlp": int(self.gate_mlp.last_idx.size),
        }

    def step(self, x: TokenMatrix) -> TokenMatrix:
        w, ledger = self.w, self.ledger
        flushing = not self.flushed
        xn = layer_norm(x, w.ln1_gamma, w.ln1_beta)
        ledger.count_nonlinear(xn.size)
        idx, picked = self.gate_qkv(xn)
        if not flushing:
            ledger.count_adds(xn.size)
            ledger.count_macs("gate_overhead", xn.size)
        q_new = ledger.matmul("token_wise", picked, w.attn.wq)
        k_new = ledger.matmul("token_wise", picked, w.attn.wk)
        v_new = ledger.matmul("token_wise", picked, w.attn.wv)
        if w.attn.bq is not None:
            q_new, k_new, v_new = q_new + w.attn.bq, k_new + w.attn.bk, v_new + w.attn.bv
        y_att = self.attn.step(idx, q_new, k_new, v_new)

        idx_p, picked_p = self.gate_p(y_att)
        if not flushing:
            ledger.count_adds(y_att.size)
            ledger.count_macs("gate_overhead", y_att.size)
        proj = ledger.matmul("token_wise", picked_p, w.attn.wp)
        if w.attn.bp is not None:
            proj = proj + w.attn.bp
        y_full = self.p_buf(idx_p, proj)
        assert y_full.shape == x.shape
        y = y_full + x

        yn = layer_norm(y, w.ln2_gamma, w.ln2_beta)
        ledger.count_nonlinear(yn.size)
        idx_m, picked_m = self.gate_mlp(yn)
        if not flushing:
            ledger.count_adds(yn.size)
            ledger.count_macs("gate_overhead", yn.size)
        mlp_out = _mlp_forward(picked_m, w, ledger)
        z_full = self.mlp_buf(idx_m, mlp_out)
        assert z_full.shape == y.shape
        return z_full + y


@dataclass
class ModelWeights:
    pos_embed: np.ndarray
    blocks: list[BlockWeights]
    head_w: np.ndarray
    head_b: np.ndarray


def init_model_weights(cfg: ModelConfig) -> ModelWeights:
    """Seeded random weights at standard scales (1/sqrt(fan_in))."""
    rng = SplitRng(cfg.seed).substream(1)
    d, hidden = cfg.d, cfg.mlp_ratio * cfg.d
    scale = d ** -0.5

    def mat(rows, cols, s):
        return rng.normal((rows, cols)) * s

    blocks = []
    for _ in range(cfg.blocks):
        attn = AttentionWeights(
            wq=mat(d, d, scale), wk=mat(d, d, scale), wv=mat(d, d, scale),
            wp=mat(d, d, scale), heads=cfg.heads,
            bq=np.zeros(d), bk=np.zeros(d), bv=np.zeros(d), bp=np.zeros(d))
        blocks.append(BlockWeights(
            attn=attn,
            w1=mat(d, hidden, scale), b1=np.zeros(hidden),
            w2=mat(hidden, d, hidden ** -0.5), b2=np.zeros(d),
            ln1_gamma=np.ones(d), ln1_beta=np.zeros(d),
            ln2_gamma=np.ones(d), ln2_beta=np.zeros(d)))
    return ModelWeights(
        pos_embed=rng.normal((cfg.n, cfg.d)) * 0.02,
        blocks=blocks,
        head_w=mat(d, cfg.num_classes, scale),
        head_b=np.zeros(cfg.num_classes))


def weights_to_tensors(weights: ModelWeights) -> dict[str, np.ndarray]:
    """Flatten model weights into named tensors for the archive format."""
    out = {"pos_embed": weights.pos_embed,
           "head_w": weights.head_w, "head_b": weights.head_b}
    for i, bw in enumerate(weights.blocks):
        p = f"blocks.{i}."
        out[p + "attn.wq"] = bw.attn.wq
        out[p + "attn.wk"] = bw.attn.wk
        out[p + "attn.wv"] = bw.attn.wv
        out[p + "attn.wp"] = bw.attn.wp
        for name in ("bq", "bk", "bv", "bp"):
            val = getattr(bw.attn, name)
            if val is not None:
                out[p + "attn." + name] = val
        out[p + "w1"], out[p + "b1"] = bw.w1, bw.b1
        out[p + "w2"], out[p + "b2"] = bw.w2, bw.b2
        out[p + "ln1_gamma"], out[p + "ln1_beta"] = bw.ln1_gamma, bw.ln1_beta
        out[p + "ln2_gamma"], out[p + "ln2_beta"] = bw.ln2_gamma, bw.ln2_beta
    return out


def weights_from_tensors(tensors: dict[str, np.ndarray], heads: int) -> ModelWeights:
    """Rebuild model weights from archive tensors (inverse of weights_to_tensors)."""
    count = 0
    while f"blocks.{count}.w1" in tensors:
        count += 1
    blocks = []
    for i in range(count):
        p = f"blocks.{i}."
        attn = AttentionWeights(
            wq=tensors[p + "attn.wq"], wk=tensors[p + "attn.wk"],
            wv=tensors[p + "attn.wv"], wp=tensors[p + "attn.wp"], heads=heads,
            bq=tensors.get(p + "attn.bq"), bk=tensors.get(p + "attn.bk"),
            bv=tensors.get(p + "attn.bv"), bp=tensors.get(p + "attn.bp"))
        blocks.append(BlockWeights(
            attn=attn, w1=tensors[p + "w1"], b1=tensors[p + "b1"],
            w2=tensors[p + "w2"], b2=tensors[p + "b2"],
            ln1_gamma=tensors[p + "ln1_gamma"], ln1_beta=tensors[p + "ln1_beta"],
            ln2_gamma=tensors[p + "ln2_gamma"], ln2_beta=tensors[p + "ln2_beta"]))
    return ModelWeights(pos_embed=tensors["pos_embed"], blocks=blocks,
                        head_w=tensors["head_w"], head_b=tensors["head_b"])


class Model:
    """Stack of blocks + mean pool + linear head, in exact or gated form.

    ``baseline_frame`` is stateless and serves as the oracle;``step``
    advances the gated state.  One Model instance serves one stream.
    """

    def __init__(self, cfg: ModelConfig, weights: ModelWeights | None = None,
                 ledger: CostLedger | None = None):
        self.cfg = cfg
        self.weights = weights or init_model_weights(cfg)
        self.ledger = ledger or NullLedger()
        # one budget policy object shared by every gate of every block,
        # copied from the config so separate model instances stay decoupled
        self.policy = replace(cfg.policy)
        self.blocks = [
            GatedBlock(bw, cfg.n, self.policy, mode=cfg.mode,
                       pool_p=cfg.pool_p, ledger=self.ledger)
            for bw in self.weights.blocks
        ]

    @property
    def oracle_pool_p(self) -> int:
        """Pool factor of the matching exact oracle (pooling is part of the
        architecture, not of the approximation, so the oracle shares it)."""
        return self.cfg.pool_p if self.cfg.mode == "spatial_pool" else 1

    def set_budget(self, r: int):
        for block in self.blocks:
            block.set_budget(r)

    def embed(self, frame: TokenMatrix) -> TokenMatrix:
        if frame.shape != (self.cfg.n, self.cfg.d):
            raise ValueError(f"expected frame of shape {(self.cfg.n, self.cfg.d)}, "
                             f"got {frame.shape}")
        return frame + self.weights.pos_embed

    def head(self, tokens: TokenMatrix) -> np.ndarray:
        pooled = tokens.mean(axis=0)
        return pooled @ self.weights.head_w + self.weights.head_b

    def baseline_frame(self, frame: TokenMatrix,
                       ledger: CostLedger | None = None) -> tuple[TokenMatrix, np.ndarray]:
        """Exact stateless forward pass; the oracle for every gated mode."""
        ledger = ledger or NullLedger()
        tokens = self.embed(frame)
        for bw in self.weights.blocks:
            tokens = block_baseline(tokens, bw, pool_p=self.oracle_pool_p,
                                    ledger=ledger)
        return tokens, self.head(tokens)

    def step(self, frame: TokenMatrix) -> tuple[TokenMatrix, np.ndarray]:
        """Gated stateful forward pass for the next frame of the stream."""
        flushing = not self.blocks[0].flushed if self.blocks else False
        self.ledger.begin_frame(flush=flushing)
        tokens = self.embed(frame)
        for block in self.blocks:
            tokens = block.step(tokens)
        self.ledger.end_frame()
        return tokens, self.head(tokens)

    def selected_counts(self) -> dict:
        """Summed per-gate selection sizes over blocks for the latest frame."""
        totals = {"selected_qkv": 0, "selected_p": 0, "selected_mlp": 0}
        for block in self.blocks:
            for key, val in block.selected_counts().items():
                totals[key] += val
        return totals
