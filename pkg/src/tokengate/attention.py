"""Multi-headed self-attention: exact, incrementally updated, and pooled.

The incremental path maintains three persistent pieces per head across a
token stream:

  * ``B`` — the raw query-key similarity matrix.  When only ``m`` tokens
    changed, the rows at those indices are recomputed against the full key
    buffer and scattered in, then the columns at those indices are
    recomputed against the full query buffer and scattered in.  Everything
    else is still valid.
  * an attention-side delta gate whose tokens are the *columns* of the
    row-softmaxed matrix, forced to select the same indices as the value
    gate so the delta products stay aligned.
  * ``av`` — the cached attention-weighted value sum, advanced by the
    identity  new = old + A_now dV + dA (V_now - dV)  with every factor cut
    down to the selected columns/rows.

The scale 1 / sqrt(d_head) is applied when the softmax is taken, so ``B``
always stores raw products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostLedger, NullLedger
from .gates import Buffer, DeltaGate, Policy
from .kernels import (
    IndexSet,
    TokenMatrix,
    as_index_set,
    complement_indices,
    full_index_set,
    softmax_rows,
)


@dataclass
class AttentionWeights:
    """Projection weights for one attention operator; d must split over heads."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wp: np.ndarray
    heads: int
    bq: np.ndarray | None = None
    bk: np.ndarray | None = None
    bv: np.ndarray | None = None
    bp: np.ndarray | None = None

    def __post_init__(self):
        d = self.wq.shape[0]
        for name in ("wq", "wk", "wv", "wp"):
            if getattr(self, name).shape != (d, d):
                raise ValueError(f"{name} must be square of width {d}")
        if d % self.heads:
            raise ValueError("width must divide evenly across heads")

    @property
    def width(self) -> int:
        return self.wq.shape[0]

    @property
    def head_width(self) -> int:
        return self.wq.shape[0] // self.heads


def head_split(x: TokenMatrix, heads: int) -> np.ndarray:
    """(n, d) -> (heads, n, d // heads) by contiguous column slices."""
    n, d = x.shape
    if d % heads:
        raise ValueError("width must divide evenly across heads")
    return np.ascontiguousarray(x.reshape(n, heads, d // heads).transpose(1, 0, 2))


def head_merge(per_head: np.ndarray) -> TokenMatrix:
    """Inverse of head_split: (heads, n, dh) -> (n, heads * dh)."""
    heads, n, dh = per_head.shape
    return np.ascontiguousarray(per_head.transpose(1, 0, 2).reshape(n, heads * dh))


def _project(x, w, b, ledger):
    out = ledger.matmul("token_wise", x, w)
    if b is not None:
        out = out + b
    return out


def _attend_heads(q, k, v, heads, ledger):
    qh, kh, vh = head_split(q, heads), head_split(k, heads), head_split(v, heads)
    dh = qh.shape[2]
    out = np.empty((heads, qh.shape[1], dh))
    for h in range(heads):
        scores = ledger.matmul("qk", qh[h], kh[h].T)
        attn = softmax_rows(scores / np.sqrt(dh))
        ledger.count_nonlinear(attn.size)
        out[h] = ledger.matmul("av", attn, vh[h])
    return out


def msa_baseline(x_norm: TokenMatrix, w: AttentionWeights,
                 ledger: CostLedger | None = None) -> TokenMatrix:
    """Exact multi-headed self-attention of pre-normalized tokens."""
    ledger = ledger or NullLedger()
    q = _project(x_norm, w.wq, w.bq, ledger)
    k = _project(x_norm, w.wk, w.bk, ledger)
    v = _project(x_norm, w.wv, w.bv, ledger)
    merged = head_merge(_attend_heads(q, k, v, w.heads, ledger))
    return _project(merged, w.wp, w.bp, ledger)


def msa_baseline_pooled(x_norm: TokenMatrix, w: AttentionWeights, pool: int,
                        ledger: CostLedger | None = None) -> TokenMatrix:
    """Exact attention with keys and values mean-pooled on the token grid."""
    ledger = ledger or NullLedger()
    q = _project(x_norm, w.wq, w.bq, ledger)
    k = _project(x_norm, w.wk, w.bk, ledger)
    v = _project(x_norm, w.wv, w.bv, ledger)
    grid = _grid_side(x_norm.shape[0])
    merged = head_merge(_attend_heads(q, pool_tokens(k, grid, pool),
                                      pool_tokens(v, grid, pool),
                                      w.heads, ledger))
    return _project(merged, w.wp, w.bp, ledger)


def qk_sparse_update(b_matrix: TokenMatrix, q_buf: TokenMatrix, k_buf: TokenMatrix,
                     q_new: TokenMatrix, k_new: TokenMatrix, idx: IndexSet,
                     ledger: CostLedger | None = None) -> None:
    """Patch the similarity matrix in place after rows idx of q and k changed.

    ``q_buf``/``k_buf`` must already contain the fresh rows.  Rows idx are
    recomputed against all keys, then columns idx against all queries; the
    overlap block is computed twice, which keeps the update at two plain
    dense products.
    """
    ledger = ledger or NullLedger()
    if b_matrix.shape != (q_buf.shape[0], k_buf.shape[0]):
        raise ValueError("similarity shape must be (queries, keys)")
    idx = as_index_set(idx, b_matrix.shape[0])
    if idx.size == 0:
        return
    b_matrix[idx, :] = ledger.matmul("qk", q_new, k_buf.T)
    b_matrix[:, idx] = ledger.matmul("qk", q_buf, k_new.T)


def qk_sparse_update_nonoverlap(b_matrix, q_buf, k_buf, q_new, k_new, idx,
                                ledger: CostLedger | None = None) -> None:
    """Same result as qk_sparse_update with the overlap block computed once.

    The column pass multiplies only the query rows *outside* idx and
    scatters through both axes, cutting that pass from n*m*dh MACs down to
    (n-m)*m*dh.
    """
    ledger = ledger or NullLedger()
    if b_matrix.shape != (q_buf.shape[0], k_buf.shape[0]):
        raise ValueError("similarity shape must be (queries, keys)")
    idx = as_index_set(idx, b_matrix.shape[0])
    if idx.size == 0:
        return
    b_matrix[idx, :] = ledger.matmul("qk", q_new, k_buf.T)
    rest = complement_indices(idx, q_buf.shape[0])
    b_matrix[np.ix_(rest, idx)] = ledger.matmul("qk", q_buf[rest], k_new.T)


def av_delta_update(av: TokenMatrix, attn_now: TokenMatrix, a_gate: DeltaGate,
                    idx: IndexSet, v_delta: TokenMatrix, v_now: TokenMatrix,
                    ledger: CostLedger | None = None) -> None:
    """Advance the cached attention-value product by the aligned delta identity.

    ``attn_now`` is the current full row-softmaxed matrix; ``idx`` is the
    value gate's selection, which the attention-side gate is forced to
    reuse; ``v_delta``/``v_now`` are the gathered value changes and updated
    values at idx.  After the call ``av`` equals (gate reference A) @ (gate
    reference V) up to float rounding, whatever was selected.
    """
    ledger = ledger or NullLedger()
    if not a_gate.initialized:
        raise ValueError("attention-side gate must be flushed before delta updates")
    idx = as_index_set(idx, attn_now.shape[1])
    u_a, a_changes = a_gate.forced(attn_now.T, idx)
    ledger.count_adds(idx.size * attn_now.shape[0])
    if idx.size == 0:
        return
    a_now_cols = u_a[idx].T           # queries x selected, refreshed columns
    a_delta_cols = a_changes.T
    term = ledger.matmul("av", a_now_cols, v_delta)
    term += ledger.matmul("av", a_delta_cols, v_now - v_delta)
    av += term
    ledger.count_adds(v_delta.size)   # v_now - v_delta
    ledger.count_adds(2 * av.size)    # summing the terms, accumulating into av


def _grid_side(n: int) -> int:
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise ValueError(f"{n} tokens do not form a square grid")
    return side


def pool_tokens(x: TokenMatrix, grid: int, pool: int) -> TokenMatrix:
    """Mean-pool a row-major (grid x grid) token field down by pool x pool."""
    if pool == 1:
        return x.copy()
    if grid % pool:
        raise ValueError("pool size must divide the grid side")
    n, d = x.shape
    if n != grid * grid:
        raise ValueError("token count must equal grid * grid")
    g = grid // pool
    tiles = x.reshape(g, pool, g, pool, d)
    return tiles.mean(axis=(1, 3)).reshape(g * g, d)


def pool_index_set(idx: IndexSet, grid: int, pool: int) -> IndexSet:
    """Pooled positions whose patch intersects idx (max-pool of the mask)."""
    idx = as_index_set(idx, grid * grid)
    if pool == 1:
        return idx.copy()
    if grid % pool:
        raise ValueError("pool size must divide the grid side")
    g = grid // pool
    pooled = (idx // grid // pool) * g + (idx % grid) // pool
    return np.unique(pooled)


def pooled_kv(k_full: TokenMatrix, v_full: TokenMatrix, mask: IndexSet,
              grid: int, pool: int) -> tuple[TokenMatrix, TokenMatrix, IndexSet]:
    """Pooled key/value fields plus the pooled image of an active-token mask."""
    if k_full.shape != v_full.shape:
        raise ValueError("key and value fields must have the same shape")
    return (pool_tokens(k_full, grid, pool), pool_tokens(v_full, grid, pool),
            pool_index_set(mask, grid, pool))


class AttentionState:
    """Persistent attention machinery for one token stream.

    Owns the query/key/value buffers.  In "full" mode the per-head
    similarity matrices, attention-side gates, value gate, and cached
    products are maintained incrementally; in "tokenwise_only" mode both
    products are recomputed from the buffers each step.  A pool factor
    above 1 shrinks the key/value axis on the grid before any of this.
    """

    def __init__(self, n: int, d: int, heads: int, policy: Policy,
                 mode: str = "full", pool: int = 1,
                 ledger: CostLedger | None = None):
        if d % heads:
            raise ValueError("width must divide evenly across heads")
        if mode not in ("full", "tokenwise_only"):
            raise ValueError(f"unknown attention mode {mode!r}")
        self.n, self.d, self.heads = n, d, heads
        self.dh = d // heads
        self.mode = mode
        self.pool = pool
        self.grid = _grid_side(n) if pool > 1 else 0
        self.n_kv = n // (pool * pool) if pool > 1 else n
        self.ledger = ledger or NullLedger()
        self.q_buf = Buffer(n, d)
        self.k_buf = Buffer(n, d)
        self.v_buf = Buffer(n, d)
        if mode == "full":
            self.b = np.zeros((heads, n, self.n_kv))
            self.av = np.zeros((heads, n, self.dh))
            self.a_gates = [DeltaGate(self.n_kv, n, policy) for _ in range(heads)]
            self.v_gate = DeltaGate(self.n_kv, d, policy)
        self.flushed = False

    def step(self, idx: IndexSet, q_new: TokenMatrix, k_new: TokenMatrix,
             v_new: TokenMatrix) -> TokenMatrix:
        """Fold in freshly projected rows at idx; return the weighted values."""
        q = self.q_buf(idx, q_new)
        k = self.k_buf(idx, k_new)
        v = self.v_buf(idx, v_new)
        if self.pool > 1:
            k_kv, v_kv, idx_kv = pooled_kv(k, v, idx, self.grid, self.pool)
            k_new_kv = k_kv[idx_kv]
        else:
            k_kv, v_kv, idx_kv, k_new_kv = k, v, idx, k_new
        if self.mode == "tokenwise_only":
            return head_merge(_attend_heads(q, k_kv, v_kv, self.heads, self.ledger))
        if not self.flushed:
            return self._flush(q, k_kv, v_kv)
        return self._advance(q, k_kv, v_kv, q_new, k_new_kv, idx, idx_kv)

    def _flush(self, q, k_kv, v_kv):
        qh, kh = head_split(q, self.heads), head_split(k_kv, self.heads)
        _, u_v, _ = self.v_gate(v_kv)
        vh = head_split(u_v, self.heads)
        for h in range(self.heads):
            self.b[h] = self.ledger.matmul("qk", qh[h], kh[h].T)
            attn = softmax_rows(self.b[h] / np.sqrt(self.dh))
            self.ledger.count_nonlinear(attn.size)
            self.a_gates[h].forced(attn.T, full_index_set(self.n_kv))
            self.av[h] = self.ledger.matmul("av", attn, vh[h])
        self.flushed = True
        return head_merge(self.av)

    def _advance(self, q, k_kv, v_kv, q_new, k_new_kv, idx, idx_kv):
        qh, kh = head_split(q, self.heads), head_split(k_kv, self.heads)
        qh_new = head_split(q_new, self.heads)
        kh_new = head_split(k_new_kv, self.heads)
        v_idx, u_v, v_changes = self.v_gate(v_kv)
        self.ledger.count_adds(v_kv.size)
        self.ledger.count_macs("gate_overhead", v_kv.size)
        vh_now = head_split(u_v[v_idx], self.heads)
        vh_delta = head_split(v_changes, self.heads)
        for h in range(self.heads):
            if self.pool == 1:
                qk_sparse_update(self.b[h], qh[h], kh[h], qh_new[h], kh_new[h],
                                 idx, self.ledger)
            elif idx.size:
                self.b[h][idx, :] = self.ledger.matmul("qk", qh_new[h], kh[h].T)
                self.b[h][:, idx_kv] = self.ledger.matmul("qk", qh[h], kh_new[h].T)
            attn = softmax_rows(self.b[h] / np.sqrt(self.dh))
            self.ledger.count_nonlinear(attn.size)
            av_delta_update(self.av[h], attn, self.a_gates[h], v_idx,
                            vh_delta[h], vh_now[h], self.ledger)
        return head_merge(self.av)
