"""Operation counting and state-memory accounting.

A multiply-accumulate is one operation: a matrix product (m, k) x (k, n)
costs m*k*n MACs.  Counted MAC categories:

  token_wise     query/key/value transforms, output projection, MLP
  qk             query-key similarity products (incremental or from scratch)
  av             attention-value products (incremental or from scratch)
  gate_overhead  squared-norm evaluation inside selection policies

Gate error subtractions and the extra additions of the incremental
attention-value update are tracked separately as plain adds.  Softmax,
layer norm, and GELU are excluded from MAC totals; the number of elements
they touch is kept as a diagnostic only.

Flush frames (where every state tensor is initialized from a full
computation) are flagged in the per-frame snapshots so steady-state
comparisons can exclude them.
"""

from __future__ import annotations

from dataclasses import dataclass

MAC_CATEGORIES = ("token_wise", "qk", "av", "gate_overhead")


class CostLedger:
    """Accumulates MACs and adds per frame, with per-frame snapshots."""

    def __init__(self):
        self.macs = dict.fromkeys(MAC_CATEGORIES, 0)
        self.adds = 0
        self.nonlinear_elems = 0
        self.frames: list[dict] = []
        self._frame_open = False
        self._frame_flush = False

    def begin_frame(self, flush: bool = False):
        self._frame_start = dict(self.macs)
        self._adds_start = self.adds
        self._nl_start = self.nonlinear_elems
        self._frame_open = True
        self._frame_flush = flush

    def end_frame(self):
        if not self._frame_open:
            raise RuntimeError("end_frame without begin_frame")
        snap = {f"macs_{cat}": self.macs[cat] - self._frame_start[cat]
                for cat in MAC_CATEGORIES}
        snap["adds_overhead"] = self.adds - self._adds_start
        snap["nonlinear_elems"] = self.nonlinear_elems - self._nl_start
        snap["macs_total"] = sum(snap[f"macs_{cat}"] for cat in MAC_CATEGORIES)
        snap["flush"] = self._frame_flush
        self.frames.append(snap)
        self._frame_open = False
        return snap

    def count_macs(self, category: str, count: int):
        self.macs[category] += int(count)

    def matmul(self, category: str, a, b):
        """Record and perform a product; the accumulate step is free."""
        self.macs[category] += a.shape[0] * a.shape[1] * b.shape[1]
        return a @ b

    def count_adds(self, count: int):
        self.adds += int(count)

    def count_nonlinear(self, elems: int):
        self.nonlinear_elems += int(elems)

    @property
    def total_macs(self) -> int:
        return sum(self.macs.values())

    def steady_state_totals(self) -> dict:
        """Summed snapshot over non-flush frames."""
        keys = [f"macs_{cat}" for cat in MAC_CATEGORIES]
        keys += ["adds_overhead", "macs_total", "nonlinear_elems"]
        total = dict.fromkeys(keys, 0)
        for snap in self.frames:
            if snap["flush"]:
                continue
            for key in keys:
                total[key] += snap[key]
        return total


class NullLedger(CostLedger):
    """Ledger that performs the products but records nothing."""

    def begin_frame(self, flush=False):
        pass

    def end_frame(self):
        pass

    def count_macs(self, category, count):
        pass

    def matmul(self, category, a, b):
        return a @ b

    def count_adds(self, count):
        pass

    def count_nonlinear(self, elems):
        pass


@dataclass
class BlockCost:
    """Closed-form per-frame operation counts for one transformer block."""

    macs_token_wise: int
    macs_qk: int
    macs_av: int
    macs_gate_overhead: int = 0
    adds_overhead: int = 0

    @property
    def macs_total(self) -> int:
        return (self.macs_token_wise + self.macs_qk + self.macs_av
                + self.macs_gate_overhead)

    def as_dict(self) -> dict:
        return {
            "macs_token_wise": self.macs_token_wise,
            "macs_qk": self.macs_qk,
            "macs_av": self.macs_av,
            "macs_gate_overhead": self.macs_gate_overhead,
            "macs_total": self.macs_total,
            "adds_overhead": self.adds_overhead,
        }


def count_block_baseline(n: int, d: int, h: int, mlp_ratio: int = 4) -> BlockCost:
    """MACs for one exact block frame: qkv + similarity + weighting + proj + MLP."""
    if d % h:
        raise ValueError("width must divide evenly across heads")
    token_wise = 3 * n * d * d + n * d * d + 2 * mlp_ratio * n * d * d
    return BlockCost(
        macs_token_wise=token_wise,
        macs_qk=n * n * d,
        macs_av=n * n * d,
    )


def count_block_eventful(n: int, m: int, d: int, h: int, mlp_ratio: int = 4,
                         mode: str = "full") -> BlockCost:
    """MACs and adds for one steady-state gated block frame with m tokens selected.

    In "full" mode the similarity matrix is patched by row/column scatter
    (2NMD) and the attention-value product by the aligned delta identity
    (2NMD).  In "tokenwise_only" and "stgt" modes both products are
    recomputed from the buffered tensors, so only token-wise work scales
    with m.  There is no closed form for "spatial_pool": the number of
    refreshed pooled columns depends on where the selected tokens sit on
    the grid, so pooled runs are costed by instrumentation only.
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    if d % h:
        raise ValueError("width must divide evenly across heads")
    token_wise = 3 * m * d * d + m * d * d + 2 * mlp_ratio * m * d * d
    if mode == "full":
        qk = 2 * n * m * d
        av = 2 * n * m * d
        gate_norms = 4 * n * d            # qkv, value, projection, MLP gates
        adds = 4 * n * d                  # their error subtractions
        adds += h * m * n                 # gathered changes of the forced gates
        if m > 0:                         # delta-product extra additions
            adds += 2 * n * d + m * d
    elif mode in ("tokenwise_only", "stgt"):
        qk = n * n * d
        av = n * n * d
        gate_norms = 3 * n * d            # qkv, projection, MLP gates
        adds = 3 * n * d
    else:
        raise ValueError(f"no closed-form cost for mode {mode!r}")
    return BlockCost(
        macs_token_wise=token_wise,
        macs_qk=qk,
        macs_av=av,
        macs_gate_overhead=gate_norms,
        adds_overhead=adds,
    )


def memory_report(n: int, d: int, h: int, bytes_per_element: int = 4) -> dict:
    """Bytes of persistent state per gated block, tensor by tensor."""
    if n <= 0 or d <= 0 or h <= 0 or bytes_per_element <= 0:
        raise ValueError("sizes must be positive")
    token = n * d * bytes_per_element
    attn = n * n * h * bytes_per_element
    report = {
        "token_gate_reference": token,
        "query_buffer": token,
        "key_buffer": token,
        "value_buffer": token,
        "similarity_buffer": attn,
        "attention_gate_reference": attn,
        "value_gate_reference": token,
        "attention_value_cache": token,
        "projection_gate_reference": token,
        "projection_buffer": token,
        "mlp_gate_reference": token,
        "mlp_buffer": token,
    }
    report["block_total"] = sum(report.values())
    return report


def savings_ratio(baseline_macs: int, eventful_macs: int) -> float:
    """How many times cheaper the gated path is (values below 1 mean dearer)."""
    if baseline_macs <= 0:
        raise ValueError("baseline count must be positive")
    if eventful_macs == 0:
        raise ZeroDivisionError("gated count is zero")
    return baseline_macs / eventful_macs
