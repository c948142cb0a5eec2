"""Token gates, buffers, and selection policies.

A gate holds one reference row per token (the value the token had when it
was last recomputed) and on every step selects the tokens whose current
input has drifted furthest from that reference.  A buffer holds the most
recent downstream result for every token and patches in fresh rows as they
arrive.  Together they let the rest of the pipeline run on the selected
subset only.

All gate flavors flush on their first call: every token is selected and the
reference is initialized from the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import (
    IndexSet,
    TokenMatrix,
    as_index_set,
    full_index_set,
    row_l2_norms,
)

# Threshold settings exercised for the threshold policy's config presets.
THRESHOLD_PRESETS = (0.2, 1.0, 5.0)


@dataclass
class Policy:
    """Token selection rule: fixed budget ("top_r") or error cutoff ("threshold").

    One Policy instance is shared by all gates of a block so that a budget
    change takes effect everywhere at once.
    """

    kind: str = "top_r"
    r: int = 0
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in ("top_r", "threshold"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "top_r" and self.r < 0:
            raise ValueError("budget r must be nonnegative")
        if self.kind == "threshold" and self.h < 0:
            raise ValueError("threshold h must be nonnegative")

    def select(self, norms: np.ndarray) -> IndexSet:
        if self.kind == "top_r":
            return top_r_indices(norms, self.r)
        return threshold_indices(norms, self.h)


def top_r_indices(norms: np.ndarray, r: int) -> IndexSet:
    """Ascending indices of the min(r, n) largest norms; ties favor lower index."""
    norms = np.asarray(norms, dtype=np.float64)
    if r < 0:
        raise ValueError("r must be nonnegative")
    k = min(int(r), norms.size)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    # stable sort on -norms keeps equal-norm candidates in index order
    picked = np.argsort(-norms, kind="stable")[:k].astype(np.int64)
    picked.sort()
    return picked


def threshold_indices(norms: np.ndarray, h: float) -> IndexSet:
    """Ascending indices where the norm strictly exceeds h."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    norms = np.asarray(norms, dtype=np.float64)
    return np.flatnonzero(norms > h).astype(np.int64)


class Gate:
    """Reference-comparing token gate.

    Selected tokens have their reference overwritten with the current input;
    unselected references are left untouched, so their error keeps
    accumulating until the policy picks them.
    """

    def __init__(self, n: int, width: int, policy: Policy):
        self.n = n
        self.width = width
        self.policy = policy
        self.u: TokenMatrix | None = None
        self.last_idx: IndexSet | None = None

    @property
    def initialized(self) -> bool:
        return self.u is not None

    def _check(self, c: TokenMatrix) -> TokenMatrix:
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.n, self.width):
            raise ValueError(f"expected input of shape {(self.n, self.width)}, "
                             f"got {c.shape}")
        return c

    def __call__(self, c: TokenMatrix) -> tuple[IndexSet, TokenMatrix]:
        c = self._check(c)
        if self.u is None:
            self.u = c.copy()
            idx = full_index_set(self.n)
            self.last_idx = idx
            return idx, c.copy()
        err = c - self.u
        idx = self.policy.select(row_l2_norms(err))
        picked = c[idx].copy()
        self.u[idx] = picked
        self.last_idx = idx
        return idx, picked


class DeltaGate(Gate):
    """Gate variant that reports the change amounts instead of raw tokens.

    Returns the full updated reference plus the gathered per-token change
    (current minus previous reference) at the selected indices: exactly the
    pieces an incremental product update needs.  On flush the previous state
    is treated as zero, so the reported change equals the input.
    """

    def __call__(self, c: TokenMatrix) -> tuple[IndexSet, TokenMatrix, TokenMatrix]:
        c = self._check(c)
        if self.u is None:
            self.u = c.copy()
            idx = full_index_set(self.n)
            self.last_idx = idx
            return idx, self.u, c.copy()
        err = c - self.u
        idx = self.policy.select(row_l2_norms(err))
        return idx, *self._apply(c, err, idx)

    def forced(self, c: TokenMatrix, idx: IndexSet) -> tuple[TokenMatrix, TokenMatrix]:
        """Skip the policy and update exactly the externally chosen indices.

        A first call flushes (all tokens) regardless of idx, preserving the
        flush-totality guarantee.
        """
        c = self._check(c)
        if self.u is None:
            self.u = c.copy()
            self.last_idx = full_index_set(self.n)
            return self.u, c.copy()
        idx = as_index_set(idx, self.n)
        changes = c[idx] - self.u[idx]
        self.u[idx] = c[idx]
        self.last_idx = idx
        return self.u, changes

    def _apply(self, c, err, idx):
        changes = err[idx].copy()
        self.u[idx] = c[idx]
        self.last_idx = idx
        return self.u, changes


class StgtGate:
    """Lossy previous-frame gate, reconstructing the prior method's behavior.

    Compares against the previous frame's input instead of a per-token
    reference and then overwrites the whole comparison tensor, so changes on
    unselected tokens are forgotten rather than accumulated.  Under gradual
    drift the per-frame error never grows, and tokens the policy keeps
    skipping go permanently stale.  Kept as a comparison baseline; the
    original method's exact internals are not public, so this is a
    reconstruction of its gating logic, not a reimplementation.
    """

    def __init__(self, n: int, width: int, policy: Policy):
        self.n = n
        self.width = width
        self.policy = policy
        self.p: TokenMatrix | None = None
        self.last_idx: IndexSet | None = None

    @property
    def initialized(self) -> bool:
        return self.p is not None

    def __call__(self, c: TokenMatrix) -> tuple[IndexSet, TokenMatrix]:
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.n, self.width):
            raise ValueError(f"expected input of shape {(self.n, self.width)}, "
                             f"got {c.shape}")
        if self.p is None:
            self.p = c.copy()
            idx = full_index_set(self.n)
            self.last_idx = idx
            return idx, c.copy()
        err = self.p - c
        idx = self.policy.select(row_l2_norms(err))
        picked = c[idx].copy()
        self.p = c.copy()
        self.last_idx = idx
        return idx, picked


class Buffer:
    """Dense holder of the most recent known value of every token."""

    def __init__(self, n: int, width: int):
        self.n = n
        self.width = width
        self.b: TokenMatrix | None = None

    @property
    def initialized(self) -> bool:
        return self.b is not None

    def __call__(self, idx: IndexSet, tokens: TokenMatrix) -> TokenMatrix:
        tokens = np.asarray(tokens, dtype=np.float64)
        idx = as_index_set(idx, self.n)
        if tokens.shape != (idx.size, self.width):
            raise ValueError(f"expected {(idx.size, self.width)} tokens, "
                             f"got {tokens.shape}")
        if self.b is None:
            if idx.size != self.n:
                raise ValueError("first write must cover all tokens")
            self.b = tokens.copy()
        else:
            self.b[idx] = tokens
        return self.b
