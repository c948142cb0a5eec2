"""Synthetic token streams with controllable temporal redundancy.

Modes:
  static         one random frame repeated
  sparse_change  each frame copies its predecessor, then redraws a fixed
                 fraction of token rows at a chosen noise scale
  drift          every token moves along a fixed per-token direction of a
                 chosen norm, frame after frame
  mixed          drift plus per-frame sparse redraws

All frames derive from the portable seeded generator, so a config pins the
whole stream bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitRng

STREAM_MODES = ("static", "sparse_change", "drift", "mixed")


@dataclass
class StreamConfig:
    n: int = 16
    d: int = 8
    frames: int = 8
    mode: str = "sparse_change"
    rho: float = 0.25
    sigma: float = 1.0
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in STREAM_MODES:
            raise ValueError(f"unknown stream mode {self.mode!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.sigma < 0 or self.eps < 0:
            raise ValueError("sigma and eps must be nonnegative")
        if self.frames < 1:
            raise ValueError("need at least one frame")


def gen_stream(cfg: StreamConfig) -> np.ndarray:
    """(frames, n, d) array of token matrices for the configured stream."""
    rng = SplitRng(cfg.seed).substream(2)
    frames = np.empty((cfg.frames, cfg.n, cfg.d))
    frames[0] = rng.normal((cfg.n, cfg.d))
    if cfg.mode == "static":
        frames[1:] = frames[0]
        return frames

    if cfg.mode in ("drift", "mixed"):
        directions = rng.normal((cfg.n, cfg.d))
        lengths = np.sqrt((directions ** 2).sum(axis=1, keepdims=True))
        lengths[lengths == 0] = 1.0
        directions *= cfg.eps / lengths

    redraws = int(np.ceil(cfg.rho * cfg.n)) if cfg.mode in ("sparse_change",
                                                            "mixed") else 0
    for t in range(1, cfg.frames):
        frame = frames[t - 1].copy()
        if cfg.mode in ("drift", "mixed"):
            frame += directions
        if redraws:
            rows = rng.choice_without_replacement(cfg.n, redraws)
            frame[rows] = rng.normal((redraws, cfg.d)) * cfg.sigma
        frames[t] = frame
    return frames
