"""Why gates compare against references instead of the previous frame.

On a slowly drifting stream, per-frame changes are tiny, so a gate that
compares against the previous frame and then forgets (the lossy scheme
prior work used for token-level skipping) never sees a large error: its
unselected tokens go stale without bound.  Reference-comparing gates
accumulate the drift until each token wins a slot, keeping the error
bounded.  Same budget, very different long-run behavior.
"""

import numpy as np

from tokengate import Model, ModelConfig, Policy, StreamConfig, gen_stream

n, d, budget = 16, 8, 2
stream = gen_stream(StreamConfig(n=n, d=d, frames=50, mode="drift", eps=0.05,
                                 seed=13))

errors = {}
for mode in ("full", "stgt"):
    cfg = ModelConfig(blocks=2, n=n, d=d, heads=2, seed=21, mode=mode,
                      policy=Policy("top_r", r=budget))
    model = Model(cfg)
    errs = []
    for frame in stream:
        tokens, _ = model.step(frame)
        exact, _ = model.baseline_frame(frame)
        errs.append(np.linalg.norm(tokens - exact) / np.linalg.norm(exact))
    errors[mode] = errs

print(f"budget r={budget} on a drift stream, relative error over time:")
print(f"{'frame':>6} {'reference gates':>16} {'lossy gates':>12}")
for t in range(0, 50, 7):
    print(f"{t:>6} {errors['full'][t]:>16.3f} {errors['stgt'][t]:>12.3f}")
print(f"{'final':>6} {errors['full'][-1]:>16.3f} {errors['stgt'][-1]:>12.3f}")
