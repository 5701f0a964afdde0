"""Deterministic random-stream bookkeeping.

Every stochastic stage of a shot gets its own independent generator,
keyed by (seed, shot index, stage id). Streams never depend on how many
draws earlier stages made, so shots can be reordered or parallelized
without changing any outcome.
"""

import numpy as np

# Stage ids for the per-shot pipeline.
STAGE_SAMPLE = 0
STAGE_PROJECT = 1
STAGE_M1 = 2
STAGE_EVOLVE = 3
STAGE_M2 = 4
STAGE_IMAGING = 5
STAGE_DEPHASE = 6
STAGE_BOOTSTRAP = 7


def stream(seed, *key):
    """Generator for the stream identified by (seed, *key).

    Identical arguments always yield an identical generator state.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
