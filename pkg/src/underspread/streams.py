"""Counter-based random streams: one independent Philox stream per trial index."""
from __future__ import annotations

import numpy as np

from .exceptions import ValidationError

SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValidationError("must be an unsigned 64-bit integer", field="seed")
    return seed


def trial_generator(master_seed: int, trial: int, *purpose: int) -> np.random.Generator:
    """Generator for ``trial`` under ``master_seed``.

    The stream depends only on ``(master_seed, purpose..., trial)``, never on
    how trials are scheduled, so any partition of trials over workers
    reproduces the same draws.
    """
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=(*purpose, int(trial)))
    return np.random.Generator(np.random.Philox(ss))
