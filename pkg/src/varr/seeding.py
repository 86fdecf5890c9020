"""Hash-derived child seeds for fully reproducible runs.

Every source of randomness in the engine draws from its own
``random.Random`` whose seed is derived from the master seed plus a
stable label path:

    child_seed = sha256("{master}:{part}:{part}:...") first 8 bytes, big-endian

Label paths in use (consumers must not reuse these for new purposes):
  ("batch-order", epoch)                        per-epoch record shuffle
  ("candidate-order", record_id, t)             random/no_rule permutations
  ("negatives", record_id, t, index)            wrong-answer sampling
  ("pilot", strategy, size, record_id, sample)  pilot removal-set sampling

Deriving from stable keys instead of threading one generator through the
run keeps traces invariant under internal refactors, and lets an
independent reimplementation reproduce the exact same draws.
"""

from __future__ import annotations

import hashlib
import random


def child_seed(master_seed: int, *path: object) -> int:
    material = ":".join([str(master_seed)] + [str(p) for p in path])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def child_rng(master_seed: int, *path: object) -> random.Random:
    return random.Random(child_seed(master_seed, *path))
