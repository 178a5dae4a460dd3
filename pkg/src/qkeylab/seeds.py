"""Deterministic seed derivation.

Every randomized experiment in the package draws its generators from a single
master seed through `derive_seed`, which hashes the master seed together with
an ordered list of labels (scenario name, trial counter, stage name, ...).
Reruns with the same master seed and labels therefore reproduce every stream
bit-for-bit, independent of worker scheduling.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, *labels: object) -> int:
    """Hash (master_seed, labels...) into a 64-bit stream seed."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "big")


def derive_rng(master_seed: int, *labels: object) -> np.random.Generator:
    """Generator seeded by `derive_seed(master_seed, *labels)`."""
    return np.random.default_rng(derive_seed(master_seed, *labels))
