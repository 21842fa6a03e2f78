"""Deterministic child-seed derivation.

Every stochastic component takes its generator from ``child_rng(master, *path)``
where ``path`` is a tuple of short strings and integers naming the component,
e.g. ``("basis", window_index, class_index)``. The path is serialized, hashed
with SHA-256, and the digest becomes the ``spawn_key`` of a
``numpy.random.SeedSequence`` rooted at the master seed. The scheme is
platform-independent and insensitive to the order in which components run.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _spawn_key(path: tuple) -> tuple[int, ...]:
    text = "/".join(str(p) for p in path)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    # four uint32 words are plenty of entropy for a spawn key
    return tuple(int.from_bytes(digest[4 * i : 4 * i + 4], "little") for i in range(4))


def child_seed_sequence(master: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=_spawn_key(path))


def child_rng(master: int, *path) -> np.random.Generator:
    """Generator for the component named by ``path``, derived from the master seed."""
    return np.random.default_rng(child_seed_sequence(master, *path))
