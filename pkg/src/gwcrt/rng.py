"""Deterministic random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by Philox.  A stream is addressed by ``(seed, *keys)``: the keys go
into the spawn key of a ``SeedSequence`` so that, for instance, replicate
batch 3 of ladder rung 2 always sees the same numbers regardless of what
else ran before it.
"""
import numpy as np


def make_rng(seed, *keys):
    """Generator for stream ``keys`` under master ``seed``."""
    if isinstance(seed, np.random.Generator):
        if keys:
            raise ValueError("cannot derive keyed streams from a Generator")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng):
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.Generator(np.random.Philox())
    return make_rng(rng)
