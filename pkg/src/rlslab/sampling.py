"""Seeded random streams and a Fenwick-tree weighted index.

Every random draw in the package is a uniform double from a NumPy
``Generator`` backed by the counter-based Philox bit generator, turned into
the wanted law by inverse-CDF.  Because only ``Generator.random()`` is used,
compiled kernels that receive the same generator consume exactly the same
draws as the pure Python code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "RngStream",
    "WeightedIndex",
    "EmptyIndexError",
    "build",
    "update",
    "sample_source_bin",
    "sample_uniform_bin",
    "exp_holding_time",
    "derive_seed",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Recipe for a reproducible stream: ``(seed, stream_id)`` fixes every draw.

    ``purpose`` separates auxiliary streams (initial placement, adversary
    coin flips) from the protocol stream of the same run.
    """

    seed: int
    stream_id: int = 0
    purpose: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def seed_sequence(self) -> np.random.SeedSequence:
        key = (self.stream_id,) if self.purpose == 0 else (self.stream_id, self.purpose)
        return np.random.SeedSequence(self.seed, spawn_key=key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def aux(self, purpose: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, purpose)


def derive_seed(master: int, *parts) -> int:
    """Hash ``parts`` into ``master`` to get an independent 64-bit sub-seed."""
    import hashlib

    text = ":".join(str(p) for p in (int(master), *parts)).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


class EmptyIndexError(ValueError):
    pass


# Fenwick tree helpers.  ``tree`` is 1-based with tree[0] unused.

@njit(cache=True, nogil=True)
def fenwick_build(weights):
    n = weights.shape[0]
    tree = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        tree[i] += weights[i - 1]
        j = i + (i & -i)
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(cache=True, nogil=True)
def fenwick_add(tree, i, delta):
    n = tree.shape[0] - 1
    i += 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True, nogil=True)
def fenwick_prefix(tree, i):
    """Sum of weights[0:i]."""
    s = 0
    while i > 0:
        s += tree[i]
        i -= i & -i
    return s


@njit(cache=True, nogil=True)
def fenwick_find(tree, target):
    """Smallest index whose inclusive prefix sum exceeds ``target``."""
    n = tree.shape[0] - 1
    bit = 1
    while bit * 2 <= n:
        bit *= 2
    pos = 0
    rem = target
    while bit > 0:
        nxt = pos + bit
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        bit //= 2
    return pos


class WeightedIndex:
    """Dynamic integer weights with O(log n) update and proportional sampling."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.int64).copy()
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        self.weights = w
        self.total = int(w.sum())
        self.tree = fenwick_build(w)

    def __len__(self):
        return self.weights.size

    def update(self, i: int, delta: int) -> None:
        if delta == 0:
            return
        new = int(self.weights[i]) + delta
        if new < 0:
            raise ValueError(f"weight {i} would drop below zero ({new})")
        self.weights[i] = new
        self.total += delta
        fenwick_add(self.tree, i, delta)

    def find(self, target: int) -> int:
        """Index owning the ``target``-th unit of weight (0-based)."""
        if not 0 <= target < self.total:
            raise IndexError(target)
        return int(fenwick_find(self.tree, target))

    def sample(self, rng: np.random.Generator) -> int:
        if self.total <= 0:
            raise EmptyIndexError("cannot sample from an all-zero index")
        target = int(rng.random() * self.total)
        if target >= self.total:  # u*total rounding up to total
            target = self.total - 1
        return int(fenwick_find(self.tree, target))

    def prefix_sums(self) -> np.ndarray:
        return np.array([fenwick_prefix(self.tree, i) for i in range(len(self) + 1)])


def build(weights) -> WeightedIndex:
    return WeightedIndex(weights)


def update(w: WeightedIndex, i: int, delta: int) -> None:
    w.update(i, delta)


def sample_source_bin(w: WeightedIndex, rng: np.random.Generator) -> int:
    """Bin of a uniformly chosen ball, i.e. bin i with probability load_i / m."""
    return w.sample(rng)


def sample_uniform_bin(n: int, rng: np.random.Generator) -> int:
    if n < 1:
        raise EmptyIndexError("no bins to choose from")
    i = int(rng.random() * n)
    return n - 1 if i >= n else i


def exp_holding_time(rate: float, rng: np.random.Generator) -> float:
    """Inverse-CDF exponential draw with the given rate."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    return -math.log1p(-rng.random()) / rate
