"""Monte Carlo validity checks for the tail bounds and the phase schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import bounds

__all__ = ["TailCheck", "tail_frequency", "check_bound", "BOUND_KINDS", "schedule_sweep"]

BOUND_KINDS = ("chernoff", "binomial_large", "exp_sum", "geom_sum")
_CHUNK = 200_000


@dataclass(frozen=True)
class TailCheck:
    kind: str
    params: dict
    bound: float
    freq: float
    se: float

    @property
    def ok(self) -> bool:
        return self.freq <= self.bound + 3 * self.se


def tail_frequency(hits: int, samples: int) -> tuple[float, float]:
    f = hits / samples
    return f, math.sqrt(f * (1 - f) / samples)


def _chunks(samples):
    left = samples
    while left > 0:
        k = min(_CHUNK, left)
        yield k
        left -= k


def _chernoff(rng, samples):
    trials = int(rng.integers(10, 500))
    p = float(rng.uniform(0.02, 0.5))
    eps = float(rng.uniform(0.05, 1.5))
    mu = trials * p
    hits = sum(int((np.abs(rng.binomial(trials, p, k) - mu) >= eps * mu).sum()) for k in _chunks(samples))
    return {"trials": trials, "p": p, "eps": eps}, bounds.chernoff_tail(mu, eps), hits


def _binomial_large(rng, samples):
    trials = int(rng.integers(5, 200))
    p = float(rng.uniform(0.0005, 0.02))
    mu = trials * p
    # smallest integer thresholds at or above 6 np are the informative ones
    R = math.ceil(6 * mu) + int(rng.integers(0, 4))
    hits = sum(int((rng.binomial(trials, p, k) >= R).sum()) for k in _chunks(samples))
    return {"trials": trials, "p": p, "R": R}, bounds.binomial_tail_large(R, mu), hits


def _exp_sum(rng, samples):
    k_terms = int(rng.integers(1, 16))
    rates = rng.uniform(0.5, 4.0, k_terms)
    lam = float(rates.min())
    var = float((1 / rates**2).sum())
    mean = float((1 / rates).sum())
    delta = float(rng.uniform(0.0, 8.0 / lam))
    hits = 0
    for k in _chunks(samples):
        x = np.zeros(k)
        for r in rates:
            x += rng.exponential(1 / r, k)
        hits += int((x >= mean + delta).sum())
    return ({"rates": rates.round(6).tolist(), "delta": delta},
            bounds.exp_sum_tail(lam, var, delta), hits)


def _geom_sum(rng, samples):
    k_terms = int(rng.integers(1, 10))
    p = float(rng.uniform(0.05, 0.95))
    c = rng.uniform(0.1, 2.0, k_terms)
    # thresholds spread from the mean to well past the point where the bound is 1
    zero = bounds.geom_sum_zero_point(p, c)
    t = float(rng.uniform(c.sum() / p, zero + 6 * c.max() / -math.log1p(-p)))
    hits = 0
    for k in _chunks(samples):
        x = np.zeros(k)
        for ci in c:
            x += ci * rng.geometric(p, k)
        hits += int((x >= t).sum())
    return {"p": p, "c": c.round(6).tolist(), "t": t}, bounds.geom_sum_tail(p, c, t), hits


_DRAWERS = {"chernoff": _chernoff, "binomial_large": _binomial_large,
            "exp_sum": _exp_sum, "geom_sum": _geom_sum}


def check_bound(kind: str, sets: int, samples: int, rng: np.random.Generator) -> list[TailCheck]:
    """Random parameter sets for one bound, each with ``samples`` Monte Carlo draws."""
    try:
        draw = _DRAWERS[kind]
    except KeyError:
        raise ValueError(f"unknown bound {kind!r}; expected one of {BOUND_KINDS}") from None
    out = []
    for _ in range(sets):
        params, bound, hits = draw(rng, samples)
        f, se = tail_frequency(hits, samples)
        out.append(TailCheck(kind, params, bound, f, se))
    return out


def schedule_sweep(count: int, rng: np.random.Generator, max_n: float = 1e6,
                   max_avg: float = 1e9) -> list[tuple[int, float, list[str]]]:
    """Random in-regime (n, avg) pairs and the schedule invariants each one breaks."""
    out = []
    for _ in range(count):
        n = int(round(math.exp(rng.uniform(math.log(2), math.log(max_n)))))
        n = max(n, 2)
        lo = 16 * math.log(n)
        avg = float(math.exp(rng.uniform(math.log(lo), math.log(max_avg))))
        if avg <= lo:
            avg = math.nextafter(lo, math.inf)
        out.append((n, avg, bounds.phase1_schedule(n, avg).violations()))
    return out
