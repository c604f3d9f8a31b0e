"""Exact expected balancing times for small instances.

States are sorted load vectors (partitions of m into at most n parts).
Only vector-changing moves enter the chain: a ball leaving a bin of load
``a`` for a bin of load ``b`` with ``a >= b + 2``.  Neutral moves and
refused attempts leave the sorted vector unchanged and only stretch the
holding time, which the per-state exit rate already accounts for.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import Configuration, as_config, is_perfectly_balanced
from . import _kernels
from .engine import MARKERS, ProtocolVariant
from .sampling import RngStream

__all__ = [
    "OracleError",
    "partition_count",
    "enumerate_states",
    "transition_distribution",
    "ExactChain",
    "build_chain",
    "expected_absorption_time",
    "exact_absorption_times",
    "export_csv",
    "ValidationRow",
    "ValidationReport",
    "simulate_hitting_times",
    "validate_simulator",
]

DEFAULT_LIMIT = 10**5


class OracleError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def partition_count(m: int, parts: int, largest: int | None = None) -> int:
    """Partitions of ``m`` into at most ``parts`` parts, each <= ``largest``."""
    if largest is None:
        largest = m
    if m == 0:
        return 1
    if parts == 0 or largest == 0:
        return 0
    return sum(partition_count(m - x, parts - 1, x) for x in range(min(m, largest), 0, -1))


def enumerate_states(n: int, m: int, limit: int = DEFAULT_LIMIT) -> list[tuple[int, ...]]:
    """All non-increasing length-n vectors summing to m, lexicographically descending."""
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    count = partition_count(m, n)
    if count > limit:
        raise OracleError(f"{count} states for n={n}, m={m} exceeds limit {limit}")
    out = []

    def rec(prefix, remaining, cap):
        slots = n - len(prefix)
        if slots == 0:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        # the remaining slots can hold at most slots * cap balls
        for x in range(min(remaining, cap), -1, -1):
            if x * slots < remaining:
                break
            rec(prefix + [x], remaining - x, x)

    rec([], m, m)
    return out


def transition_distribution(state, variant=ProtocolVariant.NON_STRICT):
    """Successor law over distinct sorted vectors and the exit rate.

    Returns ``(probs, exit_rate)`` with ``probs`` a dict of Fractions summing
    to one (empty for absorbing states).  The continuous-time rate of moving
    a ball from load class ``a`` to class ``b`` is
    ``m * (count_a * a / m) * (count_b / n)``.
    """
    s = tuple(sorted(as_config(state).loads, reverse=True))
    n, m = len(s), sum(s)
    gap = ProtocolVariant(variant).gap
    counts = Counter(s)
    rates: dict = {}
    for a, ca in counts.items():
        for b, cb in counts.items():
            # a == b + 1 is neutral: allowed by the non-strict rule, but the
            # sorted vector does not change
            if a < b + gap or a == b + 1:
                continue
            nxt = list(s)
            nxt[len(s) - 1 - s[::-1].index(a)] -= 1
            nxt[s.index(b)] += 1
            key = tuple(sorted(nxt, reverse=True))
            rates[key] = rates.get(key, Fraction(0)) + Fraction(ca * a * cb, n)
    total = sum(rates.values(), Fraction(0))
    if m == 0 or total == 0:
        return {}, Fraction(0)
    return {k: v / total for k, v in rates.items()}, total


@dataclass
class ExactChain:
    n: int
    m: int
    variant: ProtocolVariant
    states: list
    index: dict
    exit_rates: np.ndarray
    transitions: list  # per state: dict successor -> Fraction
    absorbing: np.ndarray
    expected_times: np.ndarray = field(default=None)

    def time_of(self, state) -> float:
        s = tuple(sorted(as_config(state).loads, reverse=True))
        return float(self.expected_times[self.index[s]])


def build_chain(n: int, m: int, variant=ProtocolVariant.NON_STRICT, limit: int = DEFAULT_LIMIT,
                solve: bool = True) -> ExactChain:
    states = enumerate_states(n, m, limit)
    index = {s: i for i, s in enumerate(states)}
    transitions, rates = [], []
    for s in states:
        probs, rate = transition_distribution(s, variant)
        transitions.append(probs)
        rates.append(float(rate))
    absorbing = np.array([is_perfectly_balanced(Configuration(s)) for s in states])
    chain = ExactChain(n, m, ProtocolVariant(variant), states, index, np.array(rates),
                       transitions, absorbing)
    if solve:
        chain.expected_times = expected_absorption_time(chain)
    return chain


def expected_absorption_time(chain: ExactChain) -> np.ndarray:
    """Solve E[s] = 1/rate(s) + sum_s' P(s, s') E[s'] with E = 0 on absorbing states.

    Dense LU with partial pivoting (LAPACK via numpy).
    """
    k = len(chain.states)
    a = np.eye(k)
    rhs = np.zeros(k)
    for i, s in enumerate(chain.states):
        if chain.absorbing[i]:
            continue
        if chain.exit_rates[i] == 0:
            raise OracleError(f"transient state {s} has no way out")
        rhs[i] = 1.0 / chain.exit_rates[i]
        for t, p in chain.transitions[i].items():
            a[i, chain.index[t]] -= float(p)
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"singular system for n={chain.n}, m={chain.m}") from exc
    if not np.all(np.isfinite(x)) or (x < -1e-12).any():
        raise OracleError("absorption times are not finite and non-negative")
    return x


def exact_absorption_times(n: int, m: int, variant=ProtocolVariant.NON_STRICT,
                           limit: int = DEFAULT_LIMIT) -> dict:
    """Rational absorption times by back-substitution.

    Every vector-changing move lowers the sum of squared loads, so states
    can be solved in increasing order of that sum without a linear solve.
    """
    states = sorted(enumerate_states(n, m, limit), key=lambda s: sum(x * x for x in s))
    times: dict = {}
    for s in states:
        if is_perfectly_balanced(Configuration(s)):
            times[s] = Fraction(0)
            continue
        probs, rate = transition_distribution(s, variant)
        if rate == 0:
            raise OracleError(f"transient state {s} has no way out")
        times[s] = 1 / rate + sum((p * times[t] for t, p in probs.items()), Fraction(0))
    return times


def export_csv(chain: ExactChain, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "exit_rate", "expected_time"])
            for s, rate, t in zip(chain.states, chain.exit_rates, chain.expected_times):
                w.writerow([" ".join(map(str, s)), repr(float(rate)), repr(float(t))])
    except OSError as exc:
        raise OSError(f"cannot write oracle table to {path}: {exc}") from exc


@dataclass(frozen=True)
class ValidationRow:
    state: tuple
    exact: float
    mean: float
    se: float
    z: float
    runs: int
    truncated: int

    @property
    def ok(self) -> bool:
        return self.truncated == 0 and abs(self.z) <= 3.0


@dataclass
class ValidationReport:
    n: int
    m: int
    rows: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def max_abs_z(self) -> float:
        return max((abs(r.z) for r in self.rows), default=0.0)


def simulate_hitting_times(state, runs: int, rng: np.random.Generator,
                           variant=ProtocolVariant.NON_STRICT, stop: str = "perfect",
                           max_events: int = 10**9) -> np.ndarray:
    """``runs`` replicate hitting times from ``state`` on one generator (NaN if truncated)."""
    c = as_config(state)
    if c.m == 0:
        raise ValueError("no balls to activate")
    init = np.asarray(c.loads, dtype=np.int64)
    times = np.empty(runs)
    truncated = np.zeros(runs, dtype=np.bool_)
    ln_n = math.log(c.n)
    _kernels.rls_batch(init, rng, ProtocolVariant(variant).gap == 2, MARKERS.index(stop), runs,
                       max_events, c.n * 96 * ln_n, c.n * 8 * ln_n, times, truncated)
    return times


def validate_simulator(n: int, m: int, runs: int, seed: int = 0,
                       variant=ProtocolVariant.NON_STRICT, max_events: int = 10**9) -> ValidationReport:
    """Empirical mean balancing time from every sorted state vs the exact value.

    State ``i`` draws all its replicates from stream ``i`` of ``seed``.
    """
    chain = build_chain(n, m, variant)
    rows = []
    for si, s in enumerate(chain.states):
        times = simulate_hitting_times(s, runs, RngStream(seed, si).generator(), variant,
                                       max_events=max_events)
        good = times[~np.isnan(times)]
        truncated = runs - good.size
        exact = float(chain.expected_times[si])
        mean = float(good.mean()) if good.size else math.nan
        se = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else 0.0
        if se > 0:
            z = (mean - exact) / se
        else:
            z = 0.0 if abs(mean - exact) <= 1e-12 else math.inf
        rows.append(ValidationRow(s, exact, mean, se, z, runs, truncated))
    return ValidationReport(n, m, rows)
