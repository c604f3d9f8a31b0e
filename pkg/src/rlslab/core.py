"""Configurations and the balance metrics every other module relies on.

All comparisons against the average load are carried out in exact rational
arithmetic so that thresholds such as ``disc < 1`` versus ``disc <= 1`` are
never misclassified by floating point round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

__all__ = [
    "Configuration",
    "BalanceMetrics",
    "ConfigLike",
    "as_config",
    "average_load",
    "discrepancy",
    "overloaded_balls",
    "holes",
    "bin_classes",
    "potential",
    "is_x_balanced",
    "is_perfectly_balanced",
    "min_discrepancy",
    "metrics",
]


@dataclass(frozen=True)
class Configuration:
    """Load vector over ``n`` bins holding ``m`` balls in total."""

    loads: tuple[int, ...]

    def __post_init__(self):
        loads = tuple(int(x) for x in self.loads)
        if len(loads) < 1:
            raise ValueError("a configuration needs at least one bin")
        if any(x < 0 for x in loads):
            raise ValueError(f"negative load in {loads}")
        object.__setattr__(self, "loads", loads)

    @property
    def n(self) -> int:
        return len(self.loads)

    @property
    def m(self) -> int:
        return sum(self.loads)

    def sorted(self) -> "Configuration":
        """Canonical non-increasing representative."""
        return Configuration(tuple(sorted(self.loads, reverse=True)))

    def __len__(self):
        return len(self.loads)

    def __iter__(self):
        return iter(self.loads)

    def __getitem__(self, i):
        return self.loads[i]


ConfigLike = Union[Configuration, Sequence[int]]


def as_config(c: ConfigLike) -> Configuration:
    if isinstance(c, Configuration):
        return c
    return Configuration(tuple(c))


def average_load(c: ConfigLike) -> Fraction:
    c = as_config(c)
    return Fraction(c.m, c.n)


def discrepancy(c: ConfigLike) -> Fraction:
    """max_i |load_i - m/n| as an exact fraction."""
    c = as_config(c)
    avg = average_load(c)
    return max(max(c.loads) - avg, avg - min(c.loads))


def overloaded_balls(c: ConfigLike) -> Fraction:
    """Sum over bins of the excess above the average load."""
    c = as_config(c)
    avg = average_load(c)
    return sum((x - avg for x in c.loads if x > avg), Fraction(0))


def holes(c: ConfigLike) -> Fraction:
    """Sum over bins of the deficit below the average load."""
    c = as_config(c)
    avg = average_load(c)
    return sum((avg - x for x in c.loads if x < avg), Fraction(0))


def bin_classes(c: ConfigLike) -> tuple[int, int, int]:
    """Counts (h, r, k) of bins above, at and below the average load."""
    c = as_config(c)
    n, m = c.n, c.m
    # n*x vs m avoids forming the fraction at all
    h = sum(1 for x in c.loads if n * x > m)
    k = sum(1 for x in c.loads if n * x < m)
    return h, n - h - k, k


def potential(c: ConfigLike) -> int:
    """``3A - k - h``, only meaningful when the average load is integral.

    Raises ``ValueError`` if ``n`` does not divide ``m``.
    """
    c = as_config(c)
    if c.m % c.n:
        raise ValueError(f"potential needs an integer average load, got m={c.m}, n={c.n}")
    h, _, k = bin_classes(c)
    return 3 * int(overloaded_balls(c)) - k - h


def is_x_balanced(c: ConfigLike, x) -> bool:
    if isinstance(x, float):
        x = Fraction(x)
    return discrepancy(c) <= x


def is_perfectly_balanced(c: ConfigLike) -> bool:
    return discrepancy(c) < 1


def min_discrepancy(n: int, m: int) -> Fraction:
    """Smallest discrepancy any configuration of m balls in n bins can have."""
    if m % n == 0:
        return Fraction(0)
    avg = Fraction(m, n)
    lo = m // n
    return max(lo + 1 - avg, avg - lo)


@dataclass(frozen=True)
class BalanceMetrics:
    discrepancy: Fraction
    min_load: int
    max_load: int
    overloaded_balls: Fraction
    h: int
    r: int
    k: int
    potential: int | None  # None unless n divides m


def metrics(c: ConfigLike) -> BalanceMetrics:
    c = as_config(c)
    h, r, k = bin_classes(c)
    pot = potential(c) if c.m % c.n == 0 else None
    return BalanceMetrics(
        discrepancy=discrepancy(c),
        min_load=min(c.loads),
        max_load=max(c.loads),
        overloaded_balls=overloaded_balls(c),
        h=h,
        r=r,
        k=k,
        potential=pot,
    )
