"""Initial configurations."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import _kernels
from ..core import Configuration

__all__ = [
    "SCENARIOS",
    "RANDOM_SCENARIOS",
    "all_in_one",
    "two_bin_perturbation",
    "uniform_random",
    "two_choice_placement",
    "from_file",
    "scenario",
]


def _check(n: int, m: int) -> None:
    if n < 1 or m < 0:
        raise ValueError(f"need n >= 1 and m >= 0, got n={n}, m={m}")


def all_in_one(n: int, m: int, rng=None) -> Configuration:
    _check(n, m)
    return Configuration((m,) + (0,) * (n - 1))


def two_bin_perturbation(n: int, m: int, rng=None) -> Configuration:
    """Perfect balance except one bin at avg + 1 and another at avg - 1."""
    _check(n, m)
    if n < 2 or m % n or m // n < 1:
        raise ValueError("two_bin_perturbation needs n >= 2, n | m and avg >= 1")
    a = m // n
    return Configuration((a + 1, a - 1) + (a,) * (n - 2))


def uniform_random(n: int, m: int, rng: np.random.Generator) -> Configuration:
    """Each ball in an independent uniform bin."""
    _check(n, m)
    bins = np.minimum((rng.random(m) * n).astype(np.int64), n - 1)
    return Configuration(np.bincount(bins, minlength=n))


def two_choice_placement(n: int, m: int, rng: np.random.Generator) -> Configuration:
    """Sequential placement into the lesser loaded of two uniform bins."""
    _check(n, m)
    return Configuration(_kernels.two_choice_fill(n, m, rng))


def from_file(path, n: Optional[int] = None, m: Optional[int] = None) -> Configuration:
    """Loads separated by whitespace or commas; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read configuration file {path}: {exc}") from exc
    tokens = re.split(r"[\s,]+", re.sub(r"#.*", "", text).strip())
    try:
        loads = tuple(int(t) for t in tokens if t)
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer load ({exc})") from None
    c = Configuration(loads)
    if n is not None and c.n != n:
        raise ValueError(f"{path}: has {c.n} bins, expected {n}")
    if m is not None and c.m != m:
        raise ValueError(f"{path}: has {c.m} balls, expected {m}")
    return c


SCENARIOS: dict[str, Callable] = {
    "all_in_one": all_in_one,
    "two_bin_perturbation": two_bin_perturbation,
    "uniform_random": uniform_random,
    "two_choice_placement": two_choice_placement,
}
RANDOM_SCENARIOS = frozenset({"uniform_random", "two_choice_placement"})


def scenario(name: str, n: int, m: int, rng: Optional[np.random.Generator] = None,
             path=None) -> Configuration:
    if name == "from_file":
        if path is None:
            raise ValueError("from_file needs a path")
        return from_file(path, n, m)
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; expected one of "
                         f"{sorted(SCENARIOS) + ['from_file']}") from None
    if name in RANDOM_SCENARIOS and rng is None:
        raise ValueError(f"scenario {name} needs a generator")
    return fn(n, m, rng)
