"""Closed-form tail bounds, epoch conversions and the phase-1 schedule.

Evaluators return the raw formula value, which may exceed one; callers
decide whether a vacuous bound matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = [
    "BoundDomainError",
    "chernoff_tail",
    "binomial_tail_large",
    "exp_sum_tail",
    "geom_sum_tail",
    "geom_sum_zero_point",
    "epoch_whp_time",
    "epoch_expected_time",
    "PhaseSchedule",
    "phase1_schedule",
    "harmonic",
    "lower_bound_times",
]


class BoundDomainError(ValueError):
    pass


def chernoff_tail(np_: float, eps: float) -> float:
    """Two-sided bound 2 exp(-eps^2 np / 3) on P(|X - np| >= eps np), X binomial."""
    if not 0.0 <= eps <= 1.5:
        raise BoundDomainError(f"eps must lie in [0, 3/2], got {eps}")
    if np_ < 0:
        raise BoundDomainError(f"np must be non-negative, got {np_}")
    return 2.0 * math.exp(-eps * eps * np_ / 3.0)


def binomial_tail_large(R: float, np_: float | None = None) -> float:
    """P(X >= R) <= 2^-R, valid for R >= 6 np.  ``np_`` enables the domain check."""
    if np_ is not None and R < 6 * np_:
        raise BoundDomainError(f"R={R} is below 6 np={6 * np_}")
    if R < 0:
        raise BoundDomainError("R must be non-negative")
    return 2.0 ** (-R)


def exp_sum_tail(lambda_min: float, variance: float, delta: float) -> float:
    """exp(lambda^2 Var / 4 - lambda delta / 2) bounding P(X >= E[X] + delta).

    X is a sum of independent exponentials with smallest rate ``lambda_min``
    and total variance at most ``variance``.
    """
    if not lambda_min > 0:
        raise BoundDomainError("lambda_min must be positive")
    if variance < 0:
        raise BoundDomainError("variance must be non-negative")
    return math.exp(lambda_min**2 * variance / 4.0 - lambda_min * delta / 2.0)


def _geom_params(p, coefficients, S, V):
    if not 0.0 < p < 1.0:
        raise BoundDomainError(f"p must lie in (0, 1), got {p}")
    c = [float(x) for x in coefficients]
    if not c or min(c) <= 0:
        raise BoundDomainError("coefficients must be a non-empty positive sequence")
    M = max(c)
    S = sum(c) if S is None else S
    V = sum(x * x for x in c) if V is None else V
    if S < sum(c) - 1e-12 * sum(c) or V < sum(x * x for x in c) * (1 - 1e-12):
        raise BoundDomainError("S and V must dominate sum(c) and sum(c^2)")
    return M, S, V, -math.log1p(-p)


def geom_sum_tail(p: float, coefficients: Sequence[float], t: float,
                  S: float | None = None, V: float | None = None) -> float:
    """Bound on P(sum c_i Y_i >= t), Y_i i.i.d. geometric(p) counting trials.

    exp(V / (4 M^2) + (S + S L - t L) / (2 M)) with L = -ln(1 - p),
    M = max c_i, S >= sum c_i and V >= sum c_i^2 (both default to equality).
    """
    M, S, V, L = _geom_params(p, coefficients, S, V)
    return math.exp(V / (4 * M * M) + (S + S * L - t * L) / (2 * M))


def geom_sum_zero_point(p: float, coefficients: Sequence[float],
                        S: float | None = None, V: float | None = None) -> float:
    """The ``t`` at which the geometric-sum bound equals one."""
    M, S, V, L = _geom_params(p, coefficients, S, V)
    return S * (1 + 1 / L) + V / (2 * M * L)


def epoch_whp_time(t: float, n: int) -> float:
    """2 t log2 n: restart epochs of length t, each succeeding with probability 1/2."""
    if t < 0 or n < 1:
        raise BoundDomainError("need t >= 0 and n >= 1")
    return 2.0 * t * math.log2(n)


def epoch_expected_time(t: float, p: float) -> float:
    """t / p: expected time when each length-t epoch succeeds with probability p."""
    if t < 0 or not 0.0 < p <= 1.0:
        raise BoundDomainError("need t >= 0 and p in (0, 1]")
    return t / p


@dataclass(frozen=True)
class PhaseSchedule:
    """Shrinking discrepancy thresholds x_0 > x_1 > ... > x_r and their time coefficients."""

    n: float
    avg: float
    ln_n: float
    x: tuple
    c: tuple
    r: int

    @property
    def total(self) -> float:
        return sum(self.c)

    @property
    def total_sq(self) -> float:
        return sum(v * v for v in self.c)

    def violations(self) -> list[str]:
        """Invariant breaches; empty when the schedule behaves as claimed."""
        out = []
        ln_n = self.ln_n
        x0 = self.x[0]
        tol = 1 + 1e-12
        for k, xk in enumerate(self.x):
            if xk > 4 * ln_n * x0 ** (1 / 2**k) * tol:
                out.append(f"x_{k}={xk} > 4 ln n x_0^(1/2^{k})")
        if self.x[-1] > 8 * ln_n * tol:
            out.append(f"x_r={self.x[-1]} > 8 ln n")
        if self.total > 32 * ln_n * tol:
            out.append(f"sum c={self.total} > 32 ln n")
        if self.total_sq > 256 * ln_n**2 * tol:
            out.append(f"sum c^2={self.total_sq} > 256 ln^2 n")
        return out


def phase1_schedule(n: float, avg: float, check: bool = True) -> PhaseSchedule:
    """Threshold recursion x_0 = avg/2, x_k = sqrt(4 x_{k-1} ln n), r = ceil(log2 log2 avg).

    ``n`` may be any real > 1 so that hand examples with a chosen ln n can be
    evaluated.  Parameters outside avg > 16 ln n are rejected when ``check``.
    """
    if n <= 1:
        raise BoundDomainError("n must exceed 1")
    ln_n = math.log(n)
    if check and not avg > 16 * ln_n:
        raise BoundDomainError(f"avg={avg} is not above 16 ln n={16 * ln_n:.4g}")
    if avg <= 2:
        raise BoundDomainError("avg must exceed 2 for log2 log2 avg to be positive")
    r = math.ceil(math.log2(math.log2(avg)))
    x = [avg / 2]
    for _ in range(r):
        x.append(math.sqrt(4 * x[-1] * ln_n))
    c = [16 * ln_n * x[0] ** (1 / 2**i) / avg for i in range(r)]
    return PhaseSchedule(n=n, avg=avg, ln_n=ln_n, x=tuple(x), c=tuple(c), r=r)


def harmonic(k: int) -> Fraction:
    """H_k by direct summation, exactly."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


def lower_bound_times(n: int, m: int) -> dict:
    """Lower bounds on the expected balancing time.

    ``activation_bound`` = H_m - H_ceil(avg): every ball of the all-in-one
    start except about avg must activate at least once.
    ``perturbation_bound`` = n/(avg + 1) for the two-bin perturbation start,
    defined only when n divides m.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    keep = -(-m // n)
    # summing only the tail terms avoids cancellation between two large H values
    act = math.fsum(1.0 / k for k in range(keep + 1, m + 1))
    pert = n / (m // n + 1) if m % n == 0 else None
    return {"activation_bound": act, "perturbation_bound": pert}
