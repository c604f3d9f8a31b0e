"""Continuous-time RLS dynamics.

The process is simulated as its jump chain: the m unit-rate ball clocks
superpose to one clock of rate m, each ring activates a ball chosen
uniformly (equivalently, its bin is chosen with probability load/m) and
the ball tries one uniformly chosen destination.  Refused attempts still
advance the clock.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .core import (
    ConfigLike,
    Configuration,
    as_config,
    discrepancy,
    overloaded_balls,
)
from .sampling import WeightedIndex, exp_holding_time, sample_uniform_bin

__all__ = [
    "MARKERS",
    "ProtocolVariant",
    "Caps",
    "Event",
    "ProcessState",
    "PhaseReport",
    "attempt_move",
    "step",
    "run_until",
    "run_with_markers",
    "marker_hits",
    "jump_distribution",
]

# first-hitting thresholds recorded by every run, from loosest to strictest
MARKERS = ("disc96ln", "disc_half_avg", "disc8ln", "overloaded_n", "disc_le1", "perfect")


class ProtocolVariant(str, enum.Enum):
    NON_STRICT = "non-strict"  # move iff load_src >= load_dst + 1
    STRICT = "strict"  # move iff load_src >= load_dst + 2

    @property
    def gap(self) -> int:
        return 2 if self is ProtocolVariant.STRICT else 1


@dataclass(frozen=True)
class Caps:
    max_events: int = 10**9
    max_clock: float = math.inf


@dataclass(frozen=True)
class Event:
    src: int
    dst: int
    moved: bool
    holding_time: float


def attempt_move(config, src: int, dst: int, variant=ProtocolVariant.NON_STRICT) -> bool:
    """Whether an activated ball in ``src`` moves to ``dst``.  Pure."""
    loads = config.loads if isinstance(config, Configuration) else config
    if loads[src] < 1:
        raise ValueError(f"source bin {src} is empty")
    if src == dst:
        return False
    return int(loads[src]) >= int(loads[dst]) + ProtocolVariant(variant).gap


class ProcessState:
    """Mutable process state.  Only the engine and adversary mutate it."""

    def __init__(self, config: ConfigLike, labeled: bool = False, clock: float = 0.0, events: int = 0):
        config = as_config(config)
        self.index = WeightedIndex(config.loads)
        self.clock = float(clock)
        self.events = int(events)
        self.labeled = labeled
        self.ball_positions = (
            np.repeat(np.arange(config.n), config.loads) if labeled else None
        )

    @property
    def loads(self) -> np.ndarray:
        return self.index.weights

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def m(self) -> int:
        return self.index.total

    @property
    def mode(self) -> str:
        return "labeled" if self.labeled else "anonymous"

    @property
    def config(self) -> Configuration:
        return Configuration(tuple(int(x) for x in self.loads))

    def move_ball(self, src: int, dst: int, ball: Optional[int] = None) -> None:
        if self.loads[src] < 1:
            raise ValueError(f"source bin {src} is empty")
        if self.labeled:
            if ball is None:
                ball = int(np.flatnonzero(self.ball_positions == src)[-1])
            elif self.ball_positions[ball] != src:
                raise ValueError(f"ball {ball} is not in bin {src}")
            self.ball_positions[ball] = dst
        self.index.update(src, -1)
        self.index.update(dst, +1)

    def set_loads(self, loads) -> None:
        """Replace the load vector (anonymous mode only)."""
        if self.labeled:
            raise ValueError("cannot overwrite loads of a labeled state")
        self.index = WeightedIndex(loads)

    def copy(self) -> "ProcessState":
        other = ProcessState.__new__(ProcessState)
        other.index = WeightedIndex(self.loads)
        other.clock = self.clock
        other.events = self.events
        other.labeled = self.labeled
        other.ball_positions = None if self.ball_positions is None else self.ball_positions.copy()
        return other


def step(state: ProcessState, variant=ProtocolVariant.NON_STRICT, rng: np.random.Generator = None) -> Event:
    """One activation: clock advance, source ball, destination, rule."""
    dt = exp_holding_time(state.m, rng)
    return _activate(state, ProtocolVariant(variant), rng, dt)


def _activate(state, variant, rng, dt) -> Event:
    ball = None
    if state.labeled:
        ball = sample_uniform_bin(state.m, rng)
        src = int(state.ball_positions[ball])
    else:
        src = state.index.sample(rng)
    dst = sample_uniform_bin(state.n, rng)
    moved = attempt_move(state.loads, src, dst, variant)
    if moved:
        state.move_ball(src, dst, ball)
    state.clock += dt
    state.events += 1
    return Event(src, dst, moved, dt)


def marker_hits(config: ConfigLike) -> tuple[bool, ...]:
    """Which of the ``MARKERS`` thresholds the configuration satisfies."""
    c = as_config(config)
    n = c.n
    d = discrepancy(c)
    ln_n = math.log(n)
    return (
        d <= 96 * ln_n,
        d <= Fraction(c.m, 2 * n),
        d <= 8 * ln_n,
        overloaded_balls(c) <= n,
        d <= 1,
        d < 1,
    )


@dataclass
class PhaseReport:
    """Outcome of a run: marker hitting times and how it ended."""

    markers: dict  # marker name -> first hitting clock time, or None
    events: int
    clock: float
    final: Configuration
    truncated: bool
    stop_time: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "truncated" if self.truncated else "stopped"

    @property
    def time(self) -> Optional[float]:
        return self.stop_time


Stop = Union[str, Callable[[Configuration], bool]]


def _marker_limits(n: int) -> tuple[float, float]:
    ln_n = math.log(n)
    return n * 96 * ln_n, n * 8 * ln_n


def _run_kernel(state, stop_idx, variant, rng, caps) -> PhaseReport:
    loads = state.loads.astype(np.int64).copy()
    markers = np.full(len(MARKERS), np.nan)
    lim96, lim8 = _marker_limits(state.n)
    events, clock, truncated = _kernels.rls_run(
        loads, rng, variant.gap == 2, stop_idx, int(caps.max_events) - state.events, float(caps.max_clock),
        float(state.clock), lim96, lim8, markers,
    )
    state.set_loads(loads)
    state.events += int(events)
    state.clock = float(clock)
    names = dict(zip(MARKERS, (None if np.isnan(t) else float(t) for t in markers)))
    return PhaseReport(
        markers=names,
        events=state.events,
        clock=state.clock,
        final=state.config,
        truncated=bool(truncated),
        stop_time=names[MARKERS[stop_idx]],
    )


def _int_marker_hits(loads, lim96: float, lim8: float) -> tuple[bool, ...]:
    """``marker_hits`` in integer arithmetic (n * disc and n * overloaded balls)."""
    n, m = len(loads), sum(loads)
    dn = max(n * max(loads) - m, m - n * min(loads))
    an = sum(n * x - m for x in loads if n * x > m)
    return (dn <= lim96, 2 * dn <= m, dn <= lim8, an <= n * n, dn <= n, dn < n)


def _python_run(state, stop, variant, rng, caps, after_event=None, on_event=None) -> PhaseReport:
    """Reference loop; ``after_event(state, event)`` may mutate the state."""
    lim96, lim8 = _marker_limits(state.n)
    markers = dict.fromkeys(MARKERS)
    hits = lambda: _int_marker_hits(state.loads.tolist(), lim96, lim8)  # noqa: E731
    if isinstance(stop, str):
        idx = MARKERS.index(stop)
        predicate = lambda h: h[idx]  # noqa: E731
    else:
        predicate = lambda h: stop(state.config)  # noqa: E731

    def record(h):
        for name, hit in zip(MARKERS, h):
            if hit and markers[name] is None:
                markers[name] = state.clock

    h = hits()
    record(h)
    done = predicate(h)
    truncated = False
    while not done:
        if state.events >= caps.max_events or state.m == 0:
            truncated = True
            break
        dt = exp_holding_time(state.m, rng)
        if state.clock + dt > caps.max_clock:
            state.clock = caps.max_clock
            truncated = True
            break
        ev = _activate(state, variant, rng, dt)
        changed = ev.moved
        if after_event is not None:
            changed = after_event(state, ev) or changed
        if on_event is not None:
            on_event(state, ev)
        if changed:
            h = hits()
            record(h)
            done = predicate(h)
    return PhaseReport(
        markers=markers,
        events=state.events,
        clock=state.clock,
        final=state.config,
        truncated=truncated,
        stop_time=None if truncated else state.clock,
    )


def run_until(state: ProcessState, stop: Stop = "perfect", variant=ProtocolVariant.NON_STRICT,
              rng: np.random.Generator = None, caps: Caps = Caps(), on_event=None) -> PhaseReport:
    """Run until ``stop`` holds or a cap is exhausted.

    ``stop`` is a marker name (see ``MARKERS``) or a predicate over
    configurations.  Anonymous runs with a marker stop and no ``on_event``
    hook use the compiled kernel; everything else runs the Python loop.
    Both consume the generator identically.
    """
    variant = ProtocolVariant(variant)
    if isinstance(stop, str) and stop not in MARKERS:
        raise ValueError(f"unknown marker {stop!r}; expected one of {MARKERS}")
    if isinstance(stop, str) and not state.labeled and on_event is None:
        return _run_kernel(state, MARKERS.index(stop), variant, rng, caps)
    return _python_run(state, stop, variant, rng, caps, on_event=on_event)


def run_with_markers(state: ProcessState, variant=ProtocolVariant.NON_STRICT,
                     rng: np.random.Generator = None, caps: Caps = Caps(), on_event=None) -> PhaseReport:
    """Run to perfect balance recording every phase marker on the way.

    Markers whose threshold lies below the smallest achievable discrepancy
    (possible only when n does not divide m) stay ``None``.
    """
    return run_until(state, "perfect", variant, rng, caps, on_event=on_event)


def jump_distribution(config: ConfigLike, variant=ProtocolVariant.NON_STRICT) -> dict:
    """Exact law of the sorted configuration after one activation.

    Enumerates every (source bin, destination bin) pair with weight
    ``load_src/m * 1/n``; keys are non-increasing load tuples.
    """
    c = as_config(config)
    n, m = c.n, c.m
    if m == 0:
        raise ValueError("no balls to activate")
    out: dict = {}
    loads = list(c.loads)
    for src in range(n):
        if loads[src] == 0:
            continue
        for dst in range(n):
            nxt = loads.copy()
            if attempt_move(loads, src, dst, variant):
                nxt[src] -= 1
                nxt[dst] += 1
            key = tuple(sorted(nxt, reverse=True))
            out[key] = out.get(key, Fraction(0)) + Fraction(loads[src], m * n)
    return out
