"""Destructive moves, causal adversaries and the majorization coupling.

A move of one ball from bin i to bin j is destructive when
``load_i <= load_j + 1``, i.e. when it reverses some valid RLS move.

The coupling lives on sorted (non-increasing) load vectors.  Two sorted
vectors ``a`` and ``b`` are *close* when they are equal or ``b`` is ``a``
after one destructive move; with canonical tie-breaking that move goes
from ``i_r`` (last bin of its load class) to ``i_l`` (first bin of its
class) with ``i_l < i_r``.  Balls are labeled bin by bin on the left
side; the right side carries the same labels except for the distinguished
ball, the last ball of ``a[i_r]``, which sits last in ``b[i_l]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .core import ConfigLike, Configuration, as_config, discrepancy
from .engine import (
    Caps,
    Event,
    PhaseReport,
    ProcessState,
    ProtocolVariant,
    _python_run,
    attempt_move,
)
from .sampling import RngStream, exp_holding_time, sample_uniform_bin

__all__ = [
    "Move",
    "DestructiveMoveError",
    "CouplingViolation",
    "is_destructive",
    "apply_destructive",
    "AdversarySchedule",
    "NoAdversary",
    "RevertLastSuccess",
    "PileUp",
    "Scripted",
    "RandomDestructive",
    "parse_schedule",
    "load_script",
    "adversarial_run",
    "is_close",
    "CoupledPair",
    "CaseTrace",
    "classify_case",
    "coupled_transition",
    "coupled_step",
    "DominanceReport",
    "dominance_experiment",
]


@dataclass(frozen=True)
class Move:
    src: int
    dst: int

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("a move needs distinct source and destination bins")


class DestructiveMoveError(ValueError):
    """An adversary tried to apply a move that is not destructive."""

    def __init__(self, msg, **diagnostics):
        super().__init__(msg)
        self.diagnostics = diagnostics


class CouplingViolation(AssertionError):
    """Closeness broke under the coupling.  Always a bug, never expected."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


def _loads(config):
    return config.loads if isinstance(config, Configuration) else config


def is_destructive(config, mv: Move) -> bool:
    loads = _loads(config)
    if loads[mv.src] < 1:
        raise ValueError(f"source bin {mv.src} is empty")
    return int(loads[mv.src]) <= int(loads[mv.dst]) + 1


def apply_destructive(config: ConfigLike, mv: Move) -> Configuration:
    c = as_config(config)
    if not is_destructive(c, mv):
        raise DestructiveMoveError(f"{mv} is not destructive in {c.loads}", config=c.loads, move=mv)
    loads = list(c.loads)
    loads[mv.src] -= 1
    loads[mv.dst] += 1
    return Configuration(tuple(loads))


# ---------------------------------------------------------------------------
# schedules


class AdversarySchedule:
    """Causal rule: (event index, configuration, last event) -> moves.

    ``moves`` is called after every activation with the 0-based index of
    that activation; ``initial_moves`` once before the first activation.
    """

    name = "abstract"

    def initial_moves(self, config: Configuration) -> Sequence[Move]:
        return ()

    def moves(self, event_index: int, config: Configuration, event: Event) -> Sequence[Move]:
        raise NotImplementedError

    def kernel_spec(self, adv_rng=None):
        """(kind, every, prob, script) for the compiled coupled-chain loop."""
        raise NotImplementedError(f"schedule {self.name!r} has no compiled form")


class NoAdversary(AdversarySchedule):
    name = "none"

    def moves(self, event_index, config, event):
        return ()

    def kernel_spec(self, adv_rng=None):
        return _kernels.SCHED_NONE, 1, 0.0, _EMPTY_SCRIPT


class RevertLastSuccess(AdversarySchedule):
    """Undo every successful protocol move immediately."""

    name = "revert"

    def moves(self, event_index, config, event):
        if event is not None and event.moved:
            return (Move(event.dst, event.src),)
        return ()

    def kernel_spec(self, adv_rng=None):
        return _kernels.SCHED_REVERT, 1, 0.0, _EMPTY_SCRIPT


@dataclass
class PileUp(AdversarySchedule):
    """Every ``every`` activations move a ball from a least to a most loaded bin."""

    every: int = 10
    name = "pileup"

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("pile-up period must be >= 1")

    def moves(self, event_index, config, event):
        if (event_index + 1) % self.every or config.n < 2:
            return ()
        loads = config.loads
        nonempty = [i for i in range(len(loads)) if loads[i] > 0]
        src = min(nonempty, key=lambda i: (loads[i], i))
        dst = max((i for i in range(len(loads)) if i != src), key=lambda i: (loads[i], -i))
        if loads[src] > loads[dst] + 1:
            return ()
        return (Move(src, dst),)

    def kernel_spec(self, adv_rng=None):
        return _kernels.SCHED_PILEUP, int(self.every), 0.0, _EMPTY_SCRIPT


@dataclass
class Scripted(AdversarySchedule):
    """Fixed list of ``(event_index, src, dst)``; index -1 means before the start.

    Inside coupled experiments ``src``/``dst`` index the sorted configuration.
    """

    script: list = field(default_factory=list)
    name = "script"

    def __post_init__(self):
        self.script = sorted((int(e), int(s), int(d)) for e, s, d in self.script)

    def initial_moves(self, config):
        return tuple(Move(s, d) for e, s, d in self.script if e < 0)

    def moves(self, event_index, config, event):
        return tuple(Move(s, d) for e, s, d in self.script if e == event_index)

    def kernel_spec(self, adv_rng=None):
        arr = np.array(self.script, dtype=np.int64).reshape(-1, 3)
        return _kernels.SCHED_SCRIPT, 1, 0.0, arr


class RandomDestructive(AdversarySchedule):
    """After each activation, keep applying a random destructive move with probability ``prob``.

    Uses its own generator, so the protocol stream is untouched.
    """

    name = "random"

    def __init__(self, prob: float, rng: Optional[np.random.Generator] = None):
        if not 0 <= prob < 1:
            raise ValueError("prob must lie in [0, 1)")
        self.prob = prob
        self.rng = rng if rng is not None else RngStream(0, 0, purpose=2).generator()

    def moves(self, event_index, config, event):
        loads = list(config.loads)
        n = len(loads)
        out = []
        while n >= 2 and self.rng.random() < self.prob:
            i = sample_uniform_bin(n, self.rng)
            j = sample_uniform_bin(n - 1, self.rng)
            if j >= i:
                j += 1
            if loads[i] >= 1 and loads[i] <= loads[j] + 1:
                mv = Move(i, j)
            elif loads[j] >= 1 and loads[j] <= loads[i] + 1:
                mv = Move(j, i)
            else:
                break
            loads[mv.src] -= 1
            loads[mv.dst] += 1
            out.append(mv)
        return out

    def kernel_spec(self, adv_rng=None):
        return _kernels.SCHED_RANDOM, 1, float(self.prob), _EMPTY_SCRIPT


_EMPTY_SCRIPT = np.zeros((0, 3), dtype=np.int64)


def load_script(path) -> Scripted:
    """Read ``event_index src dst`` lines; blank lines and ``#`` comments skipped."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'event_index src dst', got {line!r}")
        rows.append(tuple(int(p) for p in parts))
    return Scripted(rows)


def parse_schedule(text: str, rng: Optional[np.random.Generator] = None) -> AdversarySchedule:
    """``none``, ``revert``, ``pileup:S``, ``random:P`` or ``script:PATH``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("none", ""):
        return NoAdversary()
    if kind in ("revert", "revert-last-success"):
        return RevertLastSuccess()
    if kind in ("pileup", "pile-up"):
        return PileUp(int(arg) if arg else 10)
    if kind == "random":
        return RandomDestructive(float(arg) if arg else 0.1, rng)
    if kind == "script":
        return load_script(arg)
    raise ValueError(f"unknown schedule {text!r}")


def adversarial_run(state: ProcessState, schedule: AdversarySchedule,
                    variant=ProtocolVariant.NON_STRICT, rng: np.random.Generator = None,
                    stop="perfect", caps: Caps = Caps()) -> PhaseReport:
    """RLS with ``schedule`` acting after every activation.

    Each emitted move is checked for destructiveness at application time;
    the stop predicate sees the configuration after the adversary's moves.
    """
    applied = 0

    def apply(moves, event_index):
        nonlocal applied
        changed = False
        for mv in moves:
            if not is_destructive(state.loads, mv):
                raise DestructiveMoveError(
                    f"schedule {schedule.name!r} emitted non-destructive {mv} after event {event_index}",
                    event_index=event_index, config=tuple(int(x) for x in state.loads), move=mv,
                    clock=state.clock,
                )
            state.move_ball(mv.src, mv.dst)
            applied += 1
            changed = True
        return changed

    apply(schedule.initial_moves(state.config), -1)

    def after_event(st, ev):
        return apply(schedule.moves(st.events - 1, st.config, ev), st.events - 1)

    report = _python_run(state, stop, ProtocolVariant(variant), rng, caps, after_event=after_event)
    report.diagnostics["adversary_moves"] = applied
    return report


# ---------------------------------------------------------------------------
# coupling


def _relation(a, b):
    """Pure-Python twin of the kernel's pair_canon: (status, i_l, i_r)."""
    diff = [y - x for x, y in zip(a, b)]
    nz = [i for i, d in enumerate(diff) if d]
    if not nz:
        return 0, -1, -1
    if len(nz) == 2 and diff[nz[0]] == 1 and diff[nz[1]] == -1:
        return 1, nz[0], nz[1]
    return -1, -1, -1


def is_close(left: ConfigLike, right: ConfigLike) -> bool:
    """Brute force: is sorted(right) reachable from left by at most one destructive move?"""
    a = as_config(left)
    target = tuple(sorted(as_config(right).loads, reverse=True))
    if tuple(sorted(a.loads, reverse=True)) == target:
        return True
    for i in range(a.n):
        for j in range(a.n):
            if i != j and a.loads[i] >= 1 and is_destructive(a, Move(i, j)):
                if tuple(sorted(apply_destructive(a, Move(i, j)).loads, reverse=True)) == target:
                    return True
    return False


def _sorted(loads) -> tuple:
    return tuple(sorted((int(x) for x in loads), reverse=True))


@dataclass
class CoupledPair:
    """Plain process (left) and one-more-destructive-move process (right)."""

    left: tuple
    right: tuple
    clock: float = 0.0
    events: int = 0

    def __post_init__(self):
        self.left = _sorted(self.left)
        self.right = _sorted(self.right)
        if len(self.left) != len(self.right) or sum(self.left) != sum(self.right):
            raise ValueError("sides must have the same n and m")
        if _relation(self.left, self.right)[0] < 0:
            raise CouplingViolation(f"{self.right} is not close to {self.left}")

    @classmethod
    def identical(cls, config: ConfigLike) -> "CoupledPair":
        c = as_config(config)
        return cls(c.loads, c.loads)

    @classmethod
    def from_move(cls, config: ConfigLike, mv: Move) -> "CoupledPair":
        c = as_config(config)
        return cls(c.loads, apply_destructive(c, mv).loads)

    @property
    def relation(self) -> tuple[int, int, int]:
        return _relation(self.left, self.right)

    @property
    def is_identical(self) -> bool:
        return self.left == self.right

    @property
    def distinguished_ball(self) -> Optional[int]:
        st, _, i_r = self.relation
        if st == 0:
            return None
        return sum(self.left[: i_r + 1]) - 1

    def ball_positions(self, side: str = "left") -> np.ndarray:
        """Ball id -> bin for either side under the shared labeling."""
        pos = np.repeat(np.arange(len(self.left)), self.left)
        if side == "right":
            st, i_l, _ = self.relation
            if st == 1:
                pos[self.distinguished_ball] = i_l
        elif side != "left":
            raise ValueError(side)
        return pos


@dataclass(frozen=True)
class CaseTrace:
    """Which case of the coupling analysis a draw falls into and its predicted effect."""

    case: str
    ball: int
    dest: int
    src_left: int
    src_right: int
    left_moves: bool
    right_moves: bool
    left: tuple
    right: tuple


def classify_case(pair: CoupledPair, ball: int, dest: int) -> CaseTrace:
    """Classify a shared draw (non-strict rule) by the five coupling cases.

    The predicted success of each side comes from the case table, not from
    evaluating the RLS rule, so it can be checked against the mechanics.
    """
    a, b = pair.left, pair.right
    pos_l = pair.ball_positions("left")
    pos_r = pair.ball_positions("right")
    s_l, s_r, d = int(pos_l[ball]), int(pos_r[ball]), dest
    st, i_l, i_r = pair.relation

    def trace(case, lm, rm):
        return CaseTrace(case, ball, dest, s_l, s_r, lm, rm, a, b)

    if st == 0:
        ok = a[s_l] >= a[d] + 1
        return trace("identity", ok, ok)
    if s_l == i_r:
        if ball == pair.distinguished_ball:
            if d <= i_l:
                return trace("2a: distinguished, dest <= i_l", False, False)
            if d <= i_r:
                return trace("2b: distinguished, i_l < dest <= i_r", False, True)
            return trace("2c: distinguished, dest > i_r", True, True)
        if a[d] > a[i_r] - 1:
            return trace("2d: other ball, dest load > l[i_r]-1", False, False)
        if a[d] == a[i_r] - 1:
            return trace("2e: other ball, dest load = l[i_r]-1", True, False)
        return trace("2f: other ball, dest load < l[i_r]-1", True, True)
    if s_l == i_l:
        if d == i_r:
            return trace("3d: dest = i_r", a[i_l] > a[i_r], True)
        if b[d] > b[i_l] - 1:
            return trace("3a: dest load' > l'[i_l]-1", False, False)
        if b[d] == b[i_l] - 1:
            return trace("3b: dest load' = l'[i_l]-1", False, True)
        return trace("3c: dest load' < l'[i_l]-1", True, True)
    if d == i_l:
        if b[s_l] < b[i_l]:
            return trace("4a: src load' < l'[i_l]", False, False)
        if b[s_l] == b[i_l]:
            return trace("4b: src load' = l'[i_l]", True, False)
        return trace("4c: src load' > l'[i_l]", True, True)
    if d == i_r:
        if a[s_l] < a[i_r]:
            return trace("5a: src load < l[i_r]", False, False)
        if a[s_l] == a[i_r]:
            return trace("5b: src load = l[i_r]", False, True)
        return trace("5c: src load > l[i_r]", True, True)
    ok = a[s_l] >= a[d] + 1
    return trace("1: src, dest outside {i_l, i_r}", ok, ok)


def coupled_transition(pair: CoupledPair, ball: int, dest: int,
                       variant=ProtocolVariant.NON_STRICT) -> CoupledPair:
    """Deterministic coupled update for a shared (ball, destination) draw."""
    chain = np.array([pair.left, pair.right], dtype=np.int64)
    k = 2
    balls = np.zeros(k, dtype=np.int64)
    pre_x = np.zeros(k, dtype=np.int64)
    pre_y = np.zeros(k, dtype=np.int64)
    moved = np.zeros(k, dtype=np.bool_)
    bad = _kernels.chain_step(chain, k, int(ball), int(dest), ProtocolVariant(variant).gap,
                              balls, pre_x, pre_y, moved)
    if bad >= 0:
        raise CouplingViolation(
            f"closeness lost: {pair.left} / {pair.right} with ball {ball}, dest {dest}",
            trace=classify_case(pair, ball, dest),
        )
    return CoupledPair(tuple(chain[0]), tuple(chain[1]), pair.clock, pair.events)


def coupled_step(pair: CoupledPair, rng: np.random.Generator,
                 variant=ProtocolVariant.NON_STRICT) -> CoupledPair:
    """Shared holding time, activated ball and destination rank for both sides."""
    m, n = sum(pair.left), len(pair.left)
    dt = exp_holding_time(m, rng)
    ball = sample_uniform_bin(m, rng)
    dest = sample_uniform_bin(n, rng)
    out = coupled_transition(pair, ball, dest, variant)
    out.clock = pair.clock + dt
    out.events = pair.events + 1
    if discrepancy(out.left) > discrepancy(out.right):
        raise CouplingViolation(f"disc(left) > disc(right) at {out.left} / {out.right}")
    return out


@dataclass
class DominanceReport:
    runs: int = 0
    events_checked: int = 0
    closeness_violations: int = 0
    disc_violations: int = 0  # disc(plain) > disc(adversarial)
    pair_disc_violations: int = 0  # disc(member k) > disc(member k+1)
    adversary_moves: int = 0
    max_chain_len: int = 1
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.closeness_violations or self.disc_violations
                    or self.pair_disc_violations or self.failures)


def _merge(report, res, run, diag, rows, init):
    err, events, dv, pv, longest, moves = res
    report.runs += 1
    report.events_checked += int(events)
    report.disc_violations += int(dv)
    report.pair_disc_violations += int(pv)
    report.adversary_moves += int(moves)
    report.max_chain_len = max(report.max_chain_len, int(longest))
    if err != _kernels.OK:
        kind = {
            _kernels.ERR_CLOSENESS: "closeness",
            _kernels.ERR_NOT_DESTRUCTIVE: "not-destructive",
            _kernels.ERR_CHAIN_FULL: "chain-full",
        }[int(err)]
        if kind == "closeness":
            report.closeness_violations += 1
        report.failures.append({
            "run": run, "kind": kind, "event": int(diag[0]), "pair": int(diag[1]),
            "ball": int(diag[2]), "dest": int(diag[3]), "move": (int(diag[4]), int(diag[5])),
            "rows": rows.tolist(), "initial": tuple(init),
        })


def dominance_experiment(initial: ConfigLike, schedule: AdversarySchedule, steps: int, runs: int,
                         seed: int = 0, variant=ProtocolVariant.NON_STRICT,
                         max_chain: int = 4096, schedule_factory=None) -> DominanceReport:
    """Pointwise disc(plain) <= disc(adversarial) under the coupling.

    The adversarial process is the end of a chain P0, P1, ..., PK where
    P(k+1) adds the (k+1)-th destructive move; consecutive members are
    coupled pairwise, so closeness of every pair gives the comparison
    between the ends at every event.  ``schedule_factory(run, rng)`` may
    supply a fresh schedule per run.
    """
    init = np.array(_sorted(as_config(initial).loads), dtype=np.int64)
    if init.sum() == 0:
        raise ValueError("need at least one ball")
    gap = ProtocolVariant(variant).gap
    report = DominanceReport()
    for r in range(runs):
        stream = RngStream(seed, r)
        rng = stream.generator()
        adv_rng = stream.aux(2).generator()
        sched = schedule if schedule_factory is None else schedule_factory(r, stream.aux(3).generator())
        kind, every, prob, script = sched.kernel_spec()
        diag = np.full(6, -1, dtype=np.int64)
        rows = np.zeros((2, init.size), dtype=np.int64)
        res = _kernels.dominance_run(init, rng, adv_rng, gap, int(steps), kind, every, prob,
                                     script, max_chain, diag, rows)
        _merge(report, res, r, diag, rows, init)
    return report
