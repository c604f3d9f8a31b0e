"""Experiment specs, batch execution, summaries and record files."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..adversary import adversarial_run, parse_schedule
from ..engine import MARKERS, Caps, ProcessState, ProtocolVariant, run_until
from ..sampling import RngStream, derive_seed
from .scenarios import RANDOM_SCENARIOS, scenario

__all__ = [
    "CSV_HEADER",
    "ExperimentSpec",
    "RunRecord",
    "parse_m",
    "load_spec",
    "cells",
    "cell_seed",
    "execute_run",
    "run_batch",
    "summarize",
    "scaling_fit",
    "FitError",
    "emit",
    "load_records",
    "thread_count",
]

TIME_COLUMNS = tuple("t_" + name for name in MARKERS)
CSV_HEADER = ("scenario", "n", "m", "variant", "stream", "events") + TIME_COLUMNS + ("truncated",)

# purposes of auxiliary streams within one run
PURPOSE_PLACEMENT = 1
PURPOSE_ADVERSARY = 2


def _fmt_time(t: Optional[float]) -> str:
    return "" if t is None else f"{t:.9g}"


def _canon_time(t: Optional[float]) -> Optional[float]:
    # records hold exactly what the files hold, so files round-trip
    return None if t is None else float(_fmt_time(t))


_M_FORMS = [
    (re.compile(r"^(\d+)$"), lambda g, n: int(g[0])),
    (re.compile(r"^n$"), lambda g, n: n),
    (re.compile(r"^n\^(\d+)$"), lambda g, n: n ** int(g[0])),
    (re.compile(r"^(\d+)\*n$"), lambda g, n: int(g[0]) * n),
    (re.compile(r"^n\*(\d+)$"), lambda g, n: n * int(g[0])),
    (re.compile(r"^n/(\d+)$"), lambda g, n: n // int(g[0])),
    (re.compile(r"^(\d+)\*n\^(\d+)$"), lambda g, n: int(g[0]) * n ** int(g[1])),
]


def parse_m(term: str, n: int) -> int:
    """Ball count from ``term``: an integer or one of n, n^k, k*n, n*k, n/k, k*n^j."""
    t = term.replace(" ", "")
    for pattern, fn in _M_FORMS:
        g = pattern.match(t)
        if g:
            return fn(g.groups(), n)
    raise ValueError(f"cannot parse m term {term!r}")


def _int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    if isinstance(text, int):
        return (text,)
    return tuple(int(float(x)) for x in str(text).split(",") if x.strip())


def _str_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(str(x) for x in text)
    return tuple(x.strip() for x in str(text).split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a batch.

    ``n`` and ``m`` are lists; with ``pair=False`` every n is combined with
    every m term (terms may depend on n, e.g. ``n^2``), with ``pair=True``
    they are zipped.  Each cell's runs draw from streams 0..runs-1 of a seed
    derived from ``seed`` and the cell, so adding cells never changes others.
    """

    scenario: str = "all_in_one"
    n: tuple = (16,)
    m: tuple = ("n^2",)
    pair: bool = False
    variant: str = "non-strict"
    schedule: Optional[str] = None
    runs: int = 100
    seed: int = 0
    stop: str = "perfect"
    max_events: int = 10**9
    max_clock: float = math.inf
    scenario_file: Optional[str] = None
    out: Optional[str] = None
    format: str = "csv"
    threads: Optional[int] = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("n", _int_list(self.n))
        set_("m", _str_list(self.m))
        set_("runs", int(self.runs))
        set_("seed", int(self.seed))
        set_("max_events", int(float(self.max_events)))
        set_("max_clock", float(self.max_clock))
        if isinstance(self.pair, str):
            set_("pair", self.pair.lower() in ("1", "true", "yes"))
        if self.schedule in ("", "none"):
            set_("schedule", None)
        ProtocolVariant(self.variant)
        if self.stop not in MARKERS:
            raise ValueError(f"unknown stop marker {self.stop!r}")
        if self.runs < 0:
            raise ValueError("runs must be non-negative")
        if self.format not in ("csv", "jsonl"):
            raise ValueError("format must be csv or jsonl")
        if self.pair and len(self.n) != len(self.m):
            raise ValueError("paired sweep needs equally long n and m lists")

    @property
    def caps(self) -> Caps:
        return Caps(self.max_events, self.max_clock)

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentSpec)}


def load_spec(path, **overrides) -> ExperimentSpec:
    """Read a flat ``key = value`` file; ``#`` comments; overrides win."""
    path = Path(path)
    values: dict = {}
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read spec {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(**values)


def cells(spec: ExperimentSpec) -> list[tuple[int, int]]:
    if spec.pair:
        return [(n, parse_m(t, n)) for n, t in zip(spec.n, spec.m)]
    return [(n, parse_m(t, n)) for n in spec.n for t in spec.m]


def cell_seed(spec: ExperimentSpec, n: int, m: int) -> int:
    return derive_seed(spec.seed, spec.scenario, n, m)


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    n: int
    m: int
    variant: str
    stream: int
    events: int
    times: tuple  # first-hitting time per marker, None when not reached
    truncated: bool

    @property
    def markers(self) -> dict:
        return dict(zip(MARKERS, self.times))

    def time(self, marker: str = "perfect") -> Optional[float]:
        return self.times[MARKERS.index(marker)]

    def row(self) -> list[str]:
        return [self.scenario, str(self.n), str(self.m), self.variant, str(self.stream),
                str(self.events), *(_fmt_time(t) for t in self.times), str(int(self.truncated))]


def execute_run(spec: ExperimentSpec, n: int, m: int, run: int, seed: Optional[int] = None) -> RunRecord:
    seed = cell_seed(spec, n, m) if seed is None else seed
    stream = RngStream(seed, run)
    place = stream.aux(PURPOSE_PLACEMENT).generator() if spec.scenario in RANDOM_SCENARIOS else None
    config = scenario(spec.scenario, n, m, place, spec.scenario_file)
    state = ProcessState(config)
    rng = stream.generator()
    if spec.schedule is None:
        rep = run_until(state, spec.stop, spec.variant, rng, spec.caps)
    else:
        sched = parse_schedule(spec.schedule, stream.aux(PURPOSE_ADVERSARY).generator())
        rep = adversarial_run(state, sched, spec.variant, rng, spec.stop, spec.caps)
    return RunRecord(
        scenario=spec.scenario, n=config.n, m=config.m, variant=ProtocolVariant(spec.variant).value,
        stream=run, events=rep.events, times=tuple(_canon_time(rep.markers[k]) for k in MARKERS),
        truncated=rep.truncated,
    )


def thread_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("RLSLAB_THREADS")
    k = requested or os.cpu_count() or 1
    if cap:
        k = min(k, max(1, int(cap)))
    return max(1, k)


def run_batch(spec: ExperimentSpec, progress=None) -> tuple[list[RunRecord], dict]:
    """All runs of every cell, ordered by (cell, run index), plus per-cell summaries.

    Runs go to a thread pool (the compiled kernels release the GIL); order
    and content do not depend on the thread count.
    """
    jobs = [(n, m, cell_seed(spec, n, m), r) for n, m in cells(spec) for r in range(spec.runs)]
    k = thread_count(spec.threads)
    if k == 1 or len(jobs) < 2:
        records = [execute_run(spec, n, m, r, s) for n, m, s, r in jobs]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            records = list(pool.map(lambda j: execute_run(spec, j[0], j[1], j[3], j[2]), jobs))
    if progress is not None:
        progress(len(records))
    return records, summarize(records)


def _stats(values: np.ndarray) -> dict:
    k = values.size
    if k == 0:
        return {"count": 0}
    sd = float(values.std(ddof=1)) if k > 1 else 0.0
    p50, p95, p99 = np.quantile(values, [0.5, 0.95, 0.99])
    return {"count": k, "mean": float(values.mean()), "sd": sd, "se": sd / math.sqrt(k),
            "p50": float(p50), "p95": float(p95), "p99": float(p99)}


def summarize(records: Sequence[RunRecord]) -> dict:
    """Per (scenario, n, m, variant) cell: runs, truncated count and marker statistics.

    Truncated runs are excluded from the marker statistics.
    """
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.scenario, rec.n, rec.m, rec.variant), []).append(rec)
    out = {}
    for key, recs in groups.items():
        done = [r for r in recs if not r.truncated]
        entry = {"runs": len(recs), "truncated": len(recs) - len(done),
                 "events": _stats(np.array([r.events for r in done], dtype=float))}
        for i, name in enumerate(MARKERS):
            vals = np.array([r.times[i] for r in done if r.times[i] is not None], dtype=float)
            entry[name] = _stats(vals)
        out[key] = entry
    return out


class FitError(ValueError):
    pass


def scaling_fit(ns: Sequence[float], means: Sequence[float]) -> tuple[float, float, float]:
    """Least squares ``mean = a + b ln n``; returns (a, b, R^2)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(means, dtype=float)
    if x.size < 3:
        raise FitError("need at least 3 groups")
    design = np.column_stack([np.ones_like(x), x])
    if np.linalg.matrix_rank(design) < 2:
        raise FitError("degenerate design: all n equal")
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (a + b * x)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-20 * max(1.0, float(y @ y)) else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(a), float(b), r2


def emit(records: Sequence[RunRecord], fmt: str, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            if fmt == "csv":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_HEADER)
                for rec in records:
                    w.writerow(rec.row())
            elif fmt == "jsonl":
                for rec in records:
                    d = dict(zip(CSV_HEADER[:6], (rec.scenario, rec.n, rec.m, rec.variant,
                                                  rec.stream, rec.events)))
                    d.update(zip(TIME_COLUMNS, rec.times))
                    d["truncated"] = rec.truncated
                    fh.write(json.dumps(d) + "\n")
            else:
                raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def _record_from(d: dict) -> RunRecord:
    def t(v):
        return None if v in ("", None) else float(v)

    trunc = d["truncated"]
    return RunRecord(
        scenario=d["scenario"], n=int(d["n"]), m=int(d["m"]), variant=d["variant"],
        stream=int(d["stream"]), events=int(d["events"]),
        times=tuple(t(d[c]) for c in TIME_COLUMNS),
        truncated=trunc if isinstance(trunc, bool) else trunc == "1",
    )


def load_records(path) -> list[RunRecord]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            if path.suffix == ".jsonl":
                return [_record_from(json.loads(line)) for line in fh if line.strip()]
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
            return [_record_from(row) for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc}") from exc
