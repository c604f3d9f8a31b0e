import math

import numpy as np
import pytest

from rlslab.core import discrepancy, is_perfectly_balanced
from rlslab.harness.experiment import (
    CSV_HEADER,
    ExperimentSpec,
    FitError,
    cells,
    emit,
    execute_run,
    load_records,
    load_spec,
    parse_m,
    run_batch,
    scaling_fit,
    summarize,
)
from rlslab.harness.scenarios import (
    all_in_one,
    from_file,
    scenario,
    two_bin_perturbation,
    two_choice_placement,
    uniform_random,
)
from rlslab.sampling import RngStream


def test_deterministic_scenarios():
    assert all_in_one(4, 7).loads == (7, 0, 0, 0)
    assert two_bin_perturbation(5, 15).loads == (4, 2, 3, 3, 3)
    assert discrepancy(two_bin_perturbation(50, 500)) == 1
    with pytest.raises(ValueError):
        two_bin_perturbation(4, 7)
    with pytest.raises(ValueError):
        two_bin_perturbation(1, 3)
    with pytest.raises(ValueError):
        all_in_one(0, 3)


def test_uniform_random_placement():
    rng = RngStream(1).generator()
    loads = np.array([uniform_random(8, 64, rng).loads for _ in range(4000)])
    assert (loads.sum(axis=1) == 64).all()
    # each bin is Binomial(64, 1/8)
    assert np.abs(loads.mean(axis=0) - 8).max() <= 4 * math.sqrt(7 / 4000)
    assert loads.var() == pytest.approx(64 / 8 * 7 / 8, rel=0.05)


def test_two_choice_placement_is_tight():
    rng = RngStream(2).generator()
    for _ in range(50):
        c = two_choice_placement(64, 64 * 16, rng)
        # only the overload is tight under two choices; the minimum can lag further
        assert c.m == 1024 and max(c.loads) - 16 <= 4
    # two choices beat one on the same budget
    one = np.mean([max(uniform_random(64, 1024, rng).loads) for _ in range(50)])
    two = np.mean([max(two_choice_placement(64, 1024, rng).loads) for _ in range(50)])
    assert two < one


def test_from_file(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# loads\n3, 1 0\n2\n")
    assert from_file(p).loads == (3, 1, 0, 2)
    assert scenario("from_file", 4, 6, path=p).loads == (3, 1, 0, 2)
    with pytest.raises(ValueError):
        from_file(p, n=3)
    with pytest.raises(ValueError):
        from_file(p, m=7)
    (tmp_path / "bad.txt").write_text("1 x\n")
    with pytest.raises(ValueError):
        from_file(tmp_path / "bad.txt")
    with pytest.raises(OSError):
        from_file(tmp_path / "missing.txt")


def test_scenario_dispatch():
    with pytest.raises(ValueError):
        scenario("nope", 2, 2)
    with pytest.raises(ValueError):
        scenario("uniform_random", 2, 2)
    with pytest.raises(ValueError):
        scenario("from_file", 2, 2)


@pytest.mark.parametrize("term, n, m", [("12", 5, 12), ("n", 7, 7), ("n^2", 16, 256), ("4*n", 8, 32),
                                        ("n*3", 8, 24), ("n/2", 9, 4), ("2*n^2", 4, 32), (" n ^ 2 ", 3, 9)])
def test_parse_m(term, n, m):
    assert parse_m(term, n) == m


def test_parse_m_rejects():
    with pytest.raises(ValueError):
        parse_m("n**2", 4)


def test_cells():
    spec = ExperimentSpec(n="4,8", m="n,n^2")
    assert cells(spec) == [(4, 4), (4, 16), (8, 8), (8, 64)]
    assert cells(spec.replace(pair=True)) == [(4, 4), (8, 64)]
    with pytest.raises(ValueError):
        ExperimentSpec(n="4,8", m="n", pair=True)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(stop="never")
    with pytest.raises(ValueError):
        ExperimentSpec(variant="lazy")
    with pytest.raises(ValueError):
        ExperimentSpec(format="xml")
    assert ExperimentSpec(schedule="none").schedule is None


def test_load_spec(tmp_path):
    p = tmp_path / "exp.txt"
    p.write_text("# sweep\nscenario = uniform_random\nn = 8, 16\nm = n^2  # quadratic\nruns = 1e3\n")
    spec = load_spec(p, runs=5)
    assert spec.scenario == "uniform_random" and spec.n == (8, 16) and spec.m == ("n^2",)
    assert spec.runs == 5
    p.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        load_spec(p)
    with pytest.raises(OSError):
        load_spec(tmp_path / "missing.txt")


def test_zero_runs_give_empty_outputs(tmp_path):
    records, summary = run_batch(ExperimentSpec(runs=0))
    assert records == [] and summary == {}
    emit(records, "csv", tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == ",".join(CSV_HEADER) + "\n"
    assert load_records(tmp_path / "r.csv") == []


def test_csv_header_exact(tmp_path):
    assert CSV_HEADER == ("scenario", "n", "m", "variant", "stream", "events", "t_disc96ln", "t_disc_half_avg",
                          "t_disc8ln", "t_overloaded_n", "t_disc_le1", "t_perfect", "truncated")


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_records_round_trip(tmp_path, fmt):
    spec = ExperimentSpec(scenario="uniform_random", n=(6, 9), m=("n^2",), runs=7, seed=4, stop="perfect")
    records, summary = run_batch(spec)
    path = tmp_path / f"r.{fmt}"
    emit(records, fmt, path)
    back = load_records(path)
    assert back == records
    assert summarize(back) == summary


def test_determinism_across_thread_counts(tmp_path, monkeypatch):
    monkeypatch.delenv("RLSLAB_THREADS", raising=False)
    spec = ExperimentSpec(scenario="two_choice_placement", n=(8, 12), m=("n^2",), runs=20, seed=9,
                          schedule="random:0.05", max_events=20_000)
    outs = []
    for k in (1, 4):
        records, _ = run_batch(spec.replace(threads=k))
        emit(records, "csv", tmp_path / f"t{k}.csv")
        outs.append((tmp_path / f"t{k}.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cells_are_independent_of_each_other():
    a, _ = run_batch(ExperimentSpec(n=(8,), m=("n^2",), runs=5, seed=1))
    b, _ = run_batch(ExperimentSpec(n=(4, 8), m=("n^2",), runs=5, seed=1))
    assert a == [r for r in b if r.n == 8]


def test_execute_run_markers_consistent():
    spec = ExperimentSpec(scenario="two_bin_perturbation", n=(6,), m=("n*3",), runs=1)
    for run in range(30):
        rec = execute_run(spec, 6, 18, run)
        t = rec.markers
        # disc is already 1 at the start: every marker except perfect is hit at time 0
        assert all(t[k] == 0 for k in ("disc96ln", "disc_half_avg", "disc8ln", "overloaded_n", "disc_le1"))
        assert t["perfect"] > 0 and not rec.truncated and rec.time() == t["perfect"]


def test_truncation_is_reported():
    spec = ExperimentSpec(n=(32,), m=("n^2",), runs=3, max_events=10)
    records, summary = run_batch(spec)
    assert all(r.truncated and r.events == 10 and r.time() is None for r in records)
    cell = summary[("all_in_one", 32, 1024, "non-strict")]
    assert cell["truncated"] == 3 and cell["perfect"] == {"count": 0}


def test_summary_statistics():
    spec = ExperimentSpec(n=(4,), m=("n^2",), runs=200, seed=2)
    records, summary = run_batch(spec)
    t = np.array([r.time() for r in records])
    s = summary[("all_in_one", 4, 16, "non-strict")]["perfect"]
    assert s["count"] == 200 and s["mean"] == pytest.approx(t.mean())
    assert s["se"] == pytest.approx(t.std(ddof=1) / math.sqrt(200))
    assert s["p50"] <= s["p95"] <= s["p99"] <= t.max()


def test_adversarial_batch_is_slower():
    base = ExperimentSpec(n=(8,), m=("n*4",), runs=100, seed=3, max_events=10**6)
    _, plain = run_batch(base)
    _, piled = run_batch(base.replace(schedule="pileup:20"))
    key = ("all_in_one", 8, 32, "non-strict")
    assert piled[key]["perfect"]["mean"] >= plain[key]["perfect"]["mean"]


def test_scaling_fit():
    a, b, r2 = scaling_fit([2, 4, 8, 16], [1 + 2 * math.log(n) for n in (2, 4, 8, 16)])
    assert (a, b, r2) == pytest.approx((1, 2, 1))
    assert scaling_fit([2, 4, 8], [3, 3, 3])[2] == 1.0
    _, _, r2 = scaling_fit([2, 4, 8, 16], [1, 5, 2, 7])
    assert r2 < 0.9
    with pytest.raises(FitError):
        scaling_fit([4, 4, 4], [1, 2, 3])
    with pytest.raises(FitError):
        scaling_fit([2, 4], [1, 2])


def test_perfect_time_matches_final_state():
    spec = ExperimentSpec(scenario="uniform_random", n=(7,), m=("n^2",), runs=1)
    from rlslab.engine import ProcessState, run_until
    from rlslab.harness.experiment import PURPOSE_PLACEMENT, cell_seed

    seed = cell_seed(spec, 7, 49)
    for run in range(10):
        rec = execute_run(spec, 7, 49, run)
        stream = RngStream(seed, run)
        init = uniform_random(7, 49, stream.aux(PURPOSE_PLACEMENT).generator())
        rep = run_until(ProcessState(init), "perfect", rng=stream.generator())
        assert is_perfectly_balanced(rep.final)
        assert rec.events == rep.events and rec.time() == pytest.approx(rep.time, rel=1e-8)
