import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rlslab.sampling import (
    EmptyIndexError,
    RngStream,
    WeightedIndex,
    build,
    derive_seed,
    exp_holding_time,
    sample_source_bin,
    sample_uniform_bin,
    update,
)

DRAWS = 10**6
ALPHA = 1e-3


def frequencies(index, draws, rng):
    counts = np.zeros(len(index), dtype=np.int64)
    for _ in range(draws):
        counts[index.sample(rng)] += 1
    return counts


def chi2_ok(counts, weights):
    w = np.asarray(weights, dtype=float)
    support = w > 0
    assert counts[~support].sum() == 0
    expected = w[support] / w.sum() * counts.sum()
    if support.sum() == 1:
        return True
    return stats.chisquare(counts[support], expected).pvalue > ALPHA


def test_weighted_index_law(rng):
    idx = build([1, 0, 3])
    assert chi2_ok(frequencies(idx, DRAWS, rng), [1, 0, 3])


def test_weighted_index_after_update(rng):
    idx = build([1, 0, 3])
    update(idx, 0, +1)
    assert chi2_ok(frequencies(idx, DRAWS // 4, rng), [2, 0, 3])


def test_single_and_uniform(rng):
    assert set(frequencies(build([5]), 1000, rng).nonzero()[0]) == {0}
    assert chi2_ok(frequencies(build([1, 1, 1, 1]), DRAWS // 4, rng), [1, 1, 1, 1])


def test_zero_delta_and_drain(rng):
    idx = build([2, 2])
    before = idx.tree.copy()
    idx.update(1, 0)
    assert np.array_equal(idx.tree, before)
    idx.update(1, -2)
    assert set(frequencies(idx, 1000, rng).nonzero()[0]) == {0}


def test_underflow_rejected():
    idx = build([1, 0])
    with pytest.raises(ValueError):
        idx.update(1, -1)
    assert idx.total == 1 and list(idx.weights) == [1, 0]


def test_empty_index(rng):
    with pytest.raises(EmptyIndexError):
        build([0, 0]).sample(rng)
    with pytest.raises(EmptyIndexError):
        sample_uniform_bin(0, rng)
    with pytest.raises(ValueError):
        build([-1, 2])


def test_source_bin_laws(rng):
    assert all(sample_source_bin(build([4, 0, 0, 0]), rng) == 0 for _ in range(1000))
    counts = frequencies(build([3, 1]), DRAWS, rng)
    p = counts[0] / DRAWS
    assert abs(p - 0.75) <= 3 * math.sqrt(0.75 * 0.25 / DRAWS)


def test_uniform_bin_law(rng):
    counts = np.bincount([sample_uniform_bin(4, rng) for _ in range(DRAWS)], minlength=4)
    sigma = math.sqrt(0.25 * 0.75 / DRAWS)
    assert np.all(np.abs(counts / DRAWS - 0.25) <= 3 * sigma)


def test_holding_time_mean(rng):
    m = 7
    x = np.array([exp_holding_time(m, rng) for _ in range(DRAWS)])
    assert abs(x.mean() - 1 / m) <= 3 * (1 / m) / math.sqrt(DRAWS)
    y = np.array([exp_holding_time(1.0, rng) for _ in range(DRAWS)])
    assert abs((y > math.log(2)).mean() - 0.5) <= 3 * 0.5 / math.sqrt(DRAWS)


@pytest.mark.parametrize("rate", [0, -1.0, float("nan")])
def test_holding_time_rejects_rate(rate, rng):
    with pytest.raises(ValueError):
        exp_holding_time(rate, rng)


def test_stream_determinism_and_separation():
    a = RngStream(42, 3).generator().random(8)
    b = RngStream(42, 3).generator().random(8)
    c = RngStream(42, 4).generator().random(8)
    d = RngStream(42, 3).aux(2).generator().random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_stream_derivation_is_philox_spawn_key():
    first = RngStream(1, 0).generator().random()
    assert first == np.random.Generator(np.random.Philox(np.random.SeedSequence(1, spawn_key=(0,)))).random()


def test_derive_seed():
    assert derive_seed(7, 16, 256) == derive_seed(7, 16, 256)
    assert derive_seed(7, 16, 256) != derive_seed(7, 32, 1024)
    assert 0 <= derive_seed(-3, "x") < 2**64


@given(st.lists(st.integers(0, 20), min_size=1, max_size=40),
       st.lists(st.tuples(st.integers(0, 39), st.integers(-5, 5)), max_size=60))
def test_prefix_sums_after_updates(weights, ops):
    idx = WeightedIndex(weights)
    shadow = list(weights)
    for i, delta in ops:
        i %= len(shadow)
        if shadow[i] + delta < 0:
            with pytest.raises(ValueError):
                idx.update(i, delta)
            continue
        idx.update(i, delta)
        shadow[i] += delta
    assert idx.total == sum(shadow)
    assert list(idx.prefix_sums()) == [sum(shadow[:k]) for k in range(len(shadow) + 1)]
    # find(t) must be the bin owning ball t under bin-by-bin numbering
    owners = [i for i, w in enumerate(shadow) for _ in range(w)]
    assert [idx.find(t) for t in range(idx.total)] == owners


def test_interleaved_updates_law(rng):
    idx = build([5, 1, 0, 2, 7])
    for i, d in [(0, -3), (2, 4), (4, -7), (1, 2), (4, 1)]:
        idx.update(i, d)
    assert list(idx.weights) == [2, 3, 4, 2, 1]
    assert chi2_ok(frequencies(idx, DRAWS // 2, rng), idx.weights)
