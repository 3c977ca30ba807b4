import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqprint.errors import EmptyWindowError, IncompatibleProfileError
from seqprint.extract import Distribution, PatternProfile, extract_profile, merge_profiles, normalize
from seqprint.metrics import (
    concentration_stats,
    deviation_score,
    entropy_upper_bound,
    pattern_entropy,
    recurrence_histogram,
)
from seqprint.seqgen import BitSequence

import oracles

DEBRUIJN3 = "0001011100"


def seq(s):
    return BitSequence.from_bits(s)


def dist(m, d):
    return Distribution.from_dict(m, d)


def test_de_bruijn_oracle():
    assert oracles.de_bruijn_linear(3) == DEBRUIJN3
    for k in (3, 4, 8):
        s = oracles.de_bruijn_linear(k)
        assert len(s) == 2**k + k - 1
        assert sorted(oracles.naive_profile(s, k).values()) == [1] * 2**k


# --- deviation


def test_deviation_identity_and_disjoint():
    p = normalize(extract_profile(seq("0110100111"), 3))
    assert deviation_score(p, p) == 0.0
    a = normalize(extract_profile(seq("0000"), 2))
    b = normalize(extract_profile(seq("1111"), 2))
    assert deviation_score(a, b) == 2.0
    assert deviation_score(dist(2, {"00": 1.0}), dist(2, {"11": 1.0})) == 2.0


def test_deviation_hand_example():
    a = dist(2, {"00": 0.5, "01": 0.5})
    b = dist(2, {"00": 0.25, "01": 0.25, "10": 0.5})
    assert deviation_score(a, b) == pytest.approx(1.0, abs=1e-15)


def test_deviation_exact_matches_float_path():
    a = normalize(extract_profile(seq("011010011101001"), 3))
    b = normalize(extract_profile(seq("1110001010"), 3))
    af = Distribution(a.m, a.values, a.probs)
    bf = Distribution(b.m, b.values, b.probs)
    assert deviation_score(a, b) == pytest.approx(deviation_score(af, bf), abs=1e-15)


def test_deviation_mismatched_m():
    with pytest.raises(IncompatibleProfileError):
        deviation_score(dist(2, {"00": 1.0}), dist(3, {"000": 1.0}))


def _random_dist(rng, m=4):
    k = rng.integers(1, 2**m + 1)
    support = rng.choice(2**m, size=k, replace=False)
    w = rng.random(k) + 1e-3
    return Distribution(m, np.sort(support).astype(np.uint64), w[np.argsort(support)] / w.sum())


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_deviation_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_dist(rng) for _ in range(3))
    dab = deviation_score(a, b)
    assert 0.0 <= dab <= 2.0 + 1e-12
    assert dab == pytest.approx(deviation_score(b, a), abs=1e-15)
    assert deviation_score(a, c) <= dab + deviation_score(b, c) + 1e-9
    assert deviation_score(a, a) == 0.0


# --- entropy


def test_entropy_examples():
    assert pattern_entropy(normalize(extract_profile(seq("0" * 12), 3))) == 0.0
    assert pattern_entropy(normalize(extract_profile(seq(DEBRUIJN3), 3))) == pytest.approx(3.0, abs=1e-12)
    h = pattern_entropy(normalize(extract_profile(seq("0101"), 2)))
    assert h == pytest.approx(-(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3), abs=1e-12)
    assert h == pytest.approx(0.918296, abs=1e-6)


def test_entropy_from_probabilities_only():
    d = dist(2, {"00": 0.5, "01": 0.25, "10": 0.25})
    assert pattern_entropy(d) == pytest.approx(1.5, abs=1e-15)


@settings(max_examples=200)
@given(st.text(alphabet="01", min_size=1, max_size=300), st.integers(1, 12))
def test_entropy_bounds(s, m):
    if m > len(s):
        return
    p = extract_profile(seq(s), m)
    h = pattern_entropy(normalize(p))
    assert -1e-12 <= h <= entropy_upper_bound(m, p.total_windows) + 1e-9


@pytest.mark.parametrize("k", [3, 4, 8])
def test_de_bruijn_reaches_bound(k):
    p = extract_profile(seq(oracles.de_bruijn_linear(k)), k)
    assert pattern_entropy(normalize(p)) == pytest.approx(k, abs=1e-9)


def test_entropy_scale_invariance():
    p = extract_profile(seq("0110100111010"), 3)
    assert concentration_stats(merge_profiles([p, p])).entropy_bits == pytest.approx(
        concentration_stats(p).entropy_bits, abs=1e-12
    )


# --- recurrence


def test_recurrence_examples():
    assert recurrence_histogram(extract_profile(seq(DEBRUIJN3), 3)).bins == (1.0, 0.0, 0.0, 0.0, 0.0)
    assert recurrence_histogram(extract_profile(seq("0" * 10), 3)).bins == (0.0, 0.0, 0.0, 0.0, 1.0)


def test_recurrence_mixed():
    # counts 1, 2, 3, 4, 6 -> recurrences 0, 1, 2, 3, 5
    p = PatternProfile.from_dict(3, {0: 1, 1: 2, 2: 3, 3: 4, 4: 6})
    assert recurrence_histogram(p).bins == (0.2, 0.2, 0.2, 0.2, 0.2)


@given(st.text(alphabet="01", min_size=4, max_size=200), st.integers(1, 6))
def test_recurrence_sums_to_one(s, m):
    if m > len(s):
        return
    p = extract_profile(seq(s), m)
    h = recurrence_histogram(p)
    assert abs(sum(h.bins) - 1.0) < 1e-12
    # mean recurrence from unpooled values
    rec = [c - 1 for c in p.counts.tolist()]
    assert concentration_stats(p).mean_recurrence == pytest.approx(sum(rec) / len(rec), abs=1e-12)
    assert concentration_stats(p).mean_recurrence == pytest.approx(
        (p.total_windows - p.distinct) / p.distinct, abs=1e-12
    )


def test_empty_profile_errors():
    empty = PatternProfile(3, 0, np.array([], dtype=np.uint64), np.array([], dtype=np.int64))
    with pytest.raises(EmptyWindowError):
        recurrence_histogram(empty)
    with pytest.raises(EmptyWindowError):
        concentration_stats(empty)


# --- concentration


def test_concentration_all_zeros():
    s = concentration_stats(extract_profile(seq("0" * 16), 8))
    assert s.max_prob == 1.0
    assert s.distinct_fraction == pytest.approx(1 / 9)
    assert s.repeated_window_fraction == 1.0
    assert s.mean_recurrence == 8.0
    assert s.entropy_bits == 0.0


def test_concentration_de_bruijn():
    s = concentration_stats(extract_profile(seq(DEBRUIJN3), 3))
    assert s.max_prob == 1 / 8
    assert s.repeated_window_fraction == 0.0
    assert s.mean_recurrence == 0.0
    assert s.distinct_fraction == 1.0


def test_entropy_max_at_full_size():
    assert entropy_upper_bound(16, 4096 - 16 + 1) == pytest.approx(math.log2(4081))
    assert entropy_upper_bound(16, 4081) == pytest.approx(11.9947, abs=1e-4)
    assert entropy_upper_bound(8, 4089) == 8.0


@given(st.text(alphabet="01", min_size=1, max_size=200), st.integers(1, 10))
def test_structural_metric_ranges(s, m):
    if m > len(s):
        return
    x = concentration_stats(extract_profile(seq(s), m))
    assert 0 <= x.entropy_bits <= x.entropy_max_bits
    assert 0 < x.max_prob <= 1
    assert 0 < x.distinct_fraction <= 1
    assert 0 <= x.repeated_window_fraction <= 1
