from __future__ import annotations

import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxsynth.dedup import dedup, uniqueness_curve
from voxsynth.errors import InvalidInput
from voxsynth.textgen import SentencePair
from voxsynth.textnorm import normalize_text


def _pair(text: str, batch: str = "b0", pid: str = "") -> SentencePair:
    return SentencePair(
        id=pid or f"id-{batch}-{abs(hash((text, batch)))%10**8}",
        target_text=text,
        english_text="gloss",
        theme="t",
        model_id="m",
        batch_id=batch,
        is_question=text.endswith("?"),
        created_at="1970-01-01T00:00:00.000+00:00",
    )


def test_dedup_keeps_first_occurrence():
    pairs = [_pair("aa", pid="1"), _pair("bb", pid="2"), _pair("aa", pid="3")]
    kept, report = dedup(pairs)
    assert [p.id for p in kept] == ["1", "2"]
    assert report.total == 3 and report.unique == 2
    assert report.unique_rate == pytest.approx(2 / 3)


def test_dedup_all_distinct_is_identity():
    pairs = [_pair(f"sentence {i}") for i in range(10)]
    kept, report = dedup(pairs)
    assert kept == pairs
    assert report.unique_rate == 1.0


def test_dedup_normalization_collapses_case_and_whitespace():
    pairs = [_pair("Ruwa  na da kyau."), _pair("ruwa na da KYAU.")]
    kept, report = dedup(pairs)
    assert len(kept) == 1
    assert report.unique == 1


def test_dedup_chichewa_scale_rate():
    # 700,000 generated with 259,000 distinct sentences -> 37% unique
    distinct = [f"s{i}" for i in range(259_000)]
    pairs = [_pair(distinct[i], batch=f"b{i % 700}") for i in range(259_000)]
    pairs += [
        _pair(distinct[i % 259_000], batch=f"b{i % 700}")
        for i in range(441_000)
    ]
    kept, report = dedup(pairs)
    assert report.total == 700_000
    assert report.unique == 259_000
    assert round(report.unique_rate, 2) == 0.37


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "a b", "A  b"]), max_size=12))
def test_dedup_idempotent(texts):
    pairs = [_pair(t, pid=str(i)) for i, t in enumerate(texts)]
    kept, _ = dedup(pairs)
    kept_again, report = dedup(kept)
    assert kept_again == kept
    assert report.unique == report.total


def _brute_force_curve_point(pairs, count):
    """Exhaustive mean/std of unique rate over all batch subsets of size count."""
    batches = sorted({p.batch_id for p in pairs})
    rates = []
    for chosen in combinations(batches, count):
        texts = [
            normalize_text(p.target_text) for p in pairs if p.batch_id in chosen
        ]
        rates.append(len(set(texts)) / len(texts))
    mean = sum(rates) / len(rates)
    var = (
        sum((r - mean) ** 2 for r in rates) / (len(rates) - 1)
        if len(rates) > 1
        else 0.0
    )
    return mean, math.sqrt(var)


def test_curve_constant_for_duplicate_free_corpus():
    pairs = [_pair(f"u{i}", batch=f"b{i % 4}") for i in range(40)]
    curve = uniqueness_curve(pairs, [1, 2, 3, 4], subsamples=50, seed=3)
    for _, mean, std in curve.points:
        assert mean == 1.0
        assert std == 0.0


def test_curve_identical_batches_rate_is_one_over_k():
    # 3 batches, each the same 5 distinct sentences: pooling k batches
    # yields 5 unique of 5k total
    pairs = []
    for b in range(3):
        for i in range(5):
            pairs.append(_pair(f"s{i}", batch=f"b{b}"))
    curve = uniqueness_curve(pairs, [1, 2, 3], subsamples=100, seed=1)
    for k, mean, std in curve.points:
        assert mean == pytest.approx(1.0 / k, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)


def test_curve_matches_exhaustive_enumeration():
    # 5 batches with planted cross-batch collisions; small enough that the
    # implementation enumerates every subset, so the match is exact
    pairs = []
    for b in range(5):
        for i in range(6):
            text = f"shared{i}" if i < b else f"own{b}-{i}"
            pairs.append(_pair(text, batch=f"b{b}"))
    curve = uniqueness_curve(pairs, [1, 2, 3, 4, 5], subsamples=1000, seed=5)
    for count, mean, std in curve.points:
        exp_mean, exp_std = _brute_force_curve_point(pairs, count)
        assert mean == pytest.approx(exp_mean, abs=1e-12)
        assert std == pytest.approx(exp_std, abs=1e-12)


def test_curve_monotone_on_collision_fixture():
    pairs = []
    for b in range(5):
        for i in range(8):
            text = f"pool{i % 3}" if i % 2 == 0 else f"own{b}-{i}"
            pairs.append(_pair(text, batch=f"b{b}"))
    curve = uniqueness_curve(pairs, [1, 2, 3, 4, 5], subsamples=500, seed=2)
    means = [mean for _, mean, _ in curve.points]
    assert all(a >= b - 1e-12 for a, b in zip(means, means[1:]))


def test_curve_rejects_overlong_batch_count():
    pairs = [_pair("x", batch="b0"), _pair("y", batch="b1")]
    with pytest.raises(InvalidInput):
        uniqueness_curve(pairs, [3], subsamples=10)


def test_curve_csv_shape():
    pairs = [_pair(f"u{i}", batch=f"b{i % 2}") for i in range(8)]
    curve = uniqueness_curve(pairs, [1, 2], subsamples=10, seed=0)
    lines = curve.to_csv().strip().splitlines()
    assert lines[0] == "batch_count,mean_unique_rate,std"
    assert len(lines) == 3
