from __future__ import annotations

import base64
import logging

import numpy as np
import pytest

from voxsynth.audioio import wav_bytes
from voxsynth.clients import EndpointConfig
from voxsynth.errors import InsufficientData, InvalidInput
from voxsynth.ttsqc import (
    FilterPolicy,
    TtsCandidate,
    filter_outliers,
    length_ratio,
    ratio_bounds,
    rebalance_questions,
    score_candidates,
)


def _candidate(uid, ratio=None, text="ten chars!", question=False):
    return TtsCandidate(
        utterance_id=uid,
        source_text=text + ("?" if question else ""),
        audio=b"",
        retranscript="" if ratio is None else "x",
        length_ratio=ratio,
        verdict="pending",
    )


# ------------------------------------------------------------ length ratio


def test_ratio_identical_text():
    assert length_ratio("Ina kwana", "Ina kwana") == 1.0


def test_ratio_chars_example():
    assert length_ratio("a" * 10, "b" * 25) == 2.5


def test_ratio_empty_retranscript_is_zero():
    assert length_ratio("source text", "") == 0.0


def test_ratio_whitespace_case_invariant():
    assert length_ratio("  Hello   World ", "hello world") == 1.0
    assert length_ratio("ab cd", "AB  CD  ") == 1.0


def test_ratio_words_measure():
    assert length_ratio("za a yi", "za'a yi", measure="words") == pytest.approx(2 / 3)


def test_ratio_empty_source_invalid():
    with pytest.raises(InvalidInput):
        length_ratio("   ", "anything")


# ------------------------------------------------------------- scoring


def test_score_candidates_against_stub(scripted_server):
    handler, url = scripted_server
    handler.reset([(200, {"text": "ƙararrawa tana kara"})])
    asr = EndpointConfig(
        kind="asr", base_url=url, model_id="stub-asr", timeout=5,
        max_parallel=2, max_retries=0, backoff_base=0.01,
    )
    audio = wav_bytes(np.ones(1600) * 0.1, 16000)
    candidates = [
        TtsCandidate(utterance_id="u1", source_text="ƙararrawa tana kara", audio=audio)
    ]
    scored = score_candidates(candidates, asr)
    assert scored[0].retranscript == "ƙararrawa tana kara"
    assert scored[0].length_ratio == 1.0


def test_score_failure_leaves_pending(scripted_server, caplog):
    handler, url = scripted_server
    handler.reset([(500, {})])
    asr = EndpointConfig(
        kind="asr", base_url=url, model_id="stub-asr", timeout=5,
        max_parallel=1, max_retries=0, backoff_base=0.01,
    )
    audio = wav_bytes(np.ones(1600) * 0.1, 16000)
    candidates = [TtsCandidate(utterance_id="u1", source_text="abc", audio=audio)]
    with caplog.at_level(logging.WARNING):
        scored = score_candidates(candidates, asr)
    assert scored[0].verdict == "pending"
    assert scored[0].length_ratio is None
    assert "u1" in caplog.text


# ------------------------------------------------------------- filtering


def test_filter_uniform_corpus_keeps_everything():
    candidates = [_candidate(f"u{i}", 1.0) for i in range(10)]
    kept, removed, report = filter_outliers(candidates, FilterPolicy())
    assert not removed
    assert report.removal_fraction == 0.0
    assert all(c.verdict == "kept" for c in kept)


def test_filter_single_outlier_removed():
    candidates = [_candidate(f"u{i}", 1.0) for i in range(100)]
    candidates.append(_candidate("outlier", 3.0))
    kept, removed, report = filter_outliers(candidates, FilterPolicy())
    assert [c.utterance_id for c in removed] == ["outlier"]
    assert len(kept) == 100


def test_filter_mad_bounds_match_direct_computation():
    ratios = [0.8, 0.9, 1.0, 1.1, 1.2, 3.0]
    policy = FilterPolicy()
    lo, hi = ratio_bounds(ratios, policy)
    med = float(np.median(ratios))
    mad = float(np.median(np.abs(np.asarray(ratios) - med))) * 1.4826
    assert (lo, hi) == (med - 3.5 * mad, med + 3.5 * mad)
    candidates = [_candidate(f"u{i}", r) for i, r in enumerate(ratios)]
    _, removed, _ = filter_outliers(candidates, policy)
    assert [c.length_ratio for c in removed] == [3.0]


def test_filter_planted_removal_fraction():
    # 26.9% of candidates planted beyond the bounds
    candidates = [_candidate(f"g{i}", 1.0) for i in range(731)]
    candidates += [_candidate(f"h{i}", 5.0) for i in range(269)]
    _, removed, report = filter_outliers(candidates, FilterPolicy())
    assert report.total == 1000
    assert report.removal_fraction == pytest.approx(0.269)


def test_filter_fixed_bounds_idempotent():
    policy = FilterPolicy(bounds_kind="fixed", fixed_lo=0.5, fixed_hi=1.5)
    candidates = [_candidate(f"u{i}", r) for i, r in enumerate([0.4, 1.0, 1.2, 2.0])]
    kept, removed, _ = filter_outliers(candidates, policy)
    assert len(removed) == 2
    kept2, removed2, _ = filter_outliers(kept, policy)
    assert not removed2
    assert [c.utterance_id for c in kept2] == [c.utterance_id for c in kept]


def test_filter_mad_second_pass_not_worse():
    rng = np.random.default_rng(8)
    ratios = list(np.round(rng.normal(1.0, 0.05, size=200), 3)) + [2.5, 0.1, 3.0]
    candidates = [_candidate(f"u{i}", float(r)) for i, r in enumerate(ratios)]
    policy = FilterPolicy()
    kept, removed, report1 = filter_outliers(candidates, policy)
    _, _, report2 = filter_outliers(kept, policy)
    assert report2.removal_fraction <= report1.removal_fraction


def test_filter_requires_scores():
    candidates = [_candidate("u0", 1.0), TtsCandidate("u1", "text", b"")]
    with pytest.raises(InvalidInput):
        filter_outliers(candidates, FilterPolicy())


def test_filter_mad_needs_three():
    with pytest.raises(InsufficientData):
        filter_outliers([_candidate("u0", 1.0), _candidate("u1", 1.0)], FilterPolicy())


def test_filter_report_histogram_shape():
    candidates = [_candidate(f"u{i}", 0.5 + i * 0.1) for i in range(12)]
    _, _, report = filter_outliers(
        candidates, FilterPolicy(bounds_kind="fixed", fixed_lo=0.1, fixed_hi=5.0)
    )
    assert len(report.histogram_counts) == 20
    assert len(report.histogram_edges) == 21
    assert sum(report.histogram_counts) == 12


def test_fixed_policy_validation():
    with pytest.raises(InvalidInput):
        FilterPolicy(bounds_kind="fixed", fixed_lo=2.0, fixed_hi=1.0)


# ------------------------------------------------------------ rebalancing


def _question_mix(n_questions, n_other):
    items = [_candidate(f"q{i}", 1.0, question=True) for i in range(n_questions)]
    items += [_candidate(f"s{i}", 1.0) for i in range(n_other)]
    return items


def test_rebalance_forty_to_twentyfive_percent():
    items = _question_mix(40, 60)
    out = rebalance_questions(items, 0.25, seed=4)
    questions = sum(1 for c in out if c.is_question)
    share = questions / len(out)
    # within one item of the target share
    assert abs(questions - 0.25 * len(out)) <= 1.0
    assert share == pytest.approx(0.25, abs=0.02)


def test_rebalance_preserves_non_questions():
    items = _question_mix(40, 60)
    out = rebalance_questions(items, 0.25, seed=4)
    assert {c.utterance_id for c in items if not c.is_question} <= {
        c.utterance_id for c in out
    }


def test_rebalance_already_at_target_is_identity():
    items = _question_mix(25, 75)
    assert rebalance_questions(items, 0.25, seed=1) == items


def test_rebalance_no_questions_warns(caplog):
    items = _question_mix(0, 10)
    with caplog.at_level(logging.WARNING):
        out = rebalance_questions(items, 0.25, seed=1)
    assert out == items
    assert "already at or below target" in caplog.text


def test_rebalance_deterministic():
    items = _question_mix(40, 60)
    a = rebalance_questions(items, 0.25, seed=9)
    b = rebalance_questions(items, 0.25, seed=9)
    assert [c.utterance_id for c in a] == [c.utterance_id for c in b]


def test_rebalance_rejects_degenerate_share():
    with pytest.raises(InvalidInput):
        rebalance_questions(_question_mix(5, 5), 0.0)
