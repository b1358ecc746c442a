"""Hallucination filtering of synthetic audio and question-share rebalancing.

Synthesized clips are re-transcribed with an ASR endpoint; the ratio of
re-transcript length to source length exposes clips where the TTS model
invented extra words (ratio high) or dropped content (ratio low). Outliers
of that ratio are removed. Because filtering can skew the sentence-type
mix, a rebalancing pass subsamples questions back to their original share.

Length is measured in characters by default: for non-standardized scripts
word boundaries are unreliable, and character counts are stabler. The
outlier rule is median +/- k scaled MADs, a robust distribution-free
default; fixed bounds are available for reproduction studies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import clients
from .clients import EndpointConfig
from .errors import InsufficientData, InvalidInput
from .seeds import derive_rng
from .textnorm import is_question, normalize_text

logger = logging.getLogger(__name__)

MAD_SCALE = 1.4826  # consistency factor for normal data


@dataclass
class TtsCandidate:
    """One synthesized clip awaiting (or holding) a QC verdict."""

    utterance_id: str
    source_text: str
    audio: bytes | str  # WAV bytes or a path to a WAV file
    retranscript: str | None = None
    length_ratio: float | None = None
    verdict: str = "pending"  # pending | kept | removed_outlier

    @property
    def is_question(self) -> bool:
        return is_question(self.source_text)


@dataclass(frozen=True)
class FilterPolicy:
    ratio_measure: str = "chars"  # chars | words
    bounds_kind: str = "mad"  # mad | fixed
    mad_k: float = 3.5
    #: secondary tolerance when MAD degenerates to 0 on uniform corpora
    mad_zero_tolerance: float = 0.05
    fixed_lo: float = 0.0
    fixed_hi: float = 0.0
    question_share_target: float = 0.25

    def __post_init__(self):
        if self.ratio_measure not in ("chars", "words"):
            raise InvalidInput(f"unknown ratio_measure {self.ratio_measure!r}")
        if self.bounds_kind not in ("mad", "fixed"):
            raise InvalidInput(f"unknown bounds_kind {self.bounds_kind!r}")
        if self.bounds_kind == "fixed" and not 0 <= self.fixed_lo < self.fixed_hi:
            raise InvalidInput("fixed bounds require 0 <= lo < hi")


@dataclass
class FilterReport:
    total: int
    kept: int
    removed: int
    removal_fraction: float
    bound_lo: float
    bound_hi: float
    histogram_counts: list[int]
    histogram_edges: list[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _length(text: str, measure: str) -> int:
    normalized = normalize_text(text)
    if measure == "words":
        return len(normalized.split()) if normalized else 0
    return len(normalized)


def length_ratio(source_text: str, retranscript: str, measure: str = "chars") -> float:
    """Normalized length of the re-transcript over the source text."""
    source_len = _length(source_text, measure)
    if source_len == 0:
        raise InvalidInput("source text is empty after normalization")
    return _length(retranscript, measure) / source_len


def score_candidates(
    candidates: list[TtsCandidate],
    asr: EndpointConfig,
    measure: str = "chars",
) -> list[TtsCandidate]:
    """Re-transcribe each candidate and attach its length ratio.

    Per-item ASR failures leave the candidate pending (and logged) rather
    than failing the batch; empty re-transcripts are legal and score 0.0,
    signalling omission-type hallucination.
    """

    def score(candidate: TtsCandidate) -> TtsCandidate:
        audio = candidate.audio
        if isinstance(audio, str):
            audio = Path(audio).read_bytes()
        if not audio:
            raise InvalidInput(f"candidate {candidate.utterance_id} has no audio")
        if _length(candidate.source_text, measure) == 0:
            raise InvalidInput(
                f"candidate {candidate.utterance_id} has an empty source text"
            )
        try:
            text = clients.transcribe(asr, audio)
        except Exception as exc:  # per-item isolation
            logger.warning(
                "ASR failed for %s: %s; leaving pending", candidate.utterance_id, exc
            )
            return candidate
        return replace(
            candidate,
            retranscript=text,
            length_ratio=length_ratio(candidate.source_text, text, measure),
            verdict="pending",
        )

    return clients.run_parallel(score, candidates, asr.max_parallel)


def ratio_bounds(ratios: list[float], policy: FilterPolicy) -> tuple[float, float]:
    """The keep-interval implied by the policy for this corpus."""
    if policy.bounds_kind == "fixed":
        return policy.fixed_lo, policy.fixed_hi
    if len(ratios) < 3:
        raise InsufficientData(
            f"MAD bounds need >=3 scored candidates, have {len(ratios)}"
        )
    arr = np.asarray(ratios, dtype=float)
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med))) * MAD_SCALE
    if mad > 0.0:
        half_width = policy.mad_k * mad
    else:
        half_width = policy.mad_zero_tolerance
    return med - half_width, med + half_width


def filter_outliers(
    candidates: list[TtsCandidate],
    policy: FilterPolicy,
) -> tuple[list[TtsCandidate], list[TtsCandidate], FilterReport]:
    """Split scored candidates into kept and removed by the ratio bounds."""
    unscored = [c.utterance_id for c in candidates if c.length_ratio is None]
    if unscored:
        raise InvalidInput(
            f"{len(unscored)} candidates not scored yet (e.g. {unscored[0]})"
        )
    ratios = [c.length_ratio for c in candidates]
    lo, hi = ratio_bounds(ratios, policy)
    kept, removed = [], []
    for candidate in candidates:
        if lo <= candidate.length_ratio <= hi:
            kept.append(replace(candidate, verdict="kept"))
        else:
            removed.append(replace(candidate, verdict="removed_outlier"))
    counts, edges = np.histogram(np.asarray(ratios, dtype=float), bins=20)
    report = FilterReport(
        total=len(candidates),
        kept=len(kept),
        removed=len(removed),
        removal_fraction=len(removed) / len(candidates) if candidates else 0.0,
        bound_lo=lo,
        bound_hi=hi,
        histogram_counts=[int(c) for c in counts],
        histogram_edges=[float(e) for e in edges],
    )
    return kept, removed, report


def rebalance_questions(
    items: list,
    target_share: float,
    seed: int = 0,
    question_flag=lambda item: item.is_question,
) -> list:
    """Subsample questions so their share drops to ``target_share``.

    Non-questions are always kept. When the share is already at or below
    the target this is a warning no-op (questions cannot be invented).
    Selection is uniform without replacement and deterministic under the
    seed; surviving items keep their original order.
    """
    if not 0.0 < target_share < 1.0:
        raise InvalidInput("target_share must be strictly between 0 and 1")
    question_idx = [i for i, item in enumerate(items) if question_flag(item)]
    n_questions = len(question_idx)
    n_other = len(items) - n_questions
    if len(items) == 0 or n_questions / len(items) <= target_share:
        logger.warning(
            "question share %.3f already at or below target %.3f; keeping all",
            n_questions / len(items) if items else 0.0,
            target_share,
        )
        return list(items)
    want = round(target_share * n_other / (1.0 - target_share))
    want = max(0, min(n_questions, want))
    rng = derive_rng(seed, "rebalance-questions")
    keep = set(rng.choice(n_questions, size=want, replace=False).tolist())
    kept_questions = {question_idx[i] for i in keep}
    question_set = set(question_idx)
    return [
        item
        for i, item in enumerate(items)
        if i not in question_set or i in kept_questions
    ]
