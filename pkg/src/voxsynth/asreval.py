"""WER/CER with bootstrap intervals, group breakdowns, and error adjudication.

Error rates are pooled: total edit distance over total reference token
count across the corpus, words split on whitespace, characters excluding
inter-word spaces by default. Normalization is explicit and configurable
because non-standardized scripts make it load-bearing: apostrophe variants,
listed special characters, and known spelling contractions can each be
folded on or off, and every report records the normalizer fingerprint it
was computed under.

Bootstrap resampling reuses per-item alignment statistics: each iteration
redraws n items with replacement and recombines cached (distance, length)
sums, which makes 1,000 iterations cheap at any corpus size.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from io import StringIO

import numpy as np

from .errors import EmptyReference, InvalidInput, IoError
from .seeds import derive_rng

logger = logging.getLogger(__name__)

APOSTROPHE_VARIANTS = "’ʼ‘`´"  # ’ ʼ ‘ ` ´

#: Characters that several Hausa-script conventions write either with or
#: without hooks/diacritics; folding them is an explicit experiment, not
#: the default.
DEFAULT_DIACRITIC_MAP: tuple[tuple[str, str], ...] = (
    ("ɗ", "d"),  # ɗ
    ("ƙ", "k"),  # ƙ
    ("ɓ", "b"),  # ɓ
    ("ƴ", "y"),  # ƴ
    ("ŋ", "ng'"),  # ŋ
)


@dataclass(frozen=True)
class Normalizer:
    """Configurable text canonicalization applied before scoring."""

    lowercase: bool = True
    strip_punct: str = ""
    apostrophe_fold: bool = True
    diacritic_mode: str = "keep"  # keep | strip_listed
    diacritic_map: tuple[tuple[str, str], ...] = DEFAULT_DIACRITIC_MAP
    #: word-level folds for spellings that are interchangeable in practice,
    #: e.g. ("za'a", "za a"); keys must already be in normalized form
    contractions: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.diacritic_mode not in ("keep", "strip_listed"):
            raise InvalidInput(f"unknown diacritic_mode {self.diacritic_mode!r}")

    def apply(self, text: str) -> str:
        if self.lowercase:
            text = text.casefold()
        if self.apostrophe_fold:
            for variant in APOSTROPHE_VARIANTS:
                text = text.replace(variant, "'")
        if self.strip_punct:
            text = text.translate({ord(c): None for c in self.strip_punct})
        if self.diacritic_mode == "strip_listed":
            for source, target in self.diacritic_map:
                text = text.replace(source, target)
        text = " ".join(text.split())
        if self.contractions:
            folds = dict(self.contractions)
            text = " ".join(folds.get(word, word) for word in text.split())
            text = " ".join(text.split())
        return text

    def words(self, text: str) -> list[str]:
        normalized = self.apply(text)
        return normalized.split() if normalized else []

    def chars(self, text: str, include_spaces: bool = False) -> list[str]:
        normalized = self.apply(text)
        if not include_spaces:
            normalized = normalized.replace(" ", "")
        return list(normalized)

    def fingerprint(self) -> str:
        payload = repr(
            (
                self.lowercase,
                sorted(self.strip_punct),
                self.apostrophe_fold,
                self.diacritic_mode,
                tuple(sorted(self.diacritic_map)),
                tuple(sorted(self.contractions)),
            )
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


# alignment op codes
MATCH, SUB, DEL, INS = "match", "sub", "del", "ins"


def edit_align(
    ref: list[str], hyp: list[str]
) -> tuple[int, list[tuple[str, str | None, str | None]]]:
    """Minimal edit distance with an operation trace.

    Ties are broken preferring match > substitution > deletion > insertion,
    so traces are deterministic. Returns (distance, ops) where each op is
    (kind, ref_token_or_None, hyp_token_or_None).
    """
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        token = ref[i - 1]
        for j in range(1, m + 1):
            same = token == hyp[j - 1]
            row[j] = min(
                prev[j - 1] + (0 if same else 1),  # match / sub
                prev[j] + 1,  # del
                row[j - 1] + 1,  # ins
            )
    ops: list[tuple[str, str | None, str | None]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i, j] == dist[i - 1, j - 1]:
            ops.append((MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + 1:
            ops.append((SUB, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            ops.append((DEL, ref[i - 1], None))
            i = i - 1
        else:
            ops.append((INS, None, hyp[j - 1]))
            j = j - 1
    ops.reverse()
    return int(dist[n, m]), ops


@dataclass
class ItemStats:
    """Cached per-item alignment sums the bootstrap resamples over."""

    word_errors: int
    word_count: int
    char_errors: int
    char_count: int


def _check_parallel(refs: list[str], hyps: list[str]) -> None:
    if len(refs) != len(hyps):
        raise InvalidInput(f"{len(refs)} references vs {len(hyps)} hypotheses")
    if not refs:
        raise InvalidInput("empty evaluation set")


def item_stats(
    refs: list[str], hyps: list[str], normalizer: Normalizer
) -> list[ItemStats]:
    _check_parallel(refs, hyps)
    stats = []
    for ref, hyp in zip(refs, hyps):
        ref_words = normalizer.words(ref)
        hyp_words = normalizer.words(hyp)
        ref_chars = normalizer.chars(ref)
        hyp_chars = normalizer.chars(hyp)
        wd, _ = edit_align(ref_words, hyp_words)
        cd, _ = edit_align(ref_chars, hyp_chars)
        stats.append(ItemStats(wd, len(ref_words), cd, len(ref_chars)))
    return stats


def _pooled(stats: list[ItemStats], kind: str) -> float:
    if kind == "wer":
        errors = sum(s.word_errors for s in stats)
        count = sum(s.word_count for s in stats)
    else:
        errors = sum(s.char_errors for s in stats)
        count = sum(s.char_count for s in stats)
    if count == 0:
        raise EmptyReference("reference token stream is empty after normalization")
    return errors / count


def wer(refs: list[str], hyps: list[str], normalizer: Normalizer | None = None) -> float:
    """Pooled word error rate over the corpus."""
    return _pooled(item_stats(refs, hyps, normalizer or Normalizer()), "wer")


def cer(refs: list[str], hyps: list[str], normalizer: Normalizer | None = None) -> float:
    """Pooled character error rate (spaces excluded) over the corpus."""
    return _pooled(item_stats(refs, hyps, normalizer or Normalizer()), "cer")


@dataclass
class BootstrapStats:
    iterations: int
    wer_mean: float
    wer_std: float
    cer_mean: float
    cer_std: float
    unique_fraction_mean: float


@dataclass
class EvalReport:
    n_items: int
    wer: float
    cer: float
    bootstrap: BootstrapStats
    normalizer_id: str
    per_group: dict[str, "EvalReport"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n_items": self.n_items,
            "wer": self.wer,
            "cer": self.cer,
            "bootstrap": dict(self.bootstrap.__dict__),
            "normalizer_id": self.normalizer_id,
        }
        if self.per_group:
            out["per_group"] = {k: v.to_dict() for k, v in self.per_group.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _bootstrap_from_stats(
    stats: list[ItemStats], iterations: int, seed: int
) -> BootstrapStats:
    n = len(stats)
    word_errors = np.array([s.word_errors for s in stats], dtype=np.float64)
    word_counts = np.array([s.word_count for s in stats], dtype=np.float64)
    char_errors = np.array([s.char_errors for s in stats], dtype=np.float64)
    char_counts = np.array([s.char_count for s in stats], dtype=np.float64)
    rng = derive_rng(seed, "bootstrap-eval")
    wers = np.empty(iterations)
    cers = np.empty(iterations)
    unique = np.empty(iterations)
    for it in range(iterations):
        idx = rng.integers(0, n, size=n)
        wc = word_counts[idx].sum()
        cc = char_counts[idx].sum()
        wers[it] = word_errors[idx].sum() / wc if wc else 0.0
        cers[it] = char_errors[idx].sum() / cc if cc else 0.0
        unique[it] = np.unique(idx).size / n
    ddof = 1 if iterations > 1 else 0

    def mean_std(values: np.ndarray) -> tuple[float, float]:
        # all-equal samples have exactly zero spread; skip the accumulating
        # float noise np.mean/np.std would otherwise introduce
        if values.min() == values.max():
            return float(values[0]), 0.0
        return float(values.mean()), float(values.std(ddof=ddof))

    wer_mean, wer_std = mean_std(wers)
    cer_mean, cer_std = mean_std(cers)
    return BootstrapStats(
        iterations=iterations,
        wer_mean=wer_mean,
        wer_std=wer_std,
        cer_mean=cer_mean,
        cer_std=cer_std,
        unique_fraction_mean=float(unique.mean()),
    )


def bootstrap_eval(
    refs: list[str],
    hyps: list[str],
    normalizer: Normalizer | None = None,
    iterations: int = 1000,
    seed: int = 0,
) -> EvalReport:
    """Point WER/CER plus bootstrap mean/std over resampled corpora.

    Each iteration resamples n items with replacement (n = corpus size)
    and recomputes the pooled rates; the report also records the mean
    fraction of distinct items per resample, which approaches
    1 - (1 - 1/n)^n ~ 0.632 for large n.
    """
    normalizer = normalizer or Normalizer()
    stats = item_stats(refs, hyps, normalizer)
    point_wer = _pooled(stats, "wer")
    point_cer = _pooled(stats, "cer")
    return EvalReport(
        n_items=len(stats),
        wer=point_wer,
        cer=point_cer,
        bootstrap=_bootstrap_from_stats(stats, iterations, seed),
        normalizer_id=normalizer.fingerprint(),
    )


def eval_by_group(
    refs: list[str],
    hyps: list[str],
    groups: list[str],
    normalizer: Normalizer | None = None,
    iterations: int = 1000,
    seed: int = 0,
    expected_groups: list[str] | None = None,
) -> EvalReport:
    """Full-corpus report plus one bootstrap report per group.

    Groups expected but empty (pass ``expected_groups``) are omitted with
    a warning rather than reported; near-empty groups make the per-group
    numbers unstable, so the sizes are always in the report.
    """
    _check_parallel(refs, hyps)
    if len(groups) != len(refs):
        raise InvalidInput("groups must align one-to-one with items")
    report = bootstrap_eval(refs, hyps, normalizer, iterations, seed)
    present = sorted(set(groups))
    for missing in sorted(set(expected_groups or []) - set(present)):
        logger.warning("group %r has no items; omitted from report", missing)
    for offset, group in enumerate(present):
        idx = [i for i, g in enumerate(groups) if g == group]
        if len(idx) == len(refs):
            # a group spanning the whole corpus IS the overall report
            report.per_group[group] = EvalReport(
                n_items=report.n_items,
                wer=report.wer,
                cer=report.cer,
                bootstrap=report.bootstrap,
                normalizer_id=report.normalizer_id,
            )
            continue
        report.per_group[group] = bootstrap_eval(
            [refs[i] for i in idx],
            [hyps[i] for i in idx],
            normalizer,
            iterations,
            seed=seed + 1 + offset,
        )
    return report


@dataclass
class InventoryRow:
    reference_word: str
    occurrences: int
    times_correct: int
    always_failed: bool
    sample_pairs: list[tuple[str, str]]  # up to 3 (ref sentence, hyp sentence)


@dataclass
class ErrorInventory:
    rows: list[InventoryRow]
    normalizer_id: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "normalizer_id": self.normalizer_id,
                "rows": [
                    {
                        "reference_word": r.reference_word,
                        "occurrences": r.occurrences,
                        "times_correct": r.times_correct,
                        "always_failed": r.always_failed,
                        "sample_pairs": [list(p) for p in r.sample_pairs],
                    }
                    for r in self.rows
                ],
            },
            ensure_ascii=False,
            indent=2,
        )


def error_inventory(
    refs: list[str],
    hyps: list[str],
    normalizer: Normalizer | None = None,
    top_k: int = 20,
    only_always_failed: bool = True,
) -> ErrorInventory:
    """Reference words the recognizer never (or rarely) gets right.

    Counts, per normalized reference word, its occurrences and how often
    the alignment matched it exactly. Rows are ranked always-failed first,
    then by occurrences descending; each carries up to three example
    sentence pairs in their original (un-normalized) form.
    """
    normalizer = normalizer or Normalizer()
    _check_parallel(refs, hyps)
    occurrences: dict[str, int] = {}
    correct: dict[str, int] = {}
    samples: dict[str, list[tuple[str, str]]] = {}
    for ref, hyp in zip(refs, hyps):
        ref_words = normalizer.words(ref)
        hyp_words = normalizer.words(hyp)
        _, ops = edit_align(ref_words, hyp_words)
        for op, ref_token, _hyp_token in ops:
            if ref_token is None:
                continue
            occurrences[ref_token] = occurrences.get(ref_token, 0) + 1
            if op == MATCH:
                correct[ref_token] = correct.get(ref_token, 0) + 1
            else:
                pairs = samples.setdefault(ref_token, [])
                if len(pairs) < 3:
                    pairs.append((ref, hyp))
    rows = []
    for word, count in occurrences.items():
        hits = correct.get(word, 0)
        if hits == count:
            continue
        always = hits == 0
        if only_always_failed and not always:
            continue
        rows.append(
            InventoryRow(
                reference_word=word,
                occurrences=count,
                times_correct=hits,
                always_failed=always,
                sample_pairs=samples.get(word, []),
            )
        )
    rows.sort(key=lambda r: (not r.always_failed, -r.occurrences, r.reference_word))
    return ErrorInventory(rows=rows[:top_k], normalizer_id=normalizer.fingerprint())


ADJUDICATION_HEADER = [
    "language",
    "evaluation_transcript",
    "model_output",
    "assessment",
    "comments",
]


def adjudication_export(
    inventory: ErrorInventory, path, language: str
) -> int:
    """Write a review CSV with blank assessment/comments; returns row count."""
    seen: set[tuple[str, str]] = set()
    count = 0
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(ADJUDICATION_HEADER)
            for row in inventory.rows:
                for ref_sentence, hyp_sentence in row.sample_pairs:
                    key = (ref_sentence, hyp_sentence)
                    if key in seen:
                        continue
                    seen.add(key)
                    writer.writerow([language, ref_sentence, hyp_sentence, "", ""])
                    count += 1
    except OSError as exc:
        raise IoError(f"cannot write adjudication CSV to {path}: {exc}") from exc
    return count


def adjudication_import(path) -> list[dict[str, str]]:
    """Read back a (possibly filled) adjudication CSV, keyed by row order."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ADJUDICATION_HEADER:
            raise InvalidInput(
                f"unexpected adjudication columns: {reader.fieldnames}"
            )
        return [dict(row) for row in reader]


def read_lines(path) -> list[str]:
    """Read one text item per line (used for aligned ref/hyp files)."""
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]
