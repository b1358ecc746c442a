"""Statistics over human ratings.

Four instruments: per-metric summary tables, a two-way ANOVA separating
model choice from rater identity, a rater-count bootstrap showing how
confidence intervals narrow as raters are added, and an ICC(2,k) grid
search locating the smallest (raters x sentences) design that reaches
moderate reliability.

Notes on documented choices (the underlying study is silent on all three):
the ANOVA fits main effects only with Type II sums of squares, because
raters rate overlapping, unbalanced item sets and an interaction term is
generally inestimable; bootstrap confidence intervals are percentile
intervals; summary standard deviations use the n-1 denominator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from io import StringIO

import numpy as np
from scipy.stats import f as f_dist

from .errors import (
    DegenerateDesign,
    EmptyGroup,
    IncompleteMatrix,
    InvalidInput,
    ValidationError,
)
from .seeds import derive_rng

RATINGS_CSV_HEADER = [
    "item_id",
    "rater_id",
    "model_id",
    "modality",
    "readability",
    "grammatical",
    "real_words",
    "notable_error",
    "adequacy",
    "intelligibility",
    "naturalness_5",
]

TEXT_METRICS = ("readability", "grammatical", "real_words", "notable_error", "adequacy")
AUDIO_METRICS = ("intelligibility", "naturalness_5")

SCALE_BOUNDS = {
    "readability": (1, 7),
    "adequacy": (1, 7),
    "grammatical": (0, 1),
    "real_words": (0, 1),
    "notable_error": (0, 1),
    "intelligibility": (1, 5),
    "naturalness_5": (1, 5),
}


@dataclass
class RatingRecord:
    """One rater's judgment of one item.

    Text-modality records carry the five text metrics; audio-modality
    records carry the two five-point metrics. The other side's fields stay
    ``None``.
    """

    item_id: str
    rater_id: str
    model_id: str
    modality: str = "text"
    readability: int | None = None
    grammatical: int | None = None
    real_words: int | None = None
    notable_error: int | None = None
    adequacy: int | None = None
    intelligibility: int | None = None
    naturalness_5: int | None = None

    def invalid_fields(self) -> list[str]:
        bad: list[str] = []
        if self.modality not in ("text", "tts_audio"):
            bad.append("modality")
            return bad
        required = TEXT_METRICS if self.modality == "text" else AUDIO_METRICS
        for name in required:
            if getattr(self, name) is None:
                bad.append(name)
        for name, (lo, hi) in SCALE_BOUNDS.items():
            value = getattr(self, name)
            if value is not None and not (
                isinstance(value, int) and lo <= value <= hi
            ):
                bad.append(name)
        return bad

    def validate(self) -> None:
        bad = self.invalid_fields()
        if bad:
            raise ValidationError(
                f"invalid rating fields: {', '.join(bad)}", fields=bad
            )


def record_to_csv_row(record: RatingRecord) -> list[str]:
    row = []
    for name in RATINGS_CSV_HEADER:
        value = getattr(record, name)
        row.append("" if value is None else str(value))
    return row


def records_to_csv(records: list[RatingRecord]) -> str:
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RATINGS_CSV_HEADER)
    for record in records:
        writer.writerow(record_to_csv_row(record))
    return out.getvalue()


def load_ratings_csv(path) -> list[RatingRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_ratings_csv(fh.read())


def parse_ratings_csv(text: str) -> list[RatingRecord]:
    reader = csv.DictReader(StringIO(text))
    records = []
    for row in reader:
        kwargs = {}
        for name in RATINGS_CSV_HEADER:
            raw = (row.get(name) or "").strip()
            if name in SCALE_BOUNDS:
                kwargs[name] = int(raw) if raw else None
            else:
                kwargs[name] = raw
        records.append(RatingRecord(**kwargs))
    return records


def summarize(
    records: list[RatingRecord],
    group_by=lambda r: r.model_id,
) -> dict[str, dict[str, tuple[float, float, int]]]:
    """Per-group, per-metric (mean, sample std, n) over the present values.

    Groups default to the model that produced the item; pass a different
    key function to group by rater, language corpus, etc. Single-value
    metrics report std 0.0.
    """
    if not records:
        raise EmptyGroup("no rating records to summarize")
    groups: dict[str, list[RatingRecord]] = {}
    for record in records:
        groups.setdefault(group_by(record), []).append(record)
    result: dict[str, dict[str, tuple[float, float, int]]] = {}
    for key in sorted(groups):
        metrics: dict[str, tuple[float, float, int]] = {}
        for name in SCALE_BOUNDS:
            values = [
                getattr(r, name) for r in groups[key] if getattr(r, name) is not None
            ]
            if not values:
                continue
            arr = np.asarray(values, dtype=float)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            metrics[name] = (float(arr.mean()), std, arr.size)
        if not metrics:
            raise EmptyGroup(f"group {key!r} has no metric values")
        result[key] = metrics
    return result


@dataclass
class AnovaRow:
    sum_sq: float
    df: int
    mean_sq: float
    f_value: float
    p_value: float


@dataclass
class AnovaTable:
    factors: dict[str, AnovaRow]
    residual: AnovaRow
    n_obs: int

    def to_json(self) -> str:
        def row(r: AnovaRow) -> dict:
            return {
                "sum_sq": r.sum_sq,
                "df": r.df,
                "mean_sq": r.mean_sq,
                "F": r.f_value,
                "p": r.p_value,
            }

        return json.dumps(
            {
                "factors": {k: row(v) for k, v in self.factors.items()},
                "residual": row(self.residual),
                "n_obs": self.n_obs,
            },
            indent=2,
        )


def _dummy_columns(levels: list, values: list) -> np.ndarray:
    """Drop-first dummy coding: len(levels)-1 columns."""
    index = {level: i for i, level in enumerate(levels)}
    block = np.zeros((len(values), len(levels) - 1))
    for row, value in enumerate(values):
        col = index[value] - 1
        if col >= 0:
            block[row, col] = 1.0
    return block


def _sse(y: np.ndarray, x: np.ndarray) -> tuple[float, int]:
    """Residual sum of squares and model rank for y ~ x."""
    beta, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ beta
    return float(resid @ resid), int(rank)


def anova_two_way(
    records: list[RatingRecord],
    response: str = "readability",
    factors: tuple[str, str] = ("model_id", "rater_id"),
) -> AnovaTable:
    """Main-effects two-way ANOVA of ``response`` on two categorical factors.

    Type II sums of squares: each factor's SS is the drop in residual SS
    when that factor joins a model already containing the other one.
    P-values come from the F distribution against the residual mean square;
    a constant response yields zero SS everywhere and p = 1.0.
    """
    rows = [r for r in records if getattr(r, response) is not None]
    if not rows:
        raise EmptyGroup(f"no records carry {response!r}")
    y = np.asarray([float(getattr(r, response)) for r in rows])
    n = y.size
    fa, fb = factors
    a_values = [getattr(r, fa) for r in rows]
    b_values = [getattr(r, fb) for r in rows]
    a_levels = sorted(set(a_values))
    b_levels = sorted(set(b_values))
    if len(a_levels) < 2 or len(b_levels) < 2:
        raise DegenerateDesign(
            f"need >=2 levels per factor, got {len(a_levels)} x {len(b_levels)}"
        )
    df_a = len(a_levels) - 1
    df_b = len(b_levels) - 1
    df_resid = n - 1 - df_a - df_b
    if df_resid < 1:
        raise DegenerateDesign("no residual degrees of freedom")

    intercept = np.ones((n, 1))
    block_a = _dummy_columns(a_levels, a_values)
    block_b = _dummy_columns(b_levels, b_values)

    x_full = np.hstack([intercept, block_a, block_b])
    sse_full, rank_full = _sse(y, x_full)
    if rank_full < 1 + df_a + df_b:
        raise DegenerateDesign("factors are confounded (rank-deficient design)")
    sse_a_only, _ = _sse(y, np.hstack([intercept, block_a]))
    sse_b_only, _ = _sse(y, np.hstack([intercept, block_b]))

    # least-squares residuals carry ~1e-16 relative float noise; sums of
    # squares below that scale are exact zeros (e.g. a constant response)
    noise_floor = 1e-12 * max(float(y @ y), 1e-300)
    ss = {fa: max(0.0, sse_b_only - sse_full), fb: max(0.0, sse_a_only - sse_full)}
    ss = {k: (0.0 if v <= noise_floor else v) for k, v in ss.items()}
    sse_full = 0.0 if sse_full <= noise_floor else sse_full
    mse = sse_full / df_resid

    table: dict[str, AnovaRow] = {}
    for name, df in ((fa, df_a), (fb, df_b)):
        mean_sq = ss[name] / df
        if ss[name] == 0.0:
            f_value, p_value = 0.0, 1.0
        elif mse == 0.0:
            f_value, p_value = math.inf, 0.0
        else:
            f_value = mean_sq / mse
            p_value = float(f_dist.sf(f_value, df, df_resid))
        table[name] = AnovaRow(ss[name], df, mean_sq, f_value, p_value)
    residual = AnovaRow(sse_full, df_resid, mse, math.nan, math.nan)
    return AnovaTable(factors=table, residual=residual, n_obs=n)


def _rating_matrix(
    records: list[RatingRecord],
    model_id: str | None,
    response: str,
) -> tuple[list[str], list[str], dict[tuple[str, str], float]]:
    """(items, raters, (item, rater) -> value) restricted to one model."""
    cells: dict[tuple[str, str], float] = {}
    items: set[str] = set()
    raters: set[str] = set()
    for r in records:
        if model_id is not None and r.model_id != model_id:
            continue
        value = getattr(r, response)
        if value is None:
            continue
        cells[(r.item_id, r.rater_id)] = float(value)
        items.add(r.item_id)
        raters.add(r.rater_id)
    return sorted(items), sorted(raters), cells


def rater_bootstrap(
    records: list[RatingRecord],
    model_id: str | None,
    n_raters_grid: list[int],
    n_sentences: int = 50,
    iterations: int = 1000,
    seed: int = 0,
    response: str = "readability",
) -> list[tuple[int, float, float, float]]:
    """Stability of the mean rating as a function of rater count.

    Each iteration resamples ``n`` raters with replacement and a random
    subset of ``n_sentences`` rated sentences without replacement, then
    takes the mean rating over the sampled cells. Returns
    ``(n_raters, mean, ci95_low, ci95_high)`` per grid value, the CI being
    the 2.5/97.5 percentiles across iterations.
    """
    items, raters, cells = _rating_matrix(records, model_id, response)
    if not raters:
        raise EmptyGroup("no raters found")
    if n_sentences > len(items):
        raise InvalidInput(
            f"n_sentences={n_sentences} exceeds {len(items)} rated sentences"
        )
    results = []
    for n in n_raters_grid:
        if n < 1:
            raise InvalidInput("rater grid values must be >= 1")
        rng = derive_rng(seed, "rater-bootstrap", response, n)
        means = np.empty(iterations)
        for it in range(iterations):
            chosen_raters = rng.choice(len(raters), size=n, replace=True)
            chosen_items = rng.choice(len(items), size=n_sentences, replace=False)
            values = [
                cells[(items[i], raters[j])]
                for j in chosen_raters
                for i in chosen_items
                if (items[i], raters[j]) in cells
            ]
            means[it] = float(np.mean(values)) if values else np.nan
        results.append(
            (
                n,
                float(np.nanmean(means)),
                float(np.nanpercentile(means, 2.5)),
                float(np.nanpercentile(means, 97.5)),
            )
        )
    return results


ICC_BANDS = ((0.9, "excellent"), (0.75, "good"), (0.5, "moderate"))


def interpret_icc(value: float) -> str:
    """Reliability band: poor < 0.5 <= moderate < 0.75 <= good < 0.9 <= excellent."""
    for threshold, label in ICC_BANDS:
        if value >= threshold:
            return label
    return "poor"


def icc_2k(matrix, allow_listwise: bool = False) -> float:
    """Two-way random-effects ICC for the average of k raters.

    ``matrix`` is sentences x raters. Missing cells (NaN) raise
    ``IncompleteMatrix`` unless ``allow_listwise``, which drops incomplete
    rows. Returns NaN for fully degenerate matrices (no variance anywhere).
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise InvalidInput("rating matrix must be 2-D (sentences x raters)")
    if np.isnan(m).any():
        if not allow_listwise:
            raise IncompleteMatrix(
                "rating matrix has missing cells; enable listwise deletion explicitly"
            )
        m = m[~np.isnan(m).any(axis=1)]
    n_rows, n_cols = m.shape
    if n_rows < 2 or n_cols < 2:
        raise InvalidInput(f"need >=2 sentences and >=2 raters, got {m.shape}")

    grand = m.mean()
    row_means = m.mean(axis=1)
    col_means = m.mean(axis=0)
    ss_rows = n_cols * float(((row_means - grand) ** 2).sum())
    ss_cols = n_rows * float(((col_means - grand) ** 2).sum())
    ss_total = float(((m - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols

    ms_rows = ss_rows / (n_rows - 1)
    ms_cols = ss_cols / (n_cols - 1)
    ms_err = ss_err / ((n_rows - 1) * (n_cols - 1))

    denom = ms_rows + (ms_cols - ms_err) / n_rows
    # catastrophic cancellation can leave a denominator of pure float noise
    # when the true value is zero; treat that as the degenerate case
    scale = max(ms_rows, ms_err, abs(ms_cols), 1e-300)
    if abs(denom) <= 1e-12 * scale:
        return math.nan
    return (ms_rows - ms_err) / denom


@dataclass
class IccGridResult:
    cells: list[tuple[int, int, float]]  # (n_raters, n_sentences, mean_icc)
    iterations: int
    threshold: float = 0.5
    #: smallest (n_raters, n_sentences) cell whose mean ICC reaches the
    #: threshold, ordering by rater count first (raters are the scarce
    #: resource), then sentence count; None when no cell qualifies
    threshold_cell: tuple[int, int] | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "iterations": self.iterations,
                "threshold": self.threshold,
                "threshold_cell": self.threshold_cell,
                "cells": [
                    {"n_raters": r, "n_sentences": s, "mean_icc": v}
                    for r, s, v in self.cells
                ],
            },
            indent=2,
        )


def icc_grid(
    records: list[RatingRecord],
    model_id: str | None,
    rater_grid: list[int],
    sentence_grid: list[int],
    iterations: int = 1000,
    seed: int = 0,
    response: str = "readability",
    threshold: float = 0.5,
) -> IccGridResult:
    """Mean ICC(2,k) over bootstrap draws for every grid cell.

    Each draw picks distinct raters and distinct sentences (a valid rating
    matrix never repeats a rater column). Only sentences rated by every
    rater participate, so each drawn matrix is complete. Degenerate draws
    (no variance) are excluded from the cell mean.
    """
    items, raters, cells = _rating_matrix(records, model_id, response)
    complete_items = [
        item for item in items if all((item, rater) in cells for rater in raters)
    ]
    if len(complete_items) < 2 or len(raters) < 2:
        raise IncompleteMatrix(
            f"need a complete matrix of >=2 sentences x >=2 raters, have "
            f"{len(complete_items)} x {len(raters)}"
        )
    if max(rater_grid) > len(raters):
        raise InvalidInput(f"rater grid exceeds {len(raters)} available raters")
    if max(sentence_grid) > len(complete_items):
        raise InvalidInput(
            f"sentence grid exceeds {len(complete_items)} completely rated sentences"
        )
    matrix = np.array(
        [[cells[(item, rater)] for rater in raters] for item in complete_items]
    )
    out: list[tuple[int, int, float]] = []
    for n_raters in sorted(rater_grid):
        for n_sentences in sorted(sentence_grid):
            if n_raters < 2 or n_sentences < 2:
                raise InvalidInput("grid values must be >= 2")
            rng = derive_rng(seed, "icc-grid", n_raters, n_sentences)
            values = np.empty(iterations)
            for it in range(iterations):
                r_idx = rng.choice(len(raters), size=n_raters, replace=False)
                s_idx = rng.choice(len(complete_items), size=n_sentences, replace=False)
                values[it] = icc_2k(matrix[np.ix_(s_idx, r_idx)])
            out.append((n_raters, n_sentences, float(np.nanmean(values))))
    qualifying = sorted((r, s) for r, s, v in out if v >= threshold)
    return IccGridResult(
        cells=out,
        iterations=iterations,
        threshold=threshold,
        threshold_cell=qualifying[0] if qualifying else None,
    )
