"""Exact deduplication and the unique-rate-vs-batch-count simulation.

Large-scale generation runs repeat themselves: the interesting statistic is
how the fraction of unique sentences falls as more batch requests are
pooled. The simulation subsamples whole batch requests without replacement
(the batch, not the sentence, is the sampling unit) and reports the mean
and sample standard deviation of the unique rate at each batch count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

from .errors import InvalidInput
from .seeds import derive_rng
from .textgen import SentencePair
from .textnorm import normalize_text


@dataclass
class DedupReport:
    total: int
    unique: int
    unique_rate: float
    per_batch: dict[str, tuple[int, int]]  # batch_id -> (total, unique)

    def to_json(self) -> str:
        return json.dumps(
            {
                "total": self.total,
                "unique": self.unique,
                "unique_rate": self.unique_rate,
                "per_batch": {k: list(v) for k, v in sorted(self.per_batch.items())},
            },
            indent=2,
        )


@dataclass
class UniquenessCurve:
    points: list[tuple[int, float, float]]  # (batch_count, mean_unique_rate, std)
    subsamples_per_point: int

    def to_csv(self) -> str:
        lines = ["batch_count,mean_unique_rate,std"]
        for count, mean, std in self.points:
            lines.append(f"{count},{mean:.6f},{std:.6f}")
        return "\n".join(lines) + "\n"


def dedup(pairs: list[SentencePair]) -> tuple[list[SentencePair], DedupReport]:
    """Keep the first occurrence of each normalized target text, stable order."""
    seen: set[str] = set()
    kept: list[SentencePair] = []
    per_batch_total: dict[str, int] = {}
    per_batch_seen: dict[str, set[str]] = {}
    for pair in pairs:
        key = normalize_text(pair.target_text)
        per_batch_total[pair.batch_id] = per_batch_total.get(pair.batch_id, 0) + 1
        per_batch_seen.setdefault(pair.batch_id, set()).add(key)
        if key not in seen:
            seen.add(key)
            kept.append(pair)
    total = len(pairs)
    report = DedupReport(
        total=total,
        unique=len(kept),
        unique_rate=len(kept) / total if total else 0.0,
        per_batch={
            batch: (per_batch_total[batch], len(per_batch_seen[batch]))
            for batch in per_batch_total
        },
    )
    return kept, report


def _rate_for_batches(
    batch_keys: dict[str, list[str]], chosen: tuple[str, ...]
) -> float:
    union: set[str] = set()
    total = 0
    for batch in chosen:
        keys = batch_keys[batch]
        union.update(keys)
        total += len(keys)
    return len(union) / total if total else 0.0


def uniqueness_curve(
    pairs: list[SentencePair],
    batch_counts: list[int],
    subsamples: int = 1000,
    seed: int = 0,
) -> UniquenessCurve:
    """Mean/std of the pooled unique rate when ``k`` batches are subsampled.

    For each batch count ``k``, draws ``subsamples`` subsets of ``k``
    distinct batches and measures the unique rate of the pooled sentences.
    When the number of possible subsets is at most ``subsamples`` the
    subsets are enumerated exhaustively instead (the exact expectation);
    otherwise they are sampled uniformly. ``std`` is the sample standard
    deviation over the draws (zero when a single subset exists).
    """
    if subsamples < 1:
        raise InvalidInput("subsamples must be >= 1")
    batch_keys: dict[str, list[str]] = {}
    for pair in pairs:
        batch_keys.setdefault(pair.batch_id, []).append(
            normalize_text(pair.target_text)
        )
    batches = sorted(batch_keys)
    n_batches = len(batches)
    points: list[tuple[int, float, float]] = []
    previous = None
    for count in sorted(batch_counts):
        if previous is not None and count <= previous:
            raise InvalidInput("batch_counts must be strictly increasing")
        previous = count
        if count < 1 or count > n_batches:
            raise InvalidInput(
                f"batch_count {count} outside [1, {n_batches} available batches]"
            )
        n_subsets = math.comb(n_batches, count)
        if n_subsets <= subsamples:
            rates = [
                _rate_for_batches(batch_keys, chosen)
                for chosen in combinations(batches, count)
            ]
        else:
            rng = derive_rng(seed, "uniqueness-curve", count)
            rates = []
            for _ in range(subsamples):
                chosen = rng.choice(n_batches, size=count, replace=False)
                rates.append(
                    _rate_for_batches(batch_keys, tuple(batches[i] for i in chosen))
                )
        mean = sum(rates) / len(rates)
        if len(rates) > 1:
            var = sum((r - mean) ** 2 for r in rates) / (len(rates) - 1)
            std = math.sqrt(var)
        else:
            std = 0.0
        points.append((count, mean, std))
    return UniquenessCurve(points=points, subsamples_per_point=subsamples)
