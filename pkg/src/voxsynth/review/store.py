"""Study definitions and the append-only rating log.

A study lives in a directory: ``study.json`` (items, raters, metric
schema, shuffle seed, access token) plus ``ratings.log.jsonl``, an
append-only log of every submission. The live state is a last-write-wins
projection over the log, rebuilt at startup, so the store is crash-safe
and diffable without a database.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import InvalidInput, NotFound
from ..ratings import RatingRecord
from ..seeds import derive_seed

METRIC_SCHEMAS = {
    "text_five": {
        "modality": "text",
        "scales": {"readability": [1, 7], "adequacy": [1, 7]},
        "binaries": ["grammatical", "real_words", "notable_error"],
    },
    "audio_two": {
        "modality": "tts_audio",
        "scales": {"intelligibility": [1, 5], "naturalness_5": [1, 5]},
        "binaries": [],
    },
}


@dataclass
class StudyItem:
    item_id: str
    target_text: str
    english_text: str = ""
    audio: str | None = None  # path relative to the study dir
    model_id: str = ""


@dataclass
class Study:
    study_id: str
    modality: str  # text | tts_audio
    metrics_schema: str  # text_five | audio_two
    items: list[StudyItem]
    raters: list[str]
    shuffle_seed: int = 0
    token: str = ""  # empty disables auth
    root: Path | None = None

    def __post_init__(self):
        if self.metrics_schema not in METRIC_SCHEMAS:
            raise InvalidInput(f"unknown metrics schema {self.metrics_schema!r}")
        if METRIC_SCHEMAS[self.metrics_schema]["modality"] != self.modality:
            raise InvalidInput(
                f"schema {self.metrics_schema} does not fit modality {self.modality}"
            )
        ids = [item.item_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise InvalidInput("item ids must be unique within a study")

    def rater_order(self, rater_id: str) -> list[StudyItem]:
        """Study-wide shuffle composed with a rater-specific permutation.

        Every rater sees the items in a random order, and no two raters
        share an order, so position effects cannot correlate across raters.
        """
        if rater_id not in self.raters:
            raise NotFound(f"rater {rater_id!r} is not enrolled")
        base_rng = np.random.default_rng(derive_seed(self.shuffle_seed, "study-shuffle"))
        base = [self.items[i] for i in base_rng.permutation(len(self.items))]
        rater_rng = np.random.default_rng(
            derive_seed(self.shuffle_seed, "rater-shuffle", rater_id)
        )
        return [base[i] for i in rater_rng.permutation(len(base))]


def load_study(study_dir: str | Path) -> Study:
    study_dir = Path(study_dir)
    spec = json.loads((study_dir / "study.json").read_text(encoding="utf-8"))
    items = [StudyItem(**item) for item in spec.pop("items")]
    return Study(items=items, root=study_dir, **spec)


def save_study(study: Study, study_dir: str | Path) -> None:
    study_dir = Path(study_dir)
    study_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "study_id": study.study_id,
        "modality": study.modality,
        "metrics_schema": study.metrics_schema,
        "items": [dict(item.__dict__) for item in study.items],
        "raters": study.raters,
        "shuffle_seed": study.shuffle_seed,
        "token": study.token,
    }
    (study_dir / "study.json").write_text(
        json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8"
    )


class RatingStore:
    """Append-only JSONL log with an in-memory last-write-wins projection."""

    def __init__(self, study: Study, log_path: str | Path):
        self.study = study
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self._live: dict[tuple[str, str], RatingRecord] = {}
        self._audit: dict[tuple[str, str], int] = {}
        if self.log_path.exists():
            with open(self.log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        entry = json.loads(line)
                        self._project(RatingRecord(**entry["record"]))

    def _project(self, record: RatingRecord) -> None:
        key = (record.item_id, record.rater_id)
        self._live[key] = record
        self._audit[key] = self._audit.get(key, 0) + 1

    def submit(self, record: RatingRecord) -> int:
        """Validate, append, project; returns the audit length for the key."""
        record.validate()
        if record.item_id not in {item.item_id for item in self.study.items}:
            raise NotFound(f"item {record.item_id!r} is not part of this study")
        if record.rater_id not in self.study.raters:
            raise NotFound(f"rater {record.rater_id!r} is not enrolled")
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(timespec="milliseconds"),
            "record": dict(record.__dict__),
        }
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            self._project(record)
            return self._audit[(record.item_id, record.rater_id)]

    def rating_for(self, item_id: str, rater_id: str) -> RatingRecord | None:
        return self._live.get((item_id, rater_id))

    def records(self) -> list[RatingRecord]:
        """Live records in deterministic (item, rater) order."""
        return [self._live[key] for key in sorted(self._live)]

    def rated_count(self, rater_id: str) -> int:
        return sum(1 for _, rater in self._live if rater == rater_id)
