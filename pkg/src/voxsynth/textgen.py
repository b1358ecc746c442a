"""Themed sentence/question generation in a target language with English glosses.

The prompt protocol asks the model for short simple sentences (and some
questions) written directly in the target language, each with an English
translation, returned as standardized JSON for reliable extraction. Themes
are sampled equally: requests cycle round-robin through the theme list so
per-theme request counts never differ by more than one.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import clients
from .clients import ChatRequest, EndpointConfig
from .errors import (
    GenerationAborted,
    InvalidInput,
    ParseFailure,
    RetryExhausted,
    SchemaFailure,
)
from .seeds import derive_rng, derive_seed, make_ulid
from .textnorm import QUESTION_MARKS, is_question, normalize_text

#: Default theme list: 17 sustainable-development topics plus 17 common
#: news/daily-life topics. These are documented placeholders; replace them
#: with a curated list for a real campaign.
DEFAULT_THEMES: tuple[str, ...] = (
    "ending poverty",
    "ending hunger and food security",
    "health and well-being",
    "quality education",
    "gender equality",
    "clean water and sanitation",
    "affordable and clean energy",
    "decent work and economic growth",
    "industry and infrastructure",
    "reducing inequality",
    "sustainable cities and communities",
    "responsible consumption",
    "climate action",
    "life below water",
    "life on land",
    "peace and justice",
    "partnerships and cooperation",
    "travel and transportation",
    "geography and landscapes",
    "science and discovery",
    "technology in daily life",
    "history and heritage",
    "culture and traditions",
    "sports and games",
    "weather and seasons",
    "family and community",
    "markets and trade",
    "farming and livestock",
    "wildlife and nature",
    "music and celebrations",
    "food and cooking",
    "news and media",
    "school and learning",
    "everyday conversations",
)


@dataclass(frozen=True)
class GenerationSpec:
    """What to generate: language, themes, volume, and the endpoint to use."""

    language_tag: str
    language_name: str
    model: EndpointConfig
    total_target: int
    sentences_per_request: int = 10
    themes: tuple[str, ...] = DEFAULT_THEMES
    question_share_target: float = 0.25
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.themes:
            raise InvalidInput("themes must be non-empty")
        if not 0.0 <= self.question_share_target <= 1.0:
            raise InvalidInput("question_share_target must be in [0, 1]")
        if self.total_target < 1:
            raise InvalidInput("total_target must be >= 1")
        if self.sentences_per_request < 1:
            raise InvalidInput("sentences_per_request must be >= 1")


@dataclass
class SentencePair:
    """One generated sentence in the target language with its English gloss."""

    id: str
    target_text: str
    english_text: str
    theme: str
    model_id: str
    batch_id: str
    is_question: bool
    created_at: str

    def to_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "SentencePair":
        return cls(**json.loads(line))


@dataclass
class GenerationReport:
    """Accounting for one generation run."""

    language_tag: str
    model_id: str
    total: int
    per_theme: dict[str, int]
    requests_issued: int
    parse_failures: int
    duplicates: int
    aborted: bool = False

    def to_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, indent=2, sort_keys=True)


def build_prompt(spec: GenerationSpec, theme: str, n: int) -> ChatRequest:
    """Instantiate the generation prompt for one request."""
    if theme not in spec.themes:
        raise InvalidInput(f"theme {theme!r} is not in the generation spec")
    if n < 1:
        raise InvalidInput("n must be >= 1")
    question_pct = round(spec.question_share_target * 100)
    system_prompt = (
        f"You write short, simple, natural sentences directly in "
        f"{spec.language_name} ({spec.language_tag}), each with a faithful "
        f"English translation. About {question_pct}% of the items should be "
        f"questions. Respond with JSON only, exactly in the form "
        f'{{"sentences": [{{"target": "...", "english": "..."}}]}} with one '
        f"object per sentence and no commentary."
    )
    user_prompt = (
        f"Generate {n} short simple sentence{'s' if n != 1 else ''} in "
        f"{spec.language_name} about the theme \"{theme}\", with English "
        f"translations, as a JSON array of {n} element{'s' if n != 1 else ''}."
    )
    return ChatRequest(
        system_prompt=system_prompt,
        user_prompt=user_prompt,
        temperature=spec.temperature,
        batch_tag=theme,
    )


def pairs_to_response_json(pairs: list[SentencePair]) -> str:
    """Serialize pairs into the model response shape (inverse of parsing)."""
    return json.dumps(
        {
            "sentences": [
                {"target": p.target_text, "english": p.english_text} for p in pairs
            ]
        },
        ensure_ascii=False,
    )


def _extract_first_json(raw: str):
    """Return the first JSON value embedded in ``raw``; prose around it is fine."""
    decoder = json.JSONDecoder()
    for idx, ch in enumerate(raw):
        if ch in "{[":
            try:
                value, _ = decoder.raw_decode(raw, idx)
                return value
            except ValueError:
                continue
    raise ParseFailure("no JSON value found in model response", raw=raw)


def parse_generation(
    raw: str,
    theme: str,
    model_id: str,
    batch_id: str,
    id_factory=None,
) -> list[SentencePair]:
    """Extract sentence pairs from a raw model response.

    Entries with an empty target are dropped; ``is_question`` is set from
    the target's terminal punctuation. ``id_factory`` (if given) must
    return ``(ulid, created_at)`` per pair; by default fresh ULIDs and the
    current UTC time are used.
    """
    value = _extract_first_json(raw)
    if not isinstance(value, dict) or "sentences" not in value:
        raise SchemaFailure("response JSON lacks a 'sentences' array", raw=raw)
    entries = value["sentences"]
    if not isinstance(entries, list):
        raise SchemaFailure("'sentences' is not an array", raw=raw)
    if id_factory is None:
        rng = np.random.default_rng()
        id_factory = lambda: (  # noqa: E731
            make_ulid(time.time_ns() // 1_000_000, rng),
            _iso_now(),
        )
    pairs = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise SchemaFailure("sentence entry is not an object", raw=raw)
        target = entry.get("target")
        english = entry.get("english")
        if not isinstance(target, str) or not isinstance(english, str):
            raise SchemaFailure(
                "sentence entry needs string 'target' and 'english'", raw=raw
            )
        if not target.strip():
            continue
        ulid, created_at = id_factory()
        pairs.append(
            SentencePair(
                id=ulid,
                target_text=target.strip(),
                english_text=english.strip(),
                theme=theme,
                model_id=model_id,
                batch_id=batch_id,
                is_question=is_question(target, QUESTION_MARKS),
                created_at=created_at,
            )
        )
    return pairs


def _iso_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _iso_from_ms(ms: int) -> str:
    return datetime.fromtimestamp(ms / 1000.0, timezone.utc).isoformat(
        timespec="milliseconds"
    )


def generate_corpus(
    spec: GenerationSpec,
    failure_budget: int = 5,
    deterministic_ids: bool = False,
) -> tuple[list[SentencePair], GenerationReport]:
    """Generate ``spec.total_target`` pairs by fanning requests over themes.

    Requests cycle round-robin through the themes; parse failures are
    tolerated and re-requested in later waves. Accumulation is sorted by
    (theme, request index) before the seeded shuffle, so fan-out order
    never changes the result.

    With ``deterministic_ids`` the ULIDs and ``created_at`` stamps are also
    derived from ``spec.seed`` (a synthetic monotonic clock), which makes
    output artifacts byte-reproducible; wall-clock stamps otherwise.

    Raises ``GenerationAborted`` (carrying partial pairs and report) when
    transport failures exceed ``failure_budget`` or a full wave yields
    nothing.
    """
    themes = spec.themes
    collected: list[tuple[str, int, SentencePair]] = []
    parse_failures = 0
    transport_failures = 0
    requests_issued = 0
    aborted = False

    if deterministic_ids:
        id_rng = derive_rng(spec.seed, "pair-ids")
        clock_state = {"ms": 0}

        def id_factory():
            ms = clock_state["ms"]
            clock_state["ms"] += 1
            return make_ulid(ms, id_rng), _iso_from_ms(ms)

    else:
        id_factory = None

    def issue(request_index: int) -> list[SentencePair] | Exception:
        theme = themes[request_index % len(themes)]
        want = spec.sentences_per_request
        req = build_prompt(spec, theme, want)
        batch_id = f"batch-{request_index:05d}"
        try:
            raw = clients.complete_chat(spec.model, req)
            # IDs are assigned after accumulation, so parse with a dummy
            # factory here and restamp below; this keeps IDs independent of
            # response arrival order.
            return parse_generation(
                raw, theme, spec.model.model_id, batch_id, id_factory=lambda: ("", "")
            )
        except (ParseFailure, SchemaFailure) as exc:
            return exc
        except RetryExhausted as exc:
            return exc

    next_request = 0
    while len(collected) < spec.total_target:
        remaining = spec.total_target - len(collected)
        wave_size = max(1, math.ceil(remaining / spec.sentences_per_request))
        indices = list(range(next_request, next_request + wave_size))
        next_request += wave_size
        requests_issued += wave_size
        results = clients.run_parallel(issue, indices, spec.model.max_parallel)
        wave_pairs = 0
        for request_index, result in zip(indices, results):
            if isinstance(result, RetryExhausted):
                transport_failures += 1
            elif isinstance(result, Exception):
                parse_failures += 1
            else:
                theme = themes[request_index % len(themes)]
                for pair in result:
                    collected.append((theme, request_index, pair))
                wave_pairs += len(result)
        if transport_failures > failure_budget:
            aborted = True
            break
        if wave_pairs == 0:
            # a full wave with no usable output means we are not converging
            aborted = True
            break

    collected.sort(key=lambda item: (item[0], item[1]))
    pairs = [pair for _, _, pair in collected][: spec.total_target]

    if id_factory is None:
        rng = np.random.default_rng()
        for pair in pairs:
            pair.id = make_ulid(time.time_ns() // 1_000_000, rng)
            pair.created_at = _iso_now()
    else:
        for pair in pairs:
            pair.id, pair.created_at = id_factory()

    order = np.random.default_rng(derive_seed(spec.seed, "shuffle")).permutation(
        len(pairs)
    )
    pairs = [pairs[i] for i in order]

    per_theme: dict[str, int] = {}
    seen: set[str] = set()
    duplicates = 0
    for pair in pairs:
        per_theme[pair.theme] = per_theme.get(pair.theme, 0) + 1
        key = normalize_text(pair.target_text)
        if key in seen:
            duplicates += 1
        else:
            seen.add(key)

    report = GenerationReport(
        language_tag=spec.language_tag,
        model_id=spec.model.model_id,
        total=len(pairs),
        per_theme=dict(sorted(per_theme.items())),
        requests_issued=requests_issued,
        parse_failures=parse_failures,
        duplicates=duplicates,
        aborted=aborted,
    )
    if aborted:
        raise GenerationAborted(
            f"generation aborted after {transport_failures} transport failures",
            pairs=pairs,
            report=report,
        )
    return pairs, report


def write_pairs_jsonl(pairs: list[SentencePair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(pair.to_json() + "\n")


def read_pairs_jsonl(path) -> list[SentencePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pairs.append(SentencePair.from_json(line))
    return pairs
