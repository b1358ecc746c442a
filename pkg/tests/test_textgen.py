from __future__ import annotations

import json

import pytest

from voxsynth.clients import EndpointConfig
from voxsynth.errors import (
    GenerationAborted,
    InvalidInput,
    ParseFailure,
    SchemaFailure,
)
from voxsynth.textgen import (
    DEFAULT_THEMES,
    GenerationSpec,
    SentencePair,
    build_prompt,
    generate_corpus,
    pairs_to_response_json,
    parse_generation,
    read_pairs_jsonl,
    write_pairs_jsonl,
)


def _spec(url, total=34, per_request=1, themes=DEFAULT_THEMES, seed=7, **kw):
    return GenerationSpec(
        language_tag="ha",
        language_name="Hausa",
        model=EndpointConfig(
            kind="llm",
            base_url=url,
            model_id="stub-llm",
            timeout=10,
            max_parallel=4,
            max_retries=1,
            backoff_base=0.01,
        ),
        total_target=total,
        sentences_per_request=per_request,
        themes=themes,
        seed=seed,
        **kw,
    )


def test_default_theme_list_has_34_entries():
    assert len(DEFAULT_THEMES) == 34
    assert len(set(DEFAULT_THEMES)) == 34


def test_build_prompt_names_language_theme_count():
    spec = _spec("http://x", total=10, per_request=5)
    req = build_prompt(spec, "health and well-being", 5)
    assert "Hausa" in req.user_prompt
    assert "health and well-being" in req.user_prompt
    assert "5" in req.user_prompt
    assert len(req.few_shot) == 2
    assert "JSON" in req.system_prompt


def test_build_prompt_rejects_unknown_theme():
    spec = _spec("http://x")
    with pytest.raises(InvalidInput):
        build_prompt(spec, "not-a-theme", 3)


def test_build_prompt_n1_singular():
    spec = _spec("http://x")
    req = build_prompt(spec, spec.themes[0], 1)
    assert "1 short simple sentence in" in req.user_prompt
    assert "array of 1 element" in req.user_prompt


def test_parse_question_detection():
    raw = '{"sentences":[{"target":"Yaya kake?","english":"How are you?"}]}'
    pairs = parse_generation(raw, "greetings", "m", "b0")
    assert len(pairs) == 1
    assert pairs[0].is_question
    assert pairs[0].target_text == "Yaya kake?"
    # the Arabic question mark counts too
    arabic = '{"sentences":[{"target":"Ina kwana؟","english":"Morning?"}]}'
    assert parse_generation(arabic, "greetings", "m", "b0")[0].is_question


def test_parse_tolerates_prose_preamble():
    raw = 'Sure! Here are the sentences you asked for:\n{"sentences":[{"target":"Ina kwana.","english":"Good morning."}]}'
    pairs = parse_generation(raw, "greetings", "m", "b0")
    assert len(pairs) == 1
    assert not pairs[0].is_question


def test_parse_wrong_schema():
    with pytest.raises(SchemaFailure):
        parse_generation('{"data": []}', "t", "m", "b0")


def test_parse_no_json():
    with pytest.raises(ParseFailure) as err:
        parse_generation("no json here at all", "t", "m", "b0")
    assert err.value.raw == "no json here at all"


def test_parse_drops_empty_targets():
    raw = json.dumps(
        {
            "sentences": [
                {"target": "  ", "english": "blank"},
                {"target": "Gaskiya ne.", "english": "It is true."},
            ]
        }
    )
    pairs = parse_generation(raw, "t", "m", "b0")
    assert [p.target_text for p in pairs] == ["Gaskiya ne."]


def test_parse_serialize_round_trip():
    raw = json.dumps(
        {
            "sentences": [
                {"target": "Ruwa na da kyau.", "english": "Water is good."},
                {"target": "Ina kasuwa?", "english": "Where is the market?"},
            ]
        }
    )
    pairs = parse_generation(raw, "t", "m", "b0")
    reparsed = parse_generation(pairs_to_response_json(pairs), "t", "m", "b0")
    assert [(p.target_text, p.english_text) for p in pairs] == [
        (p.target_text, p.english_text) for p in reparsed
    ]


def test_equal_sampling_one_per_theme(stub_url):
    spec = _spec(stub_url, total=34, per_request=1)
    pairs, report = generate_corpus(spec)
    assert report.total == 34
    assert set(report.per_theme) == set(DEFAULT_THEMES)
    assert all(count == 1 for count in report.per_theme.values())


def test_per_theme_requests_differ_at_most_one(stub_url):
    spec = _spec(stub_url, total=50, per_request=1)
    _, report = generate_corpus(spec)
    counts = [report.per_theme.get(theme, 0) for theme in DEFAULT_THEMES]
    assert max(counts) - min(counts) <= 1


def test_constant_stub_reports_duplicates(scripted_server):
    handler, url = scripted_server
    body = {"content": '{"sentences":[{"target":"Daya tak.","english":"One only."}]}'}
    handler.reset([(200, body)])
    spec = _spec(url, total=8, per_request=1)
    pairs, report = generate_corpus(spec)
    assert report.duplicates == len(pairs) - 1


def test_seeded_shuffle_is_deterministic(stub_url, tmp_path):
    spec = _spec(stub_url, total=20, per_request=2, seed=99)
    pairs_a, _ = generate_corpus(spec, deterministic_ids=True)
    pairs_b, _ = generate_corpus(spec, deterministic_ids=True)
    write_pairs_jsonl(pairs_a, tmp_path / "a.jsonl")
    write_pairs_jsonl(pairs_b, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_shuffle_is_permutation_across_seeds(stub_url):
    pairs_a, _ = generate_corpus(_spec(stub_url, total=12, per_request=3, seed=1))
    pairs_b, _ = generate_corpus(_spec(stub_url, total=12, per_request=3, seed=2))
    key = lambda ps: sorted((p.target_text, p.english_text, p.theme) for p in ps)
    assert key(pairs_a) == key(pairs_b)
    assert [p.target_text for p in pairs_a] != [p.target_text for p in pairs_b]


def test_failure_budget_aborts_with_partials(scripted_server):
    handler, url = scripted_server
    handler.reset([(500, {})])
    spec = _spec(url, total=10, per_request=1)
    with pytest.raises(GenerationAborted) as err:
        generate_corpus(spec, failure_budget=2)
    assert err.value.report.aborted


def test_jsonl_round_trip(tmp_path, stub_url):
    pairs, _ = generate_corpus(_spec(stub_url, total=6, per_request=2))
    path = tmp_path / "pairs.jsonl"
    write_pairs_jsonl(pairs, path)
    back = read_pairs_jsonl(path)
    assert back == pairs
    assert all(isinstance(p, SentencePair) for p in back)
