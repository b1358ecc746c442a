"""Command-line entry point: one subcommand per pipeline stage.

Every stage reads its section of a JSON run config, derives its own seed
from the root seed and the stage name, writes declared artifacts into
``--out-dir``, and exits 0 on success, 2 on validation/config errors, 1 on
runtime failures (64 for usage errors). Two runs with the same config,
seed, and endpoints produce byte-identical artifacts; anything
time-dependent stays out of the outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import asreval, augment, corpus, ratings, textgen, ttsqc
from .audioio import decode_wav_bytes
from .clients import EndpointConfig, synthesize_speech
from .dedup import dedup as run_dedup
from .dedup import uniqueness_curve
from .textnorm import is_question
from .errors import (
    ConfigError,
    GenerationAborted,
    InvalidInput,
    ValidationError,
    VoxsynthError,
)
from .seeds import derive_seed

USAGE_EXIT = 64
VALIDATION_EXIT = 2
RUNTIME_EXIT = 1

_VALIDATION_ERRORS = (ConfigError, InvalidInput, ValidationError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def cfg_get(config: dict, dotted: str, default=None, required: bool = False):
    node = config
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(f"missing config key: {dotted}", key=dotted)
            return default
        node = node[part]
    return node


def endpoint_from_config(config: dict, kind: str) -> EndpointConfig:
    section = dict(cfg_get(config, f"endpoints.{kind}", required=True))
    # VOXSYNTH_LLM_TOKEN / _TTS_ / _ASR_ override the configured credential
    # source, so one shell export can redirect a whole config file
    override = f"VOXSYNTH_{kind.upper()}_TOKEN"
    if os.environ.get(override):
        section["auth_token_env"] = override
    try:
        return EndpointConfig(kind=kind, **section)
    except TypeError as exc:
        raise ConfigError(f"bad endpoints.{kind} section: {exc}") from exc


def _root_seed(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg_get(config, "seed", default=0))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


# ---------------------------------------------------------------- stages


def cmd_gen_text(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    section = cfg_get(config, "generation", required=True)
    spec = textgen.GenerationSpec(
        language_tag=cfg_get(section, "language_tag", required=True),
        language_name=cfg_get(section, "language_name", required=True),
        model=endpoint_from_config(config, "llm"),
        total_target=cfg_get(section, "total_target", required=True),
        sentences_per_request=cfg_get(section, "sentences_per_request", 10),
        themes=tuple(cfg_get(section, "themes", list(textgen.DEFAULT_THEMES))),
        question_share_target=cfg_get(section, "question_share_target", 0.25),
        temperature=cfg_get(section, "temperature", 1.0),
        seed=derive_seed(_root_seed(args, config), "gen-text"),
    )
    try:
        pairs, report = textgen.generate_corpus(spec, deterministic_ids=True)
    except GenerationAborted as exc:
        textgen.write_pairs_jsonl(exc.pairs, out / "pairs.partial.jsonl")
        if exc.report is not None:
            _write(out / "generation_report.json", exc.report.to_json() + "\n")
        print(f"error: {exc}; partial results in {out}", file=sys.stderr)
        return RUNTIME_EXIT
    textgen.write_pairs_jsonl(pairs, out / "pairs.jsonl")
    print(f"wrote {out / 'pairs.jsonl'}")
    _write(out / "generation_report.json", report.to_json() + "\n")
    return 0


def cmd_dedup(args) -> int:
    out = _out_dir(args)
    pairs = textgen.read_pairs_jsonl(args.pairs)
    kept, report = run_dedup(pairs)
    textgen.write_pairs_jsonl(kept, out / "deduped.jsonl")
    print(f"wrote {out / 'deduped.jsonl'}")
    _write(out / "dedup_report.json", report.to_json() + "\n")
    return 0


def cmd_uniq_curve(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    pairs = textgen.read_pairs_jsonl(args.pairs)
    curve = uniqueness_curve(
        pairs,
        batch_counts=cfg_get(config, "uniqueness_curve.batch_counts", required=True),
        subsamples=cfg_get(config, "uniqueness_curve.subsamples", 1000),
        seed=derive_seed(_root_seed(args, config), "uniq-curve"),
    )
    _write(out / "uniqueness_curve.csv", curve.to_csv())
    return 0


def cmd_synth(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    tts = endpoint_from_config(config, "tts")
    pairs = textgen.read_pairs_jsonl(args.pairs)
    audio_dir = out / "audio"
    audio_dir.mkdir(exist_ok=True)
    utterances = []
    for pair in pairs:
        audio, rate = synthesize_speech(tts, pair.target_text)
        rel = f"audio/{pair.id}.wav"
        (out / rel).write_bytes(audio)
        samples, _ = decode_wav_bytes(audio)
        utterances.append(
            corpus.Utterance(
                id=pair.id,
                transcript=pair.target_text,
                audio=rel,
                duration=round(samples.size / rate, 6),
                speaker_id=f"tts:{tts.model_id}",
                gender="unknown",
                origin="synthetic",
                dataset_tag=pair.batch_id,
            )
        )
    corpus.write_manifest(utterances, out / "synth_manifest.jsonl")
    print(f"wrote {out / 'synth_manifest.jsonl'} ({len(utterances)} clips)")
    return 0


def _policy_from_config(config: dict) -> ttsqc.FilterPolicy:
    section = cfg_get(config, "tts_filter", default={})
    return ttsqc.FilterPolicy(
        ratio_measure=section.get("ratio_measure", "chars"),
        bounds_kind=section.get("bounds_kind", "mad"),
        mad_k=section.get("mad_k", 3.5),
        mad_zero_tolerance=section.get("mad_zero_tolerance", 0.05),
        fixed_lo=section.get("fixed_lo", 0.0),
        fixed_hi=section.get("fixed_hi", 0.0),
        question_share_target=section.get("question_share_target", 0.25),
    )


def cmd_tts_filter(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    asr = endpoint_from_config(config, "asr")
    policy = _policy_from_config(config)
    utterances = corpus.read_manifest(args.manifest)
    root = Path(args.audio_root)
    candidates = [
        ttsqc.TtsCandidate(
            utterance_id=utt.id,
            source_text=utt.transcript,
            audio=str(root / utt.audio),
        )
        for utt in utterances
    ]
    scored = ttsqc.score_candidates(candidates, asr, measure=policy.ratio_measure)
    kept, removed, report = ttsqc.filter_outliers(scored, policy)
    kept_ids = {c.utterance_id for c in kept}
    corpus.write_manifest(
        [u for u in utterances if u.id in kept_ids], out / "kept_manifest.jsonl"
    )
    print(f"wrote {out / 'kept_manifest.jsonl'} ({len(kept)} kept)")
    removed_ids = {c.utterance_id for c in removed}
    corpus.write_manifest(
        [u for u in utterances if u.id in removed_ids], out / "removed_manifest.jsonl"
    )
    print(f"wrote {out / 'removed_manifest.jsonl'} ({len(removed)} removed)")
    _write(
        out / "filter_report.json",
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
    )
    return 0


def cmd_rebalance(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    target = cfg_get(config, "tts_filter.question_share_target", 0.25)
    utterances = corpus.read_manifest(args.manifest)
    kept = ttsqc.rebalance_questions(
        utterances,
        target_share=target,
        seed=derive_seed(_root_seed(args, config), "rebalance"),
        question_flag=lambda utt: is_question(utt.transcript),
    )
    corpus.write_manifest(kept, out / "rebalanced_manifest.jsonl")
    print(f"wrote {out / 'rebalanced_manifest.jsonl'} ({len(kept)} of {len(utterances)})")
    return 0


def cmd_augment(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    section = cfg_get(config, "augment", required=True)
    policy = augment.AugmentPolicy(
        noise_bank=cfg_get(section, "noise_bank", required=True),
        snr_mean=section.get("snr_mean", 50.0),
        snr_std=section.get("snr_std", 15.0),
        amp_mean=section.get("amp_mean", -20.0),
        amp_std=section.get("amp_std", 5.0),
        snr_floor=section.get("snr_floor", 0.0),
        seed=derive_seed(_root_seed(args, config), "augment"),
    )
    utterances = corpus.read_manifest(args.manifest)
    result, log = augment.augment_corpus(utterances, policy, args.audio_root, out)
    corpus.write_manifest(result, out / "augmented_manifest.jsonl")
    print(f"wrote {out / 'augmented_manifest.jsonl'} ({len(result)} clips)")
    _write(out / "augment_log.jsonl", log.to_jsonl())
    return 0


def cmd_split(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    section = cfg_get(config, "split", required=True)
    targets = cfg_get(section, "targets", required=True)
    spec = corpus.SplitSpec(
        targets=tuple(targets.items()),
        speaker_exclusive=section.get("speaker_exclusive", True),
        transcript_exclusive=section.get("transcript_exclusive", True),
        tolerance=section.get("tolerance", 0.02),
        seed=derive_seed(_root_seed(args, config), "split"),
    )
    utterances = corpus.read_manifest(args.manifest)
    result = corpus.split(utterances, spec)
    summary = {}
    for name, subset in result.items():
        corpus.write_manifest(subset, out / f"{name}_manifest.jsonl")
        print(f"wrote {out / f'{name}_manifest.jsonl'} ({len(subset)} utterances)")
        summary[name] = {
            "utterances": len(subset),
            "hours": corpus.total_hours(subset),
        }
    _write(out / "split_report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_mix(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    section = cfg_get(config, "mix", required=True)
    spec = corpus.MixSpec(
        mode=section.get("mode", "constant_total"),
        real_hours=cfg_get(section, "real_hours", required=True),
        synthetic_hours=cfg_get(section, "synthetic_hours", required=True),
        seed=derive_seed(_root_seed(args, config), "mix"),
    )
    real = corpus.read_manifest(args.real)
    synthetic = corpus.read_manifest(args.synthetic)
    mixed, report = corpus.mix(real, synthetic, spec)
    corpus.write_manifest(mixed, out / "mixed_manifest.jsonl")
    print(f"wrote {out / 'mixed_manifest.jsonl'} ({len(mixed)} utterances)")
    _write(out / "mix_report.json", report.to_json() + "\n")
    return 0


def _normalizer_from_config(config: dict) -> asreval.Normalizer:
    section = cfg_get(config, "normalizer", default={})
    return asreval.Normalizer(
        lowercase=section.get("lowercase", True),
        strip_punct=section.get("strip_punct", ""),
        apostrophe_fold=section.get("apostrophe_fold", True),
        diacritic_mode=section.get("diacritic_mode", "keep"),
        diacritic_map=tuple(
            tuple(pair) for pair in section.get(
                "diacritic_map", [list(p) for p in asreval.DEFAULT_DIACRITIC_MAP]
            )
        ),
        contractions=tuple(tuple(pair) for pair in section.get("contractions", [])),
    )


def _load_eval_inputs(args) -> tuple[list[str], list[str], list[str] | None]:
    if args.refs and args.hyps:
        refs = asreval.read_lines(args.refs)
        hyps = asreval.read_lines(args.hyps)
        return refs, hyps, None
    if args.manifest:
        refs, hyps, groups = [], [], []
        with open(args.manifest, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if "schema" in row:
                    continue
                refs.append(row["transcript"])
                hyps.append(row["hypothesis"])
                groups.append(row.get("gender", "unknown"))
        return refs, hyps, groups
    raise ConfigError("need --refs/--hyps or --manifest with transcript+hypothesis")


def cmd_eval(args, by_gender: bool = False) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    normalizer = _normalizer_from_config(config)
    iterations = args.iterations or cfg_get(config, "eval.iterations", 1000)
    seed = derive_seed(_root_seed(args, config), "eval")
    refs, hyps, groups = _load_eval_inputs(args)
    if by_gender:
        if groups is None:
            raise ConfigError("eval-gender needs --manifest input with gender fields")
        report = asreval.eval_by_group(
            refs, hyps, groups, normalizer, iterations=iterations, seed=seed
        )
    else:
        report = asreval.bootstrap_eval(
            refs, hyps, normalizer, iterations=iterations, seed=seed
        )
    _write(out / "eval_report.json", report.to_json() + "\n")
    print(f"wer={report.wer:.4f} cer={report.cer:.4f} n={report.n_items}")
    return 0


def cmd_errors(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    normalizer = _normalizer_from_config(config)
    refs, hyps, _ = _load_eval_inputs(args)
    inventory = asreval.error_inventory(refs, hyps, normalizer, top_k=args.top_k)
    _write(out / "error_inventory.json", inventory.to_json() + "\n")
    n = asreval.adjudication_export(inventory, out / "adjudication.csv", args.language)
    print(f"wrote {out / 'adjudication.csv'} ({n} rows)")
    return 0


def cmd_rate_serve(args) -> int:
    import uvicorn

    from .review import create_app

    app = create_app(args.study, log_name=args.log_name)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")


def cmd_ratings_analyze(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    records = ratings.load_ratings_csv(args.ratings)
    section = cfg_get(config, "ratings", default={})
    seed = derive_seed(_root_seed(args, config), "ratings-analyze")
    if args.analysis == "summary":
        summary = ratings.summarize(records)
        payload = {
            group: {
                metric: {"mean": mean, "std": std, "n": n}
                for metric, (mean, std, n) in metrics.items()
            }
            for group, metrics in summary.items()
        }
        _write(out / "ratings_summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _write_csv(
            out / "ratings_summary.csv",
            ["group", "metric", "mean", "std", "n"],
            [
                [group, metric, mean, std, n]
                for group, metrics in summary.items()
                for metric, (mean, std, n) in metrics.items()
            ],
        )
    elif args.analysis == "anova":
        table = ratings.anova_two_way(records, response=args.response)
        _write(out / "anova.json", table.to_json() + "\n")
        _write_csv(
            out / "anova.csv",
            ["source", "sum_sq", "df", "mean_sq", "F", "p"],
            [
                [name, row.sum_sq, row.df, row.mean_sq, row.f_value, row.p_value]
                for name, row in table.factors.items()
            ]
            + [
                [
                    "residual",
                    table.residual.sum_sq,
                    table.residual.df,
                    table.residual.mean_sq,
                    "",
                    "",
                ]
            ],
        )
    elif args.analysis == "rater-bootstrap":
        grid = section.get("rater_grid", [2, 3, 4, 5])
        result = ratings.rater_bootstrap(
            records,
            model_id=args.model,
            n_raters_grid=grid,
            n_sentences=section.get("n_sentences", 50),
            iterations=section.get("iterations", 1000),
            seed=seed,
            response=args.response,
        )
        payload = [
            {"n_raters": n, "mean": mean, "ci95_low": lo, "ci95_high": hi}
            for n, mean, lo, hi in result
        ]
        _write(out / "rater_bootstrap.json", json.dumps(payload, indent=2) + "\n")
        _write_csv(
            out / "rater_bootstrap.csv",
            ["n_raters", "mean", "ci95_low", "ci95_high"],
            [list(row) for row in result],
        )
    elif args.analysis == "icc-grid":
        result = ratings.icc_grid(
            records,
            model_id=args.model,
            rater_grid=section.get("rater_grid", [2, 3]),
            sentence_grid=section.get("sentence_grid", [5, 10]),
            iterations=section.get("iterations", 1000),
            seed=seed,
            response=args.response,
        )
        _write(out / "icc_grid.json", result.to_json() + "\n")
        _write_csv(
            out / "icc_grid.csv",
            ["n_raters", "n_sentences", "mean_icc"],
            [list(cell) for cell in result.cells],
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown analysis {args.analysis!r}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="voxsynth", description=__doc__)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def std(p, config=True, seed=True, out=True):
        if config:
            p.add_argument("--config", help="JSON run config")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="root seed override")
        if out:
            p.add_argument("--out-dir", required=True)

    p = sub.add_parser("gen-text", help="generate themed sentence pairs via the LLM")
    std(p)
    p.set_defaults(fn=cmd_gen_text)

    p = sub.add_parser("dedup", help="drop exact duplicates from a pair corpus")
    std(p, config=False, seed=False)
    p.add_argument("--pairs", required=True)
    p.set_defaults(fn=cmd_dedup)

    p = sub.add_parser("uniq-curve", help="unique rate vs pooled batch count")
    std(p)
    p.add_argument("--pairs", required=True)
    p.set_defaults(fn=cmd_uniq_curve)

    p = sub.add_parser("synth", help="synthesize audio for each sentence pair")
    std(p)
    p.add_argument("--pairs", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("tts-filter", help="remove hallucinated synthetic clips")
    std(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.set_defaults(fn=cmd_tts_filter)

    p = sub.add_parser("rebalance", help="subsample questions to the target share")
    std(p)
    p.add_argument("--manifest", required=True)
    p.set_defaults(fn=cmd_rebalance)

    p = sub.add_parser("augment", help="mix noise at sampled SNR and level")
    std(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("split", help="speaker/transcript-exclusive splits")
    std(p)
    p.add_argument("--manifest", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("mix", help="mix real and synthetic hours")
    std(p)
    p.add_argument("--real", required=True)
    p.add_argument("--synthetic", required=True)
    p.set_defaults(fn=cmd_mix)

    p = sub.add_parser("eval", help="WER/CER with bootstrap intervals")
    std(p)
    p.add_argument("--refs")
    p.add_argument("--hyps")
    p.add_argument("--manifest")
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(fn=lambda a: cmd_eval(a, by_gender=False))

    p = sub.add_parser("eval-gender", help="gender-disaggregated WER/CER")
    std(p)
    p.add_argument("--refs")
    p.add_argument("--hyps")
    p.add_argument("--manifest")
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(fn=lambda a: cmd_eval(a, by_gender=True))

    p = sub.add_parser("errors", help="always-failed words and adjudication CSV")
    std(p)
    p.add_argument("--refs")
    p.add_argument("--hyps")
    p.add_argument("--manifest")
    p.add_argument("--language", default="")
    p.add_argument("--top-k", type=int, default=20)
    p.set_defaults(fn=cmd_errors)

    p = sub.add_parser("rate-serve", help="serve blinded rating tasks over HTTP")
    p.add_argument("--study", action="append", required=True, help="study directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument(
        "--log-name",
        default="ratings.log.jsonl",
        help="append-log filename inside each study directory",
    )
    p.set_defaults(fn=cmd_rate_serve)

    p = sub.add_parser("ratings-analyze", help="statistics over exported ratings")
    p.add_argument(
        "analysis", choices=["summary", "anova", "rater-bootstrap", "icc-grid"]
    )
    std(p)
    p.add_argument("--ratings", required=True, help="ratings CSV")
    p.add_argument("--model", default=None, help="restrict to one model_id")
    p.add_argument("--response", default="readability")
    p.set_defaults(fn=cmd_ratings_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        import logging

        logging.basicConfig(level=logging.INFO)
    try:
        return args.fn(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except FileNotFoundError as exc:
        print(f"error: input not found: {exc.filename or exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except VoxsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
