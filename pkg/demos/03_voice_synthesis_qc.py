"""Synthesize speech for a small corpus and filter hallucinated clips.

The stub TTS occasionally renders far too much audio for its input text
(as transformer TTS models do at clip ends). Re-transcribing every clip
and comparing transcript length to source length exposes those clips as
ratio outliers; the filter removes them, and a rebalancing pass restores
the original question share.
"""

from voxsynth import (
    EndpointConfig,
    GenerationSpec,
    TtsCandidate,
    filter_outliers,
    FilterPolicy,
    generate_corpus,
    rebalance_questions,
    score_candidates,
    synthesize_speech,
)
from voxsynth.stubs import start_stub_server

server, base_url = start_stub_server()
llm = EndpointConfig(kind="llm", base_url=base_url, model_id="demo-llm")
tts = EndpointConfig(kind="tts", base_url=base_url, model_id="demo-tts")
asr = EndpointConfig(kind="asr", base_url=base_url, model_id="demo-asr")

spec = GenerationSpec(
    language_tag="luo",
    language_name="Dholuo",
    model=llm,
    total_target=80,
    sentences_per_request=8,
    seed=11,
)
pairs, _ = generate_corpus(spec)

candidates = []
for pair in pairs:
    audio, _rate = synthesize_speech(tts, pair.target_text)
    candidates.append(
        TtsCandidate(utterance_id=pair.id, source_text=pair.target_text, audio=audio)
    )

scored = score_candidates(candidates, asr)
kept, removed, report = filter_outliers(scored, FilterPolicy())
print(f"scored {report.total} clips; removed {report.removed} "
      f"({report.removal_fraction:.1%}) outside ratio bounds "
      f"[{report.bound_lo:.2f}, {report.bound_hi:.2f}]")
for clip in removed[:3]:
    print(f"  removed {clip.utterance_id}: length ratio {clip.length_ratio:.2f}")

source = {p.id: p for p in pairs}
before = sum(source[c.utterance_id].is_question for c in kept) / len(kept)
# the stub's question share is modest, so rebalance to a lower target to
# show the subsampling; a real campaign would use its original share
balanced = rebalance_questions(
    kept, 0.10, seed=5, question_flag=lambda c: source[c.utterance_id].is_question
)
share = sum(source[c.utterance_id].is_question for c in balanced) / len(balanced)
print(f"question share {before:.0%} -> rebalanced to {share:.0%} "
      f"({len(balanced)} of {len(kept)} clips kept)")

server.shutdown()
