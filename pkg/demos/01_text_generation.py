"""Generate a themed sentence corpus against the local model stubs.

Starts the deterministic stub endpoints, asks for 60 sentence/English
pairs sampled equally over the 34 default themes, and prints the
generation report. Re-running with the same seed reproduces the corpus
exactly.
"""

from voxsynth import EndpointConfig, GenerationSpec, generate_corpus
from voxsynth.stubs import start_stub_server

server, base_url = start_stub_server()

spec = GenerationSpec(
    language_tag="ha",
    language_name="Hausa",
    model=EndpointConfig(kind="llm", base_url=base_url, model_id="demo-llm"),
    total_target=60,
    sentences_per_request=5,
    seed=2024,
)

pairs, report = generate_corpus(spec)

print(f"generated {report.total} pairs over {len(report.per_theme)} themes")
print(f"requests issued: {report.requests_issued}, duplicates: {report.duplicates}")
print("\nfirst five pairs:")
for pair in pairs[:5]:
    marker = "?" if pair.is_question else " "
    print(f"  [{marker}] {pair.target_text:<40} | {pair.english_text}")

questions = sum(p.is_question for p in pairs)
print(f"\nquestion share: {questions}/{len(pairs)} = {questions / len(pairs):.0%}")

server.shutdown()
