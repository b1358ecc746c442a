"""Deduplicate a generated corpus and trace unique rate against batch count.

Large batch campaigns repeat themselves; pooling more batch requests
lowers the fraction of unique sentences. The curve below subsamples
batches without replacement and reports the mean unique rate at each
pool size.
"""

from voxsynth import EndpointConfig, GenerationSpec, dedup, generate_corpus
from voxsynth.dedup import uniqueness_curve
from voxsynth.stubs import start_stub_server

server, base_url = start_stub_server()

spec = GenerationSpec(
    language_tag="ny",
    language_name="Chichewa",
    model=EndpointConfig(kind="llm", base_url=base_url, model_id="demo-llm"),
    total_target=200,
    sentences_per_request=10,
    seed=7,
)
pairs, _ = generate_corpus(spec)

kept, report = dedup(pairs)
print(f"{report.total} generated, {report.unique} unique "
      f"({report.unique_rate:.0%} unique rate)")

curve = uniqueness_curve(pairs, batch_counts=[1, 2, 5, 10, 20], subsamples=500, seed=3)
print("\nbatches pooled -> mean unique rate (std)")
for count, mean, std in curve.points:
    print(f"  {count:>3} -> {mean:.3f} ({std:.3f})")

out = "demo_uniqueness_curve.csv"
with open(out, "w") as fh:
    fh.write(curve.to_csv())
print(f"\ncurve written to {out}")

server.shutdown()
