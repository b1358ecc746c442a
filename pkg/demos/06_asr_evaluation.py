"""Score ASR output: bootstrapped WER/CER, gender breakdown, error triage.

Also shows why the normalizer is load-bearing for non-standardized
scripts: folding the za'a/za a contraction or the hooked consonants
changes the score of otherwise-identical hypotheses.
"""

import numpy as np

from voxsynth import Normalizer, bootstrap_eval, error_inventory, eval_by_group
from voxsynth.asreval import adjudication_export

rng = np.random.default_rng(33)
vocab = ["ruwa", "kasuwa", "gida", "yara", "abinci", "hanya", "daya", "biyu"]

refs, hyps, genders = [], [], []
for i in range(300):
    words = [vocab[j] for j in rng.integers(0, len(vocab), size=rng.integers(3, 7))]
    ref = " ".join(words)
    out = list(words)
    if rng.random() < 0.4:  # recognizer trouble: substitutions and drops
        out[int(rng.integers(0, len(out)))] = "kuskure"
    if rng.random() < 0.15 and len(out) > 3:
        out.pop()
    # one out-of-vocabulary word the recognizer never learned
    out = ["hanja" if w == "hanya" else w for w in out]
    refs.append(ref)
    hyps.append(" ".join(out))
    genders.append("female" if rng.random() < 0.4 else "male")

report = eval_by_group(refs, hyps, genders, iterations=1000, seed=1)
b = report.bootstrap
print(f"overall: WER {report.wer:.4f} (boot {b.wer_mean:.4f} ± {b.wer_std:.4f}), "
      f"CER {report.cer:.4f} (± {b.cer_std:.4f})")
for gender, sub in report.per_group.items():
    print(f"  {gender:<6} n={sub.n_items:<4} WER {sub.wer:.4f} "
          f"(± {sub.bootstrap.wer_std:.4f})")

# normalization choices move scores on non-standardized scripts
pair = (["za a yi masa magani"], ["za'a yi masa magani"])
plain = bootstrap_eval(*pair, Normalizer(), iterations=10, seed=0).wer
folded = bootstrap_eval(
    *pair, Normalizer(contractions=(("za'a", "za a"),)), iterations=10, seed=0
).wer
print(f"\ncontraction fold: WER {plain:.3f} -> {folded:.3f} on za'a/za a")

inventory = error_inventory(refs, hyps, top_k=5)
print("\nwords the recognizer never got right:")
for row in inventory.rows:
    print(f"  {row.reference_word:<10} {row.occurrences} occurrences")

n = adjudication_export(inventory, "demo_adjudication.csv", language="Hausa")
print(f"\n{n} rows exported to demo_adjudication.csv for reviewer sign-off")
