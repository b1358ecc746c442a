"""Reliability statistics over simulated linguist ratings.

Three questions about a rating campaign: do models actually differ once
rater identity is accounted for (two-way ANOVA)? how many raters until
the mean stabilizes (rater bootstrap)? and what is the smallest
raters-by-sentences design with acceptable agreement (ICC grid)?
"""

import numpy as np

from voxsynth import (
    RatingRecord,
    anova_two_way,
    icc_grid,
    interpret_icc,
    rater_bootstrap,
    summarize,
)

rng = np.random.default_rng(55)
model_quality = {"model-a": 5.6, "model-b": 4.1}
rater_bias = {f"rater{j}": float(rng.normal(0, 0.8)) for j in range(8)}

records = []
for model, quality in model_quality.items():
    for i in range(80):
        item = f"{model}-s{i:03d}"
        item_quality = quality + rng.normal(0, 1.2)  # sentences genuinely differ
        for rater, bias in rater_bias.items():
            score = int(np.clip(round(item_quality + bias + rng.normal(0, 0.9)), 1, 7))
            records.append(
                RatingRecord(
                    item_id=item, rater_id=rater, model_id=model, modality="text",
                    readability=score, grammatical=int(score >= 4),
                    real_words=1, notable_error=int(score <= 2), adequacy=score,
                )
            )

print("per-model readability (mean ± std):")
for model, metrics in summarize(records).items():
    mean, std, n = metrics["readability"]
    print(f"  {model}: {mean:.2f} ± {std:.2f}  (n={n})")

table = anova_two_way(records)
print("\ntwo-way ANOVA on readability:")
for factor, row in table.factors.items():
    print(f"  {factor:<10} SS={row.sum_sq:9.2f} df={row.df:<3} "
          f"F={row.f_value:7.2f} p={row.p_value:.2e}")
print(f"  residual   SS={table.residual.sum_sq:9.2f} df={table.residual.df}")

print("\nmean readability stability vs number of raters (model-a):")
for n, mean, lo, hi in rater_bootstrap(
    records, "model-a", [2, 3, 5, 8], n_sentences=50, iterations=1000, seed=2
):
    print(f"  {n} raters: {mean:.2f}  95% CI [{lo:.2f}, {hi:.2f}]  width {hi - lo:.2f}")

result = icc_grid(
    records, "model-a", rater_grid=[2, 4, 6, 8], sentence_grid=[20, 40, 80],
    iterations=300, seed=9,
)
print("\nmean ICC(2,k) grid (rows = raters, cols = sentences):")
sentences = sorted({s for _, s, _ in result.cells})
print("        " + "".join(f"{s:>8}" for s in sentences))
for r in sorted({r for r, _, _ in result.cells}):
    row = [v for rr, _, v in result.cells if rr == r]
    print(f"  {r} raters " + "".join(f"{v:8.3f}" for v in row))
if result.threshold_cell:
    r, s = result.threshold_cell
    value = next(v for rr, ss, v in result.cells if (rr, ss) == (r, s))
    print(f"\nsmallest design at ICC >= 0.5: {r} raters x {s} sentences "
          f"({interpret_icc(value)} reliability)")
