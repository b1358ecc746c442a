"""Exclusive train/dev/test splitting, then real:synthetic mixing.

Splitting groups utterances that share a speaker or a transcript and
assigns whole groups, so no speaker or sentence leaks across splits.
Mixing then draws seeded subsamples to hit target hours for the two
training scenarios: constant total size (swap real hours for synthetic)
and additive (fixed real, growing synthetic).
"""

import numpy as np

from voxsynth import MixSpec, SplitSpec, Utterance, mix, split, total_hours

rng = np.random.default_rng(21)
real = []
for i in range(400):
    speaker = f"spk{int(rng.integers(0, 90)):03d}"
    text = f"sentence {i} spoken in the field"
    if rng.random() < 0.1 and i:
        text = real[int(rng.integers(0, i))].transcript
    real.append(
        Utterance(
            id=f"r{i:04d}", transcript=text, audio=f"r{i:04d}.wav",
            duration=round(float(rng.uniform(4, 12)), 2),
            speaker_id=speaker, gender=["male", "female"][i % 2],
        )
    )

corpus_hours = total_hours(real)
print(f"real corpus: {len(real)} utterances, {corpus_hours:.2f} h")

spec = SplitSpec(
    targets=(
        ("train", round(corpus_hours * 0.78, 4)),
        ("dev", round(corpus_hours * 0.10, 4)),
        ("test", round(corpus_hours * 0.10, 4)),
    ),
    tolerance=0.02,
    seed=4,
)
splits = split(real, spec)
for name, subset in splits.items():
    speakers = len({u.speaker_id for u in subset})
    print(f"  {name:<5} {total_hours(subset):6.3f} h  "
          f"{len(subset):3d} utterances  {speakers} speakers")

synthetic = [
    Utterance(
        id=f"s{i:04d}", transcript=f"synthetic sentence {i}",
        audio=f"s{i:04d}.wav", duration=6.0, speaker_id="tts-voice",
        origin="synthetic",
    )
    for i in range(600)
]

for label, mix_spec in [
    ("constant total 0.2h:0.2h", MixSpec("constant_total", 0.2, 0.2, seed=8)),
    ("additive 0.3h + 0.6h", MixSpec("additive", 0.3, 0.6, seed=8)),
]:
    mixed, report = mix(splits["train"], synthetic, mix_spec)
    print(f"\n{label}: {len(mixed)} utterances")
    print(f"  real      {report.real_hours_achieved:.3f} h ({report.real_count})")
    print(f"  synthetic {report.synthetic_hours_achieved:.3f} h ({report.synthetic_count})")
