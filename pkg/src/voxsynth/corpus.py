"""Corpus manifests, exclusive splitting, and real/synthetic mixing.

A manifest is a JSONL file (header line + one utterance per line) that
carries everything downstream stages need: transcript, audio path,
duration, speaker, gender, and origin. Splitting keeps speakers and
transcripts mutually exclusive across splits by grouping utterances that
share either and assigning whole groups. Mixing draws seeded uniform
subsamples from a real and a synthetic source to hit target hours for
either scenario (constant total corpus size, or fixed real plus growing
synthetic).

Duration accounting sums exact decimal durations (as rationals), so split
and mix tolerances are checked without float drift.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from .errors import InsufficientData, InvalidInput, SplitToleranceError, UnsplittableGroup
from .seeds import derive_rng
from .textnorm import normalize_text

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA = "voxsynth/manifest"
MANIFEST_VERSION = 1

GENDERS = ("male", "female", "unknown")
ORIGINS = ("real", "synthetic")


@dataclass
class Utterance:
    """One audio clip with its transcript and provenance."""

    id: str
    transcript: str
    audio: str  # path relative to the manifest location
    duration: float  # seconds
    speaker_id: str
    gender: str = "unknown"
    origin: str = "real"
    dataset_tag: str = ""

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidInput(f"utterance {self.id}: duration must be > 0")
        if not self.transcript.strip():
            raise InvalidInput(f"utterance {self.id}: transcript must be non-empty")
        if self.gender not in GENDERS:
            raise InvalidInput(f"utterance {self.id}: unknown gender {self.gender!r}")
        if self.origin not in ORIGINS:
            raise InvalidInput(f"utterance {self.id}: unknown origin {self.origin!r}")

    def exact_duration(self) -> Fraction:
        """Duration as an exact rational of its decimal representation."""
        return Fraction(str(self.duration))


def write_manifest(utterances: list[Utterance], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps({"schema": MANIFEST_SCHEMA, "version": MANIFEST_VERSION}) + "\n"
        )
        for utt in utterances:
            fh.write(json.dumps(asdict(utt), ensure_ascii=False, separators=(",", ":")) + "\n")


def read_manifest(path) -> list[Utterance]:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: manifest header is not JSON") from exc
        if header.get("schema") != MANIFEST_SCHEMA:
            raise InvalidInput(f"{path}: not a {MANIFEST_SCHEMA} manifest")
        utterances = []
        for line in fh:
            line = line.strip()
            if line:
                utterances.append(Utterance(**json.loads(line)))
    return utterances


def import_csv(path, origin: str = "real", dataset_tag: str = "") -> list[Utterance]:
    """Ingest a generic ``path,transcript,speaker,gender,duration`` CSV."""
    utterances = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            utterances.append(
                Utterance(
                    id=row["path"],
                    transcript=row["transcript"],
                    audio=row["path"],
                    duration=float(row["duration"]),
                    speaker_id=row["speaker"],
                    gender=(row.get("gender") or "unknown").strip() or "unknown",
                    origin=origin,
                    dataset_tag=dataset_tag,
                )
            )
    return utterances


def total_hours(utterances: list[Utterance]) -> float:
    return float(sum((u.exact_duration() for u in utterances), Fraction(0)) / 3600)


@dataclass(frozen=True)
class SplitSpec:
    targets: tuple[tuple[str, float], ...]  # (split name, hours), ordered
    speaker_exclusive: bool = True
    transcript_exclusive: bool = True
    tolerance: float = 0.02
    seed: int = 0

    def __post_init__(self):
        names = [name for name, _ in self.targets]
        if len(set(names)) != len(names):
            raise InvalidInput("split names must be distinct")
        if any(hours <= 0 for _, hours in self.targets):
            raise InvalidInput("split targets must be positive")


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[rj] = ri


def _exclusive_groups(
    utterances: list[Utterance], spec: SplitSpec
) -> list[list[int]]:
    """Connected components linked by shared speaker or shared transcript."""
    uf = _UnionFind(len(utterances))
    by_speaker: dict[str, int] = {}
    by_transcript: dict[str, int] = {}
    for i, utt in enumerate(utterances):
        if spec.speaker_exclusive:
            anchor = by_speaker.setdefault(utt.speaker_id, i)
            uf.union(anchor, i)
        if spec.transcript_exclusive:
            key = normalize_text(utt.transcript)
            anchor = by_transcript.setdefault(key, i)
            uf.union(anchor, i)
    groups: dict[int, list[int]] = {}
    for i in range(len(utterances)):
        groups.setdefault(uf.find(i), []).append(i)
    return list(groups.values())


def split(
    utterances: list[Utterance], spec: SplitSpec
) -> dict[str, list[Utterance]]:
    """Partition into named splits with exclusive speakers/transcripts.

    Groups are packed greedily, longest first, each landing on the split
    with the largest relative deficit; groups left after every target is
    met go to the largest split. The result is verified before returning:
    no cross-split speaker or transcript overlap, and every split within
    ``tolerance * target`` hours of its target.
    """
    target_seconds = {
        name: Fraction(str(hours)) * 3600 for name, hours in spec.targets
    }
    total = sum((u.exact_duration() for u in utterances), Fraction(0))
    if total < sum(target_seconds.values()):
        raise InsufficientData(
            "corpus shorter than the sum of split targets",
            deficit=float(sum(target_seconds.values()) - total) / 3600,
        )

    groups = _exclusive_groups(utterances, spec)
    durations = [
        sum((utterances[i].exact_duration() for i in group), Fraction(0))
        for group in groups
    ]
    largest_name = max(target_seconds, key=lambda name: (target_seconds[name], name))
    for group, duration in zip(groups, durations):
        if duration > max(target_seconds.values()):
            raise UnsplittableGroup(
                f"a linked group of {len(group)} utterances "
                f"({float(duration) / 3600:.2f} h) exceeds the largest split target",
                speakers={utterances[i].speaker_id for i in group},
                transcripts={utterances[i].transcript for i in group},
            )

    # seeded shuffle makes equal-duration tie-breaking explicit, then a
    # stable sort by descending duration
    order = derive_rng(spec.seed, "split-groups").permutation(len(groups))
    indexed = [(groups[i], durations[i]) for i in order]
    indexed.sort(key=lambda pair: pair[1], reverse=True)

    assigned: dict[str, list[list[int]]] = {name: [] for name in target_seconds}
    filled: dict[str, Fraction] = {name: Fraction(0) for name in target_seconds}
    tol = Fraction(str(spec.tolerance))

    def tol_abs(name: str) -> Fraction:
        return tol * target_seconds[name]

    for group, duration in indexed:
        deficits = {
            name: (target_seconds[name] - filled[name]) / target_seconds[name]
            for name in target_seconds
        }
        # prefer splits where this group does not overshoot the tolerance;
        # ties (e.g. all splits empty) favor the largest target so big
        # groups land where there is room
        fitting = [
            name
            for name in target_seconds
            if deficits[name] > 0
            and filled[name] + duration <= target_seconds[name] + tol_abs(name)
        ]
        if fitting:
            name = max(fitting, key=lambda n: (deficits[n], target_seconds[n], n))
        elif max(deficits.values()) > 0:
            name = max(deficits, key=lambda n: (deficits[n], target_seconds[n], n))
        else:
            name = largest_name
        assigned[name].append(group)
        filled[name] += duration

    # rebalance pass: the greedy can overshoot small splits by one group.
    # Move groups between splits until every split sits inside tolerance,
    # with the largest split acting as the slack sink/donor (it alone may
    # absorb leftover duration when the targets do not cover the corpus).
    group_duration = {id(g): d for (g, d) in indexed}

    def spare(name: str) -> Fraction:
        return filled[name] - (target_seconds[name] - tol_abs(name))

    def move(src: str, dst: str, limit: Fraction) -> bool:
        movable = [g for g in assigned[src] if group_duration[id(g)] <= limit]
        if not movable:
            return False
        best = max(movable, key=lambda g: (group_duration[id(g)], min(g)))
        assigned[src].remove(best)
        assigned[dst].append(best)
        filled[src] -= group_duration[id(best)]
        filled[dst] += group_duration[id(best)]
        return True

    for _ in range(2 * len(indexed)):
        hungry = [
            n for n in target_seconds if target_seconds[n] - filled[n] > tol_abs(n)
        ]
        bloated = [
            n
            for n in target_seconds
            if n != largest_name and filled[n] - target_seconds[n] > tol_abs(n)
        ]
        if hungry:
            dst = max(
                hungry,
                key=lambda n: (target_seconds[n] - filled[n]) / target_seconds[n],
            )
            room = target_seconds[dst] + tol_abs(dst) - filled[dst]
            donors = sorted(
                (n for n in target_seconds if n != dst and spare(n) > 0),
                key=lambda n: (n not in bloated, n != largest_name, -spare(n), n),
            )
            if not any(move(src, dst, min(spare(src), room)) for src in donors):
                break
        elif bloated:
            src = max(
                bloated,
                key=lambda n: (filled[n] - target_seconds[n]) / target_seconds[n],
            )
            if not move(src, largest_name, spare(src)):
                break
        else:
            break

    # 2-opt swaps: when the smallest movable group is bigger than a split's
    # tolerance window, exchanging two groups of nearby size can still land
    # both splits inside
    def violation(name: str, fill: Fraction) -> Fraction:
        dev = fill - target_seconds[name]
        if name == largest_name and dev > 0:
            return Fraction(0)  # leftover sink may run over
        return max(Fraction(0), abs(dev) - tol_abs(name))

    names = sorted(target_seconds)
    for _ in range(4 * len(names) * len(names)):
        total_violation = sum(violation(n, filled[n]) for n in names)
        if total_violation == 0:
            break
        best_gain = Fraction(0)
        best_swap = None
        for x in names:
            for y in names:
                if x >= y:
                    continue
                for ga in assigned[x]:
                    da = group_duration[id(ga)]
                    for gb in assigned[y]:
                        db = group_duration[id(gb)]
                        new_x = filled[x] - da + db
                        new_y = filled[y] - db + da
                        after = (
                            total_violation
                            - violation(x, filled[x])
                            - violation(y, filled[y])
                            + violation(x, new_x)
                            + violation(y, new_y)
                        )
                        gain = total_violation - after
                        if gain > best_gain:
                            best_gain = gain
                            best_swap = (x, y, ga, gb)
        if best_swap is None:
            break
        x, y, ga, gb = best_swap
        assigned[x].remove(ga)
        assigned[y].remove(gb)
        assigned[x].append(gb)
        assigned[y].append(ga)
        filled[x] += group_duration[id(gb)] - group_duration[id(ga)]
        filled[y] += group_duration[id(ga)] - group_duration[id(gb)]

    result = {
        name: [utterances[i] for i in sorted(i for g in grouped for i in g)]
        for name, grouped in assigned.items()
    }
    _verify_split(result, spec)
    return result


def _verify_split(result: dict[str, list[Utterance]], spec: SplitSpec) -> None:
    names = list(result)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            if spec.speaker_exclusive:
                shared = {u.speaker_id for u in result[a]} & {
                    u.speaker_id for u in result[b]
                }
                if shared:
                    raise SplitToleranceError(
                        f"speakers shared between {a} and {b}: {sorted(shared)[:5]}"
                    )
            if spec.transcript_exclusive:
                shared = {normalize_text(u.transcript) for u in result[a]} & {
                    normalize_text(u.transcript) for u in result[b]
                }
                if shared:
                    raise SplitToleranceError(
                        f"transcripts shared between {a} and {b}"
                    )
    largest = max(spec.targets, key=lambda t: (t[1], t[0]))[0]
    for name, hours in spec.targets:
        target = Fraction(str(hours)) * 3600
        achieved = sum((u.exact_duration() for u in result[name]), Fraction(0))
        deviation = achieved - target
        if deviation > Fraction(str(spec.tolerance)) * target and name == largest:
            # the largest split is the designated sink for leftover groups
            # when targets sum below the corpus total; it may run over
            logger.warning(
                "split %r runs %.3f h over its %s h target (absorbing leftovers)",
                name,
                float(deviation) / 3600,
                hours,
            )
            continue
        if abs(deviation) > Fraction(str(spec.tolerance)) * target:
            raise SplitToleranceError(
                f"split {name!r}: {float(achieved) / 3600:.3f} h vs target "
                f"{hours} h exceeds tolerance {spec.tolerance:.0%}"
            )


@dataclass(frozen=True)
class MixSpec:
    mode: str  # constant_total | additive (provenance label, same algorithm)
    real_hours: float
    synthetic_hours: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("constant_total", "additive"):
            raise InvalidInput(f"unknown mix mode {self.mode!r}")
        if self.real_hours < 0 or self.synthetic_hours < 0:
            raise InvalidInput("mix hours must be >= 0")


@dataclass
class MixReport:
    mode: str
    real_hours_target: float
    real_hours_achieved: float
    real_count: int
    synthetic_hours_target: float
    synthetic_hours_achieved: float
    synthetic_count: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _source_fingerprint(utterances: list[Utterance]) -> str:
    digest = hashlib.sha256()
    for uid in sorted(u.id for u in utterances):
        digest.update(uid.encode())
        digest.update(b"\x00")
    return digest.hexdigest()[:16]


def _take_hours(
    utterances: list[Utterance], hours: float, seed: int, label: str
) -> tuple[list[Utterance], Fraction]:
    """Seeded uniform subsample reaching ``hours`` (first crossing included).

    The RNG stream is keyed by the source's content fingerprint rather
    than its argument position, so swapping the real/synthetic roles of
    the same two manifests reproduces the same subsets.
    """
    if hours == 0:
        return [], Fraction(0)
    target = Fraction(str(hours)) * 3600
    available = sum((u.exact_duration() for u in utterances), Fraction(0))
    if available < target:
        raise InsufficientData(
            f"{label} source holds {float(available) / 3600:.2f} h, "
            f"need {hours} h",
            deficit=float(target - available) / 3600,
        )
    rng = derive_rng(seed, "mix-take", _source_fingerprint(utterances))
    order = rng.permutation(len(utterances))
    chosen: list[Utterance] = []
    acc = Fraction(0)
    for idx in order:
        chosen.append(utterances[idx])
        acc += utterances[idx].exact_duration()
        if acc >= target:
            break
    return chosen, acc


def mix(
    real: list[Utterance],
    synthetic: list[Utterance],
    spec: MixSpec,
) -> tuple[list[Utterance], MixReport]:
    """Draw the requested hours from each source and interleave them."""
    real_take, real_acc = _take_hours(real, spec.real_hours, spec.seed, "real")
    synth_take, synth_acc = _take_hours(
        synthetic, spec.synthetic_hours, spec.seed, "synthetic"
    )
    combined = real_take + synth_take
    order = derive_rng(spec.seed, "mix-interleave").permutation(len(combined))
    mixed = [combined[i] for i in order]
    report = MixReport(
        mode=spec.mode,
        real_hours_target=spec.real_hours,
        real_hours_achieved=float(real_acc) / 3600,
        real_count=len(real_take),
        synthetic_hours_target=spec.synthetic_hours,
        synthetic_hours_achieved=float(synth_acc) / 3600,
        synthetic_count=len(synth_take),
    )
    return mixed, report


def disaggregate(
    utterances: list[Utterance], by: str = "gender"
) -> dict[str, list[Utterance]]:
    """Exhaustive, disjoint partition by a categorical field."""
    buckets: dict[str, list[Utterance]] = {}
    for utt in utterances:
        buckets.setdefault(getattr(utt, by), []).append(utt)
    return dict(sorted(buckets.items()))
