"""Additive noise mixing at sampled SNR and RMS amplitude randomization.

Per utterance, the clean signal is set to a level drawn from
N(amp_mean, amp_std) dBFS RMS, then mixed with a uniformly chosen noise
clip scaled for an SNR drawn from N(snr_mean, snr_std) dB. SNR draws below
the floor (0 dB by default) are redrawn; a level whose gain would push the
peak past full scale falls back to peak normalization at -0.1 dBFS and is
flagged. Mixing itself is exact and linear; only serialization to 16-bit
PCM can clamp, and that too is flagged in the log.

Each utterance gets its own RNG stream derived from (seed, index), so
parallel execution order never changes the output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audioio import read_wav, write_wav
from .corpus import Utterance
from .errors import InvalidInput, ZeroNoise, ZeroSignal
from .seeds import derive_rng

#: SNR value meaning "mixing disabled": the signal passes through bit-exact.
SNR_CLEAN = math.inf

PEAK_TARGET_DBFS = -0.1


@dataclass(frozen=True)
class AugmentPolicy:
    noise_bank: str  # directory of mono PCM WAV noise files
    snr_mean: float = 50.0
    snr_std: float = 15.0
    amp_mean: float = -20.0
    amp_std: float = 5.0
    snr_floor: float = 0.0  # redraw below this
    seed: int = 0

    def __post_init__(self):
        if self.snr_std < 0 or self.amp_std < 0:
            raise InvalidInput("snr_std and amp_std must be >= 0")


@dataclass
class AugmentEntry:
    utterance_id: str
    noise_id: str
    snr_db: float
    level_dbfs: float
    level_clamped: bool
    mix_clamped: bool


@dataclass
class AugmentLog:
    entries: list[AugmentEntry]
    skips: list[tuple[str, str]]  # (utterance_id, reason)

    def to_jsonl(self) -> str:
        lines = [json.dumps(e.__dict__, sort_keys=True) for e in self.entries]
        lines += [
            json.dumps({"utterance_id": uid, "skipped": reason}, sort_keys=True)
            for uid, reason in self.skips
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def _power(samples: np.ndarray) -> float:
    return float(np.mean(np.square(samples, dtype=np.float64)))


def mix_at_snr(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """Add noise scaled so that 10*log10(P_signal/P_noise) equals ``snr_db``.

    Powers are mean squared amplitude over the clip; the noise is looped or
    truncated to the signal length first. ``SNR_CLEAN`` (infinity) returns
    the signal unchanged.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size == 0:
        raise ZeroSignal("empty signal")
    if math.isinf(snr_db) and snr_db > 0:
        return signal.copy()
    noise = np.asarray(noise, dtype=np.float64)
    if noise.size == 0:
        raise ZeroNoise("empty noise")
    if noise.size < signal.size:
        reps = -(-signal.size // noise.size)
        noise = np.tile(noise, reps)
    noise = noise[: signal.size]
    p_signal = _power(signal)
    p_noise = _power(noise)
    if p_signal == 0.0:
        raise ZeroSignal("signal has zero power")
    if p_noise == 0.0:
        raise ZeroNoise("noise has zero power")
    target_noise_power = p_signal / (10.0 ** (snr_db / 10.0))
    scale = math.sqrt(target_noise_power / p_noise)
    return signal + scale * noise


def set_level(
    signal: np.ndarray, target_dbfs: float
) -> tuple[np.ndarray, bool]:
    """Scale to a target RMS level in dBFS; returns (samples, clamped).

    If the required gain would push the peak beyond full scale, the signal
    is peak-normalized to -0.1 dBFS instead and ``clamped`` is True.
    """
    signal = np.asarray(signal, dtype=np.float64)
    rms = math.sqrt(_power(signal)) if signal.size else 0.0
    if rms == 0.0:
        raise ZeroSignal("cannot level a silent signal")
    gain = 10.0 ** (target_dbfs / 20.0) / rms
    peak = float(np.max(np.abs(signal)))
    if peak * gain > 1.0:
        gain = 10.0 ** (PEAK_TARGET_DBFS / 20.0) / peak
        return signal * gain, True
    return signal * gain, False


def _draw_snr(rng: np.random.Generator, policy: AugmentPolicy) -> float:
    while True:
        snr = rng.normal(policy.snr_mean, policy.snr_std)
        if snr >= policy.snr_floor:
            return float(snr)


def _noise_files(policy: AugmentPolicy) -> list[Path]:
    files = sorted(Path(policy.noise_bank).glob("*.wav"))
    if not files:
        raise InvalidInput(f"noise bank {policy.noise_bank} holds no .wav files")
    return files


def augment_corpus(
    utterances: list[Utterance],
    policy: AugmentPolicy,
    audio_root,
    out_dir,
) -> tuple[list[Utterance], AugmentLog]:
    """Augment every utterance; failures are skipped and logged, never lost.

    Audio paths resolve against ``audio_root``; augmented WAVs land in
    ``out_dir`` under the same relative path. Returns the new manifest and
    a complete log: len(entries) + len(skips) == len(input).
    """
    audio_root = Path(audio_root)
    out_dir = Path(out_dir)
    noise_files = _noise_files(policy)
    noise_cache: dict[Path, tuple[np.ndarray, int]] = {}
    entries: list[AugmentEntry] = []
    skips: list[tuple[str, str]] = []
    result: list[Utterance] = []

    for index, utt in enumerate(utterances):
        rng = derive_rng(policy.seed, "augment", index)
        snr = _draw_snr(rng, policy)
        level = float(rng.normal(policy.amp_mean, policy.amp_std))
        noise_path = noise_files[int(rng.integers(len(noise_files)))]
        try:
            signal, rate = read_wav(audio_root / utt.audio)
            if noise_path not in noise_cache:
                noise_cache[noise_path] = read_wav(noise_path)
            noise, noise_rate = noise_cache[noise_path]
            if noise_rate != rate:
                raise InvalidInput(
                    f"noise {noise_path.name} at {noise_rate} Hz vs signal {rate} Hz"
                )
            levelled, level_clamped = set_level(signal, level)
            mixed = mix_at_snr(levelled, noise, snr)
            peak = float(np.max(np.abs(mixed)))
            mix_clamped = peak > 1.0
            if mix_clamped:
                mixed = mixed * (10.0 ** (PEAK_TARGET_DBFS / 20.0) / peak)
            out_path = out_dir / utt.audio
            out_path.parent.mkdir(parents=True, exist_ok=True)
            write_wav(out_path, mixed, rate)
        except Exception as exc:
            skips.append((utt.id, str(exc)))
            continue
        entries.append(
            AugmentEntry(
                utterance_id=utt.id,
                noise_id=noise_path.name,
                snr_db=snr,
                level_dbfs=level,
                level_clamped=level_clamped,
                mix_clamped=mix_clamped,
            )
        )
        result.append(utt)
    return result, AugmentLog(entries=entries, skips=skips)
