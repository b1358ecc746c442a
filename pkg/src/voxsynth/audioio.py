"""Mono 16-bit PCM WAV reading and writing.

Samples travel through the toolkit as float64 arrays scaled to [-1, 1]
(full scale = 1.0); files on disk are 16-bit PCM. Sample-rate conversion
is out of scope: mixing audio at different rates is an error.
"""

from __future__ import annotations

import io
import wave
from pathlib import Path

import numpy as np

from .errors import InvalidInput

FULL_SCALE = 32767.0


def float_to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1] and quantize to int16."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.round(clipped * FULL_SCALE).astype(np.int16)


def pcm16_to_float(frames: np.ndarray) -> np.ndarray:
    return np.asarray(frames, dtype=np.float64) / FULL_SCALE


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(float_to_pcm16(samples).tobytes())


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV; returns (float samples, sample_rate)."""
    with wave.open(str(path), "rb") as w:
        return _decode(w)


def wav_bytes(samples: np.ndarray, sample_rate: int) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(float_to_pcm16(samples).tobytes())
    return buf.getvalue()


def decode_wav_bytes(data: bytes) -> tuple[np.ndarray, int]:
    with wave.open(io.BytesIO(data), "rb") as w:
        return _decode(w)


def _decode(w: wave.Wave_read) -> tuple[np.ndarray, int]:
    if w.getnchannels() != 1:
        raise InvalidInput(f"expected mono audio, got {w.getnchannels()} channels")
    if w.getsampwidth() != 2:
        raise InvalidInput(f"expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
    frames = np.frombuffer(w.readframes(w.getnframes()), dtype=np.int16)
    return pcm16_to_float(frames), w.getframerate()
