"""Seed derivation and ULID generation.

One root seed reproduces an entire pipeline: every stage derives its own
seed as a hash of the root seed and the stage name, and per-item RNG
streams are derived the same way so that parallel execution order never
changes output.
"""

from __future__ import annotations

import hashlib

import numpy as np

_ULID_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"  # Crockford base32


def derive_seed(root_seed: int, *labels: object) -> int:
    """Derive a 64-bit seed from a root seed and a label path.

    Labels may be strings or integers; the derivation is stable across
    runs and platforms (SHA-256 over the canonical label string).
    """
    payload = repr((int(root_seed),) + tuple(str(x) for x in labels)).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derive_rng(root_seed: int, *labels: object) -> np.random.Generator:
    """A numpy Generator seeded from ``derive_seed(root_seed, *labels)``."""
    return np.random.default_rng(derive_seed(root_seed, *labels))


def make_ulid(timestamp_ms: int, rng: np.random.Generator) -> str:
    """Build a ULID from an explicit millisecond timestamp and RNG.

    Taking the clock and the randomness as arguments keeps ID assignment
    reproducible under a fixed seed, which the pipeline determinism
    contract depends on.
    """
    if timestamp_ms < 0 or timestamp_ms >= 1 << 48:
        raise ValueError(f"timestamp out of ULID range: {timestamp_ms}")
    rand = int.from_bytes(rng.bytes(10), "big")
    value = (timestamp_ms << 80) | rand
    chars = []
    for _ in range(26):
        chars.append(_ULID_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))
