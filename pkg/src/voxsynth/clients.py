"""HTTP clients for the three external model kinds: LLM, TTS, ASR.

Every other module talks to models exclusively through these three calls,
so the whole toolkit runs identically against real providers or local
stubs. The wire contract is deliberately minimal (one JSON POST per kind);
vendor-specific adapters live outside the core.

Concurrency: each endpoint gets a semaphore sized to ``max_parallel``, so
callers may fan out freely without exceeding the provider bound.
"""

from __future__ import annotations

import base64
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .audioio import decode_wav_bytes
from .errors import InvalidInput, ProviderRejected, RetryExhausted

#: Default two-shot exchange demonstrating the JSON response contract.
DEFAULT_FEW_SHOT: tuple[tuple[str, str], ...] = (
    (
        "Generate 1 short simple sentence in French about food, with an "
        "English translation, as JSON.",
        '{"sentences": [{"target": "Le pain est frais.", '
        '"english": "The bread is fresh."}]}',
    ),
    (
        "Generate 1 short simple question in French about travel, with an "
        "English translation, as JSON.",
        '{"sentences": [{"target": "Où est la gare ?", '
        '"english": "Where is the train station?"}]}',
    ),
)

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class EndpointConfig:
    """Connection settings for one model endpoint.

    ``auth_token_env`` names the environment variable holding the
    credential; the value itself is resolved per request and never stored,
    serialized, or logged.
    """

    kind: str  # "llm" | "tts" | "asr"
    base_url: str
    model_id: str
    auth_token_env: str = ""
    timeout: float = 60.0
    max_parallel: int = 4
    max_retries: int = 3
    backoff_base: float = 1.0
    backoff_cap: float = 30.0

    def __post_init__(self):
        if self.kind not in ("llm", "tts", "asr"):
            raise InvalidInput(f"unknown endpoint kind: {self.kind!r}")
        if self.max_parallel < 1:
            raise InvalidInput("max_parallel must be >= 1")
        if self.timeout <= 0:
            raise InvalidInput("timeout must be > 0")
        if self.max_retries < 0:
            raise InvalidInput("max_retries must be >= 0")


@dataclass
class ChatRequest:
    """One chat-completion request: system prompt, two-shot guidance, user turn."""

    system_prompt: str
    user_prompt: str
    few_shot: list[tuple[str, str]] = field(
        default_factory=lambda: list(DEFAULT_FEW_SHOT)
    )
    temperature: float = 1.0
    batch_tag: str = ""

    def messages(self) -> list[dict[str, str]]:
        msgs = [{"role": "system", "content": self.system_prompt}]
        for user, assistant in self.few_shot:
            msgs.append({"role": "user", "content": user})
            msgs.append({"role": "assistant", "content": assistant})
        msgs.append({"role": "user", "content": self.user_prompt})
        return msgs


_semaphores: dict[EndpointConfig, threading.Semaphore] = {}
_semaphores_lock = threading.Lock()


def _semaphore_for(cfg: EndpointConfig) -> threading.Semaphore:
    with _semaphores_lock:
        sem = _semaphores.get(cfg)
        if sem is None:
            sem = threading.Semaphore(cfg.max_parallel)
            _semaphores[cfg] = sem
        return sem


def _auth_headers(cfg: EndpointConfig) -> dict[str, str]:
    if not cfg.auth_token_env:
        return {}
    token = os.environ.get(cfg.auth_token_env)
    if not token:
        return {}
    return {"Authorization": f"Bearer {token}"}


def _post_json(cfg: EndpointConfig, path: str, body: dict) -> dict:
    """POST with bounded parallelism and exponential backoff on 5xx/transport.

    429 is treated as retryable; other 4xx reject immediately without retry.
    """
    url = cfg.base_url.rstrip("/") + path
    headers = _auth_headers(cfg)
    sem = _semaphore_for(cfg)
    last_error: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            delay = min(cfg.backoff_cap, cfg.backoff_base * 2 ** (attempt - 1))
            time.sleep(delay * random.uniform(0.5, 1.5))
        try:
            with sem:
                resp = requests.post(url, json=body, headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code // 100 == 2:
            try:
                payload = resp.json()
            except ValueError as exc:
                raise ProviderRejected(f"non-JSON response body from {url}") from exc
            if not isinstance(payload, dict):
                raise ProviderRejected(f"expected JSON object from {url}")
            return payload
        if resp.status_code in _RETRYABLE_STATUS:
            last_error = ProviderRejected(
                f"status {resp.status_code} from {url}", status=resp.status_code
            )
            continue
        raise ProviderRejected(
            f"status {resp.status_code} from {url}: {resp.text[:200]}",
            status=resp.status_code,
        )
    raise RetryExhausted(
        f"{url} still failing after {cfg.max_retries} retries: {last_error}"
    )


def complete_chat(cfg: EndpointConfig, req: ChatRequest) -> str:
    """Send one chat completion and return the assistant body verbatim."""
    if cfg.kind != "llm":
        raise InvalidInput(f"complete_chat requires an llm endpoint, got {cfg.kind}")
    payload = _post_json(
        cfg,
        "/chat",
        {
            "model": cfg.model_id,
            "messages": req.messages(),
            "temperature": req.temperature,
        },
    )
    content = payload.get("content")
    if not isinstance(content, str):
        raise ProviderRejected("chat response missing string 'content'")
    return content


def synthesize_speech(cfg: EndpointConfig, text: str) -> tuple[bytes, int]:
    """Synthesize ``text``; returns (mono PCM WAV bytes, sample_rate)."""
    if cfg.kind != "tts":
        raise InvalidInput(f"synthesize_speech requires a tts endpoint, got {cfg.kind}")
    if not text.strip():
        raise InvalidInput("cannot synthesize empty text")
    payload = _post_json(cfg, "/tts", {"model": cfg.model_id, "text": text})
    try:
        audio = base64.b64decode(payload["audio_b64"])
        sample_rate = int(payload["sample_rate"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProviderRejected(f"malformed TTS response: {exc}") from exc
    samples, wav_rate = decode_wav_bytes(audio)
    if samples.size == 0:
        raise ProviderRejected("TTS returned zero-duration audio")
    if wav_rate != sample_rate:
        raise ProviderRejected(
            f"TTS sample_rate field {sample_rate} disagrees with WAV header {wav_rate}"
        )
    return audio, sample_rate


def transcribe(cfg: EndpointConfig, audio: bytes) -> str:
    """Transcribe mono PCM WAV bytes; an empty hypothesis is a legal output."""
    if cfg.kind != "asr":
        raise InvalidInput(f"transcribe requires an asr endpoint, got {cfg.kind}")
    if not audio:
        raise InvalidInput("cannot transcribe zero-length audio")
    _, sample_rate = decode_wav_bytes(audio)
    payload = _post_json(
        cfg,
        "/asr",
        {
            "model": cfg.model_id,
            "audio_b64": base64.b64encode(audio).decode("ascii"),
            "sample_rate": sample_rate,
        },
    )
    text = payload.get("text")
    if not isinstance(text, str):
        raise ProviderRejected("ASR response missing string 'text'")
    return text


def run_parallel(fn, items, max_workers: int):
    """Apply ``fn`` over ``items`` in a bounded thread pool, preserving order.

    Exceptions propagate; the endpoint semaphore still bounds in-flight
    requests even if ``max_workers`` exceeds the endpoint limit.
    """
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))
