"""Deterministic stand-ins for the LLM, TTS, and ASR endpoints.

The stub server speaks the same wire contract as a real deployment, with
every response a pure function of the request, so full pipelines can run
(and re-run, byte-identically) without any external model. Behavior is
simple but structurally realistic:

* ``/chat`` invents pseudo-language sentence pairs keyed by a hash of the
  prompt, with roughly the requested question share and occasional
  repeats, so deduplication has something to do.
* ``/tts`` renders text as a sum of sine waves, ~50 ms per character; a
  small hash-determined fraction of inputs "hallucinates" triple-length
  audio so the QC filter has outliers to catch.
* ``/asr`` fabricates a transcript whose length tracks the audio duration,
  which is exactly the signal the length-ratio filter consumes.

Run standalone with ``python -m voxsynth.stubs --port 8099``.
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .audioio import decode_wav_bytes, wav_bytes

SAMPLE_RATE = 16000
SECONDS_PER_CHAR = 0.05
HALLUCINATION_MOD = 23  # ~4% of texts synthesize 3x too much audio

_SYLLABLES = (
    "ka", "ri", "mo", "ta", "lu", "we", "san", "do", "yi", "ba",
    "nge", "fu", "chi", "ra", "ku", "ze", "mba", "ti", "go", "nda",
)
_GLOSS_WORDS = (
    "water", "market", "road", "child", "rain", "farm", "school", "song",
    "house", "river", "food", "friend", "moon", "work", "story", "town",
)


def _digest(*parts: str) -> int:
    payload = "\x1f".join(parts).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def _pseudo_sentence(rng: np.random.Generator, question: bool) -> tuple[str, str]:
    n_words = int(rng.integers(3, 7))
    words = []
    for _ in range(n_words):
        n_syll = int(rng.integers(2, 4))
        picks = rng.integers(0, len(_SYLLABLES), size=n_syll)
        words.append("".join(_SYLLABLES[int(i)] for i in picks))
    target = " ".join(words).capitalize() + ("?" if question else ".")
    gloss_idx = rng.choice(len(_GLOSS_WORDS), size=min(n_words, 5), replace=False)
    english = " ".join(_GLOSS_WORDS[int(i)] for i in gloss_idx).capitalize()
    english += "?" if question else "."
    return target, english


def _common_pool() -> list[tuple[str, str]]:
    """A fixed pool of stock sentences every batch can fall back on.

    Real models repeat themselves across batch requests; drawing ~20% of
    output from this pool reproduces that cross-batch duplication so the
    dedup instruments have realistic input.
    """
    rng = np.random.default_rng(_digest("common-pool"))
    return [_pseudo_sentence(rng, bool(rng.random() < 0.25)) for _ in range(40)]


_COMMON_POOL = _common_pool()


def chat_response(body: dict) -> dict:
    """Deterministic sentence pairs derived from the final user prompt."""
    messages = body.get("messages", [])
    user_prompt = messages[-1]["content"] if messages else ""
    count = 1
    for token in user_prompt.replace(",", " ").split():
        if token.isdigit():
            count = max(1, int(token))
            break
    rng = np.random.default_rng(_digest("chat", body.get("model", ""), user_prompt))
    sentences = []
    for _ in range(count):
        if rng.random() < 0.2:
            target, english = _COMMON_POOL[int(rng.integers(len(_COMMON_POOL)))]
        else:
            target, english = _pseudo_sentence(rng, bool(rng.random() < 0.25))
        sentences.append({"target": target, "english": english})
    return {"content": json.dumps({"sentences": sentences}, ensure_ascii=False)}


def tts_audio(text: str, model: str = "") -> tuple[bytes, int]:
    """Sine-mixture audio, ~50 ms per character, deterministic in the text."""
    seed = _digest("tts", model, text)
    rng = np.random.default_rng(seed)
    duration = max(0.2, SECONDS_PER_CHAR * len(text))
    if seed % HALLUCINATION_MOD == 0:
        duration *= 3.0  # synthetic hallucination: way too much audio
    t = np.arange(int(round(duration * SAMPLE_RATE))) / SAMPLE_RATE
    samples = np.zeros_like(t)
    for _ in range(3):
        freq = float(rng.uniform(120.0, 800.0))
        samples += float(rng.uniform(0.05, 0.15)) * np.sin(2 * math.pi * freq * t)
    return wav_bytes(samples, SAMPLE_RATE), SAMPLE_RATE


def asr_transcript(audio: bytes) -> str:
    """A transcript whose character count tracks the audio duration."""
    samples, rate = decode_wav_bytes(audio)
    duration = samples.size / rate
    n_chars = max(1, int(round(duration / SECONDS_PER_CHAR)))
    rng = np.random.default_rng(_digest("asr", hashlib.sha256(audio).hexdigest()))
    out: list[str] = []
    while sum(len(w) for w in out) + len(out) - 1 < n_chars:
        out.append(_SYLLABLES[int(rng.integers(len(_SYLLABLES)))])
    text = " ".join(out)
    return text[:n_chars].strip()


class StubHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):  # silence request logging
        pass

    def do_POST(self):
        length = int(self.headers.get("content-length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._reply(400, {"error": "bad json"})
            return
        if self.path == "/chat":
            self._reply(200, chat_response(body))
        elif self.path == "/tts":
            text = body.get("text", "")
            if not text:
                self._reply(400, {"error": "empty text"})
                return
            audio, rate = tts_audio(text, body.get("model", ""))
            self._reply(
                200,
                {
                    "audio_b64": base64.b64encode(audio).decode("ascii"),
                    "sample_rate": rate,
                },
            )
        elif self.path == "/asr":
            try:
                audio = base64.b64decode(body["audio_b64"])
                text = asr_transcript(audio)
            except Exception:
                self._reply(400, {"error": "bad audio"})
                return
            self._reply(200, {"text": text})
        else:
            self._reply(404, {"error": f"no route {self.path}"})

    def _reply(self, status: int, payload: dict):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def start_stub_server(port: int = 0) -> tuple[ThreadingHTTPServer, str]:
    """Start the stub server on a background thread; returns (server, base_url)."""
    server = ThreadingHTTPServer(("127.0.0.1", port), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://127.0.0.1:{server.server_address[1]}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Run the deterministic model stubs")
    parser.add_argument("--port", type=int, default=8099)
    args = parser.parse_args(argv)
    server = ThreadingHTTPServer(("127.0.0.1", args.port), StubHandler)
    print(f"stub endpoints at http://127.0.0.1:{args.port} (chat/tts/asr)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
