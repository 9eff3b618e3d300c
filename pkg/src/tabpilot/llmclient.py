"""Chat-completion transport with tier routing, retries and record/replay.

The client speaks the common chat-completions JSON shape over HTTP.  Model
ids are opaque config strings keyed by tier (light/heavy); requests digest to
a stable hash of (model, messages, temperature) so a recorded transcript can
replay bit-identically on any machine and a prompt edit surfaces as a
ReplayMiss naming the first divergent message.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests


class TransportError(Exception):
    """Exhausted retries against the configured endpoint."""


class ReplayMiss(Exception):
    """The transcript has no response for this request digest."""


@dataclass
class ChatRequest:
    messages: list[dict]  # {"role": system|user|assistant, "content": str}
    model: str
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        for message in self.messages:
            if message.get("role") not in ("system", "user", "assistant"):
                raise ValueError(f"bad message role: {message.get('role')!r}")

    def digest(self) -> str:
        payload = {
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        }
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class Transcript:
    """Ordered (digest, request, response) records for one run."""

    path: Path | None = None
    entries: list[dict] = field(default_factory=list)
    _by_digest: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        path = Path(path)
        transcript = cls(path=path)
        if path.exists():
            with path.open("r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        transcript._add(json.loads(line))
        return transcript

    def _add(self, entry: dict) -> None:
        self.entries.append(entry)
        self._by_digest[entry["digest"]] = entry

    def record(self, request: ChatRequest, response: str) -> None:
        entry = {
            "digest": request.digest(),
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "response": response,
        }
        self._add(entry)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def lookup(self, request: ChatRequest) -> str:
        entry = self._by_digest.get(request.digest())
        if entry is None:
            raise ReplayMiss(self._describe_miss(request))
        return entry["response"]

    def _describe_miss(self, request: ChatRequest) -> str:
        best = None
        for entry in self.entries:
            if entry["model"] != request.model:
                continue
            for i, (theirs, ours) in enumerate(zip(entry["messages"], request.messages)):
                if theirs != ours:
                    best = (i, ours.get("role"), ours.get("content", "")[:120])
                    break
            else:
                continue
            break
        if best is None:
            return "no recorded exchange matches this request"
        index, role, content = best
        return (f"first divergent message at index {index} (role {role}): "
                f"{content!r}")


@dataclass
class LlmConfig:
    endpoint_url: str = ""
    api_key_env: str = "CHAT_API_KEY"
    model_light: str = "light-default"
    model_heavy: str = "heavy-default"
    request_timeout: float = 60.0
    temperature: float = 0.0
    max_retries: int = 3
    backoff_base: float = 0.5

    def model_for_tier(self, tier: str) -> str:
        return self.model_heavy if tier == "heavy" else self.model_light


class LlmClient:
    """HTTP client in one of three modes: live, record (live + log), replay."""

    def __init__(self, config: LlmConfig, mode: str = "live",
                 transcript: Transcript | None = None,
                 session: requests.Session | None = None,
                 sleeper=time.sleep):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown client mode {mode!r}")
        if mode == "replay" and transcript is None:
            raise ValueError("replay mode needs a transcript")
        if mode == "record" and transcript is None:
            transcript = Transcript()
        self.config = config
        self.mode = mode
        self.transcript = transcript
        self.session = session or requests.Session()
        self.sleeper = sleeper
        self.request_log: list[int] = []  # status codes, for tests/diagnostics

    def complete(self, request: ChatRequest) -> str:
        if self.mode == "replay":
            return self.transcript.lookup(request)
        response = self._post_with_retries(request)
        if self.mode == "record":
            self.transcript.record(request, response)
        return response

    def _post_with_retries(self, request: ChatRequest) -> str:
        if not self.config.endpoint_url:
            raise TransportError("no endpoint_url configured")
        import os
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error = None
        for attempt in range(self.config.max_retries):
            try:
                response = self.session.post(
                    self.config.endpoint_url,
                    json=payload,
                    headers=headers,
                    timeout=self.config.request_timeout,
                )
                self.request_log.append(response.status_code)
                if response.status_code == 200:
                    return self._extract_text(response.json())
                last_error = f"HTTP {response.status_code}"
                if response.status_code < 500 and response.status_code != 429:
                    break  # client errors do not heal with retries
            except requests.RequestException as exc:
                self.request_log.append(-1)
                last_error = str(exc)
            if attempt + 1 < self.config.max_retries:
                self.sleeper(self.config.backoff_base * (2 ** attempt))
        raise TransportError(
            f"request failed after {len(self.request_log)} attempts: {last_error}"
        )

    @staticmethod
    def _extract_text(payload: dict) -> str:
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
