"""Chat-completion backends: HTTP, cassette replay/record, and scripted.

All backends share :class:`ChatBackend`, which bounds concurrency, times each
call and keeps a cursor (calls per tag, calls per request hash). The cursor is
a pure function of the request stream, so it is identical under record and
replay and can be stored in a run journal to resume a replay.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import httpx

log = logging.getLogger(__name__)


class Tag(str, Enum):
    TEST_GENERATION = "test_generation"
    MODIFICATION_METHOD = "modification_method"
    PROMPT_SYNTHESIS = "prompt_synthesis"
    REFLECTION = "reflection"
    RULE_TRANSFORMATION = "rule_transformation"


DEFAULT_TEMPERATURES = {
    Tag.TEST_GENERATION: 0.2,
    Tag.MODIFICATION_METHOD: 0.8,
    Tag.PROMPT_SYNTHESIS: 0.8,
    Tag.REFLECTION: 0.2,
    Tag.RULE_TRANSFORMATION: 0.2,
}


class LLMError(Exception):
    pass


class CassetteMiss(LLMError):
    def __init__(self, request_hash: str, detail: str = "no matching entry"):
        super().__init__(f"cassette miss for request {request_hash}: {detail}")
        self.request_hash = request_hash


class BackendError(LLMError):
    pass


class TruncationError(LLMError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    tag: Tag
    system_text: str | None = None
    temperature: float = 0.2
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @property
    def hash(self) -> str:
        return request_hash(self.user_text)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency_ms: float = 0.0


def request_hash(user_text: str) -> str:
    return hashlib.sha256(user_text.encode("utf-8")).hexdigest()


class ChatBackend:
    backend_id = "base"

    def __init__(self, parallelism: int = 1):
        self._slots = threading.BoundedSemaphore(max(1, parallelism))
        self._cursor_lock = threading.Lock()
        self.calls_by_tag: Counter[str] = Counter()
        self.calls_by_hash: Counter[str] = Counter()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._cursor_lock:
            occurrence = self.calls_by_hash[request.hash]
            self.calls_by_hash[request.hash] += 1
            position = self.calls_by_tag[request.tag.value]
            self.calls_by_tag[request.tag.value] += 1
        with self._slots:
            start = time.perf_counter()
            text = self._generate(request, occurrence=occurrence, position=position)
            latency = (time.perf_counter() - start) * 1000
        return ChatResponse(text, self.backend_id, latency)

    def _generate(self, request: ChatRequest, *, occurrence: int, position: int) -> str:
        raise NotImplementedError

    def cursor(self) -> dict[str, dict[str, int]]:
        with self._cursor_lock:
            return {
                "by_tag": dict(sorted(self.calls_by_tag.items())),
                "by_hash": dict(sorted(self.calls_by_hash.items())),
            }

    def restore_cursor(self, cursor: dict[str, dict[str, int]]) -> None:
        with self._cursor_lock:
            self.calls_by_tag = Counter(cursor.get("by_tag", {}))
            self.calls_by_hash = Counter(cursor.get("by_hash", {}))


class ScriptedBackend(ChatBackend):
    """Answers every request with ``handler(request)``; for tests and demos."""

    backend_id = "scripted"

    def __init__(self, handler: Callable[[ChatRequest], str], parallelism: int = 1):
        super().__init__(parallelism)
        self.handler = handler

    def _generate(self, request, *, occurrence, position):
        return self.handler(request)


class HttpBackend(ChatBackend):
    """Client for an OpenAI-style ``/chat/completions`` endpoint."""

    backend_id = "http"
    TRANSIENT_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        path: str = "/v1/chat/completions",
        auth_env: str | None = "OPENAI_API_KEY",
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
        parallelism: int = 1,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__(parallelism)
        self.url = base_url.rstrip("/") + "/" + path.lstrip("/")
        self.model = model
        self.auth_env = auth_env
        self.max_retries = max_retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env) if self.auth_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, request: ChatRequest) -> dict[str, Any]:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        return {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def _generate(self, request, *, occurrence, position):
        body = self._body(request)
        last_error = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.url, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                log.warning("LLM request failed (attempt %d): %s", attempt + 1, last_error)
                continue
            if resp.status_code in self.TRANSIENT_STATUS:
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                log.warning("LLM request failed (attempt %d): %s", attempt + 1, last_error)
                continue
            if not resp.is_success:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                choice = resp.json()["choices"][0]
                text = choice["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion payload: {exc}") from exc
            if choice.get("finish_reason") == "length":
                raise TruncationError(f"completion truncated at max_tokens={request.max_tokens}")
            return text
        raise BackendError(f"giving up after {self.max_retries + 1} attempts: {last_error}")


class MatchMode(str, Enum):
    EXACT_HASH = "exact_hash"
    SUBSTRING = "substring"
    SEQUENCE = "sequence"


class ReplayBackend(ChatBackend):
    """Serves responses from a JSON Lines cassette.

    ``exact_hash``: entries keyed by sha256 of the user text; repeated
    identical requests consume same-key entries in recorded order.
    ``substring``: exactly one entry pattern must occur in the user text.
    ``sequence``: entries with the request's tag are served in file order.
    """

    backend_id = "replay"

    def __init__(self, entries: list[dict[str, Any]], mode: MatchMode | str = MatchMode.EXACT_HASH, parallelism: int = 1):
        super().__init__(parallelism)
        self.mode = MatchMode(mode)
        self.entries = entries
        self._by_key: dict[str, list[str]] = defaultdict(list)
        for i, entry in enumerate(entries):
            if "response_text" not in entry:
                raise ValueError(f"cassette entry {i} lacks response_text")
            if self.mode is MatchMode.EXACT_HASH:
                key = entry.get("key")
            elif self.mode is MatchMode.SEQUENCE:
                key = entry.get("tag")
            else:
                key = entry.get("pattern")
            if not key:
                raise ValueError(f"cassette entry {i} has no field usable for {self.mode.value} matching")
            self._by_key[key].append(entry["response_text"])

    @classmethod
    def from_file(cls, path: str | Path, mode: MatchMode | str = MatchMode.EXACT_HASH, parallelism: int = 1) -> ReplayBackend:
        return cls(load_cassette(path), mode, parallelism)

    def _generate(self, request, *, occurrence, position):
        if self.mode is MatchMode.EXACT_HASH:
            answers = self._by_key.get(request.hash, [])
            if occurrence >= len(answers):
                raise CassetteMiss(request.hash, f"{len(answers)} entries, occurrence {occurrence} requested")
            return answers[occurrence]
        if self.mode is MatchMode.SEQUENCE:
            answers = self._by_key.get(request.tag.value, [])
            if position >= len(answers):
                raise CassetteMiss(request.hash, f"sequence for tag {request.tag.value} exhausted at {position}")
            return answers[position]
        hits = [p for p in self._by_key if p in request.user_text]
        if len(hits) != 1:
            raise CassetteMiss(request.hash, f"{len(hits)} substring entries match")
        return self._by_key[hits[0]][0]

    def check_cursor(self, cursor: dict[str, dict[str, int]]) -> list[str]:
        """Problems that would prevent resuming from ``cursor``."""
        problems = []
        table = cursor.get("by_hash" if self.mode is MatchMode.EXACT_HASH else "by_tag", {})
        if self.mode is MatchMode.SUBSTRING:
            return problems
        for key, used in table.items():
            have = len(self._by_key.get(key, []))
            if used > have:
                problems.append(f"journal consumed {used} responses for {key} but cassette holds {have}")
        return problems


class RecordingBackend(ChatBackend):
    """Wraps another backend and appends every exchange to a cassette."""

    backend_id = "record"

    def __init__(self, inner: ChatBackend, path: str | Path, parallelism: int = 1):
        super().__init__(parallelism)
        self.inner = inner
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _generate(self, request, *, occurrence, position):
        text = self.inner.complete(request).text
        self.record(request, text)
        return text

    def record(self, request: ChatRequest, response_text: str) -> dict[str, Any]:
        entry = {
            "matcher": MatchMode.EXACT_HASH.value,
            "key": request.hash,
            "tag": request.tag.value,
            "response_text": response_text,
        }
        line = json.dumps(entry, ensure_ascii=False)
        with self._write_lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return entry


def load_cassette(path: str | Path) -> list[dict[str, Any]]:
    entries = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad cassette line: {exc}") from exc
    return entries


class LLM:
    """Thin facade that fills in per-tag temperatures and token limits."""

    def __init__(self, backend: ChatBackend, temperatures: dict[Tag, float] | None = None, max_tokens: int = 2048):
        self.backend = backend
        self.temperatures = {**DEFAULT_TEMPERATURES, **(temperatures or {})}
        self.max_tokens = max_tokens

    def ask(self, text: str, tag: Tag, *, system: str | None = None, temperature: float | None = None) -> str:
        temp = self.temperatures[tag] if temperature is None else temperature
        request = ChatRequest(text, tag, system, temp, self.max_tokens)
        return self.backend.complete(request).text
