"""Chat-completion gateway: backends, retries, per-role decoding, token ledger.

All model traffic flows through :class:`GatewayClient` so that every
round-trip lands in the ledger exactly once.  The scripted backend is a
first-class citizen: it makes whole exploration runs a pure function of
(seed, script, config) and powers the offline CLI mode.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import requests

from vpsearch.errors import ConfigurationError, GatewayError, TransientBackendError
from vpsearch.records import TokenUsage

logger = logging.getLogger(__name__)

ROLE_TAGS = ("ideation", "engineer", "analyst", "target_model")

# Agent roles reason by default; the target model answers with reasoning off.
DEFAULT_REASONING = {
    "ideation": True,
    "engineer": True,
    "analyst": True,
    "target_model": False,
}


@dataclass
class Part:
    """One message part: text, or an image passed as PNG bytes."""

    kind: str  # "text" | "image"
    text: str = ""
    image_bytes: bytes | None = None


@dataclass
class Decoding:
    reasoning: bool
    max_output_tokens: int = 2048


@dataclass
class ChatRequest:
    role_tag: str
    parts: list[Part]
    node_id: int | None = None
    decoding: Decoding | None = None

    def __post_init__(self) -> None:
        if self.role_tag not in ROLE_TAGS:
            raise ConfigurationError(f"unknown role_tag {self.role_tag!r}")
        if self.decoding is None:
            self.decoding = Decoding(reasoning=DEFAULT_REASONING[self.role_tag])

    @classmethod
    def text(cls, role_tag: str, prompt: str, node_id: int | None = None) -> "ChatRequest":
        return cls(role_tag=role_tag, parts=[Part("text", text=prompt)], node_id=node_id)


@dataclass
class LedgerEntry:
    timestamp: float
    role_tag: str
    node_id: int | None
    usage: TokenUsage
    backend_id: str
    flag: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "role_tag": self.role_tag,
            "node_id": self.node_id,
            "usage": self.usage.to_list(),
            "backend_id": self.backend_id,
            "flag": self.flag,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LedgerEntry":
        return cls(
            timestamp=data["timestamp"],
            role_tag=data["role_tag"],
            node_id=data.get("node_id"),
            usage=TokenUsage.from_list(data["usage"]),
            backend_id=data["backend_id"],
            flag=data.get("flag"),
        )


class Ledger:
    """Append-only log of every backend round-trip."""

    def __init__(self) -> None:
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()

    def append(self, entry: LedgerEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._entries)

    def total(self, role_tag: str | None = None, node_id: int | None = None) -> TokenUsage:
        """Sum usage over all entries, optionally filtered."""
        usage = TokenUsage()
        for entry in self.entries:
            if role_tag is not None and entry.role_tag != role_tag:
                continue
            if node_id is not None and entry.node_id != node_id:
                continue
            usage = usage + entry.usage
        return usage

    def count(self, role_tag: str | None = None) -> int:
        return sum(1 for e in self.entries if role_tag is None or e.role_tag == role_tag)

    def to_list(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.entries]

    @classmethod
    def from_list(cls, data: list[dict[str, Any]]) -> "Ledger":
        ledger = cls()
        for item in data:
            ledger.append(LedgerEntry.from_dict(item))
        return ledger


@dataclass
class BackendReply:
    text: str
    usage: TokenUsage | None  # None signals malformed usage from the backend


class ScriptedBackend:
    """Deterministic backend replaying scripted replies per role.

    Replies are keyed by (role_tag, sequence index); a finite script cycles
    so long runs stay cheap to describe.  Counters can be restored from a
    ledger when resuming a snapshot.
    """

    backend_id = "scripted"

    def __init__(self, script: dict[str, list[Any]]):
        for role in script:
            if role not in ROLE_TAGS:
                raise ConfigurationError(f"script has unknown role {role!r}")
            if not script[role]:
                raise ConfigurationError(f"script role {role!r} has no entries")
        self._script = script
        self._counters: dict[str, int] = {role: 0 for role in ROLE_TAGS}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot load script file {path}: {exc}") from exc
        return cls(data)

    def set_counters(self, counters: dict[str, int]) -> None:
        with self._lock:
            for role, value in counters.items():
                self._counters[role] = value

    @property
    def counters(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counters)

    def send(self, request: ChatRequest) -> BackendReply:
        role = request.role_tag
        if role not in self._script:
            raise GatewayError(f"script has no entries for role {role!r}")
        with self._lock:
            index = self._counters[role]
            self._counters[role] += 1
        entries = self._script[role]
        entry = entries[index % len(entries)]
        if isinstance(entry, str):
            return BackendReply(text=entry, usage=TokenUsage())
        text = entry["text"]
        raw_usage = entry.get("usage", [0, 0, 0])
        try:
            usage = TokenUsage.from_list(raw_usage)
        except (ConfigurationError, TypeError, ValueError, IndexError):
            return BackendReply(text=text, usage=None)
        return BackendReply(text=text, usage=usage)


class HttpBackend:
    """Generic JSON chat endpoint; wire format documented in the README."""

    def __init__(self, url: str, api_key: str | None = None, timeout: float = 120.0):
        self.url = url
        self.api_key = api_key
        self.timeout = timeout
        self.backend_id = f"http:{url}"

    def send(self, request: ChatRequest) -> BackendReply:
        payload = {
            "role": request.role_tag,
            "reasoning": request.decoding.reasoning,
            "max_output_tokens": request.decoding.max_output_tokens,
            "messages": [self._encode_part(p) for p in request.parts],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransientBackendError(f"request to {self.url} failed: {exc}") from exc
        if response.status_code >= 500 or response.status_code == 429:
            raise TransientBackendError(f"backend returned {response.status_code}")
        if response.status_code != 200:
            raise GatewayError(f"backend returned {response.status_code}: {response.text[:200]}")
        try:
            body = response.json()
            text = body["text"]
        except (ValueError, KeyError) as exc:
            raise GatewayError(f"backend reply is not the expected JSON shape: {exc}") from exc
        usage: TokenUsage | None
        try:
            raw = body.get("usage", {})
            usage = TokenUsage(
                int(raw.get("input_tokens", 0)),
                int(raw.get("output_tokens", 0)),
                int(raw.get("reasoning_tokens", 0)),
            )
        except (TypeError, ValueError, ConfigurationError):
            usage = None
        return BackendReply(text=text, usage=usage)

    @staticmethod
    def _encode_part(part: Part) -> dict[str, Any]:
        if part.kind == "image":
            return {"type": "image", "data": base64.b64encode(part.image_bytes or b"").decode()}
        return {"type": "text", "text": part.text}


class GatewayClient:
    """Retrying front door to a backend, with exactly-once ledger entries.

    ``logical_clock=True`` replaces wall-clock entry timestamps with a
    deterministic counter so offline snapshots are byte-reproducible.
    """

    def __init__(
        self,
        backend: Any,
        ledger: Ledger | None = None,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        logical_clock: bool = False,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.ledger = ledger if ledger is not None else Ledger()
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._logical_clock = logical_clock
        self._tick = 0
        self._tick_lock = threading.Lock()
        # Audit hook: receives one dict per completed exchange.
        self.transcript_sink: Callable[[dict[str, Any]], None] | None = None

    @property
    def deterministic(self) -> bool:
        return self._logical_clock

    def _now(self) -> float:
        if not self._logical_clock:
            return time.time()
        with self._tick_lock:
            value = float(self._tick)
            self._tick += 1
            return value

    def set_clock(self, tick: int) -> None:
        with self._tick_lock:
            self._tick = tick

    def complete(self, request: ChatRequest) -> tuple[str, TokenUsage]:
        """Send a request, retrying transient failures with backoff."""
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                reply = self.backend.send(request)
            except TransientBackendError as exc:
                last_error = exc
                delay = self.backoff_base * (2**attempt)
                logger.warning(
                    "transient backend failure (attempt %d/%d), retrying in %.1fs: %s",
                    attempt + 1,
                    self.max_attempts,
                    delay,
                    exc,
                )
                self._sleep(delay)
                continue
            flag = None
            usage = reply.usage
            if usage is None:
                usage = TokenUsage()
                flag = "malformed-usage"
                logger.warning("backend %s returned malformed usage; recording zeros", self.backend.backend_id)
            self.ledger.append(
                LedgerEntry(
                    timestamp=self._now(),
                    role_tag=request.role_tag,
                    node_id=request.node_id,
                    usage=usage,
                    backend_id=self.backend.backend_id,
                    flag=flag,
                )
            )
            if self.transcript_sink is not None:
                self.transcript_sink(
                    {
                        "role_tag": request.role_tag,
                        "node_id": request.node_id,
                        "parts": [
                            p.text if p.kind == "text" else f"[image, {len(p.image_bytes or b'')} bytes]"
                            for p in request.parts
                        ],
                        "reply": reply.text,
                    }
                )
            return reply.text, usage
        raise GatewayError(
            f"backend {self.backend.backend_id} failed after {self.max_attempts} attempts: {last_error}"
        )
