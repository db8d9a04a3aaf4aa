"""Chat-completion gateway with live, record, and replay modes.

Every request is fingerprinted over its semantic fields (model, system
prompt, user prompt, temperature); response caps and transport settings are
excluded. Record mode persists fingerprint-keyed exchanges to a cassette;
replay mode serves exclusively from cassettes and raises on a miss, which
keeps tests offline and byte-deterministic.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, Protocol

import httpx

from .model import TokenUsage

DEFAULT_TEMPERATURE = 0.2
DEFAULT_RETRIES = 3
DEFAULT_CONCURRENCY = 4

ENV_API_KEY = "NSVIF_API_KEY"
ENV_BASE_URL = "NSVIF_BASE_URL"
ENV_MODEL = "NSVIF_MODEL"

RECORD_FILE_NAME = "recorded.json"


class GatewayError(Exception):
    """Base class for gateway failures."""


class ReplayMissError(GatewayError):
    def __init__(self, fingerprint_hex: str):
        super().__init__(
            f"replay cassette has no entry for fingerprint {fingerprint_hex}"
        )
        self.fingerprint = fingerprint_hex


class TransportExhaustedError(GatewayError):
    """All transport attempts failed."""


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    user: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int | None = None


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: TokenUsage
    backend: Literal["live", "replay"]


def fingerprint(request: ChatRequest) -> str:
    """sha256 over the canonical JSON of the semantic request fields."""
    payload = json.dumps(
        {
            "model": request.model,
            "system": request.system,
            "temperature": request.temperature,
            "user": request.user,
        },
        sort_keys=True,
        ensure_ascii=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Transport(Protocol):
    def complete(self, request: ChatRequest) -> tuple[str, TokenUsage]: ...


class LiveTransport:
    """OpenAI-style /chat/completions client over httpx.

    Retries transport errors, 429s, and 5xx responses with exponential
    backoff; other HTTP errors raise immediately.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        *,
        retries: int = DEFAULT_RETRIES,
        backoff_base: float = 0.5,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        if not self.base_url:
            raise GatewayError(
                f"live transport requires a base URL (flag, config, or {ENV_BASE_URL})"
            )
        self.retries = retries
        self.backoff_base = backoff_base
        self._sleep = sleeper
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, request: ChatRequest) -> tuple[str, TokenUsage]:
        body: dict[str, Any] = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/chat/completions"

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = self._client.post(url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = GatewayError(
                    f"HTTP {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code != 200:
                raise GatewayError(
                    f"HTTP {response.status_code}: {response.text[:200]}"
                )
            payload = response.json()
            try:
                text = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed completion payload: {exc}") from exc
            usage_info = payload.get("usage", {})
            usage = TokenUsage(
                int(usage_info.get("prompt_tokens", 0)),
                int(usage_info.get("completion_tokens", 0)),
            )
            return text, usage
        raise TransportExhaustedError(
            f"gave up after {self.retries + 1} attempts: {last_error}"
        )


class CassetteStore:
    """Fingerprint-keyed exchange store.

    The location may be a single JSON file or a directory; directories load
    every ``*.json`` file merged together and append new recordings to
    ``recorded.json`` inside. Each file holds a JSON array of entries in
    first-use order: {fingerprint, request, response, usage}.
    """

    def __init__(self, location: str | Path):
        self.location = Path(location)
        self._lock = threading.Lock()
        self._entries: dict[str, dict[str, Any]] = {}
        self._record_entries: list[dict[str, Any]] = []
        self._load()

    @property
    def record_path(self) -> Path:
        if self.location.suffix == ".json" and not self.location.is_dir():
            return self.location
        return self.location / RECORD_FILE_NAME

    def _load(self) -> None:
        if self.location.is_dir():
            files = sorted(self.location.glob("*.json"))
        elif self.location.exists():
            files = [self.location]
        else:
            files = []
        for path in files:
            raw = json.loads(path.read_text(encoding="utf-8"))
            if not isinstance(raw, list):
                raise GatewayError(f"cassette {path} is not a JSON array")
            for entry in raw:
                self._entries[entry["fingerprint"]] = entry
                if path == self.record_path:
                    self._record_entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, fingerprint_hex: str) -> dict[str, Any] | None:
        with self._lock:
            return self._entries.get(fingerprint_hex)

    def add(self, request: ChatRequest, text: str, usage: TokenUsage) -> None:
        entry = {
            "fingerprint": fingerprint(request),
            "request": {
                "model": request.model,
                "system": request.system,
                "user": request.user,
                "temperature": request.temperature,
            },
            "response": {"text": text},
            "usage": {"input_tokens": usage[0], "output_tokens": usage[1]},
        }
        with self._lock:
            if entry["fingerprint"] in self._entries:
                return
            self._entries[entry["fingerprint"]] = entry
            self._record_entries.append(entry)
            path = self.record_path
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(
                json.dumps(self._record_entries, indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )


class Gateway:
    """Mode-switched completion entry point.

    live: transport only. replay: cassette only, strict. record: cassette
    hits replay, misses go to the transport and are persisted.
    """

    def __init__(
        self,
        mode: Literal["live", "replay", "record"] = "live",
        *,
        transport: Transport | None = None,
        cassette: CassetteStore | str | Path | None = None,
        concurrency: int = DEFAULT_CONCURRENCY,
    ):
        if mode not in ("live", "replay", "record"):
            raise GatewayError(f"unknown gateway mode {mode!r}")
        if concurrency < 1:
            raise GatewayError("concurrency must be at least 1")
        self.mode = mode
        if isinstance(cassette, (str, Path)):
            cassette = CassetteStore(cassette)
        self.cassette = cassette
        self.transport = transport
        if mode in ("replay", "record") and cassette is None:
            raise GatewayError(f"{mode} mode requires a cassette")
        if mode in ("live", "record") and transport is None:
            raise GatewayError(f"{mode} mode requires a transport")
        self._semaphore = threading.Semaphore(concurrency)

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self.mode != "live":
            assert self.cassette is not None
            entry = self.cassette.get(fingerprint(request))
            if entry is not None:
                usage_info = entry.get("usage", {})
                return ChatResponse(
                    text=entry["response"]["text"],
                    usage=TokenUsage(
                        int(usage_info.get("input_tokens", 0)),
                        int(usage_info.get("output_tokens", 0)),
                    ),
                    backend="replay",
                )
            if self.mode == "replay":
                raise ReplayMissError(fingerprint(request))
        assert self.transport is not None
        with self._semaphore:
            text, usage = self.transport.complete(request)
        if self.mode == "record":
            assert self.cassette is not None
            self.cassette.add(request, text, usage)
        return ChatResponse(text=text, usage=usage, backend="live")


def usage_total(responses: list[ChatResponse]) -> TokenUsage:
    total = TokenUsage()
    for response in responses:
        total = total + response.usage
    return total
