from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from ..prompts import PromptText
from ..render import RenderedImage

ROLES = ("initializer", "critic", "scorer")


@dataclass(frozen=True)
class AgentRequest:
    role: str
    prompt: PromptText
    images: tuple[RenderedImage, ...]
    temperature: float = 0.0
    sample_index: int = 0
    model_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if self.role not in ROLES:
            raise ConfigError(f"unknown role {self.role!r}")
        if not self.images:
            raise ConfigError("a request needs at least one image")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature {self.temperature} outside [0, 2]")
        if self.sample_index < 0:
            raise ConfigError("sample_index must be >= 0")

    def cache_key(self) -> str:
        blob = json.dumps(
            {
                "model_id": self.model_id,
                "role": self.role,
                "prompt": self.prompt.text,
                "images": [im.content_hash for im in self.images],
                "temperature": f"{self.temperature:.2f}",
                "sample_index": self.sample_index,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AgentReply:
    text: str
    latency_ms: float
    from_cache: bool
    backend: str


class ReplyCache:
    """Replies stored as ``<dir>/<hex digest>.json``; writes are atomic renames."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        try:
            return json.loads(self.path(key).read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None

    def put(self, key: str, text: str, backend: str) -> None:
        data = json.dumps({"text": text, "backend": backend}, sort_keys=True, ensure_ascii=False)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, self.path(key))


class RateLimiter:
    """At most ``per_minute`` acquisitions in any sliding 60 s window."""

    def __init__(self, per_minute: int, clock=time.monotonic, sleep=time.sleep):
        self.per_minute = per_minute
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self.sleep(wait)


class Gateway:
    """Cache-fronted access to one backend, with an in-flight cap and optional RPM limit.

    ``backend`` is a :class:`~vra.gateway.live.LiveBackend` or
    :class:`~vra.gateway.mock.MockBackend`; ``ctx`` is only passed on to mocks.
    """

    def __init__(self, backend, cache: ReplyCache | None = None, max_in_flight: int = 4, requests_per_minute: int | None = None):
        if max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        self.backend = backend
        self.cache = cache
        self.max_in_flight = max_in_flight
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._limiter = RateLimiter(requests_per_minute) if requests_per_minute else None
        self.calls = 0
        self._count_lock = threading.Lock()

    @property
    def model_id(self) -> str:
        return self.backend.model_id

    def invoke(self, req: AgentRequest, ctx=None) -> AgentReply:
        key = req.cache_key()
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return AgentReply(hit["text"], 0.0, True, hit["backend"])
        with self._slots:
            if self._limiter is not None and self.backend.kind == "live":
                self._limiter.acquire()
            t0 = time.perf_counter()
            text = self.backend.complete(req, ctx)
            latency = (time.perf_counter() - t0) * 1000.0
        with self._count_lock:
            self.calls += 1
        if self.cache is not None:
            self.cache.put(key, text, self.backend.kind)
        return AgentReply(text, latency, False, self.backend.kind)
