"""HTTPS vision chat-completion client (OpenAI-style ``/chat/completions``)."""

from __future__ import annotations

import base64
import logging
import os
import time

import httpx

from ..errors import CredentialError, TransportError

log = logging.getLogger(__name__)

API_KEY_ENV = "VRA_API_KEY"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o"
# 3 routes x 35 nodes in the route grammar is well under 1k tokens.
DEFAULT_MAX_TOKENS = 1024


def build_payload(req, max_tokens: int = DEFAULT_MAX_TOKENS) -> dict:
    content = [{"type": "text", "text": req.prompt.text}]
    for im in req.images:
        data = base64.b64encode(im.bytes).decode("ascii")
        content.append({"type": "image_url", "image_url": {"url": f"data:image/{im.format};base64,{data}"}})
    return {
        "model": req.model_id,
        "messages": [{"role": "user", "content": content}],
        "temperature": req.temperature,
        "max_tokens": max_tokens,
    }


def _retry_after(resp: httpx.Response) -> float | None:
    value = resp.headers.get("retry-after")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


class LiveBackend:
    kind = "live"

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        model_id: str = DEFAULT_MODEL,
        api_key: str | None = None,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        max_retries: int = 5,
        backoff: float = 1.0,
        max_backoff: float = 60.0,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not api_key:
            raise CredentialError(f"live backend needs an API key in ${API_KEY_ENV}")
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.max_tokens = max_tokens
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.sleep = sleep
        self._client = client or httpx.Client(timeout=timeout)
        self._headers = {"Authorization": f"Bearer {api_key}"}

    def complete(self, req, ctx=None) -> str:
        payload = build_payload(req, self.max_tokens)
        payload["model"] = self.model_id
        url = f"{self.base_url}/chat/completions"
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            wait = None
            try:
                resp = self._client.post(url, json=payload, headers=self._headers)
            except httpx.TransportError as exc:
                err = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code in (401, 403):
                    raise CredentialError(f"backend rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 200:
                    try:
                        text = resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise TransportError(f"malformed completion body: {exc}") from exc
                    return text or ""
                if resp.status_code == 429:
                    wait = _retry_after(resp)
                elif resp.status_code < 500:
                    raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                err = f"HTTP {resp.status_code}"
            if attempt == self.max_retries:
                raise TransportError(f"giving up after {attempt + 1} attempts: {err}")
            if wait is None:
                wait = delay
            log.warning("request failed (%s); retrying in %.1fs", err, wait)
            self.sleep(wait)
            delay = min(self.max_backoff, delay * 2)
        raise AssertionError("unreachable")
