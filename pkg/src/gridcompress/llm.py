"""Text-in, text-out model clients.

Every provider sits behind :class:`LlmClient`.  ``HttpClient`` talks to a
JSON endpoint; ``MockClient`` replays scripted responses and records every
request it sees, which is what the tests and the CLI's mock mode use.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Protocol

from .errors import ConfigError, InputError, LlmError

log = logging.getLogger(__name__)

API_KEY_ENV = "GRIDCOMPRESS_API_KEY"


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 300
    top_p: float = 0.95


class LlmClient(Protocol):
    def complete(self, request: LlmRequest) -> str: ...


class HttpClient:
    """POSTs ``{model, prompt, temperature, max_tokens, top_p}`` and reads ``text``.

    Transport errors, 429 and 5xx responses are retried with exponential
    backoff; after ``attempts`` tries an :class:`LlmError` is raised.
    """

    def __init__(self, endpoint: str, model: str = "", api_key: str | None = None, timeout: float = 60.0,
                 attempts: int = 3, backoff: float = 0.5, transport=None):
        import httpx

        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV)
        if not api_key:
            raise ConfigError(f"live mode needs an API key in ${API_KEY_ENV}")
        if not endpoint:
            raise ConfigError("live mode needs llm.endpoint")
        if attempts < 1:
            raise ConfigError("attempts must be >= 1")
        self.endpoint = endpoint
        self.model = model
        self.attempts = attempts
        self.backoff = backoff
        self._httpx = httpx
        self._client = httpx.Client(timeout=timeout, transport=transport,
                                    headers={"Authorization": f"Bearer {api_key}"})

    def complete(self, request: LlmRequest) -> str:
        httpx = self._httpx
        body = {"model": self.model, **asdict(request)}
        last = "no attempt made"
        for attempt in range(self.attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.endpoint, json=body)
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.attempts, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.attempts, last)
                continue
            if resp.status_code >= 400:
                raise LlmError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _response_text(resp)
        raise LlmError(f"gave up after {self.attempts} attempts ({last})")

    def close(self) -> None:
        self._client.close()


def _response_text(resp) -> str:
    try:
        data = resp.json()
    except ValueError:
        raise LlmError("response body is not JSON") from None
    if isinstance(data, dict):
        if isinstance(data.get("text"), str):
            return data["text"]
        choices = data.get("choices")
        if choices and isinstance(choices[0], dict) and isinstance(choices[0].get("text"), str):
            return choices[0]["text"]
    raise LlmError("response JSON has no text field")


@dataclass(frozen=True)
class MockRule:
    match: str
    response: str


class MockClient:
    """Replays canned responses.

    Rules (substring of the prompt -> response) are checked first, in
    order; otherwise the next entry of ``responses`` is returned.  Running
    out of responses raises :class:`LlmError`, like an unreachable endpoint.
    """

    def __init__(self, responses: list[str] | None = None, rules: list[MockRule] | None = None,
                 fallback: Callable[[LlmRequest], str] | None = None):
        self.responses = list(responses or [])
        self.rules = list(rules or [])
        self.fallback = fallback
        self.calls: list[LlmRequest] = []
        self._next = 0
        self._lock = threading.Lock()

    def complete(self, request: LlmRequest) -> str:
        with self._lock:
            self.calls.append(request)
            for rule in self.rules:
                if rule.match in request.prompt:
                    return rule.response
            if self._next < len(self.responses):
                self._next += 1
                return self.responses[self._next - 1]
        if self.fallback is not None:
            return self.fallback(request)
        raise LlmError("mock client has no scripted response left")

    @classmethod
    def from_json(cls, data) -> "MockClient":
        """Accept a list of responses or ``{"responses": [...], "rules": [{match, response}]}``."""
        if isinstance(data, list):
            data = {"responses": data}
        if not isinstance(data, dict):
            raise InputError("mock script must be a list or an object")
        responses = data.get("responses", [])
        rules = data.get("rules", [])
        if not all(isinstance(r, str) for r in responses):
            raise InputError("mock responses must be strings")
        try:
            parsed = [MockRule(str(r["match"]), str(r["response"])) for r in rules]
        except (KeyError, TypeError):
            raise InputError("mock rules need 'match' and 'response'") from None
        return cls(responses, parsed)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockClient":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read mock script {path}: {exc}") from None
        except ValueError as exc:
            raise InputError(f"mock script {path} is not valid JSON: {exc}") from None
        return cls.from_json(data)
