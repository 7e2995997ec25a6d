"""Chat-completion backends behind one request/reply contract.

Two implementations ship: ``ScriptedProvider``, a deterministic mock that
pops prepared raw texts and records every request it sees (the workhorse of
the test suite and offline demos), and ``HttpChatProvider``, a thin client
for any service speaking the common chat-completion HTTP shape (system +
user messages in, text choice out).

Backend failures are never raised from ``complete``: they surface as a reply
with ``finish_reason == "provider_error"``, an explanatory message, and a
retriable flag. Pre-dispatch problems (invalid request, blown budget, absent
configuration) do raise, since no request was ever sent.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .errors import BudgetError, ConfigError, ValidationError

__all__ = [
    "COMPLETE",
    "TRUNCATED",
    "PROVIDER_ERROR",
    "estimate_tokens",
    "ProviderRequest",
    "ProviderReply",
    "Provider",
    "ScriptedProvider",
    "HttpChatProvider",
    "DEFAULT_TEMPERATURE",
    "DEFAULT_MAX_TOKENS",
    "DEFAULT_CREDENTIAL_ENV",
]

COMPLETE = "complete"
TRUNCATED = "truncated"
PROVIDER_ERROR = "provider_error"

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 1024
DEFAULT_CREDENTIAL_ENV = "OCSTUDIO_API_KEY"


def estimate_tokens(text: str) -> int:
    """Cheap length heuristic: roughly four characters per token, rounded up."""
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class ProviderRequest:
    model_id: str
    system_prompt: str
    turn_cue: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValidationError(
                f"temperature {self.temperature} outside the allowed range [0, 2]"
            )
        if not isinstance(self.max_tokens, int) or self.max_tokens <= 0:
            raise ValidationError("max_tokens must be a positive integer")

    @property
    def prompt_text(self) -> str:
        return self.system_prompt + "\n" + self.turn_cue


@dataclass(frozen=True)
class ProviderReply:
    raw_text: str | None
    finish_reason: str
    usage: dict | None = None
    error_message: str | None = None
    retriable: bool = False

    def __post_init__(self) -> None:
        if self.finish_reason not in (COMPLETE, TRUNCATED, PROVIDER_ERROR):
            raise ValidationError(
                f"unknown finish_reason {self.finish_reason!r}"
            )
        if (self.raw_text is None) != (self.finish_reason == PROVIDER_ERROR):
            raise ValidationError(
                "raw_text must be present exactly when the provider succeeded"
            )


class Provider(Protocol):
    def complete(self, request: ProviderRequest) -> ProviderReply: ...


def _check_budget(request: ProviderRequest) -> None:
    prompt_tokens = estimate_tokens(request.prompt_text)
    if prompt_tokens > request.max_tokens:
        raise BudgetError(
            f"prompt is ~{prompt_tokens} tokens, over the {request.max_tokens} budget"
        )


class ScriptedProvider:
    """Deterministic mock: returns scripted texts in order, records requests.

    Script items are raw reply strings (or prepared ProviderReply values for
    simulating truncation and backend failures). A call past the end of the
    script is a non-retriable provider error, "script exhausted".
    """

    def __init__(self, script: Sequence[str | ProviderReply] = ()):
        self._script: list[str | ProviderReply] = list(script)
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[ProviderRequest] = []

    def remaining(self) -> int:
        with self._lock:
            return len(self._script) - self._cursor

    def complete(self, request: ProviderRequest) -> ProviderReply:
        _check_budget(request)
        with self._lock:
            self.requests.append(request)
            if self._cursor >= len(self._script):
                return ProviderReply(
                    raw_text=None,
                    finish_reason=PROVIDER_ERROR,
                    error_message="script exhausted",
                    retriable=False,
                )
            item = self._script[self._cursor]
            self._cursor += 1
        if isinstance(item, ProviderReply):
            return item
        return ProviderReply(
            raw_text=item,
            finish_reason=COMPLETE,
            usage={
                "prompt_tokens": estimate_tokens(request.prompt_text),
                "completion_tokens": estimate_tokens(item),
            },
        )


class HttpChatProvider:
    """Client for a generic chat-completion endpoint.

    POSTs ``{base_url}/chat/completions`` with system + user messages and
    reads back the first choice. The credential is taken from the named
    environment variable at call time; transport failures come back as
    provider_error replies with a retriable flag (timeouts and 5xx yes,
    4xx no).
    """

    def __init__(
        self,
        base_url: str,
        *,
        credential_env: str = DEFAULT_CREDENTIAL_ENV,
        timeout_seconds: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        if not base_url or not base_url.strip():
            raise ConfigError("provider base_url must be configured")
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            timeout=timeout_seconds,
            transport=transport,
        )
        self._credential_env = credential_env

    def complete(self, request: ProviderRequest) -> ProviderReply:
        _check_budget(request)
        headers = {}
        credential = os.environ.get(self._credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        body = {
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.turn_cue},
            ],
        }
        try:
            response = self._client.post(
                "/chat/completions", json=body, headers=headers
            )
        except httpx.TimeoutException:
            return ProviderReply(
                raw_text=None,
                finish_reason=PROVIDER_ERROR,
                error_message="provider request timed out",
                retriable=True,
            )
        except httpx.HTTPError as exc:
            return ProviderReply(
                raw_text=None,
                finish_reason=PROVIDER_ERROR,
                error_message=f"provider transport failure: {exc}",
                retriable=True,
            )
        if response.status_code >= 500:
            return ProviderReply(
                raw_text=None,
                finish_reason=PROVIDER_ERROR,
                error_message=f"provider returned {response.status_code}",
                retriable=True,
            )
        if response.status_code >= 400:
            return ProviderReply(
                raw_text=None,
                finish_reason=PROVIDER_ERROR,
                error_message=(
                    f"provider rejected the request ({response.status_code}): "
                    f"{response.text[:200]}"
                ),
                retriable=False,
            )
        try:
            payload = response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
        except (json.JSONDecodeError, LookupError, TypeError):
            return ProviderReply(
                raw_text=None,
                finish_reason=PROVIDER_ERROR,
                error_message="provider response had an unexpected shape",
                retriable=False,
            )
        usage = payload.get("usage") if isinstance(payload, dict) else None
        return ProviderReply(
            raw_text=text,
            finish_reason=TRUNCATED if finish == "length" else COMPLETE,
            usage=usage if isinstance(usage, dict) else None,
        )
