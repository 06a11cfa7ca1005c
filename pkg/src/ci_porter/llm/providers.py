"""Model providers: a scripted mock for offline runs and a small HTTP client.

Wire contract: POST ``{"model", "temperature", "messages": [{"role", "content"}]}``
and expect ``{"content": ...}`` back.
"""
from __future__ import annotations

import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol

URL_ENV = "CI_PORTER_LLM_URL"
KEY_ENV = "CI_PORTER_LLM_KEY"


class ProviderTransportError(RuntimeError):
    """The provider could not be reached or answered garbage; worth retrying."""

    def __init__(self, message: str, case_id: Optional[str] = None):
        super().__init__(f"{case_id}: {message}" if case_id else message)
        self.case_id = case_id


@dataclass(frozen=True)
class ProviderRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    # Bookkeeping for mocks and logs; never sent over the wire.
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def to_wire(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
        }


@dataclass(frozen=True)
class ProviderResponse:
    content: str


class Provider(Protocol):
    def complete(self, request: ProviderRequest) -> ProviderResponse: ...


def user_request(prompt_text: str, model: str = "mock", temperature: float = 0.0, **metadata) -> ProviderRequest:
    return ProviderRequest(model, (("user", prompt_text),), temperature, metadata)


_MOCK_NAME = re.compile(
    r"^(?P<case>.+?)(?:\.(?P<strategy>basic|one_shot|guideline|refinement))?\.(?P<iteration>\d+)\.txt$"
)


class MockProvider:
    """Replays scripted responses named ``<case_id>.<iteration>.txt``.

    ``<case_id>.<strategy>.<iteration>.txt`` takes precedence when the request
    carries that strategy, so one directory can script several strategies.
    A missing iteration falls back to the highest earlier one, which models a
    model that keeps answering the same way.
    """

    def __init__(self, directory=None, responses: Optional[Mapping[str, str]] = None):
        self.scripts: dict[tuple[str, Optional[str], int], str] = {}
        if directory is not None:
            for path in sorted(Path(directory).glob("*.txt")):
                m = _MOCK_NAME.match(path.name)
                if m:
                    key = (m.group("case"), m.group("strategy"), int(m.group("iteration")))
                    self.scripts[key] = path.read_text(encoding="utf-8")
        for name, text in (responses or {}).items():
            m = _MOCK_NAME.match(name if name.endswith(".txt") else name + ".txt")
            if not m:
                raise ValueError(f"bad mock response name {name!r}")
            self.scripts[(m.group("case"), m.group("strategy"), int(m.group("iteration")))] = text

    def lookup(self, case_id: str, iteration: int, strategy: Optional[str] = None) -> Optional[str]:
        for strat in ((strategy, None) if strategy else (None,)):
            found = [i for (c, s, i) in self.scripts if c == case_id and s == strat and i <= iteration]
            if found:
                return self.scripts[(case_id, strat, max(found))]
        return None

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        case_id = str(request.metadata.get("case_id", ""))
        iteration = int(request.metadata.get("iteration", 0))
        strategy = request.metadata.get("strategy")
        text = self.lookup(case_id, iteration, str(strategy) if strategy else None)
        if text is None:
            raise ProviderTransportError(f"no scripted response for iteration {iteration}", case_id)
        return ProviderResponse(text)


class FunctionProvider:
    """Wraps ``fn(request) -> str``; handy for tests."""

    def __init__(self, fn: Callable[[ProviderRequest], str]):
        self.fn = fn

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        return ProviderResponse(self.fn(request))


class HttpProvider:
    def __init__(self, url: str, key: Optional[str] = None, timeout: float = 120.0):
        self.url = url
        self.key = key
        self.timeout = timeout

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None, timeout: float = 120.0) -> "HttpProvider":
        environ = os.environ if environ is None else environ
        url = environ.get(URL_ENV)
        if not url:
            raise ValueError(f"{URL_ENV} is not set")
        return cls(url, environ.get(KEY_ENV), timeout)

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        case_id = request.metadata.get("case_id")
        body = json.dumps(request.to_wire()).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        req = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise ProviderTransportError(f"request failed: {exc}", case_id) from exc
        except json.JSONDecodeError as exc:
            raise ProviderTransportError(f"response is not JSON: {exc}", case_id) from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("content"), str):
            raise ProviderTransportError("response has no 'content' string", case_id)
        return ProviderResponse(payload["content"])
