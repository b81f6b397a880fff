"""Chat-completion client with a content-addressed transcript cache.

Real providers are reached over an OpenAI-compatible ``/chat/completions``
endpoint.  The ``mock`` provider answers locally by reading the samples back
out of the prompt, so complete runs work without network access.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

import httpx
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from .core import (
    ALL_CELLS,
    BIT_LETTERS,
    N_BITS,
    Cell,
    CompositionalFunction,
    Dataset,
    Grid,
    Sample,
)
from .prompts import PromptTemplate, parse_query, parse_rules, parse_samples
from .records import RESULT_GENERATION, RULES_PROVIDED
from .reference import constant_program, sufficient_program, zero_program

log = logging.getLogger(__name__)

MOCK_MODES = ("sufficient", "zero", "constant", "unparseable", "broken", "empty", "fixed")


class GatewayError(Exception):
    kind = "gateway"


class AuthError(GatewayError):
    kind = "auth"


class QuotaError(GatewayError):
    kind = "quota"


class MalformedResponse(GatewayError):
    kind = "malformed_response"


class RetryBudgetExceeded(GatewayError):
    kind = "retry_budget"


class CacheMiss(GatewayError):
    kind = "cache_miss"


class _Transient(Exception):
    pass


@dataclass(frozen=True)
class ModelConfig:
    model_id: str
    provider: str = "openai"
    model_name: str = ""
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    params: Mapping[str, Any] = field(default_factory=dict)
    max_retries: int = 4
    backoff: float = 1.0
    timeout: float = 120.0
    max_concurrency: int = 4
    mock_mode: str = "sufficient"
    fixed_response: str = ""

    def __post_init__(self) -> None:
        if self.provider not in ("openai", "mock"):
            raise ValueError(f"unknown provider {self.provider!r}")
        if self.provider == "mock" and self.mock_mode not in MOCK_MODES:
            raise ValueError(f"unknown mock mode {self.mock_mode!r}")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ModelConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)

    def identity(self) -> dict:
        """The parts of the config that can change a response."""
        out = {"model_id": self.model_id, "provider": self.provider, "model_name": self.model_name or self.model_id, "params": dict(sorted(self.params.items()))}
        if self.provider == "mock":
            out["mock_mode"] = self.mock_mode
            if self.mock_mode == "fixed":
                out["fixed_response"] = self.fixed_response
        return out


@dataclass(frozen=True)
class Transcript:
    fingerprint: str
    model_id: str
    template_id: str
    prompt: str
    raw_response: str
    timestamp: str
    params: Mapping[str, Any] = field(default_factory=dict)
    usage: Mapping[str, Any] = field(default_factory=dict)
    attempts: int = 1
    cached: bool = field(default=False, compare=False)

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("cached")
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any], cached: bool = False) -> Transcript:
        return cls(**data, cached=cached)


def fingerprint(model: ModelConfig, template: PromptTemplate, prompt: str) -> str:
    payload = {
        "model": model.identity(),
        "template_id": template.template_id,
        "template": template.body,
        "prompt": prompt,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode()
    return hashlib.sha256(blob).hexdigest()


class TranscriptCache:
    """``<root>/<fp[:2]>/<fp>.json``; writes are serialized and atomic."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.writes = 0

    def path(self, fp: str) -> Path:
        return self.root / fp[:2] / f"{fp}.json"

    def get(self, fp: str) -> Optional[Transcript]:
        p = self.path(fp)
        if not p.exists():
            with self._lock:
                self.misses += 1
            return None
        data = json.loads(p.read_text(encoding="utf-8"))
        with self._lock:
            self.hits += 1
        return Transcript.from_json(data, cached=True)

    def put(self, transcript: Transcript) -> None:
        p = self.path(transcript.fingerprint)
        blob = json.dumps(transcript.to_json(), sort_keys=True, indent=1, ensure_ascii=False)
        with self._lock:
            p.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(blob)
            os.replace(tmp, p)
            self.writes += 1

    def stats(self) -> dict:
        return {"hits": self.hits, "misses": self.misses, "writes": self.writes}


class Gateway:
    def __init__(
        self,
        cache: TranscriptCache,
        transport: Optional[httpx.BaseTransport] = None,
        offline: bool = False,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], str] = lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    ) -> None:
        self.cache = cache
        self.offline = offline
        self._transport = transport
        self._client: Optional[httpx.Client] = None
        self._sleep = sleep
        self._clock = clock
        self._limits: dict[str, threading.Semaphore] = {}
        self._guard = threading.Lock()
        self.in_flight = 0
        self.peak_in_flight = 0
        self.network_calls = 0

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def _semaphore(self, model: ModelConfig) -> threading.Semaphore:
        with self._guard:
            if model.model_id not in self._limits:
                self._limits[model.model_id] = threading.Semaphore(model.max_concurrency)
            return self._limits[model.model_id]

    def complete(self, prompt: str, template: PromptTemplate, model: ModelConfig) -> Transcript:
        fp = fingerprint(model, template, prompt)
        hit = self.cache.get(fp)
        if hit is not None:
            return hit
        if self.offline:
            raise CacheMiss(f"no cached transcript for {fp}")
        with self._semaphore(model):
            with self._guard:
                self.in_flight += 1
                self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                text, usage, attempts = self._dispatch(prompt, template, model)
            finally:
                with self._guard:
                    self.in_flight -= 1
        transcript = Transcript(fp, model.model_id, template.template_id, prompt, text, self._clock(), dict(model.params), usage, attempts)
        self.cache.put(transcript)
        return transcript

    def _dispatch(self, prompt: str, template: PromptTemplate, model: ModelConfig) -> tuple[str, dict, int]:
        if model.provider == "mock":
            text = mock_response(prompt, template, model)
            if not text.strip():
                raise MalformedResponse("empty response")
            return text, {}, 1
        retrying = Retrying(
            stop=stop_after_attempt(model.max_retries + 1),
            wait=wait_exponential(multiplier=model.backoff, max=60),
            retry=retry_if_exception_type(_Transient),
            sleep=self._sleep,
            reraise=False,
        )
        try:
            for attempt in retrying:
                with attempt:
                    text, usage = self._post(prompt, model)
        except RetryError as exc:
            raise RetryBudgetExceeded(
                f"{model.model_id}: gave up after {model.max_retries + 1} attempts ({exc.last_attempt.exception()})"
            ) from None
        attempts = retrying.statistics.get("attempt_number", 1)
        if attempts > 1:
            log.info("%s: succeeded after %d attempts", model.model_id, attempts)
        return text, usage, attempts

    def _post(self, prompt: str, model: ModelConfig) -> tuple[str, dict]:
        headers = {"Content-Type": "application/json"}
        if model.api_key_env:
            key = os.environ.get(model.api_key_env)
            if not key:
                raise AuthError(f"environment variable {model.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": model.model_name or model.model_id,
            "messages": [{"role": "user", "content": prompt}],
            **model.params,
        }
        if self._client is None:
            self._client = httpx.Client(transport=self._transport)
        url = model.base_url.rstrip("/") + "/chat/completions"
        self.network_calls += 1
        try:
            resp = self._client.post(url, json=body, headers=headers, timeout=model.timeout)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise _Transient(f"transport: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code == 429:
            if "insufficient_quota" in resp.text:
                raise QuotaError(f"HTTP 429: {resp.text[:200]}")
            raise _Transient("HTTP 429")
        if resp.status_code >= 500:
            raise _Transient(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected response body: {exc}") from None
        if not isinstance(content, str) or not content.strip():
            raise MalformedResponse("empty completion")
        return content, dict(data.get("usage") or {})


# --- mock provider ----------------------------------------------------------


def infer_cell_rules(samples: list[Sample]) -> dict[Cell, tuple[int, dict[str, str]]]:
    """For each cell, the first input position whose letter explains it in ``samples``."""
    rules: dict[Cell, tuple[int, dict[str, str]]] = {}
    for cell in ALL_CELLS:
        for bit in range(N_BITS):
            mapping: dict[str, str] = {}
            if all(mapping.setdefault(s.input.bits[bit], s.output[cell]) == s.output[cell] for s in samples):
                if len(mapping) == 2 and len(set(mapping.values())) == 2:
                    rules[cell] = (bit, mapping)
                    break
    return rules


def infer_function(samples: list[Sample]) -> Optional[CompositionalFunction]:
    rules = infer_cell_rules(samples)
    if len(rules) != len(ALL_CELLS):
        return None
    groups = [frozenset(c for c, (b, _) in rules.items() if b == bit) for bit in range(N_BITS)]
    try:
        return CompositionalFunction(tuple(groups), {c: m for c, (_, m) in rules.items()})
    except ValueError:
        return None


def _function_from_rules(prompt: str) -> Optional[CompositionalFunction]:
    cells = parse_rules(prompt)
    if len(cells) != len(ALL_CELLS):
        return None
    groups = []
    for bit in range(N_BITS):
        groups.append(frozenset(c for c, m in cells.items() if set(m) == set(BIT_LETTERS[bit])))
    try:
        return CompositionalFunction(tuple(groups), cells)
    except ValueError:
        return None


def _fence(text: str, lang: str = "python") -> str:
    return f"```{lang}\n{text.rstrip()}\n```\n"


def mock_response(prompt: str, template: PromptTemplate, model: ModelConfig) -> str:
    mode = model.mock_mode
    if mode == "fixed":
        return model.fixed_response
    if mode == "empty":
        return ""
    if mode == "unparseable":
        return "I could not work out a rule that fits these samples."
    if mode == "broken":
        return _fence("def generate(s)\n    return [s for s in\n")
    if template.task_kind == RESULT_GENERATION:
        return _mock_result(prompt, mode)
    if template.task_kind == RULES_PROVIDED:
        f = _function_from_rules(prompt)
        samples = None
    else:
        samples = parse_samples(prompt)
        f = infer_function(samples)
    if f is None:
        return "The samples do not follow a rule I can describe."
    if mode == "sufficient":
        return "Each input position controls four cells independently.\n\n" + _fence(sufficient_program(f))
    from .taskgen import build_dataset

    dataset = Dataset(tuple(samples)) if samples and len(samples) == len(ALL_CELLS) else build_dataset(f)
    if mode == "zero":
        return "Here is a lookup table of the samples.\n\n" + _fence(zero_program(dataset))
    return _fence(constant_program(dataset))


def _mock_result(prompt: str, mode: str) -> str:
    shown = parse_samples(prompt)
    query = parse_query(prompt)
    if not shown or query is None:
        return "No query found."
    if mode == "sufficient":
        rules = infer_cell_rules(shown)
        cells = {}
        for cell in ALL_CELLS:
            if cell in rules:
                bit, mapping = rules[cell]
                cells[cell] = mapping[query.bits[bit]]
            else:
                cells[cell] = shown[0].output[cell]
        grid = Grid.from_cells(cells)
    else:
        grid = shown[0].output
    return _fence(grid.to_text(), "")
