"""Completion endpoint client and a deterministic mock for offline runs.

The wire protocol is a JSON-over-HTTP completion endpoint taking
``{model, prompt, max_tokens, temperature, stop}`` and answering
``{"choices": [{"text": ...}]}``. Credentials and the base URL come from
the environment unless set explicitly.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import requests

from .errors import ApiError, ConfigError, TransportError
from .programs import DEFAULT_DIALECT, DialectConfig, anonymize, parse_program
from .structures import build_structure_graph, enumerate_local_structures, ls_size

ENV_API_KEY = "DEMOSELECT_API_KEY"
ENV_BASE_URL = "DEMOSELECT_BASE_URL"

DEFAULT_STOP = ("\n", "source:")


@dataclass
class CompletionRequest:
    prompt: str
    max_tokens: int = 256
    temperature: float = 0.0
    stop: tuple[str, ...] = DEFAULT_STOP

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")


@dataclass
class EndpointConfig:
    base_url: str = ""
    api_key: str = ""
    model: str = ""
    timeout: float = 30.0
    max_retries: int = 5
    backoff_base: float = 0.5
    max_backoff: float = 8.0

    def __post_init__(self):
        if not self.base_url:
            self.base_url = os.environ.get(ENV_BASE_URL, "")
        if not self.api_key:
            self.api_key = os.environ.get(ENV_API_KEY, "")


@dataclass
class CompletionResult:
    text: str
    retries: int = 0


def _apply_stop(text: str, stops: Sequence[str]) -> str:
    cut = len(text)
    for stop in stops:
        idx = text.find(stop)
        if idx >= 0:
            cut = min(cut, idx)
    return text[:cut]


def complete(
    request: CompletionRequest,
    config: EndpointConfig,
    sleeper: Callable[[float], None] = time.sleep,
) -> CompletionResult:
    """Send one completion request, retrying rate limits and network errors
    with exponential backoff."""
    if not config.base_url:
        raise ConfigError("no endpoint base URL configured")
    payload = {
        "prompt": request.prompt,
        "max_tokens": request.max_tokens,
        "temperature": request.temperature,
        "stop": list(request.stop),
    }
    if config.model:
        payload["model"] = config.model
    headers = {}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"

    last_network_error: Exception | None = None
    rate_limited = False
    for attempt in range(config.max_retries + 1):
        try:
            response = requests.post(
                config.base_url, json=payload, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as exc:
            last_network_error = exc
        else:
            last_network_error = None
            if response.status_code == 429:
                rate_limited = True
            elif response.status_code >= 300:
                raise ApiError(response.status_code, response.text)
            else:
                try:
                    text = response.json()["choices"][0]["text"]
                except (ValueError, KeyError, IndexError) as exc:
                    raise ApiError(
                        response.status_code, f"malformed response: {exc}"
                    ) from exc
                return CompletionResult(
                    text=_apply_stop(text, request.stop), retries=attempt
                )
        if attempt < config.max_retries:
            sleeper(min(config.backoff_base * 2**attempt, config.max_backoff))
    if last_network_error is not None:
        raise TransportError(
            f"request failed after {config.max_retries} retries: {last_network_error}"
        )
    if rate_limited:
        raise ApiError(429, "rate limited after retries")
    raise TransportError("request failed after retries")


# --- deterministic mock ----------------------------------------------------


@dataclass
class MockOracleConfig:
    """Knobs for the offline stand-in model.

    The mock "composes" successfully when every small structure of the gold
    program (up to ``compose_threshold_size`` nodes) appears somewhere in the
    demonstrations; otherwise it copies the most overlapping demonstration.
    """

    compose_threshold_size: int = 2
    failure_mode: str = "copy-best-overlap"

    def __post_init__(self):
        if self.compose_threshold_size < 1:
            raise ConfigError("compose_threshold_size must be >= 1")
        if self.failure_mode != "copy-best-overlap":
            raise ConfigError(f"unknown failure mode {self.failure_mode!r}")


def _ls_canonicals(program: str, dialect: DialectConfig) -> set[str]:
    try:
        ast = anonymize(parse_program(program, dialect))
    except Exception:
        return set()
    return {
        ls.canonical
        for ls in enumerate_local_structures(build_structure_graph(ast))
    }


def mock_complete(
    demo_programs: Sequence[str],
    gold_program: str,
    config: MockOracleConfig | None = None,
    dialect: DialectConfig = DEFAULT_DIALECT,
) -> str:
    """Deterministic completion: the gold program when its small structures
    are jointly covered by the demonstrations, else a copy of the single
    most-overlapping demonstration (first in prompt order on ties)."""
    config = config or MockOracleConfig()
    if not demo_programs:
        return ""
    gold_all = _ls_canonicals(gold_program, dialect)
    needed = {c for c in gold_all if ls_size(c) <= config.compose_threshold_size}
    demo_sets = [_ls_canonicals(p, dialect) for p in demo_programs]
    union: set[str] = set().union(*demo_sets)
    if needed <= union:
        return gold_program
    best_idx = 0
    best_overlap = -1
    for idx, demo_set in enumerate(demo_sets):
        overlap = len(demo_set & gold_all)
        if overlap > best_overlap:
            best_overlap = overlap
            best_idx = idx
    return demo_programs[best_idx]
