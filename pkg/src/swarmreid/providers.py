"""Remote describer/embedder/summarizer providers.

The wire protocol is one JSON object per request and per response:

    {"v": 1, "op": "describe",  "attributes": {...}}    -> {"text": "..."}
    {"v": 1, "op": "embed",     "tokens": ["...", ...]} -> {"vector": [...]}
    {"v": 1, "op": "summarize", "texts": ["...", ...]}  -> {"text": "..."}

Errors come back as {"error": "..."}. Transports: newline-delimited JSON
over a subprocess pipe, or HTTP POST of the same payloads. The in-process
reference implementations remain the defaults; providers are opt-in realism
plumbing for swapping in an actual captioner or encoder.
"""

from __future__ import annotations

import json
import subprocess
import urllib.request
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import language
from .config import ProviderEndpoint, ProvidersConfig
from .errors import ProviderError
from .perception import PersonAttributes, canonical_description
from .reid import LanguageOps, REFERENCE_OPS

PROTOCOL_VERSION = 1


def handle_request(request: dict) -> dict:
    """Serve one protocol request with the reference implementations."""
    try:
        if not isinstance(request, dict):
            return {"error": "request must be a JSON object"}
        if request.get("v") != PROTOCOL_VERSION:
            return {"error": f"unsupported protocol version {request.get('v')!r}"}
        op = request.get("op")
        if op == "describe":
            attrs = PersonAttributes.from_dict(request["attributes"])
            return {"text": canonical_description(attrs)}
        if op == "embed":
            vec = language.embed([str(t) for t in request["tokens"]])
            return {"vector": [float(x) for x in vec]}
        if op == "summarize":
            return {"text": language.summarize([str(t) for t in request["texts"]])}
        return {"error": f"unknown op {op!r}"}
    except Exception as exc:  # deliberate: stub must answer, not die
        return {"error": f"{type(exc).__name__}: {exc}"}


class SubprocessProvider:
    """Talks the protocol to a child process over stdin/stdout lines."""

    def __init__(self, command: Sequence[str]) -> None:
        self._proc = subprocess.Popen(
            list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1,
        )

    def request(self, payload: dict) -> dict:
        if self._proc.poll() is not None:
            raise ProviderError("provider subprocess has exited")
        self._proc.stdin.write(json.dumps(payload) + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise ProviderError("provider subprocess closed its stdout")
        return _check(json.loads(line))

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)


class HttpProvider:
    """POSTs protocol payloads to an HTTP endpoint."""

    def __init__(self, url: str, timeout: float = 10.0) -> None:
        self._url = url
        self._timeout = timeout

    def request(self, payload: dict) -> dict:
        req = urllib.request.Request(
            self._url,
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req, timeout=self._timeout) as resp:
            return _check(json.loads(resp.read().decode("utf-8")))

    def close(self) -> None:
        pass


def _check(response: dict) -> dict:
    if not isinstance(response, dict):
        raise ProviderError(f"malformed provider response: {response!r}")
    if "error" in response:
        raise ProviderError(f"provider error: {response['error']}")
    return response


def _make_transport(endpoint: ProviderEndpoint):
    if endpoint.transport == "subprocess":
        return SubprocessProvider(endpoint.command)
    if endpoint.transport == "http":
        return HttpProvider(endpoint.url)
    raise ProviderError(f"unknown transport {endpoint.transport!r}")


@dataclass
class ResolvedProviders:
    """Callables the runner wires in; None means use the reference path."""

    describe_fn: object | None
    ops: LanguageOps
    _transports: list

    def close(self) -> None:
        for t in self._transports:
            t.close()

    def __enter__(self) -> "ResolvedProviders":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def resolve_providers(cfg: ProvidersConfig) -> ResolvedProviders:
    """Build the describer callable and LanguageOps for a run."""
    transports = []

    describe_fn = None
    if cfg.describer is not None:
        t = _make_transport(cfg.describer)
        transports.append(t)

        def describe_fn(attributes: PersonAttributes, _t=t) -> str:
            resp = _t.request({
                "v": PROTOCOL_VERSION, "op": "describe",
                "attributes": attributes.to_dict(),
            })
            text = resp.get("text")
            if not isinstance(text, str) or not text:
                raise ProviderError(f"describer returned {text!r}")
            return text

    embed_fn = REFERENCE_OPS.embed
    if cfg.embedder is not None:
        t = _make_transport(cfg.embedder)
        transports.append(t)
        cache: dict[tuple[str, ...], np.ndarray] = {}

        def embed_fn(tokens: Sequence[str], _t=t, _cache=cache) -> np.ndarray:
            key = tuple(tokens)
            hit = _cache.get(key)
            if hit is not None:
                return hit
            resp = _t.request({"v": PROTOCOL_VERSION, "op": "embed", "tokens": list(key)})
            vec = np.asarray(resp.get("vector", ()), dtype=np.float64)
            if vec.shape != (language.EMBEDDING_DIM,):
                raise ProviderError(f"embedder returned shape {vec.shape}")
            norm = float(np.linalg.norm(vec))
            if norm <= 0:
                raise ProviderError("embedder returned a zero vector")
            vec = vec / norm
            vec.flags.writeable = False
            _cache[key] = vec
            return vec

    summarize_fn = REFERENCE_OPS.summarize
    if cfg.summarizer is not None:
        t = _make_transport(cfg.summarizer)
        transports.append(t)

        def summarize_fn(members: Iterable, _t=t) -> str:
            texts = [m if isinstance(m, str) else m.text for m in members]
            if not texts:
                return REFERENCE_OPS.summarize(texts)  # raises EmptyClusterError
            resp = _t.request({"v": PROTOCOL_VERSION, "op": "summarize", "texts": texts})
            text = resp.get("text")
            if not isinstance(text, str) or not text:
                raise ProviderError(f"summarizer returned {text!r}")
            return text

    return ResolvedProviders(
        describe_fn=describe_fn,
        ops=LanguageOps(embed=embed_fn, summarize=summarize_fn),
        _transports=transports,
    )
