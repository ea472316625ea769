"""Translation and embedding providers.

Two implementations exist per role: a deterministic offline one so the
pipeline and its tests run with no network, and an HTTP client for real
services.  The wire format is ``POST {"texts": [...]}`` returning
``{"outputs": [...]}`` for translation and ``{"vectors": [[...]]}`` for
embeddings.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .errors import TransportError

TOKEN_ENV_VAR = "FORGE_PROVIDER_TOKEN"

DEFAULT_EMBEDDING_DIM = 4096
_BATCH_SIZE = 32
_TIMEOUT_S = 30.0


class Translator(Protocol):
    def translate(self, texts: Sequence[str]) -> list[str]: ...

    def back_translate(self, texts: Sequence[str]) -> list[str]: ...


class Embedder(Protocol):
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class IdentityTranslator:
    """Offline provider: translation is the identity function."""

    def translate(self, texts: Sequence[str]) -> list[str]:
        return list(texts)

    def back_translate(self, texts: Sequence[str]) -> list[str]:
        return list(texts)


class HashedBowEmbedder:
    """Offline embeddings: L2-normalized term frequencies over hashed buckets.

    Token hashing uses SHA-1 rather than ``hash()`` so vectors are stable
    across processes.
    """

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM) -> None:
        if dim <= 0:
            raise ValueError("embedding dimension must be positive")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = []
        for text in texts:
            counts: dict[int, float] = {}
            for token in text.casefold().split():
                bucket = self._bucket(token)
                counts[bucket] = counts.get(bucket, 0.0) + 1.0
            norm = math.sqrt(sum(v * v for v in counts.values()))
            vector = [0.0] * self.dim
            if norm > 0:
                for bucket, value in counts.items():
                    vector[bucket] = value / norm
            vectors.append(vector)
        return vectors


def _post_json(endpoint: str, payload: Mapping, token: str | None) -> dict:
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    request = urllib.request.Request(
        endpoint, data=json.dumps(payload).encode("utf-8"), headers=headers, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=_TIMEOUT_S) as response:
            return json.loads(response.read().decode("utf-8"))
    except (urllib.error.URLError, ValueError, OSError) as exc:
        raise TransportError(f"provider call to {endpoint} failed: {exc}") from exc


class HttpTranslator:
    """HTTP translation service client. Direction is baked into the endpoint;
    ``back_endpoint`` handles the reverse leg of a round trip."""

    def __init__(self, endpoint: str, back_endpoint: str | None = None, token: str | None = None) -> None:
        self.endpoint = endpoint
        self.back_endpoint = back_endpoint or endpoint
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR)

    def _call(self, endpoint: str, texts: Sequence[str]) -> list[str]:
        outputs: list[str] = []
        for i in range(0, len(texts), _BATCH_SIZE):
            batch = list(texts[i : i + _BATCH_SIZE])
            try:
                body = _post_json(endpoint, {"texts": batch}, self.token)
            except TransportError:
                # one retry per batch before giving up
                body = _post_json(endpoint, {"texts": batch}, self.token)
            result = body.get("outputs")
            if not isinstance(result, list) or len(result) != len(batch):
                raise TransportError(f"malformed translation response from {endpoint}")
            outputs.extend(str(t) for t in result)
        return outputs

    def translate(self, texts: Sequence[str]) -> list[str]:
        return self._call(self.endpoint, texts)

    def back_translate(self, texts: Sequence[str]) -> list[str]:
        return self._call(self.back_endpoint, texts)


class HttpEmbedder:
    def __init__(self, endpoint: str, token: str | None = None) -> None:
        self.endpoint = endpoint
        self.token = token if token is not None else os.environ.get(TOKEN_ENV_VAR)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for i in range(0, len(texts), _BATCH_SIZE):
            batch = list(texts[i : i + _BATCH_SIZE])
            try:
                body = _post_json(self.endpoint, {"texts": batch}, self.token)
            except TransportError:
                body = _post_json(self.endpoint, {"texts": batch}, self.token)
            result = body.get("vectors")
            if not isinstance(result, list) or len(result) != len(batch):
                raise TransportError(f"malformed embedding response from {self.endpoint}")
            vectors.extend([float(x) for x in vec] for vec in result)
        return vectors


@dataclass(frozen=True)
class ProviderConfig:
    """Provider selection; offline providers are fully deterministic."""

    translator: Translator
    embedder: Embedder

    @classmethod
    def offline(cls, dim: int = DEFAULT_EMBEDDING_DIM) -> "ProviderConfig":
        return cls(IdentityTranslator(), HashedBowEmbedder(dim))

    @classmethod
    def from_dict(
        cls,
        data: Mapping,
        translate_endpoint: str | None = None,
        embed_endpoint: str | None = None,
    ) -> "ProviderConfig":
        """Build providers from a config mapping, with CLI endpoint overrides."""
        translation = dict(data.get("translation", {"kind": "identity"}))
        embedding = dict(data.get("embedding", {"kind": "hashed_bow"}))
        if translate_endpoint:
            translation = {"kind": "http", "endpoint": translate_endpoint}
        if embed_endpoint:
            embedding = {"kind": "http", "endpoint": embed_endpoint}

        if translation.get("kind") == "http":
            translator: Translator = HttpTranslator(
                translation["endpoint"], translation.get("back_endpoint")
            )
        elif translation.get("kind") == "identity":
            translator = IdentityTranslator()
        else:
            raise ValueError(f"unknown translation provider {translation.get('kind')!r}")

        if embedding.get("kind") == "http":
            embedder: Embedder = HttpEmbedder(embedding["endpoint"])
        elif embedding.get("kind") == "hashed_bow":
            embedder = HashedBowEmbedder(int(embedding.get("dim", DEFAULT_EMBEDDING_DIM)))
        else:
            raise ValueError(f"unknown embedding provider {embedding.get('kind')!r}")
        return cls(translator, embedder)


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine of two vectors; 0.0 when either is a zero vector.

    The denominator is computed as sqrt(|u|^2 * |v|^2) in one step, which is
    exact for integer-count vectors and keeps boundary comparisons stable.
    """
    if len(u) != len(v):
        raise ValueError("vector dimensions differ")
    dot = sum(a * b for a, b in zip(u, v))
    norm_sq = sum(a * a for a in u) * sum(b * b for b in v)
    if norm_sq == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / math.sqrt(norm_sq)))
