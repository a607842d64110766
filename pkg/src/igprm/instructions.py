"""Instruction synthesis, embeddings, and Gaussian random projection.

Sentences come from per-class template grids (subject x verb x object); the
offline pseudo-embedder hashes tokens into seeded Gaussian vectors so the
whole pipeline runs without network access, while fetch_embedding talks to a
real embedding endpoint with a JSON-lines cache.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .envgen import InstructionClass
from .errors import (
    DimensionMismatch,
    EmptyText,
    InvalidDim,
    MissingCredential,
    NetworkError,
    TemplateExhausted,
)
from .seeding import fnv1a64

EMBED_DIM = 1536
PSEUDO_MODEL_NAME = "pseudo-fnv1a-v1"


@dataclass
class InstructionRecord:
    id: int
    text: str
    cls: InstructionClass
    split_tag: str = "train"  # train | val | test_known | test_unknown
    embedding1536: np.ndarray | None = None
    projected: np.ndarray | None = None


# --- template grids -------------------------------------------------------
#
# Each class expands to lead x phrase x tail combinations. Grids are sized
# well above the paper-scale pools (132 synthetic / 90 indoor) so withheld
# test sentences are easy to reserve.

_SYNTH_LEADS = ["", "Please ", "You should ", "Make sure to ", "Try to ", "Remember to "]

_NARROW_PHRASES = [
    "choose the narrower passages",
    "take the narrow aisles",
    "prefer tight corridors",
    "go through the more confined spaces",
    "pick the slimmer gaps",
    "stick to the tighter openings",
    "opt for the less wide pathways",
    "favor the narrow routes",
]
_WIDE_PHRASES = [
    "choose the wider passages",
    "take the broad aisles",
    "prefer spacious corridors",
    "go through the more open spaces",
    "pick the larger gaps",
    "stick to the wider openings",
    "opt for the roomier pathways",
    "favor the wide routes",
]
_SHORTEST_PHRASES = [
    "find the shortest route",
    "take the quickest path",
    "follow the most direct way",
    "seek the fastest course",
    "pick the shortest possible path",
    "head straight for the goal",
    "minimize the travel distance",
    "take the most efficient route",
]
_SYNTH_TAILS = ["", " on your way", " to the goal", " while moving", " for this trip"]

_INDOOR_LEADS = ["Instruct", "Tell", "Ask", "Guide", "Command"]
_INDOOR_MOVES = [
    "move to the destination",
    "reach the goal",
    "head to the target",
    "travel to the endpoint",
    "proceed to the waypoint",
]
_CAREFUL_MANNERS = ["cautiously", "carefully", "with great care", "avoiding any bumps",
                    "minding small steps", "gently and safely"]
_RAPID_MANNERS = ["quickly", "rapidly", "as fast as possible", "in a hurry",
                  "without delay", "at full speed"]


def _sentence_grid(cls: InstructionClass) -> list[str]:
    if cls is InstructionClass.PREFER_NARROW:
        phrases, leads, tails = _NARROW_PHRASES, _SYNTH_LEADS, _SYNTH_TAILS
    elif cls is InstructionClass.PREFER_WIDE:
        phrases, leads, tails = _WIDE_PHRASES, _SYNTH_LEADS, _SYNTH_TAILS
    elif cls is InstructionClass.SHORTEST:
        phrases, leads, tails = _SHORTEST_PHRASES, _SYNTH_LEADS, _SYNTH_TAILS
    else:
        robot = "wheeled" if cls in (InstructionClass.WHEELED_CAREFUL,
                                     InstructionClass.WHEELED_RAPID) else "legged"
        manners = _CAREFUL_MANNERS if cls in (InstructionClass.WHEELED_CAREFUL,
                                              InstructionClass.LEGGED_CAREFUL) else _RAPID_MANNERS
        out = []
        for lead in _INDOOR_LEADS:
            for move in _INDOOR_MOVES:
                for manner in manners:
                    out.append(f"{lead} the {robot} robot to {move} {manner}.")
        return out

    out = []
    for lead in leads:
        for phrase in phrases:
            for tail in tails:
                body = phrase if lead else phrase[0].upper() + phrase[1:]
                out.append(f"{lead}{body}{tail}.")
    return out


def classes_for_kind(kind: str) -> tuple[InstructionClass, ...]:
    return tuple(c for c in InstructionClass if c.kind == kind)


def generate_instructions(kind: str, count: int) -> list[tuple[str, InstructionClass]]:
    """Expand template grids into ``count`` distinct sentences, classes
    balanced within one. Ordering is deterministic (round-robin by class)."""
    classes = classes_for_kind(kind)
    if not classes:
        raise ValueError(f"unknown kind {kind!r}")
    if count < len(classes):
        raise ValueError(f"count must be at least {len(classes)} for kind {kind!r}")

    grids = {cls: _sentence_grid(cls) for cls in classes}
    for cls, grid in grids.items():
        if len(set(grid)) != len(grid):
            raise TemplateExhausted(f"duplicate sentences in {cls.value} grid")

    per_class = -(-count // len(classes))  # ceil
    for cls, grid in grids.items():
        if per_class > len(grid):
            raise TemplateExhausted(
                f"{cls.value} grid has {len(grid)} sentences, need up to {per_class}")

    out: list[tuple[str, InstructionClass]] = []
    idx = 0
    while len(out) < count:
        for cls in classes:
            if len(out) >= count:
                break
            out.append((grids[cls][idx], cls))
        idx += 1
    return out


# --- offline pseudo-embedder ----------------------------------------------

@lru_cache(maxsize=8192)
def _token_vector(token: str) -> np.ndarray:
    rng = np.random.default_rng(fnv1a64(token))
    vec = rng.standard_normal(EMBED_DIM)
    vec.setflags(write=False)
    return vec


def pseudo_embed(text: str) -> np.ndarray:
    """Deterministic bag-of-token Gaussian embedding, unit L2 norm."""
    tokens = re.findall(r"[a-z0-9]+", text.lower())
    if not tokens:
        raise EmptyText(f"no alphanumeric tokens in {text!r}")
    acc = np.zeros(EMBED_DIM)
    for token in tokens:
        acc += _token_vector(token)
    acc /= len(tokens)
    return acc / np.linalg.norm(acc)


# --- remote endpoint client -----------------------------------------------

@dataclass
class EndpointConfig:
    url: str
    model: str = "text-embedding-3-small"
    credential_env: str = "IGPRM_EMBED_KEY"
    cache_path: str = "embeddings.jsonl"
    timeout: float = 30.0
    max_retries: int = 3


class EmbeddingCache:
    """Append-only JSON-lines store of {"text", "model", "dim", "vector"}."""

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[tuple[str, str], np.ndarray] = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    vec = np.asarray(rec["vector"], dtype=np.float64)
                    self._entries[(rec["text"], rec["model"])] = vec

    def get(self, text: str, model: str) -> np.ndarray | None:
        return self._entries.get((text, model))

    def put(self, text: str, model: str, vector: np.ndarray) -> None:
        rec = {"text": text, "model": model, "dim": len(vector),
               "vector": [float(v) for v in vector]}
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")
        self._entries[(text, model)] = np.asarray(vector, dtype=np.float64)

    def __len__(self) -> int:
        return len(self._entries)


def _extract_vector(payload) -> list:
    if isinstance(payload, list):
        return payload
    if isinstance(payload, dict):
        if "embedding" in payload:
            return payload["embedding"]
        if "data" in payload and payload["data"]:
            return _extract_vector(payload["data"][0])
        if "vector" in payload:
            return payload["vector"]
    raise DimensionMismatch("no embedding vector found in endpoint response")


def fetch_embedding(config: EndpointConfig, text: str,
                    cache: EmbeddingCache | None = None) -> np.ndarray:
    """Return the 1536-D embedding for text, via cache or one HTTP request."""
    cache = cache if cache is not None else EmbeddingCache(config.cache_path)
    hit = cache.get(text, config.model)
    if hit is not None:
        return hit

    credential = os.environ.get(config.credential_env)
    if not credential:
        raise MissingCredential(
            f"environment variable {config.credential_env} is unset or empty")

    import requests

    last_error: Exception | None = None
    for attempt in range(config.max_retries):
        try:
            resp = requests.post(
                config.url,
                json={"input": text, "model": config.model},
                headers={"Authorization": f"Bearer {credential}"},
                timeout=config.timeout,
            )
            resp.raise_for_status()
            vector = _extract_vector(resp.json())
            break
        except DimensionMismatch:
            raise
        except Exception as exc:  # connection errors, HTTP errors, bad JSON
            last_error = exc
            if attempt + 1 < config.max_retries:
                time.sleep(0.5 * 2 ** attempt)
    else:
        raise NetworkError(f"embedding request failed after "
                           f"{config.max_retries} attempts: {last_error}")

    if len(vector) != EMBED_DIM:
        raise DimensionMismatch(
            f"endpoint returned {len(vector)}-D vector, expected {EMBED_DIM}")
    arr = np.asarray(vector, dtype=np.float64)
    cache.put(text, config.model, arr)
    return arr


# --- Gaussian random projection -------------------------------------------

@dataclass(frozen=True)
class ProjectionMatrix:
    k: int
    seed: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)


def make_projection(seed: int, k: int = 128) -> ProjectionMatrix:
    """k x 1536 matrix with i.i.d. N(0, 1/k) entries, reproducible per seed."""
    if not 1 <= k <= EMBED_DIM:
        raise InvalidDim(f"k must be in [1, {EMBED_DIM}], got {k}")
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((k, EMBED_DIM)) / np.sqrt(k)
    return ProjectionMatrix(k=k, seed=seed, rows=rows)


def project(vector: np.ndarray, matrix: ProjectionMatrix) -> np.ndarray:
    vec = np.asarray(vector, dtype=np.float64)
    if vec.shape != (EMBED_DIM,):
        raise DimensionMismatch(f"expected ({EMBED_DIM},) vector, got {vec.shape}")
    return matrix.rows @ vec
