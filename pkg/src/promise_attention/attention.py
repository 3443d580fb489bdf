"""Q/K/V projection, context-gated matching and ranked value retrieval.

Two modes share one scoring rule. For homogeneous numeric batches the score is
the scaled dot product ``q . k / sqrt(D)``; for inhomogeneous feature sets it
is ``|K & Q| / sqrt(D)``. On 0/1 indicator rows the two agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chain import embed
from .errors import DimensionError, DomainError


@dataclass
class DataBatch:
    columns: list[str]
    rows: list
    ids: list[str] | None = None

    def __post_init__(self):
        if self.ids is None:
            self.ids = [str(i) for i in range(len(self.rows))]
        if len(self.ids) != len(self.rows):
            raise DimensionError("ids and rows differ in length")

    @property
    def homogeneous(self):
        return all(not isinstance(r, (set, frozenset)) and len(r) == len(self.columns)
                   for r in self.rows)

    def matrix(self) -> np.ndarray:
        if not self.homogeneous:
            raise DimensionError("batch is not homogeneous: every row must fill all columns")
        try:
            X = np.array([[float(c) for c in r] for r in self.rows], dtype=float)
        except (TypeError, ValueError) as e:
            raise DomainError(f"non-numeric cell: {e}") from None
        return X.reshape(len(self.rows), len(self.columns))

    def feature_sets(self) -> list[frozenset]:
        """Each row as the set of feature labels it carries (non-zero cells)."""
        out = []
        for r in self.rows:
            if isinstance(r, (set, frozenset)):
                out.append(frozenset(r))
            else:
                out.append(frozenset(c for c, v in zip(self.columns, r) if v))
        return out


@dataclass
class ProjectionWeights:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q, self.k, self.v = (np.asarray(m, dtype=float) for m in (self.q, self.k, self.v))
        d = self.q.shape[0]
        for m in (self.q, self.k, self.v):
            if m.shape != (d, d):
                raise DimensionError(f"projection must be square {d}x{d}, got {m.shape}")

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), np.eye(d), np.eye(d))

    @property
    def dim(self):
        return self.q.shape[0]


def project(batch: DataBatch | np.ndarray, weights: ProjectionWeights):
    """Right-multiply the data matrix by W_Q, W_K, W_V."""
    X = batch.matrix() if isinstance(batch, DataBatch) else np.asarray(batch, dtype=float)
    if X.ndim != 2 or X.shape[1] != weights.dim:
        raise DimensionError(f"data has shape {X.shape}, weights are {weights.dim}x{weights.dim}")
    return X @ weights.q, X @ weights.k, X @ weights.v


def scaled_scores(Q: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Matrix-mode scores ``Q K^T / sqrt(D)``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if Q.shape[1] != K.shape[1]:
        raise DimensionError("query and key widths differ")
    return Q @ K.T / math.sqrt(Q.shape[1])


@dataclass(frozen=True)
class AttentionQuery:
    accept: frozenset
    context: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "context", frozenset(self.context))

    def admits(self, key_context: Iterable[str]) -> bool:
        """An empty query context admits everything; otherwise require overlap."""
        return not self.context or bool(self.context & frozenset(key_context))


def score_sets(query: AttentionQuery | Iterable[str], key: Iterable[str], D: int,
               key_context: Iterable[str] | None = None) -> float | None:
    """``|key & accept| / sqrt(D)``, or None when the context gate excludes the key."""
    if D <= 0:
        raise DomainError("feature basis size D must be positive")
    if not isinstance(query, AttentionQuery):
        query = AttentionQuery(frozenset(query))
    if key_context is not None and not query.admits(key_context):
        return None
    return len(query.accept & frozenset(key)) / math.sqrt(D)


@dataclass(frozen=True)
class KeyEntry:
    key: str
    atoms: frozenset
    value: str
    context: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        object.__setattr__(self, "context", frozenset(self.context))


@dataclass(frozen=True)
class RankedMatch:
    key: str
    score: float
    value: str
    context_overlap: frozenset
    raw_score: float


@dataclass
class Ranking:
    matches: list[RankedMatch] = field(default_factory=list)
    # root mean square of the numeric values among the matches, if any
    rms: float | None = None

    def __iter__(self):
        return iter(self.matches)

    def __len__(self):
        return len(self.matches)

    def __getitem__(self, i):
        return self.matches[i]

    @property
    def best(self) -> RankedMatch | None:
        return self.matches[0] if self.matches else None


def _numeric(v):
    try:
        x = float(v)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def attend(store: Sequence[KeyEntry], query: AttentionQuery, embedding: str = "softmax",
           beta: float = 1.0, basis: Iterable[str] | None = None) -> Ranking:
    """Rank stored keys against ``query``.

    Keys are context-filtered, scored by overlap, embedded (softmax over the
    surviving keys, or the per-entry inverted form) and sorted by descending
    score with key id as tie-break. The first match is the max-V selection.
    """
    if basis is not None:
        basis = frozenset(basis)
        if not query.accept <= basis:
            raise DomainError(
                f"query atoms outside the feature basis: {sorted(query.accept - basis)}")
        D = len(basis)
    else:
        D = len(query.accept.union(*(k.atoms for k in store))) if store else len(query.accept)
    if not store:
        return Ranking()
    if D == 0:
        raise DomainError("empty feature basis")

    live = [k for k in store if query.admits(k.context)]
    if not live:
        return Ranking()
    raw = np.array([score_sets(query, k.atoms, D) for k in live])
    emb = embed(raw, embedding, beta)
    order = sorted(range(len(live)), key=lambda i: (-raw[i], live[i].key))
    matches = [RankedMatch(live[i].key, float(emb[i]), live[i].value,
                           query.context & live[i].context, float(raw[i])) for i in order]
    nums = [x for x in (_numeric(m.value) for m in matches) if x is not None]
    rms = math.sqrt(sum(x * x for x in nums) / len(nums)) if nums else None
    return Ranking(matches, rms)


# -- store records: "BASIS a,b,c" and "KEY <id> <a,b|-> ctx=<x,y> value=<text>"

def _csv(items) -> str:
    return ",".join(sorted(items))


def _split(text: str) -> frozenset:
    return frozenset(t for t in (s.strip() for s in text.split(",")) if t)


def format_key(k: KeyEntry) -> str:
    return f"KEY {k.key} {_csv(k.atoms) or '-'} ctx={_csv(k.context)} value={k.value}"


def parse_key(line: str) -> KeyEntry:
    parts = line.rstrip("\n").split(" ", 4)
    if len(parts) != 5 or parts[0] != "KEY" or not parts[3].startswith("ctx=") \
            or not parts[4].startswith("value="):
        raise ValueError("expected KEY <id> <atoms> ctx=<labels> value=<text>")
    atoms = frozenset() if parts[2] == "-" else _split(parts[2])
    return KeyEntry(parts[1], atoms, parts[4][len("value="):], _split(parts[3][4:]))


def format_basis(basis: Iterable[str]) -> str:
    return f"BASIS {_csv(basis)}"


def parse_basis(line: str) -> frozenset:
    tok = line.split(maxsplit=1)
    if tok[0] != "BASIS":
        raise ValueError("expected BASIS <labels>")
    return _split(tok[1]) if len(tok) > 1 else frozenset()
