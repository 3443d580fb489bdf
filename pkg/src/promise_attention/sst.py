"""Semantic-spacetime knowledge graph with gamma(3,4) typed links.

Every link carries one of four classes. NEAR is undirected (orientation 0)
and stored once per unordered pair; the other three are stored forward
(orientation +1) and their inverse (orientation -1) is derived on read.
"""
from __future__ import annotations

import enum
import re
import threading
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DomainError, GraphError


class SSTClass(enum.IntEnum):
    NEAR = 0
    LEADS_TO = 1
    CONTAINS = 2
    EXPRESSES = 3

    @classmethod
    def parse(cls, value) -> "SSTClass":
        if isinstance(value, SSTClass):
            return value
        try:
            if isinstance(value, int):
                return cls(value)
            return cls[str(value).upper()]
        except (KeyError, ValueError):
            raise GraphError(f"invalid link class {value!r}") from None


ORIENTATIONS = (1, 0, -1)
CURATOR = "curator"

_WORD = re.compile(r"\w+")


def fractionate(text: str) -> tuple[str, ...]:
    """Lowercased word 1-grams followed by 2-grams, first occurrence order."""
    words = [w.lower() for w in _WORD.findall(text)]
    grams = words + [f"{a} {b}" for a, b in zip(words, words[1:])]
    return tuple(dict.fromkeys(grams))


@dataclass(frozen=True)
class SSTNode:
    id: str
    text: str

    @property
    def fragments(self) -> tuple[str, ...]:
        return fractionate(self.text)


@dataclass
class SSTLink:
    source: str
    target: str
    cls: SSTClass
    weight: float = 1.0
    context: frozenset = frozenset()
    provenance: str = CURATOR

    @property
    def orientation(self) -> int:
        return 0 if self.cls is SSTClass.NEAR else 1

    @property
    def gamma(self) -> tuple[int, SSTClass]:
        return self.orientation, self.cls

    @property
    def key(self):
        if self.cls is SSTClass.NEAR:
            a, b = sorted((self.source, self.target))
            return a, b, self.cls
        return self.source, self.target, self.cls


@dataclass(frozen=True)
class Arrow:
    """A link as seen from ``source``: orientation -1 means the stored link
    points the other way."""

    source: str
    target: str
    cls: SSTClass
    orientation: int
    link: SSTLink


class SSTGraph:
    def __init__(self):
        self._lock = threading.RLock()
        self.nodes: dict[str, SSTNode] = {}
        self._by_text: dict[str, str] = {}
        self.links: dict[tuple, SSTLink] = {}

    def add_node(self, node_id: str, text: str) -> SSTNode:
        with self._lock:
            old = self.nodes.get(node_id)
            if old is not None:
                if old.text != text:
                    raise GraphError(f"node {node_id!r} already holds different text")
                return old
            if text in self._by_text:
                raise GraphError(f"text already stored as node {self._by_text[text]!r}")
            node = SSTNode(node_id, text)
            self.nodes[node_id] = node
            self._by_text[text] = node_id
            return node

    def node_by_text(self, text: str) -> SSTNode | None:
        nid = self._by_text.get(text)
        return None if nid is None else self.nodes[nid]

    def add_link(self, source: str, target: str, cls, weight: float = 1.0,
                 context: Iterable[str] = (), orientation: int | None = None,
                 provenance: str = CURATOR) -> tuple:
        """Store a typed link and return its key.

        A repeated (source, target, class) keeps one link: the weight is
        replaced and the contexts are merged.
        """
        cls = SSTClass.parse(cls)
        if orientation is None:
            orientation = 0 if cls is SSTClass.NEAR else 1
        if (cls is SSTClass.NEAR) != (orientation == 0) or orientation not in ORIENTATIONS:
            raise GraphError(f"orientation {orientation} is not valid for {cls.name}")
        if not 0.0 <= weight <= 1.0:
            raise GraphError(f"link weight {weight} outside [0, 1]")
        with self._lock:
            for n in (source, target):
                if n not in self.nodes:
                    raise GraphError(f"unknown node {n!r}")
            if orientation == -1:
                source, target = target, source
            link = SSTLink(source, target, cls, float(weight), frozenset(context), provenance)
            old = self.links.get(link.key)
            if old is not None:
                old.weight = float(weight)
                old.context = old.context | link.context
                return old.key
            self.links[link.key] = link
            return link.key

    def arrows(self, node_id: str) -> list[Arrow]:
        out = []
        for link in list(self.links.values()):
            if link.cls is SSTClass.NEAR:
                if node_id == link.source:
                    out.append(Arrow(node_id, link.target, link.cls, 0, link))
                elif node_id == link.target:
                    out.append(Arrow(node_id, link.source, link.cls, 0, link))
            elif link.source == node_id:
                out.append(Arrow(node_id, link.target, link.cls, 1, link))
            elif link.target == node_id:
                out.append(Arrow(node_id, link.source, link.cls, -1, link))
        out.sort(key=lambda a: (a.target, a.cls, -a.orientation))
        return out

    def contexts_of(self, node_id: str) -> frozenset:
        return frozenset().union(*(a.link.context for a in self.arrows(node_id)))

    def snapshot(self) -> "SSTGraph":
        with self._lock:
            g = SSTGraph()
            g.nodes = dict(self.nodes)
            g._by_text = dict(self._by_text)
            g.links = {k: SSTLink(l.source, l.target, l.cls, l.weight, l.context, l.provenance)
                       for k, l in self.links.items()}
            return g

    def adjacency(self, weighted: bool = True) -> tuple[list[str], np.ndarray]:
        """Directed adjacency A (A[i, j] for i -> j); NEAR fills both directions."""
        ids = sorted(self.nodes)
        idx = {n: k for k, n in enumerate(ids)}
        A = np.zeros((len(ids), len(ids)))
        for link in self.links.values():
            w = link.weight if weighted else 1.0
            i, j = idx[link.source], idx[link.target]
            A[i, j] += w
            if link.cls is SSTClass.NEAR:
                A[j, i] += w
        return ids, A


def evc(graph: SSTGraph, tol: float = 1e-10, max_iter: int = 1000) -> dict[str, float]:
    """Eigenvector centrality of the symmetrized weighted adjacency A + A^T.

    Power iteration on ``A + A^T + I``: the unit shift keeps the leading
    eigenvector and breaks the +/- lambda tie that makes bipartite graphs
    oscillate. Scores are scaled so the largest is 1.
    """
    ids, A = graph.snapshot().adjacency()
    if not ids:
        return {}
    S = A + A.T
    if not S.any():
        return dict.fromkeys(ids, 0.0)
    M = S + np.eye(len(ids))
    x = np.ones(len(ids))
    for _ in range(max_iter):
        y = M @ x
        y /= y.max()
        done = np.max(np.abs(y - x)) < tol
        x = y
        if done:
            break
    return {n: float(v) for n, v in zip(ids, x)}


def btc(graph: SSTGraph) -> dict[str, float]:
    """Directed betweenness on the transposed adjacency (hop-count shortest paths).

    Brandes accumulation; unnormalized, endpoints excluded. Dependencies are
    summed as exact fractions and rounded once at the end.
    """
    ids, A = graph.snapshot().adjacency(weighted=False)
    At = A.T
    n = len(ids)
    succ = [np.flatnonzero(At[i]).tolist() for i in range(n)]
    cb = [Fraction(0)] * n
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s], dist[s] = 1, 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [Fraction(0)] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return {n: float(c) for n, c in zip(ids, cb)}


@dataclass(frozen=True)
class TracedPath:
    nodes: tuple[str, ...]
    arrows: tuple[Arrow, ...] = field(repr=False)
    status: str  # "absorbed", "cyclic" or "depth"

    @property
    def cyclic(self):
        return self.status == "cyclic"


def trace_paths(graph: SSTGraph, start: str, classes: Iterable | None = None,
                context: Iterable[str] = (), max_depth: int = 32,
                reverse: bool = False) -> list[TracedPath]:
    """Depth-first enumeration of directed paths from ``start``.

    Follows forward arrows (or inverse arrows with ``reverse``) plus NEAR,
    restricted to ``classes`` and to links whose context meets ``context``
    (an empty query context admits every link). A path ends at an absorbing
    node, at a revisit (cyclic, the revisited node is included) or at
    ``max_depth`` links.
    """
    if max_depth <= 0:
        raise DomainError("depth cap must be positive")
    g = graph.snapshot()
    if start not in g.nodes:
        raise GraphError(f"unknown node {start!r}")
    allowed = None if classes is None else {SSTClass.parse(c) for c in classes}
    ctx = frozenset(context)
    want = (-1 if reverse else 1, 0)

    def qualifying(node):
        return [a for a in g.arrows(node)
                if a.orientation in want
                and (allowed is None or a.cls in allowed)
                and (not ctx or ctx & a.link.context)]

    out = []

    def walk(nodes, arrows):
        here = nodes[-1]
        nxt = qualifying(here)
        if not nxt:
            out.append(TracedPath(tuple(nodes), tuple(arrows), "absorbed"))
            return
        if len(arrows) >= max_depth:
            out.append(TracedPath(tuple(nodes), tuple(arrows), "depth"))
            return
        for a in nxt:
            if a.target in nodes:
                out.append(TracedPath(tuple(nodes) + (a.target,), tuple(arrows) + (a,), "cyclic"))
            else:
                walk(nodes + [a.target], arrows + [a])

    walk([start], [])
    return out


# -- records: "NODE <id> <text>" and "LINK <from> <class> <to> w=<w> ctx=<a,b> [by=<agent>]"

def format_node(node: SSTNode) -> str:
    return f"NODE {node.id} {node.text}"


def parse_node(line: str) -> tuple[str, str]:
    parts = line.rstrip("\n").split(" ", 2)
    if len(parts) != 3 or parts[0] != "NODE" or not parts[1] or not parts[2]:
        raise ValueError("expected NODE <id> <text>")
    return parts[1], parts[2]


def format_link(link: SSTLink) -> str:
    s = (f"LINK {link.source} {link.cls.name} {link.target} w={link.weight!r} "
         f"ctx={','.join(sorted(link.context))}")
    if link.provenance != CURATOR:
        s += f" by={link.provenance.removeprefix('emergent:')}"
    return s


def parse_link(line: str) -> dict:
    tok = line.split()
    if len(tok) not in (6, 7) or tok[0] != "LINK" or not tok[4].startswith("w=") \
            or not tok[5].startswith("ctx="):
        raise ValueError("expected LINK <from> <class> <to> w=<weight> ctx=<labels>")
    prov = CURATOR
    if len(tok) == 7:
        if not tok[6].startswith("by="):
            raise ValueError(f"unexpected field {tok[6]!r}")
        prov = "emergent:" + tok[6][3:]
    return dict(source=tok[1], cls=SSTClass.parse(tok[2]), target=tok[3],
                weight=float(tok[4][2:]),
                context=frozenset(c for c in tok[5][4:].split(",") if c),
                provenance=prov)
