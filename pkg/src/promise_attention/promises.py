"""Agents, signed promises, channel binding, assessment and conditional relay.

A graph link between two autonomous agents needs two promises: an offer
``S -(+b_S)-> R`` and an acceptance ``R -(-b_R)-> S``.  What can actually pass
is bounded by ``b_S & b_R`` (the channel bandwidth).
"""
from __future__ import annotations

import enum
import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BindingError, IncompleteChainError, PolarityError


class Polarity(str, enum.Enum):
    OFFER = "+"
    ACCEPT = "-"


class Verdict(str, enum.Enum):
    KEPT = "kept"
    NOT_KEPT = "not_kept"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Atom:
    """A body element. Identity is the label; the weight rides along."""

    label: str
    weight: float | None = field(default=None, compare=False)

    def __str__(self):
        if self.weight is None:
            return self.label
        return f"{self.label}:{self.weight!r}"


Body = frozenset  # frozenset[Atom]


def body(*items) -> frozenset:
    """Build a body from labels, ``(label, weight)`` pairs or Atoms."""
    if len(items) == 1 and not isinstance(items[0], (str, Atom, tuple)):
        items = tuple(items[0])
    out = []
    for it in items:
        if isinstance(it, Atom):
            out.append(it)
        elif isinstance(it, tuple):
            out.append(Atom(it[0], float(it[1])))
        else:
            out.append(Atom(str(it)))
    return frozenset(out)


def labels(b: Iterable[Atom]) -> frozenset[str]:
    return frozenset(a.label for a in b)


def intersect(a: frozenset, b: frozenset) -> frozenset:
    """Label-wise intersection; surviving atoms keep the smaller defined weight."""
    bw = {x.label: x.weight for x in b}
    out = []
    for x in a:
        if x.label not in bw:
            continue
        ws = [w for w in (x.weight, bw[x.label]) if w is not None]
        out.append(Atom(x.label, min(ws) if ws else None))
    return frozenset(out)


@dataclass
class Agent:
    id: str
    interior: dict = field(default_factory=dict, repr=False)
    sampling_rate: float = 1.0
    # declared rate of change of what this agent promises; 0 means invariant
    change_rate: float = 0.0

    def __post_init__(self):
        if self.sampling_rate < 0 or self.change_rate < 0:
            raise ValueError("rates must be non-negative")


@dataclass(frozen=True)
class Promise:
    giver: str
    receiver: str
    polarity: Polarity
    body: frozenset
    condition: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        object.__setattr__(self, "body", frozenset(self.body))
        if self.condition is not None:
            object.__setattr__(self, "condition", frozenset(self.condition))

    @property
    def is_self_promise(self):
        return self.giver == self.receiver

    @property
    def conditional(self):
        return self.condition is not None


@dataclass(frozen=True)
class Channel:
    plus: Promise
    minus: Promise
    bandwidth: frozenset
    link_type: str = ""
    context: frozenset = frozenset()
    weight: float = 1.0

    @property
    def source(self):
        return self.plus.giver

    @property
    def target(self):
        return self.plus.receiver


@dataclass(frozen=True)
class Assessment:
    assessor: str
    promise: Promise
    verdict: Verdict
    confidence: float


def bind_channel(plus: Promise, minus: Promise, link_type: str = "",
                 context: Iterable[str] = (), weight: float = 1.0) -> Channel:
    if plus.polarity is not Polarity.OFFER or minus.polarity is not Polarity.ACCEPT:
        raise PolarityError(
            f"need (+, -) promises, got ({plus.polarity.value}, {minus.polarity.value})")
    if plus.giver != minus.receiver or plus.receiver != minus.giver:
        raise BindingError(
            f"offer {plus.giver}->{plus.receiver} does not face "
            f"acceptance {minus.giver}->{minus.receiver}")
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"channel weight {weight} outside [0, 1]")
    return Channel(plus, minus, intersect(plus.body, minus.body), link_type,
                   frozenset(context), float(weight))


def nyquist_confidence(sampling_rate: float, source_rate: float) -> float:
    if source_rate <= 0:
        return 1.0
    return min(1.0, sampling_rate / (2.0 * source_rate))


def judge(expected: Iterable[Atom], observed: Iterable[Atom]) -> Verdict:
    exp, obs = labels(expected), labels(observed)
    if not obs:
        return Verdict.UNDETERMINED
    if obs >= exp:
        return Verdict.KEPT
    return Verdict.NOT_KEPT


def assess(assessor: Agent, channel: Channel, observed: Iterable[Atom],
           source_rate: float = 0.0) -> Assessment:
    """The assessor's own verdict on whether the channel's offer was kept.

    Confidence is the Nyquist ratio ``sampling_rate / (2 * source_rate)``
    clamped to [0, 1]; an undetermined verdict carries zero confidence.
    """
    verdict = judge(channel.bandwidth, observed)
    conf = 0.0 if verdict is Verdict.UNDETERMINED else nyquist_confidence(
        assessor.sampling_rate, source_rate)
    return Assessment(assessor.id, channel.plus, verdict, conf)


class World:
    """Registry of agents and promises. Reads are lock-free snapshots;
    mutation is serialized."""

    def __init__(self, agents: Iterable[Agent] = (), promises: Iterable[Promise] = ()):
        self._lock = threading.RLock()
        self.agents: dict[str, Agent] = {}
        self.promises: list[Promise] = []
        self.link_attrs: dict[tuple[str, str], tuple[str, frozenset, float]] = {}
        for a in agents:
            self.add_agent(a)
        for p in promises:
            self.add_promise(p)

    def add_agent(self, agent: Agent) -> Agent:
        with self._lock:
            if agent.id in self.agents:
                raise ValueError(f"duplicate agent id {agent.id!r}")
            self.agents[agent.id] = agent
        return agent

    def agent(self, agent_id: str) -> Agent:
        with self._lock:
            if agent_id not in self.agents:
                self.agents[agent_id] = Agent(agent_id)
            return self.agents[agent_id]

    def add_promise(self, promise: Promise) -> Promise:
        with self._lock:
            self.agent(promise.giver)
            self.agent(promise.receiver)
            if promise not in self.promises:
                self.promises.append(promise)
        return promise

    def annotate(self, source: str, target: str, link_type: str = "",
                 context: Iterable[str] = (), weight: float = 1.0):
        """Attach L(type, context, weight) to the channel source -> target."""
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"channel weight {weight} outside [0, 1]")
        with self._lock:
            self.link_attrs[(source, target)] = (link_type, frozenset(context), float(weight))

    def find(self, giver: str, receiver: str, polarity: Polarity,
             conditional: bool | None = None) -> list[Promise]:
        ps = list(self.promises)
        return [p for p in ps if p.giver == giver and p.receiver == receiver
                and p.polarity is polarity
                and (conditional is None or p.conditional == conditional)]

    def channel(self, source: str, target: str) -> Channel | None:
        """Bind the first matching (+, -) pair for source -> target, if any."""
        plus = self.find(source, target, Polarity.OFFER)
        minus = self.find(target, source, Polarity.ACCEPT)
        if not plus or not minus:
            return None
        link_type, ctx, w = self.link_attrs.get((source, target), ("", frozenset(), 1.0))
        return bind_channel(plus[0], minus[0], link_type, ctx, w)

    def channels(self) -> list[Channel]:
        seen = set()
        out = []
        for p in list(self.promises):
            key = (p.giver, p.receiver)
            if p.polarity is Polarity.OFFER and key not in seen:
                seen.add(key)
                ch = self.channel(*key)
                if ch is not None:
                    out.append(ch)
        return out


def promise_matrix(world: World) -> tuple[list[str], np.ndarray]:
    """Hadamard product of the offer and acceptance matrices.

    Entry (i, j) is the channel weight when i offers to j and j accepts from i,
    otherwise 0. Agents are indexed in sorted id order.
    """
    ids = sorted(world.agents)
    index = {a: k for k, a in enumerate(ids)}
    n = len(ids)
    offer = np.zeros((n, n))
    accept = np.zeros((n, n))
    for p in list(world.promises):
        if p.polarity is Polarity.OFFER:
            offer[index[p.giver], index[p.receiver]] = 1.0
        else:
            # an acceptance by j from i enables the i -> j direction
            accept[index[p.receiver], index[p.giver]] = 1.0
    weights = np.ones((n, n))
    for (s, t), (_, _, w) in world.link_attrs.items():
        if s in index and t in index:
            weights[index[s], index[t]] = w
    return ids, offer * accept * weights


@dataclass(frozen=True)
class Hop:
    giver: str
    receiver: str
    bandwidth: frozenset
    expected: frozenset
    observed: frozenset
    assessment: Assessment


@dataclass(frozen=True)
class RelayResult:
    hops: tuple[Hop, ...]
    delivered: frozenset
    blocked_at: str | None = None

    @property
    def blocked(self):
        return self.blocked_at is not None


def relay_chain(world: World, path: Sequence[str], payload: Iterable,
                observed: Mapping[int, Iterable] | None = None) -> RelayResult:
    """Push ``payload`` along ``path`` through conditional relays.

    Hop ``j`` needs ``path[j] -(+)-> path[j+1]`` and ``path[j+1] -(-)-> path[j]``;
    every intermediary's offer must be conditional on what it receives.
    ``observed`` overrides what the receiver of hop ``j`` samples (default: a
    faithful copy of what the channel can carry). An intermediary forwards
    only when it assesses the upstream promise as kept.
    """
    if len(path) < 2:
        raise IncompleteChainError("a relay needs at least a source and a receiver")
    observed = dict(observed or {})
    channels = []
    for j in range(len(path) - 1):
        s, r = path[j], path[j + 1]
        plus = world.find(s, r, Polarity.OFFER, conditional=True if j > 0 else None)
        minus = world.find(r, s, Polarity.ACCEPT)
        if not plus or not minus:
            missing = "conditional offer" if j > 0 and not plus else (
                "offer" if not plus else "acceptance")
            raise IncompleteChainError(f"hop {s}->{r}: missing {missing}")
        link_type, ctx, w = world.link_attrs.get((s, r), ("", frozenset(), 1.0))
        channels.append(bind_channel(plus[0], minus[0], link_type, ctx, w))

    carried = body(payload)
    hops = []
    for j, ch in enumerate(channels):
        expected = intersect(carried, ch.bandwidth)
        seen = body(observed[j]) if j in observed else expected
        receiver = world.agent(ch.target)
        verdict = judge(expected, seen)
        conf = 0.0 if verdict is Verdict.UNDETERMINED else nyquist_confidence(
            receiver.sampling_rate, world.agent(ch.source).change_rate)
        a = Assessment(receiver.id, ch.plus, verdict, conf)
        hops.append(Hop(ch.source, ch.target, ch.bandwidth, expected, seen, a))
        carried = intersect(seen, expected)
        intermediary = j < len(channels) - 1
        if intermediary and verdict is not Verdict.KEPT:
            return RelayResult(tuple(hops), frozenset(), blocked_at=receiver.id)
    return RelayResult(tuple(hops), carried)


def relay(world: World, source: str, intermediary: str, receiver: str, payload,
          observed: Mapping[int, Iterable] | None = None) -> RelayResult:
    return relay_chain(world, [source, intermediary, receiver], payload, observed)


# -- line format: PROMISE giver receiver +|- {atoms} [| {condition}]

_PROMISE_RE = re.compile(
    r"^PROMISE\s+(?P<giver>\S+)\s+(?P<receiver>\S+)\s+(?P<pol>[+-])\s+"
    r"\{(?P<body>[^{}]*)\}(?:\s*\|\s*\{(?P<cond>[^{}]*)\})?\s*$")


def parse_body(text: str) -> frozenset:
    atoms = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            lab, w = tok.rsplit(":", 1)
            atoms.append(Atom(lab.strip(), float(w)))
        else:
            atoms.append(Atom(tok))
    return frozenset(atoms)


def format_body(b: Iterable[Atom]) -> str:
    return "{" + ",".join(str(a) for a in sorted(b, key=lambda a: a.label)) + "}"


def parse_promise(line: str) -> Promise:
    m = _PROMISE_RE.match(line.strip())
    if not m:
        raise ValueError(f"malformed promise: {line.strip()!r}")
    cond = m.group("cond")
    return Promise(m.group("giver"), m.group("receiver"), Polarity(m.group("pol")),
                   parse_body(m.group("body")),
                   None if cond is None else parse_body(cond))


def format_promise(p: Promise) -> str:
    s = f"PROMISE {p.giver} {p.receiver} {p.polarity.value} {format_body(p.body)}"
    if p.condition is not None:
        s += f" | {format_body(p.condition)}"
    return s
