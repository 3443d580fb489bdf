"""Neural-layer evaluation as a conditional promise pipeline.

Each layer promises ``f(sum_i w_i s_i + r) | s`` downstream; a gate is the
receiving layer's assessment of that promise. A gate that is not kept closes
the pipeline from that layer on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError
from .promises import Assessment, Verdict

ACTIVATIONS = {
    "identity": lambda x: x,
    "logistic": lambda x: 0.5 * (1.0 + np.tanh(0.5 * x)),
    "rectifier": lambda x: np.maximum(x, 0.0),
}
EMBEDDINGS = ("softmax", "inverted")


def softmax(w, beta: float = 1.0) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise DimensionError("softmax of an empty vector")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    z = beta * w
    with np.errstate(over="ignore"):
        e = np.exp(z - z.max())
    return e / e.sum()


def inverted_embedding(w, beta: float = 1.0) -> np.ndarray:
    """Per-entry ``1 - exp(-beta * w)``; no cross-entry normalization.

    Saturates to exactly 1.0 in double precision once ``beta * w`` exceeds ~37.
    """
    w = np.asarray(w, dtype=float)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if np.any(w < 0):
        raise DomainError("inverted embedding needs non-negative weights")
    return -np.expm1(-beta * w)


def embed(w, kind: str, beta: float = 1.0) -> np.ndarray:
    if kind == "softmax":
        return softmax(w, beta)
    if kind == "inverted":
        return inverted_embedding(w, beta)
    raise DomainError(f"unknown embedding {kind!r}")


def convex_update(w, dw, c: float) -> np.ndarray:
    """``c * w + (1 - c) * dw``, written so that ``w == dw`` is an exact fixed point."""
    if not 0.0 < c < 1.0:
        raise DomainError(f"forgetting factor must lie in (0, 1), got {c}")
    w = np.asarray(w, dtype=float)
    dw = np.asarray(dw, dtype=float)
    if w.shape != dw.shape:
        raise DimensionError(f"shape mismatch {w.shape} vs {dw.shape}")
    return dw + c * (w - dw)


@dataclass
class LayerSpec:
    """One layer: ``weights`` is (units x fan_in), ``bias`` has one entry per unit."""

    weights: np.ndarray
    bias: np.ndarray | float = 0.0
    activation: str = "identity"
    beta: float = 1.0
    embedding: str | None = None

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.bias = np.broadcast_to(
            np.asarray(self.bias, dtype=float), (self.weights.shape[0],)).copy()
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.embedding is not None and self.embedding not in EMBEDDINGS:
            raise DomainError(f"unknown embedding {self.embedding!r}")
        if not self.beta > 0:
            raise DomainError("beta must be positive")

    @property
    def width(self):
        return self.weights.shape[0]

    @property
    def fan_in(self):
        return self.weights.shape[1]


def layer_eval(inputs, layer: LayerSpec) -> np.ndarray:
    s = np.asarray(inputs, dtype=float)
    if s.shape != (layer.fan_in,):
        raise DimensionError(f"layer expects {layer.fan_in} inputs, got {s.shape}")
    y = ACTIVATIONS[layer.activation](layer.weights @ s + layer.bias)
    if layer.embedding is not None:
        y = embed(y, layer.embedding, layer.beta)
    return y


@dataclass
class ChainResult:
    outputs: list[np.ndarray]
    gates: list[Verdict]
    y: np.ndarray
    blocked_at: int | None = None

    @property
    def blocked(self):
        return self.blocked_at is not None


def _verdict(g) -> Verdict:
    if g is None:
        return Verdict.KEPT
    if isinstance(g, Assessment):
        return g.verdict
    return Verdict(g)


def chain_forward(inputs, layers: Sequence[LayerSpec],
                  gates: Iterable | None = None) -> ChainResult:
    """Propagate through ``layers``; ``gates[l]`` guards the input of layer ``l``.

    Gates may be Assessments, Verdicts or None (kept). Anything other than
    kept blocks: that layer and everything downstream emit zeros.
    """
    x = np.asarray(inputs, dtype=float)
    gates = list(gates) if gates is not None else [None] * len(layers)
    if len(gates) != len(layers):
        raise DimensionError(f"{len(layers)} layers but {len(gates)} gates")
    verdicts = [_verdict(g) for g in gates]

    width = x.shape[0]
    for layer in layers:
        if layer.fan_in != width:
            raise DimensionError(f"layer fan-in {layer.fan_in} does not match width {width}")
        width = layer.width

    outputs = []
    blocked_at = None
    for idx, (layer, v) in enumerate(zip(layers, verdicts)):
        if blocked_at is None and v is not Verdict.KEPT:
            blocked_at = idx
        if blocked_at is not None:
            x = np.zeros(layer.width)
        else:
            x = layer_eval(x, layer)
        outputs.append(x)
    return ChainResult(outputs, verdicts, x, blocked_at)


# -- layer stack file: "LAYER <width> <activation> <beta> [embedding]" then
#    <width> lines "ROW w_1 ... w_k bias=<r>"

def format_layers(layers: Sequence[LayerSpec]) -> list[str]:
    lines = []
    for L in layers:
        head = f"LAYER {L.width} {L.activation} {L.beta!r}"
        if L.embedding:
            head += f" {L.embedding}"
        lines.append(head)
        for row, r in zip(L.weights, L.bias):
            lines.append("ROW " + " ".join(repr(float(v)) for v in row) + f" bias={float(r)!r}")
    return lines


def parse_layers(lines: Iterable[str], start: int = 1) -> list[LayerSpec]:
    """Parse LAYER/ROW lines; raises ValueError naming the line number.

    ``lines`` may also hold ``(lineno, text)`` pairs when the caller tracks
    its own numbering.
    """
    layers = []
    pending = None  # (width, activation, beta, embedding, rows, biases, lineno)

    def close():
        width, act, beta, emb, rows, biases, ln = pending
        if len(rows) != width:
            raise ValueError(f"line {ln}: LAYER declares {width} rows, found {len(rows)}")
        try:
            layers.append(LayerSpec(np.array(rows), np.array(biases), act, beta, emb))
        except ValueError as e:
            raise ValueError(f"line {ln}: {e}") from None

    for ln, raw in enumerate(lines, start):
        if isinstance(raw, tuple):
            ln, raw = raw
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if tok[0] == "LAYER":
                if pending:
                    close()
                if len(tok) not in (4, 5):
                    raise ValueError("expected LAYER <width> <activation> <beta> [embedding]")
                pending = (int(tok[1]), tok[2], float(tok[3]),
                           tok[4] if len(tok) == 5 else None, [], [], ln)
            elif tok[0] == "ROW":
                if pending is None:
                    raise ValueError("ROW before any LAYER")
                bias = 0.0
                vals = []
                for t in tok[1:]:
                    if t.startswith("bias="):
                        bias = float(t[5:])
                    else:
                        vals.append(float(t))
                if pending[4] and len(vals) != len(pending[4][0]):
                    raise ValueError("ragged weight rows")
                pending[4].append(vals)
                pending[5].append(bias)
            else:
                raise ValueError(f"unexpected record {tok[0]!r}")
        except ValueError as e:
            if str(e).startswith("line "):
                raise
            raise ValueError(f"line {ln}: {e}") from None
    if pending:
        close()
    return layers


__all__ = [
    "ChainResult", "LayerSpec", "chain_forward", "convex_update",
    "embed", "format_layers", "inverted_embedding", "layer_eval", "parse_layers", "softmax",
]

