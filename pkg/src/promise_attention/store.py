"""Single-file, line-delimited workspace store.

One record per line, kind first::

    BASIS a,b,c
    KEY <id> <atoms> ctx=<labels> value=<text>
    NODE <id> <text>
    LINK <from> <class> <to> w=<weight> ctx=<labels> [by=<agent>]
    PROMISE <giver> <receiver> +|- {atoms} [| {condition}]
    LAYER <width> <activation> <beta> [embedding]   (followed by ROW lines)
    SERIES / SERIES-SLOT / SERIES-CELL

Records are written back grouped in the order above; lines of unknown kind
are kept verbatim and written last. Saving goes through a temp file and an
atomic rename.
"""
from __future__ import annotations

import contextlib
import fcntl
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .attention import KeyEntry, format_basis, format_key, parse_basis, parse_key
from .chain import LayerSpec, format_layers, parse_layers
from .errors import PromiseAttentionError, StoreError
from .periodic import (PeriodicModel, assemble_series, format_series, parse_series_cell,
                       parse_series_header, parse_series_slot)
from .promises import World, format_promise, parse_promise
from .sst import SSTGraph, format_link, format_node, parse_link, parse_node

log = logging.getLogger(__name__)

KINDS = ("BASIS", "KEY", "NODE", "LINK", "PROMISE", "LAYER", "ROW",
         "SERIES", "SERIES-SLOT", "SERIES-CELL")


@dataclass
class Workspace:
    basis: frozenset | None = None
    keys: dict[str, KeyEntry] = field(default_factory=dict)
    graph: SSTGraph = field(default_factory=SSTGraph)
    world: World = field(default_factory=World)
    layers: list[LayerSpec] = field(default_factory=list)
    series: dict[str, PeriodicModel] = field(default_factory=dict)
    extra: list[str] = field(default_factory=list)

    def __len__(self):
        g = self.graph
        return (int(self.basis is not None) + len(self.keys) + len(g.nodes) + len(g.links)
                + len(self.world.promises) + len(self.layers) + len(self.series) + len(self.extra))


def parse_lines(lines) -> Workspace:
    ws = Workspace()
    links, layer_lines = [], []
    series_hdr: dict[str, tuple[int, PeriodicModel]] = {}
    series_slots: dict[str, dict] = {}
    series_cells: dict[str, dict] = {}

    for ln, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        kind = line.split(maxsplit=1)[0]
        try:
            if kind == "BASIS":
                if ws.basis is not None:
                    raise ValueError("duplicate BASIS record")
                ws.basis = parse_basis(line)
            elif kind == "KEY":
                k = parse_key(line)
                if k.key in ws.keys:
                    raise ValueError(f"duplicate key {k.key!r}")
                ws.keys[k.key] = k
            elif kind == "NODE":
                ws.graph.add_node(*parse_node(line))
            elif kind == "LINK":
                links.append((ln, parse_link(line)))
            elif kind == "PROMISE":
                ws.world.add_promise(parse_promise(line))
            elif kind in ("LAYER", "ROW"):
                layer_lines.append((ln, line))
            elif kind == "SERIES":
                name, model = parse_series_header(line)
                if name in series_hdr:
                    raise ValueError(f"duplicate series {name!r}")
                series_hdr[name] = (ln, model)
            elif kind == "SERIES-SLOT":
                name, tau, s = parse_series_slot(line)
                series_slots.setdefault(name, {})[tau] = s
            elif kind == "SERIES-CELL":
                name, n, tau, vals = parse_series_cell(line)
                series_cells.setdefault(name, {})[(n, tau)] = vals
            else:
                ws.extra.append(line)
        except (ValueError, PromiseAttentionError) as e:
            raise StoreError(str(e), ln) from None

    for ln, kw in links:
        try:
            ws.graph.add_link(kw["source"], kw["target"], kw["cls"], kw["weight"],
                              kw["context"], provenance=kw["provenance"])
        except PromiseAttentionError as e:
            raise StoreError(str(e), ln) from None
    try:
        ws.layers = parse_layers(layer_lines)
    except ValueError as e:
        raise StoreError(str(e)) from None
    for name in set(series_slots) | set(series_cells):
        if name not in series_hdr:
            raise StoreError(f"slot or cell records for undeclared series {name!r}")
    for name, (ln, model) in series_hdr.items():
        try:
            ws.series[name] = assemble_series(model, series_slots.get(name, {}),
                                              series_cells.get(name, {}))
        except ValueError as e:
            raise StoreError(f"series {name!r}: {e}", ln) from None
    return ws


def to_lines(ws: Workspace) -> list[str]:
    out = []
    if ws.basis is not None:
        out.append(format_basis(ws.basis))
    out.extend(format_key(k) for k in ws.keys.values())
    out.extend(format_node(n) for n in ws.graph.nodes.values())
    out.extend(format_link(l) for l in ws.graph.links.values())
    out.extend(format_promise(p) for p in ws.world.promises)
    out.extend(format_layers(ws.layers))
    for name, model in ws.series.items():
        out.extend(format_series(name, model))
    out.extend(ws.extra)
    return out


def load_store(path) -> Workspace:
    path = Path(path)
    if not path.exists():
        log.warning("store %s does not exist; starting empty", path)
        return Workspace()
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh)


def save_store(path, ws: Workspace) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = to_lines(ws)
    text = "".join(line + "\n" for line in lines)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


@contextlib.contextmanager
def locked(directory, exclusive: bool):
    """Advisory lock on the workspace directory: one writer, many readers."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / ".lock", "a+") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
