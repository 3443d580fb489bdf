"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error. Data goes to stdout,
diagnostics to stderr. Commands that change the store hold the workspace
write lock and only save once everything succeeded.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time

from . import attention, chain, periodic, promises, sst
from .config import load_config
from .errors import PromiseAttentionError, StoreError
from .store import load_store, locked, save_store

log = logging.getLogger("promattn")


def _labels(text):
    return frozenset(t.strip() for t in (text or "").split(",") if t.strip())


def _fmt(x):
    return "inf" if math.isinf(x) else f"{x:.6f}"


# -- ingest / detect

def read_series_csv(path):
    """Yield (t, value) rows from ``epoch_seconds,value`` CSV; an optional
    header line is skipped. Malformed rows raise with their line number."""
    with open(path, newline="", encoding="utf-8") as fh:
        for ln, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            if ln == 1 and [c.strip() for c in row] == ["epoch_seconds", "value"]:
                continue
            if len(row) != 2:
                raise StoreError(f"{path}: expected 2 columns, got {len(row)}", ln)
            try:
                t, v = int(row[0]), float(row[1])
            except ValueError:
                raise StoreError(f"{path}: cannot parse {','.join(row)!r}", ln) from None
            if not math.isfinite(v):
                raise StoreError(f"{path}: non-finite value", ln)
            yield t, v


def cmd_ingest(args, cfg, out):
    rows = list(read_series_csv(args.file))
    with locked(cfg.store_dir, exclusive=True):
        ws = load_store(cfg.store_path)
        model = ws.series.get(args.series)
        period = args.period or cfg.period
        slots = args.slots or cfg.slots
        if model is None:
            model = periodic.PeriodicModel(period, slots, args.forgetting or cfg.forgetting,
                                           args.horizon)
            ws.series[args.series] = model
        elif (args.period and args.period != model.period) or (args.slots and args.slots != model.slots):
            raise PromiseAttentionError(
                f"series {args.series!r} exists with period={model.period} slots={model.slots}")
        for t, v in rows:
            periodic.update(model, t, v)
        save_store(cfg.store_path, ws)
    print(f"ingested {len(rows)} samples into {args.series}", file=sys.stderr)


def cmd_detect(args, cfg, out):
    with locked(cfg.store_dir, exclusive=False):
        ws = load_store(cfg.store_path)
    model = ws.series.get(args.series)
    if model is None:
        raise PromiseAttentionError(f"unknown series {args.series!r}")
    floor = periodic.BANDS.index(args.min_band)
    reports = periodic.detect(model, args.neighbours or cfg.neighbours, args.period_index)
    for r in reports:
        if periodic.BANDS.index(r.band) >= floor:
            print(f"{r.n} {r.tau} {r.value:.6f} {_fmt(r.delta)} {r.band}", file=out)


# -- graph

def cmd_graph(args, cfg, out):
    if args.graph_cmd in ("add-node", "add-link"):
        with locked(cfg.store_dir, exclusive=True):
            ws = load_store(cfg.store_path)
            if args.graph_cmd == "add-node":
                ws.graph.add_node(args.id, " ".join(args.text))
            else:
                prov = sst.CURATOR if args.by is None else f"emergent:{args.by}"
                ws.graph.add_link(args.source, args.target, args.cls, args.weight,
                                  _labels(args.context), provenance=prov)
            save_store(cfg.store_path, ws)
        return
    with locked(cfg.store_dir, exclusive=False):
        ws = load_store(cfg.store_path)
    if args.graph_cmd == "stats":
        e, b = sst.evc(ws.graph), sst.btc(ws.graph)
        for n in sorted(ws.graph.nodes):
            print(f"{n}\t{e[n]:.6f}\t{b[n]:.6f}", file=out)
    elif args.graph_cmd == "paths":
        classes = None if not args.classes else [c for c in _labels(args.classes)]
        paths = sst.trace_paths(ws.graph, args.start, classes, _labels(args.context),
                                args.depth, reverse=args.reverse)
        for p in paths:
            parts = [p.nodes[0]]
            for a, nxt in zip(p.arrows, p.nodes[1:]):
                arrow = {1: f" -{a.cls.name}-> ", 0: f" -{a.cls.name}- ",
                         -1: f" <-{a.cls.name}- "}[a.orientation]
                parts.append(arrow + nxt)
            print("".join(parts) + f"\t{p.status}", file=out)


# -- attend

def graph_keys(graph: sst.SSTGraph):
    return [attention.KeyEntry(n.id, frozenset(n.fragments), n.text, graph.contexts_of(n.id))
            for n in graph.nodes.values()]


def cmd_attend(args, cfg, out):
    with locked(cfg.store_dir, exclusive=False):
        ws = load_store(cfg.store_path)
    store = graph_keys(ws.graph) if args.from_graph else list(ws.keys.values())
    query = attention.AttentionQuery(_labels(args.query), _labels(args.context))
    basis = None if args.from_graph else ws.basis
    ranking = attention.attend(store, query, args.embedding or cfg.embedding,
                               args.beta or cfg.beta, basis)
    shown = ranking.matches if args.top is None else ranking.matches[:args.top]
    for m in shown:
        print(f"{m.score:.6f}\t{m.key}\t{m.value}", file=out)
    if ranking.rms is not None:
        log.info("rms of matched values: %.6f", ranking.rms)


# -- chain

def _gate(text):
    idx, sep, verdict = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("gate must look like <layer>=<verdict>")
    try:
        return int(idx), promises.Verdict(verdict)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def cmd_chain(args, cfg, out):
    if args.layers:
        with open(args.layers, encoding="utf-8") as fh:
            try:
                layers = chain.parse_layers(fh)
            except ValueError as e:
                raise StoreError(f"{args.layers}: {e}") from None
    else:
        with locked(cfg.store_dir, exclusive=False):
            layers = load_store(cfg.store_path).layers
    try:
        x = [float(v) for v in args.input.split(",") if v.strip()]
    except ValueError:
        raise PromiseAttentionError(f"bad input vector {args.input!r}") from None
    gates = [None] * len(layers)
    for idx, verdict in args.gate or ():
        if not 0 <= idx < len(layers):
            raise PromiseAttentionError(f"gate index {idx} outside 0..{len(layers) - 1}")
        gates[idx] = verdict
    res = chain.chain_forward(x, layers, gates)
    print(" ".join(repr(float(v)) for v in res.y), file=out)
    if res.blocked:
        print(f"blocked at layer {res.blocked_at}", file=sys.stderr)


# -- promises

def _observation(text):
    idx, sep, atoms = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("observation must look like <hop>=<a,b>")
    return int(idx), _labels(atoms)


def cmd_promises(args, cfg, out):
    if args.promises_cmd == "add":
        try:
            p = promises.parse_promise(" ".join(args.line))
        except ValueError as e:
            raise PromiseAttentionError(str(e)) from None
        with locked(cfg.store_dir, exclusive=True):
            ws = load_store(cfg.store_path)
            ws.world.add_promise(p)
            save_store(cfg.store_path, ws)
        return
    with locked(cfg.store_dir, exclusive=False):
        ws = load_store(cfg.store_path)
    if args.promises_cmd == "list":
        for p in ws.world.promises:
            print(promises.format_promise(p), file=out)
    elif args.promises_cmd == "matrix":
        ids, M = promises.promise_matrix(ws.world)
        print("\t" + "\t".join(ids), file=out)
        for i, row in zip(ids, M):
            print(i + "\t" + "\t".join(f"{v:g}" for v in row), file=out)
    elif args.promises_cmd == "relay":
        res = promises.relay_chain(ws.world, args.agents, _labels(args.payload),
                                   dict(args.observe or ()))
        for h in res.hops:
            print(f"{h.giver}->{h.receiver}\t{h.assessment.verdict.value}\t"
                  f"{promises.format_body(h.observed)}", file=out)
        status = f"blocked-at-{res.blocked_at}" if res.blocked else "delivered"
        print(f"{status}\t{promises.format_body(res.delivered)}", file=out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="promattn", description=__doc__.splitlines()[0])
    ap.add_argument("--store", help="workspace directory (holds store.txt)")
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ingest", help="fold a CSV series into the periodic model")
    p.add_argument("--series", required=True)
    p.add_argument("--period", type=int)
    p.add_argument("--slots", type=int)
    p.add_argument("--forgetting", type=float)
    p.add_argument("--horizon", type=int, help="periods retained (default: all)")
    p.add_argument("file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("detect", help="classify every stored sample")
    p.add_argument("--series", required=True)
    p.add_argument("--neighbours", type=int)
    p.add_argument("--period-index", type=int, action="append")
    p.add_argument("--min-band", choices=periodic.BANDS, default="normal")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("graph", help="semantic-spacetime graph")
    gsub = p.add_subparsers(dest="graph_cmd", required=True)
    g = gsub.add_parser("add-node")
    g.add_argument("id")
    g.add_argument("text", nargs="+")
    g = gsub.add_parser("add-link")
    g.add_argument("source")
    g.add_argument("cls", metavar="class", choices=[c.name for c in sst.SSTClass])
    g.add_argument("target")
    g.add_argument("--weight", type=float, default=1.0)
    g.add_argument("--context", default="")
    g.add_argument("--by", help="emitting agent for autonomously emergent links")
    gsub.add_parser("stats")
    g = gsub.add_parser("paths")
    g.add_argument("start")
    g.add_argument("--classes", default="")
    g.add_argument("--context", default="")
    g.add_argument("--depth", type=int, default=32)
    g.add_argument("--reverse", action="store_true")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("attend", help="rank stored keys against a query")
    p.add_argument("--query", required=True)
    p.add_argument("--context", default="")
    p.add_argument("--embedding", choices=chain.EMBEDDINGS)
    p.add_argument("--beta", type=float)
    p.add_argument("--top", type=int)
    p.add_argument("--from-graph", action="store_true",
                   help="use graph nodes (text fragments) as the key store")
    p.set_defaults(func=cmd_attend)

    p = sub.add_parser("chain", help="evaluate a layer stack")
    p.add_argument("--layers", help="layer file (default: LAYER records in the store)")
    p.add_argument("--input", required=True)
    p.add_argument("--gate", type=_gate, action="append")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("promises", help="promise world")
    psub = p.add_subparsers(dest="promises_cmd", required=True)
    q = psub.add_parser("add")
    q.add_argument("line", nargs="+")
    psub.add_parser("list")
    psub.add_parser("matrix")
    q = psub.add_parser("relay")
    q.add_argument("agents", nargs="+")
    q.add_argument("--payload", required=True)
    q.add_argument("--observe", type=_observation, action="append")
    p.set_defaults(func=cmd_promises)
    return ap


def run_cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, store_dir=args.store)
        if getattr(args, "beta", None) is not None and not args.beta > 0:
            raise PromiseAttentionError("beta must be positive")
        started = time.perf_counter()
        args.func(args, cfg, out)
        log.info("%s finished in %.3fs", args.cmd, time.perf_counter() - started)
    except (PromiseAttentionError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
