"""Regenerate the shipped test fixtures under tests/fixtures/.

    python3 scripts/make_fixtures.py

Writes ``store.txt`` (a canonical workspace touching every record kind) and
``weekly.csv`` (eight weeks of half-hourly samples with one 6-sigma spike).
Both are deterministic.
"""
from pathlib import Path

import numpy as np

from promise_attention.attention import KeyEntry
from promise_attention.chain import LayerSpec
from promise_attention.periodic import PeriodicModel, update
from promise_attention.promises import Polarity, Promise, body
from promise_attention.store import Workspace, save_store
from promise_attention.synthetic import weekly_series

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
BASIS = [f"f{i:02d}" for i in range(16)]
CONTEXTS = ["home", "work", "travel"]
SPIKE = (5, 100, 6.0)  # (period, slot, size in noise units)


def fixture_workspace(seed: int = 11) -> Workspace:
    rng = np.random.default_rng(seed)
    ws = Workspace(basis=frozenset(BASIS))
    for i in range(20):
        atoms = frozenset(rng.choice(BASIS, size=int(rng.integers(1, 7)), replace=False))
        ctx = frozenset(rng.choice(CONTEXTS, size=int(rng.integers(0, 3)), replace=False))
        ws.keys[f"k{i:02d}"] = KeyEntry(f"k{i:02d}", atoms, f"record {i} payload", ctx)

    g = ws.graph
    for nid, text in [("n1", "server load"), ("n2", "cpu temperature"), ("n3", "fan speed"),
                      ("n4", "data centre"), ("n5", "weekly cycle"), ("n6", "load spike")]:
        g.add_node(nid, text)
    g.add_link("n1", "n2", "LEADS_TO", 0.8, {"work"})
    g.add_link("n2", "n3", "LEADS_TO", 0.9, {"work"})
    g.add_link("n4", "n1", "CONTAINS", 1.0, {"work", "home"})
    g.add_link("n1", "n5", "EXPRESSES", 0.5, {"home"})
    g.add_link("n6", "n1", "NEAR", 0.7, {"work"}, provenance="emergent:monitor")
    g.add_link("n3", "n6", "LEADS_TO", 0.4, {"travel"})

    ws.world.add_promise(Promise("sensor", "relay", Polarity.OFFER, body("temp", "load")))
    ws.world.add_promise(Promise("relay", "sensor", Polarity.ACCEPT, body("load")))
    ws.world.add_promise(Promise("relay", "store", Polarity.OFFER, body("load"), body("load")))
    ws.world.add_promise(Promise("store", "relay", Polarity.ACCEPT, body("load", "temp")))

    ws.layers = [
        LayerSpec(rng.normal(size=(3, 2)).round(3), rng.normal(size=3).round(3), "rectifier"),
        LayerSpec(rng.normal(size=(2, 3)).round(3), [0.0, 0.5], "identity", 2.0, "softmax"),
    ]

    m = PeriodicModel(period=80, slots=8, forgetting=0.8, horizon=6)
    for n in range(4):
        for tau in range(8):
            update(m, n * 80 + tau * 10 + 5, float(round(10 + 3 * np.sin(tau) + rng.normal(0, 0.5), 3)))
    ws.series["demo"] = m
    ws.extra.append("NOTE free-form lines of unknown kind survive a round trip")
    return ws


def write_weekly_csv(path: Path) -> None:
    t, v, _ = weekly_series(periods=8, spikes=[SPIKE], seed=5)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch_seconds,value\n")
        for ti, vi in zip(t, v):
            fh.write(f"{int(ti)},{vi:.6f}\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    save_store(OUT / "store.txt", fixture_workspace())
    write_weekly_csv(OUT / "weekly.csv")
    print(f"wrote {OUT / 'store.txt'} and {OUT / 'weekly.csv'}")


if __name__ == "__main__":
    main()
