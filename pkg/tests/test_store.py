import logging
import time

import numpy as np
import pytest

from promise_attention.attention import KeyEntry
from promise_attention.errors import StoreError
from promise_attention.promises import Polarity, Promise, body
from promise_attention.store import Workspace, load_store, locked, parse_lines, save_store


def test_fixture_round_trip(fixtures, tmp_path):
    src = fixtures / "store.txt"
    ws = load_store(src)
    assert len(ws.keys) == 20 and len(ws.basis) == 16
    assert len(ws.graph.nodes) == 6 and len(ws.world.promises) == 4
    assert len(ws.layers) == 2 and "demo" in ws.series
    save_store(tmp_path / "out.txt", ws)
    assert (tmp_path / "out.txt").read_bytes() == src.read_bytes()


def test_empty_file(tmp_path):
    (tmp_path / "s.txt").write_text("")
    assert len(load_store(tmp_path / "s.txt")) == 0


def test_missing_file_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        ws = load_store(tmp_path / "nope.txt")
    assert len(ws) == 0 and "does not exist" in caplog.text


@pytest.mark.parametrize("bad,lineno", [
    ("KEY", 2),
    ("LINK n1 SIMILAR n2 w=1.0 ctx=", 2),
    ("PROMISE a b * {x}", 2),
    ("SERIES s period=10 slots=3 c=0.5 horizon=- origin=0 stream=- latest=-1", 2),
])
def test_corrupt_line_names_line(tmp_path, bad, lineno):
    (tmp_path / "s.txt").write_text(f"NODE n1 alpha\n{bad}\nNODE n2 beta\n")
    with pytest.raises(StoreError, match=f"line {lineno}"):
        load_store(tmp_path / "s.txt")


def test_link_to_unknown_node_names_line():
    with pytest.raises(StoreError, match="line 2"):
        parse_lines(["NODE a x", "LINK a LEADS_TO b w=1.0 ctx="])


def test_links_may_precede_nodes():
    ws = parse_lines(["LINK a LEADS_TO b w=1.0 ctx=", "NODE a x", "NODE b y"])
    assert len(ws.graph.links) == 1


def test_unknown_kinds_kept_verbatim(tmp_path):
    lines = ["NODE a x", "FUTURE-KIND  some  spacing", "# a comment"]
    ws = parse_lines(lines)
    assert ws.extra == lines[1:]
    save_store(tmp_path / "s.txt", ws)
    assert (tmp_path / "s.txt").read_text().splitlines() == lines


def test_save_is_atomic_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "s.txt"
    target.write_text("NODE a x\n")
    ws = Workspace()
    ws.extra.append("NOTE new")

    def boom(*_):
        raise OSError("disk full")

    monkeypatch.setattr("os.replace", boom)
    with pytest.raises(OSError):
        save_store(target, ws)
    assert target.read_text() == "NODE a x\n"
    assert [p.name for p in tmp_path.iterdir()] == ["s.txt"]


def test_lock_creates_lock_file(tmp_path):
    with locked(tmp_path, exclusive=True):
        pass
    with locked(tmp_path, exclusive=False):
        assert (tmp_path / ".lock").exists()


def test_thousand_mixed_records(tmp_path):
    rng = np.random.default_rng(4)
    ws = Workspace()
    expected = {"KEY": 0, "NODE": 0, "LINK": 0, "PROMISE": 0}
    for i in range(300):
        ws.keys[f"k{i}"] = KeyEntry(f"k{i}", frozenset({f"a{rng.integers(50)}"}), f"v{i}")
        expected["KEY"] += 1
    for i in range(300):
        ws.graph.add_node(f"n{i}", f"node text {i}")
        expected["NODE"] += 1
    while expected["LINK"] < 250:
        a, b = rng.integers(300, size=2)
        if a != b and (f"n{a}", f"n{b}") not in {k[:2] for k in ws.graph.links}:
            ws.graph.add_link(f"n{a}", f"n{b}", "LEADS_TO", float(rng.uniform(0.1, 1)))
            expected["LINK"] += 1
    for i in range(150):
        ws.world.add_promise(Promise(f"g{i}", f"r{i}", Polarity.OFFER, body(f"x{i}")))
        expected["PROMISE"] += 1
    save_store(tmp_path / "s.txt", ws)

    started = time.perf_counter()
    again = load_store(tmp_path / "s.txt")
    assert time.perf_counter() - started < 2.0
    assert sum(expected.values()) == 1000
    assert len(again.keys) == expected["KEY"] and len(again.graph.nodes) == expected["NODE"]
    assert len(again.graph.links) == expected["LINK"]
    assert len(again.world.promises) == expected["PROMISE"]
    assert again.keys["k123"] == ws.keys["k123"]
