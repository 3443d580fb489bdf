"""Eigenvector and betweenness centrality on a few small graphs, next to a
dense eigensolver for comparison.

    python3 scripts/centrality_check.py
"""
import numpy as np

from promise_attention.sst import SSTGraph, btc, evc

GRAPHS = {
    "star (hub 0, 4 leaves)": (5, [(0, k) for k in range(1, 5)]),
    "directed 5-cycle": (5, [(i, (i + 1) % 5) for i in range(5)]),
    "path a->b->c->d": (4, [(0, 1), (1, 2), (2, 3)]),
    "two dyads": (4, [(0, 1), (2, 3)]),
    "diamond": (4, [(0, 1), (0, 2), (1, 3), (2, 3)]),
}


def main():
    for name, (n, edges) in GRAPHS.items():
        g = SSTGraph()
        for i in range(n):
            g.add_node(str(i), f"node {i}")
        for a, b in edges:
            g.add_link(str(a), str(b), "LEADS_TO")
        ids, A = g.adjacency()
        vals, vecs = np.linalg.eigh(A + A.T)
        dense = np.abs(vecs[:, np.argmax(vals)])
        dense /= dense.max()
        e, b = evc(g), btc(g)
        top = np.sort(vals)[-2:]
        tie = len(vals) > 1 and np.isclose(top[0], top[1])
        print(name + ("  (leading eigenvalue repeated: dense column is an arbitrary pick)" if tie else ""))
        for i, d in zip(ids, dense):
            print(f"  {i}  evc={e[i]:.6f}  dense={d:.6f}  btc={b[i]:.3f}")


if __name__ == "__main__":
    main()
