"""Dynamic agent graph: random regular start, pruning, reconnection, mixing weights.

Edges are stored once (``u < v``) in arrays fixed at construction; pruning and
reconnection only toggle ``alive``. Edges are never invented after t = 0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleGraph, NoSuchEdge, RetryExhausted


@dataclass(frozen=True)
class PruneRecord:
    a: int
    b: int
    t: int
    fold: object


class DynamicGraph:
    def __init__(self, n: int, edges):
        self.n = int(n)
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n):
            raise InfeasibleGraph("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InfeasibleGraph("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        self.eu = np.ascontiguousarray(lo[order])
        self.ev = np.ascontiguousarray(hi[order])
        if len(set(zip(self.eu.tolist(), self.ev.tolist()))) != len(self.eu):
            raise InfeasibleGraph("multi-edges are not allowed")
        self._index = {(int(u), int(v)): i for i, (u, v) in enumerate(zip(self.eu, self.ev))}
        self.alive = np.ones(len(self.eu), dtype=np.uint8)
        self.weights = np.ones(len(self.eu))
        self.pruned_edges: dict[int, PruneRecord] = {}

    @property
    def n_edges(self) -> int:
        return int(self.alive.sum())

    def edge_id(self, a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        try:
            return self._index[key]
        except KeyError:
            raise NoSuchEdge(f"({a}, {b}) was never an edge") from None

    def has_edge(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        i = self._index.get(key)
        return i is not None and bool(self.alive[i])

    def degrees(self, weighted: bool = False) -> np.ndarray:
        w = self.edge_weights() if weighted else self.alive.astype(float)
        return np.bincount(self.eu, w, self.n) + np.bincount(self.ev, w, self.n)

    def edge_weights(self) -> np.ndarray:
        """Kernel weights of the live edges, zero on pruned ones."""
        return self.weights * self.alive

    def adjacency(self, initial: bool = False) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        mask = slice(None) if initial else self.alive.astype(bool)
        A[self.eu[mask], self.ev[mask]] = True
        A[self.ev[mask], self.eu[mask]] = True
        return A

    def weighted_adjacency(self) -> np.ndarray:
        AW = np.zeros((self.n, self.n))
        w = self.edge_weights()
        AW[self.eu, self.ev] = w
        AW[self.ev, self.eu] = w
        return AW

    def neighbors(self, a: int) -> list[int]:
        m = self.alive.astype(bool)
        out = np.concatenate([self.ev[m & (self.eu == a)], self.eu[m & (self.ev == a)]])
        return sorted(out.tolist())

    def apply_prune(self, a: int, b: int, t: int, fold=None) -> "DynamicGraph":
        i = self.edge_id(a, b)
        if not self.alive[i]:
            raise NoSuchEdge(f"({a}, {b}) is already pruned")
        self._prune_index(i, t, fold)
        return self

    def _prune_index(self, i: int, t: int, fold) -> None:
        self.alive[i] = 0
        self.weights[i] = 0.0
        self.pruned_edges[i] = PruneRecord(int(self.eu[i]), int(self.ev[i]), int(t), fold)

    def _restore_index(self, i: int) -> None:
        self.alive[i] = 1
        self.weights[i] = 1.0
        del self.pruned_edges[i]

    def apply_reconnect(self, t: int, predicate: Callable[[int, int], bool]) -> list[int]:
        """Restore every pruned edge whose endpoints satisfy ``predicate``.

        Returns the ids of the restored edges.
        """
        restored = []
        for i in sorted(self.pruned_edges):
            rec = self.pruned_edges[i]
            if predicate(rec.a, rec.b):
                restored.append(i)
        for i in restored:
            self._restore_index(i)
        return restored

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph.__new__(DynamicGraph)
        g.n = self.n
        g.eu, g.ev, g._index = self.eu, self.ev, self._index
        g.alive = self.alive.copy()
        g.weights = self.weights.copy()
        g.pruned_edges = dict(self.pruned_edges)
        return g

    def edge_rows(self):
        """``(a, b, weight)`` for each live edge."""
        w = self.edge_weights()
        return [
            (int(u), int(v), float(x))
            for u, v, x, live in zip(self.eu, self.ev, w, self.alive)
            if live
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["a", "b", "weight"])
            for a, b, w in self.edge_rows():
                out.writerow([a, b, repr(w)])


def generate_random_regular(n: int, r: int, seed=None, max_retries: int = 1000) -> DynamicGraph:
    """Uniform-ish random r-regular simple graph via stub pairing.

    Stubs are shuffled and paired; pairs forming a self-loop or a repeated
    edge go back into the pool and are re-paired. A fresh start is taken
    when the leftover pool cannot be completed.
    """
    if r < 0 or r >= n:
        raise InfeasibleGraph(f"need 0 <= r < n, got r={r}, n={n}")
    if (n * r) % 2:
        raise InfeasibleGraph(f"n * r must be even, got n={n}, r={r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if r == 0:
        return DynamicGraph(n, [])

    for _ in range(max_retries):
        edges = _try_pairing(n, r, rng)
        if edges is not None:
            return DynamicGraph(n, edges)
    raise RetryExhausted(f"no simple {r}-regular graph on {n} nodes after {max_retries} tries")


def _try_pairing(n, r, rng) -> Optional[set]:
    edges: set = set()
    stubs = np.repeat(np.arange(n), r)
    while stubs.size:
        rng.shuffle(stubs)
        leftover = []
        for s1, s2 in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            key = (s1, s2) if s1 < s2 else (s2, s1)
            if s1 != s2 and key not in edges:
                edges.add(key)
            else:
                leftover += [s1, s2]
        if len(leftover) == stubs.size:
            if not _completable(leftover, edges):
                return None
        stubs = np.array(leftover, dtype=np.int64)
    return edges


def _completable(stubs, edges) -> bool:
    nodes = sorted(set(stubs))
    for i, u in enumerate(nodes):
        for v in nodes[i + 1:]:
            if (u, v) not in edges:
                return True
    return False


def metropolis_weights(graph: DynamicGraph, weighted: bool = False) -> np.ndarray:
    """Dense doubly stochastic mixing matrix on the current graph.

    Off-diagonal entries are ``w_ij / (max(D_i, D_j) + 1)`` on live edges, with
    ``w_ij = 1`` (or the kernel weight when ``weighted``) and ``D`` the
    (weighted) degree; the diagonal completes each row to one.
    """
    ew = graph.edge_weights() if weighted else graph.alive.astype(float)
    D = graph.degrees(weighted=weighted)
    w = ew / (np.maximum(D[graph.eu], D[graph.ev]) + 1.0)
    W = np.zeros((graph.n, graph.n))
    W[graph.eu, graph.ev] = w
    W[graph.ev, graph.eu] = w
    W[np.diag_indices(graph.n)] = 1.0 - W.sum(axis=1)
    return W


def cross_class_mask(graph: DynamicGraph, labels) -> np.ndarray:
    labels = np.asarray(labels)
    return labels[graph.eu] != labels[graph.ev]


def wrong_link_fraction(graph: DynamicGraph, labels) -> float:
    """Live cross-class edges relative to the cross-class edges at t = 0."""
    cross = cross_class_mask(graph, labels)
    total = int(cross.sum())
    if total == 0:
        return 0.0
    return float((cross & graph.alive.astype(bool)).sum()) / total
