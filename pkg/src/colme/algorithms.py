"""Collaboration protocols: colME, B-colME (message passing), C-colME (consensus).

Every protocol consumes the same per-step snapshot of local statistics and
returns one collaborative estimate per agent. Nothing here reads state that
was written during the current step by another agent.
"""
from __future__ import annotations

from collections import deque

import numpy as np

from . import kernels
from .errors import DimensionMismatch, DomainError, EmptyCandidateList
from .graph import DynamicGraph

PROTOCOLS = ("colme", "b-colme", "c-colme")


def alpha_schedule(t: int, T_s: int, K: float = 10.0) -> float:
    """Consensus mixing weight: 0 up to ``T_s``, then rising towards 1."""
    if t <= T_s:
        return 0.0
    return (t - T_s) / (t - T_s + K)


def ccolme_step(X, mu, W, alpha: float) -> np.ndarray:
    """``(1 - alpha) X + alpha W mu`` for a dense mixing matrix ``W``."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    W = np.asarray(W, dtype=float)
    if X.shape != mu.shape or W.shape != (X.shape[0], X.shape[0]):
        raise DimensionMismatch(f"X {X.shape}, mu {mu.shape}, W {W.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    return (1.0 - alpha) * X + alpha * (W @ mu)


def oracle_estimate(local_means, labels) -> np.ndarray:
    """Average of local means over each agent's true class."""
    local_means = np.asarray(local_means, dtype=float)
    _, idx = np.unique(np.asarray(labels), return_inverse=True)
    sums = np.bincount(idx, local_means)
    counts = np.bincount(idx)
    return (sums / counts)[idx]


def tree_size(r: int, d: int) -> float:
    """Agents within ``d`` hops of a node in an r-regular tree, node included."""
    if d <= 0:
        return 1.0
    if r == 2:
        return 1.0 + 2.0 * d
    return 1.0 + r * ((r - 1) ** d - 1) / (r - 2)


def bcolme_reference_mse(sigma: float, r: int, d: int, t, class_size=None):
    """Plotting aid: sigma^2 / (n_d t) under the tree approximation."""
    n_d = tree_size(r, d)
    if class_size is not None:
        n_d = min(n_d, class_size)
    return sigma**2 / (n_d * np.asarray(t, dtype=float))


def directed_edges(graph: DynamicGraph):
    """``(src, dst, rev)`` for both orientations of every initial edge."""
    E = len(graph.eu)
    src = np.ascontiguousarray(np.concatenate([graph.eu, graph.ev]))
    dst = np.ascontiguousarray(np.concatenate([graph.ev, graph.eu]))
    rev = np.ascontiguousarray(np.concatenate([np.arange(E) + E, np.arange(E)]))
    return src, dst, rev


class MessagePassing:
    """B-colME state: the last message sent along every directed edge.

    Row ``k`` (0-based) of the message ``u -> v`` carries the summed local sums
    and sample counts of agents ``k + 1`` hops from ``v`` through ``u``, never
    routing back through ``v``. Row ``k`` information is ``k`` steps old.
    """

    def __init__(self, graph: DynamicGraph, depth: int, weighted: bool = False, backend=None):
        if depth < 0:
            raise DomainError("depth must be >= 0")
        self.graph = graph
        self.depth = depth
        self.weighted = weighted
        self.kernels = kernels.get(backend)
        self.src, self.dst, self.rev = directed_edges(graph)
        self.msg = np.zeros((len(self.src), depth, 2))

    def _edge_weights(self):
        und = self.graph.edge_weights() if self.weighted else self.graph.alive.astype(float)
        alive = np.ascontiguousarray(np.concatenate([self.graph.alive, self.graph.alive]))
        return alive, np.ascontiguousarray(np.concatenate([und, und]))

    def exchange(self, local_sums, t: int) -> np.ndarray:
        """Send this step's messages and return every agent's estimate."""
        alive, recv_w = self._edge_weights()
        local_sums = np.ascontiguousarray(local_sums, dtype=float)
        self.msg, num, den = self.kernels.bcolme_exchange(
            self.src, self.dst, self.rev, alive, recv_w, self.msg, local_sums, float(t), self.depth
        )
        self.num, self.den = num, den
        return self.estimate(local_sums, t)

    def estimate(self, local_sums, t: int) -> np.ndarray:
        local_sums = np.asarray(local_sums, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            est = self.num / self.den
        bad = ~(self.den > 0)
        if np.any(bad):
            est[bad] = local_sums[bad] / t
        return est

    def message(self, u: int, v: int) -> np.ndarray:
        """Rows ``(partial_sum, count)`` of the last message ``u -> v``."""
        i = self.graph.edge_id(u, v)
        e = i if self.graph.eu[i] == u else i + len(self.graph.eu)
        return self.msg[e].copy()


class Consensus:
    """C-colME state: the previous consensus vector."""

    def __init__(self, graph: DynamicGraph, T_s: int = 0, K: float = 10.0,
                 weighted: bool = False, backend=None):
        self.graph = graph
        self.T_s = T_s
        self.K = K
        self.weighted = weighted
        self.kernels = kernels.get(backend)
        self.mu = None

    def step(self, X, t: int) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        if self.mu is None:
            self.mu = X.copy()
        ew = self.graph.edge_weights() if self.weighted else self.graph.alive.astype(float)
        alpha = alpha_schedule(t, self.T_s, self.K)
        self.mu = self.kernels.consensus_step(
            self.graph.eu, self.graph.ev, np.ascontiguousarray(ew), X, self.mu, alpha
        )
        return self.mu


class ColME:
    """All-to-all colME with restricted round robin.

    Each agent keeps an ordered candidate list (initially every other agent,
    starting from its successor). Per step it queries the list head: on a keep
    it records the head's local mean with count ``t`` and rotates the list; on
    a prune it drops the head and forgets its record.
    """

    def __init__(self, n: int, backend=None):
        self.n = n
        self.kernels = kernels.get(backend)
        self.lists = [deque((a + 1 + i) % n for i in range(n - 1)) for a in range(n)]
        self.rec_mean = np.zeros((n, n))
        self.rec_n = np.zeros((n, n))
        self.tot_sum = np.zeros(n)
        self.tot_n = np.zeros(n)

    def head(self, a: int) -> int:
        if not self.lists[a]:
            raise EmptyCandidateList(f"agent {a} has no candidates left")
        return self.lists[a][0]

    def candidate_pairs(self):
        """``(agents, heads)`` for every agent with a non-empty list."""
        agents = [a for a in range(self.n) if self.lists[a]]
        heads = [self.lists[a][0] for a in agents]
        return np.asarray(agents, dtype=np.int64), np.asarray(heads, dtype=np.int64)

    def step(self, xbar, t: int, codes=None, agents=None, heads=None):
        """Apply one round given the fold codes of the queried pairs.

        ``codes[i]`` is the fold code for ``(agents[i], heads[i])`` (0 keeps).
        Returns ``(estimates, events)`` with events ``(a, head, code)``.
        """
        if agents is None:
            agents, heads = self.candidate_pairs()
        if codes is None:
            codes = np.zeros(len(agents), dtype=np.int8)
        events = []
        for a, h, c in zip(agents.tolist(), heads.tolist(), np.asarray(codes).tolist()):
            old_n = self.rec_n[a, h]
            self.tot_sum[a] -= old_n * self.rec_mean[a, h]
            self.tot_n[a] -= old_n
            if c:
                self.lists[a].popleft()
                self.rec_mean[a, h] = 0.0
                self.rec_n[a, h] = 0.0
                events.append((a, h, c))
            else:
                self.lists[a].rotate(-1)
                self.rec_mean[a, h] = xbar[h]
                self.rec_n[a, h] = t
                self.tot_sum[a] += t * xbar[h]
                self.tot_n[a] += t
        est = (t * np.asarray(xbar) + self.tot_sum) / (t + self.tot_n)
        return est, events

    def candidate_count(self, labels, cross: bool = True) -> int:
        labels = np.asarray(labels)
        total = 0
        for a, lst in enumerate(self.lists):
            if lst:
                idx = np.fromiter(lst, dtype=np.int64, count=len(lst))
                same = labels[idx] == labels[a]
                total += int((~same).sum() if cross else same.sum())
        return total
