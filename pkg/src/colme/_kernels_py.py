"""Pure-numpy per-step kernels. Reference semantics for the compiled module.

Edge conventions: undirected edges ``(eu[i], ev[i])``; directed edges come in
pairs, ``src = eu ++ ev``, ``dst = ev ++ eu``, and ``rev[e]`` is the opposite
direction of ``e``.
"""
import numpy as np

FOLD_KEEP, FOLD_MEAN, FOLD_SIGMA, FOLD_KURTOSIS = 0, 1, 2, 3


def _kernel(gap, two_beta):
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.exp(-((2.0 * gap / two_beta) ** 4))
    zero = two_beta <= 0
    if np.any(zero):
        w = np.where(zero, np.where(gap > 0, 0.0, 1.0), w)
    return w


def check_edges(eu, ev, xbar, sig, kap, hw, kwidth, use_sigma, use_kurt, weighted):
    """Fold code and kernel weight for each undirected edge.

    ``hw`` is the per-agent half-width of the mean and sigma folds, ``kwidth``
    the common kurtosis half-width. Code 0 keeps the edge; otherwise it is the
    first failing fold (1 mean, 2 sigma, 3 kurtosis).
    """
    two_beta = hw[eu] + hw[ev]
    gap = np.abs(xbar[eu] - xbar[ev])
    code = np.where(gap > two_beta, FOLD_MEAN, FOLD_KEEP).astype(np.int8)
    weight = _kernel(gap, two_beta) if weighted else np.ones(len(eu))
    if use_sigma:
        gap = np.abs(sig[eu] - sig[ev])
        code[(code == 0) & (gap > two_beta)] = FOLD_SIGMA
        if weighted:
            weight = np.minimum(weight, _kernel(gap, two_beta))
    if use_kurt:
        gap = np.abs(kap[eu] - kap[ev])
        tk = np.full(len(eu), 2.0 * kwidth)
        code[(code == 0) & (gap > tk)] = FOLD_KURTOSIS
        if weighted:
            weight = np.minimum(weight, _kernel(gap, tk))
    return code, weight


def bcolme_exchange(src, dst, rev, alive, recv_w, msg, local_sum, t, depth):
    """One round of depth-indexed message passing.

    ``msg`` has shape ``(n_directed, depth, 2)`` and holds the messages sent at
    the previous step as (partial sum, count) rows. Incoming rows are scaled by
    the receiving edge weight. Returns ``(new_msg, num, den)`` where the
    collaborative estimate of agent ``a`` is ``num[a] / den[a]``.
    """
    n = local_sum.shape[0]
    new = np.zeros_like(msg)
    if depth == 0:
        return new, local_sum.astype(float).copy(), np.full(n, float(t))
    new[:, 0, 0] = local_sum[src]
    new[:, 0, 1] = t
    if depth > 1:
        inbox = msg[:, : depth - 1, :] * recv_w[:, None, None]
        flat = inbox.reshape(len(dst), -1)
        acc = np.empty((n, flat.shape[1]))
        for c in range(flat.shape[1]):
            acc[:, c] = np.bincount(dst, flat[:, c], n)
        # forward everything the sender received, minus what came from the receiver
        new[:, 1:, :] = (acc[src] - flat[rev]).reshape(len(dst), depth - 1, 2)
    new[alive == 0] = 0.0
    totals = new.sum(axis=1) * recv_w[:, None]
    num = local_sum + np.bincount(dst, totals[:, 0], n)
    den = t + np.bincount(dst, totals[:, 1], n)
    return new, num, den


def consensus_step(eu, ev, ew, X, mu, alpha):
    """``(1 - alpha) X + alpha W mu`` with Metropolis weights built from ``ew``."""
    n = X.shape[0]
    D = np.bincount(eu, ew, n) + np.bincount(ev, ew, n)
    w = ew / (np.maximum(D[eu], D[ev]) + 1.0)
    flow = w * (mu[ev] - mu[eu])
    mixed = mu + np.bincount(eu, flow, n) - np.bincount(ev, flow, n)
    return (1.0 - alpha) * X + alpha * mixed
