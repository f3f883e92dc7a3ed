"""Multi-realization scenario runner and artifact writers."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import kernels
from .algorithms import ColME, Consensus, MessagePassing
from .confidence import Fold, kurtosis_bound
from .config import ScenarioConfig
from .distributions import sample_streams, theoretical_moments
from .errors import InsufficientData
from .graph import DynamicGraph, generate_random_regular
from .moments import MomentArrays, sigma_standard_error
from .separation import separation_table

log = logging.getLogger(__name__)

_GRAPH_STREAM = 2**31 - 1  # seed-sequence slot reserved for the graph


@dataclass
class PruneEvent:
    realization: int
    t: int
    a: int
    b: int
    fold: Fold
    class_a: object
    class_b: object


@dataclass
class RealizationResult:
    mse_local: np.ndarray
    mse_collab: np.ndarray
    mse_oracle: np.ndarray
    wrong_links: np.ndarray
    initial_wrong_links: float
    events: list
    reconnections: int
    snapshots: dict
    graphs: dict


@dataclass
class MetricsSeries:
    """Per-step metrics averaged over agents and realizations.

    ``per_realization`` keeps the ``(realizations, horizon)`` arrays used for
    bootstrap bands.
    """

    config: ScenarioConfig
    t: np.ndarray
    mse_local: np.ndarray
    mse_collab: np.ndarray
    mse_oracle: np.ndarray
    wrong_link_fraction: np.ndarray
    per_realization: dict
    prune_events: list
    reconnections: int
    initial_wrong_links: float
    snapshots: dict = field(default_factory=dict)
    graphs: dict = field(default_factory=dict)

    def fold_counts(self) -> dict:
        counts = {f.label: 0 for f in Fold}
        for ev in self.prune_events:
            counts[ev.fold.label] += 1
        return counts

    def mean_prune_times(self, cross_only: bool = True) -> dict:
        times = {f.label: [] for f in Fold}
        for ev in self.prune_events:
            if cross_only and ev.class_a == ev.class_b:
                continue
            times[ev.fold.label].append(ev.t)
        return {k: (float(np.mean(v)) if v else None) for k, v in times.items()}

    def at(self, t: int) -> dict:
        i = t - 1
        return {
            "mse_local": float(self.mse_local[i]),
            "mse_collab": float(self.mse_collab[i]),
            "mse_oracle": float(self.mse_oracle[i]),
            "wrong_link_fraction": float(self.wrong_link_fraction[i]),
        }


def _collaborative_sigma(X, T_s, graph):
    """Pooled sigma over each agent's t = 0 neighbourhood, frozen at T_s."""
    d = np.diff(X[:, : T_s + 1], axis=1)
    s = (d * d).sum(axis=1)
    n = X.shape[0]
    if graph is None:  # colME: every agent is an initial neighbour
        return np.full(n, math.sqrt(s.sum() / (2.0 * T_s * n)))
    pooled = s + np.bincount(graph.eu, s[graph.ev], n) + np.bincount(graph.ev, s[graph.eu], n)
    deg = np.bincount(graph.eu, minlength=n) + np.bincount(graph.ev, minlength=n)
    return np.sqrt(pooled / (2.0 * T_s * (deg + 1)))


def run_realization(cfg: ScenarioConfig, realization: int, backend=None,
                    graph_checkpoints=()) -> RealizationResult:
    K = kernels.get(backend)
    n, T = cfg.n_agents, cfg.horizon
    bound = cfg.bound
    agent_class = np.asarray(cfg.agent_classes())
    specs = [cfg.classes[c].spec for c in agent_class]
    mu_true = np.array([s.mean for s in specs])
    labels = [c.spec.label for c in cfg.classes]
    class_counts = np.bincount(agent_class, minlength=len(cfg.classes))

    X = sample_streams(specs, T, cfg.master_seed, realization)

    folds = set(cfg.folds)
    use_sigma = Fold.SIGMA in folds
    want_kurt = Fold.KURTOSIS in folds

    graph = None
    colme = mp = cons = None
    if cfg.protocol == "colme":
        colme = ColME(n, backend=backend)
        cross_total = int(sum((agent_class != agent_class[a]).sum() for a in range(n)))
        cross_live = cross_total
    else:
        gseed = np.random.SeedSequence([cfg.master_seed, realization, _GRAPH_STREAM])
        graph = generate_random_regular(n, cfg.r, np.random.default_rng(gseed))
        cross = agent_class[graph.eu] != agent_class[graph.ev]
        cross_total = int(cross.sum())
        if cfg.protocol == "b-colme":
            mp = MessagePassing(graph, cfg.depth, cfg.weighting, backend)
        else:
            cons = Consensus(graph, cfg.T_s, cfg.alpha_K, cfg.weighting, backend)

    frozen_sigma = None
    if cfg.sigma_estimator == "collaborative":
        frozen_sigma = _collaborative_sigma(X, cfg.T_s, graph)

    mom = MomentArrays(n, cfg.difference_stride)
    sentinel = np.full(n, cfg.sigma_sentinel)
    zeros = np.zeros(n)
    mse_local = np.empty(T)
    mse_collab = np.empty(T)
    mse_oracle = np.empty(T)
    wrong = np.empty(T)
    events = []
    reconnections = 0
    snapshots = {}
    graphs = {}
    checkpoints = set(cfg.checkpoints)
    graph_checkpoints = set(graph_checkpoints)

    for t in range(1, T + 1):
        mom.push(X[:, t - 1])
        xbar = mom.local_mean()
        if mom.n_diff:
            sig_local = mom.sigma()
            kap = mom.kurtosis(sig_local)
        else:
            sig_local, kap = zeros, zeros
        if t <= cfg.T_s or not mom.n_diff:
            sig = sentinel
        elif frozen_sigma is not None:
            sig = frozen_sigma
        else:
            sig = sig_local
        hw = sig * bound.profile(t)
        use_kurt = want_kurt and t >= cfg.kurtosis_activation_time
        kw = kurtosis_bound(t, cfg.z_delta)

        if colme is not None:
            agents, heads = colme.candidate_pairs()
            codes, _ = K.check_edges(agents, heads, xbar, sig, kap, hw, kw,
                                     use_sigma, use_kurt, False)
            est, evs = colme.step(xbar, t, codes, agents, heads)
            for a, h, c in evs:
                ca, cb = agent_class[a], agent_class[h]
                events.append(PruneEvent(realization, t, a, h, Fold(c), labels[ca], labels[cb]))
                if ca != cb:
                    cross_live -= 1
            wrong[t - 1] = cross_live / cross_total if cross_total else 0.0
        else:
            codes, weight = K.check_edges(graph.eu, graph.ev, xbar, sig, kap, hw, kw,
                                          use_sigma, use_kurt, cfg.weighting)
            alive = graph.alive
            for i in np.flatnonzero((codes > 0) & (alive == 1)).tolist():
                graph._prune_index(i, t, Fold(int(codes[i])))
                a, b = int(graph.eu[i]), int(graph.ev[i])
                events.append(PruneEvent(realization, t, a, b, Fold(int(codes[i])),
                                         labels[agent_class[a]], labels[agent_class[b]]))
            if cfg.reconnection and graph.pruned_edges:
                for i in np.flatnonzero((codes == 0) & (alive == 0)).tolist():
                    graph._restore_index(i)
                    reconnections += 1
            if cfg.weighting:
                graph.weights = weight * graph.alive
            if mp is not None:
                est = mp.exchange(mom.sum_x, t)
            else:
                est = cons.step(xbar, t)
            wrong[t - 1] = (
                float((cross & (graph.alive == 1)).sum()) / cross_total if cross_total else 0.0
            )
            if t in graph_checkpoints:
                graphs[t] = graph.edge_rows()

        oracle = (np.bincount(agent_class, xbar) / class_counts)[agent_class]
        mse_local[t - 1] = np.mean((xbar - mu_true) ** 2)
        mse_collab[t - 1] = np.mean((est - mu_true) ** 2)
        mse_oracle[t - 1] = np.mean((oracle - mu_true) ** 2)
        if t in checkpoints:
            snapshots[t] = {
                "mean": xbar.copy(),
                "sigma": sig_local.copy(),
                "kurtosis": kap.copy(),
                "class": agent_class.copy(),
            }

    return RealizationResult(
        mse_local, mse_collab, mse_oracle, wrong,
        1.0 if cross_total else 0.0, events, reconnections, snapshots, graphs,
    )


def _run_one(args):
    cfg, realization, backend, graph_checkpoints = args
    return run_realization(cfg, realization, backend, graph_checkpoints)


def run_scenario(cfg: ScenarioConfig, workers: int = 1, backend=None) -> MetricsSeries:
    """Run every realization and aggregate in realization order."""
    cfg.validate()
    jobs = [
        (cfg, r, backend, cfg.checkpoints if r == 0 else ())
        for r in range(cfg.realizations)
    ]
    if workers > 1 and cfg.realizations > 1:
        from multiprocessing import get_context

        with get_context("spawn").Pool(min(workers, cfg.realizations)) as pool:
            results = pool.map(_run_one, jobs)
    else:
        results = [_run_one(j) for j in jobs]
    log.info("%s: %d realizations done", cfg.name, len(results))

    stack = {
        key: np.vstack([getattr(r, key) for r in results])
        for key in ("mse_local", "mse_collab", "mse_oracle", "wrong_links")
    }
    snapshots = {}
    for t in cfg.checkpoints:
        parts = [r.snapshots[t] for r in results if t in r.snapshots]
        if parts:
            snapshots[t] = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return MetricsSeries(
        config=cfg,
        t=np.arange(1, cfg.horizon + 1),
        mse_local=stack["mse_local"].mean(axis=0),
        mse_collab=stack["mse_collab"].mean(axis=0),
        mse_oracle=stack["mse_oracle"].mean(axis=0),
        wrong_link_fraction=stack["wrong_links"].mean(axis=0),
        per_realization=stack,
        prune_events=[ev for r in results for ev in r.events],
        reconnections=sum(r.reconnections for r in results),
        initial_wrong_links=float(np.mean([r.initial_wrong_links for r in results])),
        snapshots=snapshots,
        graphs=results[0].graphs if results else {},
    )


def bootstrap_band(series, level: float = 0.95, n_resamples: int = 1000, seed: int = 0):
    """Percentile bootstrap band of the across-realization mean, per step.

    ``series`` has shape ``(realizations, steps)``.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    R = series.shape[0]
    if R < 2:
        raise InsufficientData("bootstrap needs at least two realizations")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(R, np.full(R, 1.0 / R), size=n_resamples)
    means = counts @ series / R
    alpha = (1.0 - level) / 2.0
    lower = np.quantile(means, alpha, axis=0)
    upper = np.quantile(means, 1.0 - alpha, axis=0)
    centre = series.mean(axis=0)
    # guard the band against rounding in the quantile interpolation
    return np.minimum(lower, centre), np.maximum(upper, centre)


def histogram(values, bins: int = 30, overlay=None):
    """Bin ``values`` and sample an overlay density at bin centres.

    ``overlay`` is a list of ``(weight, mean, sd)`` normal components (or
    ``None``). Returns a list of row dicts.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InsufficientData("histogram needs values")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    width = edges[1] - edges[0]
    centres = (edges[:-1] + edges[1:]) / 2
    dens = np.zeros(bins)
    if overlay:
        for w, m, s in overlay:
            if s > 0:
                dens += w * norm.pdf(centres, m, s)
    rows = []
    for i in range(bins):
        rows.append({
            "left": float(edges[i]),
            "right": float(edges[i + 1]),
            "count": int(counts[i]),
            "density": float(counts[i] / (values.size * width)),
            "overlay_density": float(dens[i]),
        })
    return rows


def theoretical_overlay(cfg: ScenarioConfig, stat: str, t: int):
    """Normal mixture expected for a per-agent statistic at time ``t``."""
    sizes = cfg.class_sizes()
    total = sum(sizes)
    n_diff = max(1, (t - 1) // cfg.difference_stride)
    comps = []
    for entry, size in zip(cfg.classes, sizes):
        m = theoretical_moments(entry.spec)
        w = size / total
        if stat == "mean":
            comps.append((w, m.mean, m.sigma / math.sqrt(t)))
        elif stat == "sigma":
            comps.append((w, m.sigma, sigma_standard_error(m.sigma, m.kappa_d, n_diff)
                          if m.kappa_d > 1 else 0.0))
        elif stat == "kurtosis":
            comps.append((w, m.kappa, math.sqrt(24.0 / t)))
    return comps


# -- writers -----------------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_outputs(metrics: MetricsSeries, out_dir, bins: int = 30) -> Path:
    cfg = metrics.config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    cols = {
        "mse_local": metrics.mse_local,
        "mse_collab": metrics.mse_collab,
        "mse_oracle": metrics.mse_oracle,
    }
    header = ["t", "mse_local", "mse_collab", "mse_oracle"]
    if cfg.realizations >= 2:
        for key in ("mse_collab", "mse_oracle"):
            lo, hi = bootstrap_band(metrics.per_realization[key], seed=cfg.master_seed)
            cols[f"{key}_lo"], cols[f"{key}_hi"] = lo, hi
            header += [f"{key}_lo", f"{key}_hi"]
    header.append("wrong_link_fraction")
    cols["wrong_link_fraction"] = metrics.wrong_link_fraction
    rows = [
        [int(t)] + [float(cols[h][i]) for h in header[1:]]
        for i, t in enumerate(metrics.t)
    ]
    _write_rows(out / "metrics.csv", header, rows)

    _write_rows(
        out / "prune_events.csv",
        ["realization", "t", "a", "b", "fold", "class_a", "class_b"],
        [[e.realization, e.t, e.a, e.b, e.fold.label, e.class_a, e.class_b]
         for e in metrics.prune_events],
    )

    hist_header = ["left", "right", "count", "density", "overlay_density"]
    for t, snap in sorted(metrics.snapshots.items()):
        for stat in ("mean", "sigma", "kurtosis"):
            rows = histogram(snap[stat], bins, theoretical_overlay(cfg, stat, t))
            _write_rows(out / f"histogram_{stat}_{t}.csv", hist_header,
                        [[r[h] for h in hist_header] for r in rows])
    for fold in Fold:
        times = [e.t for e in metrics.prune_events
                 if e.fold is fold and e.class_a != e.class_b]
        if times:
            rows = histogram(times, bins)
            _write_rows(out / f"histogram_separation_{fold.label}.csv", hist_header,
                        [[r[h] for h in hist_header] for r in rows])

    for t, edges in sorted(metrics.graphs.items()):
        _write_rows(out / f"graph_{t}.csv", ["a", "b", "weight"],
                    [[a, b, float(w)] for a, b, w in edges])

    with open(out / "summary.json", "w") as fh:
        json.dump(summary(metrics), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def summary(metrics: MetricsSeries) -> dict:
    cfg = metrics.config
    table = {}
    if len(cfg.classes) >= 2:
        for (i, j), p in separation_table(cfg.class_specs, cfg.delta, cfg.z_delta).items():
            table[f"{cfg.classes[i].spec.label}-{cfg.classes[j].spec.label}"] = {
                "mean": _num(p.t_mean), "sigma": _num(p.t_sigma), "kurtosis": _num(p.t_kurtosis),
                "fastest": p.fastest.label if p.fastest else None,
            }
    return {
        "config": cfg.to_mapping(),
        "final": metrics.at(cfg.horizon),
        "initial_wrong_link_fraction": metrics.initial_wrong_links,
        "prune_events": len(metrics.prune_events),
        "prune_events_by_fold": metrics.fold_counts(),
        "mean_cross_class_prune_time": metrics.mean_prune_times(),
        "reconnections": metrics.reconnections,
        "expected_separation": table,
    }


def _num(x):
    return None if math.isinf(x) else int(x)
