"""Expected separation times between similarity classes.

Two classes separate on a fold once the sum of their interval half-widths
falls below the gap in the corresponding statistic:

    mean / sigma fold:  (sigma_a + sigma_b) * B(t) = gap     (B: unit Laplace profile)
    kurtosis fold:      2 z sqrt(24 / t)          = gap

The crossing time is solved on the real line and reported rounded down.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from scipy.optimize import brentq

from .confidence import Fold, laplace_bound
from .distributions import ClassSpec
from .errors import DomainError

INFINITY = math.inf
_T_MAX = 1e12


@dataclass(frozen=True)
class SeparationQuery:
    fold: Fold
    delta_stat: float
    sigma_a: float = 0.0
    sigma_b: float = 0.0
    delta: float = 0.01
    z_delta: float = 3.89

    def __post_init__(self):
        object.__setattr__(self, "fold", Fold.parse(self.fold))
        if self.delta_stat < 0:
            raise DomainError("delta_stat must be >= 0")


def separation_time_exact(q: SeparationQuery) -> float:
    """Real-valued crossing time (``inf`` when the statistics coincide)."""
    if q.delta_stat == 0:
        return INFINITY
    if q.fold is Fold.KURTOSIS:
        return 96.0 * q.z_delta**2 / q.delta_stat**2
    scale = q.sigma_a + q.sigma_b
    if scale <= 0:
        return 1.0

    def excess(t):
        return scale * laplace_bound(1.0, t, q.delta) - q.delta_stat

    if excess(1.0) <= 0:
        return 1.0
    if excess(_T_MAX) > 0:
        return INFINITY
    # bracket from the right: walk down by decades until the sign flips
    hi = _T_MAX
    lo = hi / 10
    while lo > 1.0 and excess(lo) <= 0:
        hi, lo = lo, lo / 10
    lo = max(lo, 1.0)
    return brentq(excess, lo, hi, xtol=1e-9, rtol=1e-14)


def separation_time(q: SeparationQuery):
    """Integer separation time, or ``math.inf``."""
    t = separation_time_exact(q)
    if math.isinf(t):
        return INFINITY
    return max(1, int(math.floor(t)))


@dataclass(frozen=True)
class PairSeparation:
    t_mean: float
    t_sigma: float
    t_kurtosis: float

    @property
    def times(self):
        return {Fold.MEAN: self.t_mean, Fold.SIGMA: self.t_sigma, Fold.KURTOSIS: self.t_kurtosis}

    @property
    def fastest(self) -> Optional[Fold]:
        """Fold expected to separate the pair first (None if never)."""
        fold, t = min(self.times.items(), key=lambda kv: (kv[1], kv[0]))
        return None if math.isinf(t) else fold

    @property
    def time(self):
        return min(self.t_mean, self.t_sigma, self.t_kurtosis)


def pair_separation(a: ClassSpec, b: ClassSpec, delta=0.01, z_delta=3.89) -> PairSeparation:
    sa, sb = a.sigma, b.sigma
    t_mean = separation_time(SeparationQuery(Fold.MEAN, abs(a.mean - b.mean), sa, sb, delta))
    t_sigma = separation_time(SeparationQuery(Fold.SIGMA, abs(a.sigma - b.sigma), sa, sb, delta))
    t_kurt = separation_time(
        SeparationQuery(Fold.KURTOSIS, abs(a.kurtosis - b.kurtosis), z_delta=z_delta)
    )
    return PairSeparation(t_mean, t_sigma, t_kurt)


def separation_table(classes, delta=0.01, z_delta=3.89) -> dict:
    """Pairwise table keyed by ``(i, j)`` with ``i < j`` (0-based class index)."""
    if len(classes) < 2:
        raise DomainError("need at least two classes")
    return {
        (i, j): pair_separation(classes[i], classes[j], delta, z_delta)
        for i, j in combinations(range(len(classes)), 2)
    }


def global_separation_time(classes, delta=0.01):
    """Mean-fold separation time driven by the closest pair of means."""
    pairs = list(combinations(classes, 2))
    gap = min(abs(a.mean - b.mean) for a, b in pairs)
    worst = max(a.sigma + b.sigma for a, b in pairs if abs(a.mean - b.mean) == gap)
    return separation_time(SeparationQuery(Fold.MEAN, gap, worst / 2, worst / 2, delta))


def _fmt(t) -> str:
    return "inf" if math.isinf(t) else str(int(t))


def format_table(classes, table: dict) -> str:
    names = [str(c.label if c.label is not None else i + 1) for i, c in enumerate(classes)]
    cells = {}
    for (i, j), p in table.items():
        cell = "(" + ", ".join(_fmt(x) for x in (p.t_mean, p.t_sigma, p.t_kurtosis)) + ")"
        fast = p.fastest
        cell += f" {fast.label}" if fast else " -"
        cells[i, j] = cells[j, i] = cell
    width = max([len(c) for c in cells.values()] + [len(n) for n in names]) + 2
    lines = [" " * 6 + "".join(n.rjust(width) for n in names)]
    for i, name in enumerate(names):
        row = name.ljust(6)
        for j in range(len(names)):
            row += cells.get((i, j), "").rjust(width)
        lines.append(row)
    return "\n".join(lines)


def table_csv(classes, table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_a", "class_b", "t_mean", "t_sigma", "t_kurtosis", "fastest_fold"])
    for (i, j), p in sorted(table.items()):
        la = classes[i].label if classes[i].label is not None else i + 1
        lb = classes[j].label if classes[j].label is not None else j + 1
        fast = p.fastest
        w.writerow([la, lb, _fmt(p.t_mean), _fmt(p.t_sigma), _fmt(p.t_kurtosis),
                    fast.label if fast else ""])
    return buf.getvalue()
