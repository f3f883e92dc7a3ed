"""Confidence half-widths, interval tests and kernel edge weights."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from scipy.stats import norm

from .errors import DomainError

BOUND_KINDS = ("gaussian", "laplace", "fourth_moment")


class Fold(enum.IntEnum):
    """Statistic on which a pair of intervals is compared."""

    MEAN = 1
    SIGMA = 2
    KURTOSIS = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name) -> "Fold":
        if isinstance(name, Fold):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise DomainError(f"unknown fold {name!r}") from None


ALL_FOLDS = (Fold.MEAN, Fold.SIGMA, Fold.KURTOSIS)


@dataclass(frozen=True)
class Interval:
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width >= 0:
            raise DomainError("half_width must be >= 0")

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width


def intersects(a: Interval, b: Interval) -> bool:
    # closed intervals: touching counts as overlap
    return abs(a.center - b.center) <= a.half_width + b.half_width


@dataclass(frozen=True)
class BoundConfig:
    delta: float = 0.01
    bound_kind: str = "laplace"
    z_delta_kurtosis: float = 3.89
    kurtosis_activation_time: int = 500
    #: kurtosis constant plugged into the fourth-moment bound
    kappa_bound: float = 3.0
    #: overrides (2 (kappa + 3) / (delta / 2)) ** 0.25 in the fourth-moment bound
    fourth_moment_coefficient: Optional[float] = None

    def __post_init__(self):
        _check_delta(self.delta)
        if self.bound_kind not in BOUND_KINDS:
            raise DomainError(f"bound_kind must be one of {BOUND_KINDS}")
        if not self.z_delta_kurtosis > 0:
            raise DomainError("z_delta_kurtosis must be > 0")

    def profile(self, t: float) -> float:
        """Half-width per unit sigma at time ``t`` for the mean/sigma folds."""
        if self.bound_kind == "laplace":
            return laplace_bound(1.0, t, self.delta)
        if self.bound_kind == "gaussian":
            return gaussian_bound(1.0, t, self.delta)
        return fourth_moment_bound(
            1.0, self.kappa_bound, t, self.delta, self.fourth_moment_coefficient
        )


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def _check_t(t):
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")


def z_quantile(delta: float) -> float:
    """Two-sided standard-normal quantile z_{1 - delta/2}."""
    _check_delta(delta)
    return float(norm.ppf(1.0 - delta / 2.0))


def gaussian_bound(sigma: float, t: float, delta: float) -> float:
    _check_t(t)
    return z_quantile(delta) * sigma / math.sqrt(t)


def laplace_bound(sigma: float, t: float, delta: float) -> float:
    _check_delta(delta)
    _check_t(t)
    return sigma * math.sqrt(
        (2.0 / t) * (1.0 + 1.0 / t) * math.log(math.sqrt(t + 1.0) / (delta / 2.0))
    )


def fourth_moment_coefficient(kappa: float, delta: float) -> float:
    _check_delta(delta)
    if kappa < 1:
        raise DomainError("kurtosis is at least 1")
    return (2.0 * (kappa + 3.0) / (delta / 2.0)) ** 0.25


def fourth_moment_bound(sigma, kappa, t, delta, coefficient=None) -> float:
    _check_t(t)
    if coefficient is None:
        coefficient = fourth_moment_coefficient(kappa, delta)
    else:
        _check_delta(delta)
    return sigma * coefficient * ((1.0 + math.log(t) ** 2) / t) ** 0.25


def kurtosis_bound(t: float, z_delta: float) -> float:
    _check_t(t)
    return z_delta * math.sqrt(24.0 / t)


class AgentStats(NamedTuple):
    """What one agent publishes for compatibility checks."""

    mean: float
    sigma: float
    kappa: float = 3.0


def _active(folds, cfg: BoundConfig, t) -> list:
    active = []
    for f in folds:
        f = Fold.parse(f)
        if f is Fold.KURTOSIS and t < cfg.kurtosis_activation_time:
            continue
        active.append(f)
    return active


def fold_intervals(a: AgentStats, b: AgentStats, fold: Fold, cfg: BoundConfig, t):
    if fold is Fold.KURTOSIS:
        w = kurtosis_bound(t, cfg.z_delta_kurtosis)
        return Interval(a.kappa, w), Interval(b.kappa, w)
    p = cfg.profile(t)
    wa, wb = a.sigma * p, b.sigma * p
    if fold is Fold.MEAN:
        return Interval(a.mean, wa), Interval(b.mean, wb)
    # sigma fold reuses the mean-fold widths
    return Interval(a.sigma, wa), Interval(b.sigma, wb)


def multifold_decision(
    a: AgentStats, b: AgentStats, cfg: BoundConfig, t, folds=ALL_FOLDS
) -> Optional[Fold]:
    """Return ``None`` to keep the pair, else the first fold that separates it.

    Folds are checked in the order mean, sigma, kurtosis; the kurtosis fold is
    skipped before ``cfg.kurtosis_activation_time``.
    """
    for fold in sorted(_active(folds, cfg, t)):
        ia, ib = fold_intervals(a, b, fold, cfg, t)
        if not intersects(ia, ib):
            return fold
    return None


def kernel_weight(delta_stat: float, two_beta: float) -> float:
    if not two_beta > 0:
        raise DomainError("two_beta must be > 0")
    return math.exp(-((2.0 * delta_stat / two_beta) ** 4))


def multifold_weight(a: AgentStats, b: AgentStats, cfg: BoundConfig, t, folds=ALL_FOLDS) -> float:
    """Smallest kernel weight over the active folds."""
    w = 1.0
    for fold in _active(folds, cfg, t):
        ia, ib = fold_intervals(a, b, fold, cfg, t)
        two_beta = ia.half_width + ib.half_width
        gap = abs(ia.center - ib.center)
        if two_beta > 0:
            w = min(w, kernel_weight(gap, two_beta))
        elif gap > 0:
            w = 0.0
    return w
