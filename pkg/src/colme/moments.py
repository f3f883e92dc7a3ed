"""Mean-invariant online estimation of sigma and kurtosis.

Both estimators work on successive differences d(t) = x(t) - x(t-1), which
have zero mean whatever the agent's mean is. For i.i.d. data
E{d^2} = 2 sigma^2, so

    sigma_hat^2 = sum(d^2) / (2 n)
    kappa_hat   = sum(d^4) / (2 n sigma_hat^4) - 3

with ``n`` the number of accumulated differences.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InsufficientSamples, UndefinedEstimate

#: sigma used before an estimate exists; large enough that all intervals overlap
SIGMA_SENTINEL = 10.0


@dataclass
class MomentAccumulator:
    """Running sums for one agent.

    ``stride=2`` only forms the non-overlapping differences
    (x2 - x1), (x4 - x3), ...; the default uses every step.
    """

    t: int = 0
    last_x: float = 0.0
    sum_x: float = 0.0
    sum_d2: float = 0.0
    sum_d4: float = 0.0
    n_diff: int = 0
    stride: int = 1
    sigma_hat: Optional[float] = None
    kappa_hat: Optional[float] = None

    def push(self, x: float) -> "MomentAccumulator":
        x = float(x)
        self.t += 1
        self.sum_x += x
        if self.t >= 2 and self.t % self.stride == 0:
            d2 = (x - self.last_x) ** 2
            self.sum_d2 += d2
            self.sum_d4 += d2 * d2
            self.n_diff += 1
        self.last_x = x
        return self

    def extend(self, xs) -> "MomentAccumulator":
        for x in xs:
            self.push(x)
        return self

    @property
    def local_mean(self) -> float:
        if self.t == 0:
            raise UndefinedEstimate("no samples yet")
        return self.sum_x / self.t

    def refresh(self) -> "MomentAccumulator":
        """Recompute the cached ``sigma_hat`` / ``kappa_hat`` where defined."""
        self.sigma_hat = sigma_local(self) if self.n_diff else None
        try:
            self.kappa_hat = kurtosis_estimate(self, self.sigma_hat)
        except UndefinedEstimate:
            self.kappa_hat = None
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MomentAccumulator":
        return cls(**data)


def sigma_local(acc: MomentAccumulator) -> float:
    if acc.n_diff < 1:
        raise UndefinedEstimate("sigma needs at least one difference")
    return math.sqrt(acc.sum_d2 / (2.0 * acc.n_diff))


def sigma_collaborative(streams, T_s: int) -> float:
    """Pooled sigma over an agent and its initial neighbours.

    ``streams`` holds one sample sequence per participating agent (the agent
    itself included). The first ``T_s + 1`` samples of each contribute
    ``T_s`` differences.
    """
    if T_s < 1:
        raise DomainError("T_s must be >= 1")
    total = 0.0
    count = 0
    for s in streams:
        s = np.asarray(s, dtype=float)
        if s.shape[0] < T_s + 1:
            raise InsufficientSamples(
                f"stream has {s.shape[0]} samples, need T_s + 1 = {T_s + 1}"
            )
        d = np.diff(s[: T_s + 1])
        total += float(np.dot(d, d))
        count += 1
    if count == 0:
        raise InsufficientSamples("no streams")
    return math.sqrt(total / (2.0 * T_s * count))


def kurtosis_estimate(acc: MomentAccumulator, sigma_hat: float) -> float:
    s4 = sigma_hat**4 if sigma_hat else 0.0
    if acc.n_diff < 1 or not s4 > 0:  # s4 can underflow for tiny sigma_hat
        raise UndefinedEstimate("kurtosis needs a difference and sigma_hat > 0")
    return acc.sum_d4 / (2.0 * acc.n_diff * s4) - 3.0


def sigma_standard_error(sigma: float, kappa_d: float, t: float) -> float:
    """Delta-method standard error of sigma_hat after ``t`` differences."""
    if kappa_d <= 1:
        raise DomainError(f"kappa_d must exceed 1, got {kappa_d}")
    if t < 1:
        raise DomainError("t must be >= 1")
    return math.sqrt(kappa_d - 1.0) / 2.0 * sigma / math.sqrt(t)


def kurtosis_variance_fisher(t: float) -> float:
    if t <= 3:
        raise DomainError("Fisher kurtosis variance needs t > 3")
    return 24.0 * t * (t - 1) ** 2 / ((t - 3) * (t - 2) * (t + 3) * (t + 5))


def kurtosis_variance_approx(t: float) -> float:
    if t <= 0:
        raise DomainError("t must be positive")
    return 24.0 / t


class MomentArrays:
    """Vectorised accumulator for a population of agents (one slot each)."""

    def __init__(self, n: int, stride: int = 1):
        self.n = n
        self.stride = stride
        self.t = 0
        self.n_diff = 0
        self.last_x = np.zeros(n)
        self.sum_x = np.zeros(n)
        self.sum_d2 = np.zeros(n)
        self.sum_d4 = np.zeros(n)

    def push(self, x: np.ndarray) -> None:
        self.t += 1
        self.sum_x += x
        if self.t >= 2 and self.t % self.stride == 0:
            d2 = x - self.last_x
            d2 *= d2
            self.sum_d2 += d2
            d2 *= d2
            self.sum_d4 += d2
            self.n_diff += 1
        self.last_x = x.copy()

    def local_mean(self) -> np.ndarray:
        return self.sum_x / self.t

    def sigma(self) -> np.ndarray:
        if self.n_diff < 1:
            raise UndefinedEstimate("sigma needs at least one difference")
        return np.sqrt(self.sum_d2 / (2.0 * self.n_diff))

    def kurtosis(self, sigma: Optional[np.ndarray] = None) -> np.ndarray:
        """kappa_hat per agent; 0 where sigma_hat vanishes (constant data)."""
        if sigma is None:
            sigma = self.sigma()
        s4 = sigma**4
        out = np.zeros(self.n)
        ok = s4 > 0
        out[ok] = self.sum_d4[ok] / (2.0 * self.n_diff * s4[ok]) - 3.0
        return out
