"""Data families used by the agents and their exact moments.

Three sub-Gaussian families are supported, all parametrised by mean and
standard deviation:

``gaussian``
    Normal(mean, sigma).
``rademacher``
    mean +/- sigma with equal probability (scaled symmetric Bernoulli).
``uniform_sum:<k>``
    mean plus the sum of ``k`` i.i.d. uniforms on [-a, a] with
    a = sigma * sqrt(3 / k), so the total variance is sigma**2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

FAMILIES = ("gaussian", "rademacher", "uniform_sum")


def parse_family(name: str) -> tuple[str, int]:
    """Split a serialized family name into ``(family, k)``.

    >>> parse_family("uniform_sum:4")
    ('uniform_sum', 4)
    """
    name = name.strip().lower()
    if name.startswith("uniform_sum"):
        _, sep, k = name.partition(":")
        if not sep:
            raise DomainError("uniform_sum needs a term count, e.g. 'uniform_sum:2'")
        try:
            k = int(k)
        except ValueError:
            raise DomainError(f"bad uniform_sum term count {k!r}") from None
        if k < 1:
            raise DomainError("uniform_sum term count must be >= 1")
        return "uniform_sum", k
    if name in ("gaussian", "normal"):
        return "gaussian", 1
    if name in ("rademacher", "bernoulli"):
        return "rademacher", 1
    raise DomainError(f"unknown distribution family {name!r}")


@dataclass(frozen=True)
class ClassSpec:
    """One similarity class: every agent in it draws from the same law."""

    mean: float
    sigma: float
    family: str = "gaussian"
    k: int = 1
    label: object = None

    def __post_init__(self):
        if self.family == "uniform_sum":
            family, k = "uniform_sum", int(self.k)
            if k < 1:
                raise DomainError("uniform_sum term count must be >= 1")
        else:
            family, k = parse_family(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "k", k)
        # sigma == 0 is accepted as the degenerate (noiseless) case
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not math.isfinite(self.mean):
            raise DomainError("mean must be finite")

    @classmethod
    def from_string(cls, mean, sigma, family, label=None):
        fam, k = parse_family(family)
        return cls(float(mean), float(sigma), fam, k, label)

    @property
    def family_name(self) -> str:
        return f"uniform_sum:{self.k}" if self.family == "uniform_sum" else self.family

    @property
    def kurtosis(self) -> float:
        return theoretical_kurtosis(self.family, self.k)


class Moments(NamedTuple):
    mean: float
    sigma: float
    kappa: float
    kappa_d: float


def theoretical_kurtosis(family: str, k: int = 1) -> float:
    if family == "gaussian":
        return 3.0
    if family == "rademacher":
        return 1.0
    if family == "uniform_sum":
        # excess kurtosis of one uniform is -6/5; cumulants add over k terms
        return 3.0 - 6.0 / (5.0 * k)
    raise DomainError(f"unknown family {family!r}")


def difference_kurtosis(kappa: float) -> float:
    """Kurtosis of x(t) - x(t-1) for i.i.d. draws with kurtosis ``kappa``."""
    return 3.0 + (kappa - 3.0) / 2.0


def theoretical_moments(spec: ClassSpec) -> Moments:
    kappa = spec.kurtosis
    return Moments(spec.mean, spec.sigma, kappa, difference_kurtosis(kappa))


def sample(spec: ClassSpec, rng: np.random.Generator, size=None):
    """Draw from ``spec``; returns a float when ``size`` is None."""
    shape = () if size is None else tuple(int(n) for n in np.atleast_1d(size))
    if spec.family == "gaussian":
        out = spec.mean + spec.sigma * rng.standard_normal(shape)
    elif spec.family == "rademacher":
        signs = rng.integers(0, 2, size=shape) * 2 - 1
        out = spec.mean + spec.sigma * signs
    else:
        k = spec.k
        half = spec.sigma * math.sqrt(3.0 / k)
        u = rng.uniform(-1.0, 1.0, size=shape + (k,))
        out = spec.mean + half * u.sum(axis=-1)
    if size is None:
        return float(out)
    return np.asarray(out, dtype=float)


def agent_rng(master_seed: int, realization: int, agent: int) -> np.random.Generator:
    """Independent stream for one agent in one realization."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, realization, agent]))


def sample_streams(specs, horizon: int, master_seed: int, realization: int) -> np.ndarray:
    """Draw ``horizon`` samples for every agent, one stream per agent.

    ``specs`` is a sequence with one ClassSpec per agent. Returns an array of
    shape ``(len(specs), horizon)``; row ``a`` only depends on
    ``(master_seed, realization, a)``.
    """
    out = np.empty((len(specs), horizon))
    for a, spec in enumerate(specs):
        out[a] = sample(spec, agent_rng(master_seed, realization, a), size=horizon)
    return out
