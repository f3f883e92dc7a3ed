"""Scenario configuration, its YAML mapping, validation, and bundled presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .algorithms import PROTOCOLS
from .confidence import BOUND_KINDS, BoundConfig, Fold
from .distributions import ClassSpec
from .errors import ColmeError, ConfigError

SIGMA_ESTIMATORS = ("local", "collaborative")


@dataclass(frozen=True)
class ClassEntry:
    spec: ClassSpec
    proportion: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    n_agents: int = 200
    classes: tuple = ()
    r: int = 10
    protocol: str = "b-colme"
    depth: int = 4
    delta: float = 0.01
    z_delta: float = 3.89
    bound_kind: str = "laplace"
    kappa_bound: float = 3.0
    fourth_moment_coefficient: float | None = None
    T_s: int = 10
    sigma_estimator: str = "local"
    sigma_sentinel: float = 10.0
    difference_stride: int = 1
    kurtosis_activation_time: int = 500
    alpha_K: float = 10.0
    weighting: bool = False
    reconnection: bool = False
    horizon: int = 2000
    realizations: int = 10
    master_seed: int = 0
    active_folds: tuple = ("mean", "sigma")
    checkpoints: tuple = (100, 500, 1000, 2000)

    @property
    def bound(self) -> BoundConfig:
        return BoundConfig(
            delta=self.delta,
            bound_kind=self.bound_kind,
            z_delta_kurtosis=self.z_delta,
            kurtosis_activation_time=self.kurtosis_activation_time,
            kappa_bound=self.kappa_bound,
            fourth_moment_coefficient=self.fourth_moment_coefficient,
        )

    @property
    def class_specs(self) -> list:
        return [c.spec for c in self.classes]

    @property
    def folds(self) -> list:
        return sorted(Fold.parse(f) for f in self.active_folds)

    def class_sizes(self) -> list:
        """Contiguous block sizes per class (largest-remainder rounding)."""
        raw = [c.proportion * self.n_agents for c in self.classes]
        sizes = [int(math.floor(x)) for x in raw]
        rest = self.n_agents - sum(sizes)
        order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
        for i in order[:rest]:
            sizes[i] += 1
        return sizes

    def agent_classes(self) -> list:
        """Class index of each agent."""
        out = []
        for i, size in enumerate(self.class_sizes()):
            out += [i] * size
        return out

    def problems(self) -> list:
        p = []
        if self.n_agents < 2:
            p.append("agents must be >= 2")
        if not self.classes:
            p.append("at least one class is required")
        else:
            total = sum(c.proportion for c in self.classes)
            if any(not c.proportion > 0 for c in self.classes):
                p.append("class proportions must be > 0")
            elif abs(total - 1.0) > 1e-9:
                p.append(f"class proportions must sum to 1 (got {total:g})")
            elif self.n_agents >= 2 and min(self.class_sizes()) < 1:
                p.append("every class needs at least one agent")
        if self.protocol not in PROTOCOLS:
            p.append(f"protocol must be one of {PROTOCOLS}")
        if self.protocol != "colme":
            if not 0 <= self.r < self.n_agents:
                p.append(f"degree r must satisfy 0 <= r < agents (r={self.r}, agents={self.n_agents})")
            if (self.n_agents * self.r) % 2:
                p.append(f"agents * degree must be even (agents={self.n_agents}, r={self.r})")
        else:
            if self.weighting:
                p.append("weighting is only defined for b-colme and c-colme")
            if self.reconnection:
                p.append("reconnection is only defined for b-colme and c-colme")
        if self.depth < 0:
            p.append("depth must be >= 0")
        if not 0 < self.delta < 1:
            p.append("delta must lie in (0, 1)")
        if not self.z_delta > 0:
            p.append("z_kurtosis must be > 0")
        if self.bound_kind not in BOUND_KINDS:
            p.append(f"bound must be one of {BOUND_KINDS}")
        if self.horizon < 1:
            p.append("horizon must be >= 1")
        if not 0 <= self.T_s < self.horizon:
            p.append(f"ts must satisfy 0 <= ts < horizon (ts={self.T_s}, horizon={self.horizon})")
        if self.sigma_estimator not in SIGMA_ESTIMATORS:
            p.append(f"sigma estimator must be one of {SIGMA_ESTIMATORS}")
        elif self.sigma_estimator == "collaborative":
            if self.T_s < 1:
                p.append("collaborative sigma needs ts >= 1")
            if set(self.active_folds) - {"mean"}:
                p.append("collaborative sigma is frozen and only supports the mean fold")
        if self.difference_stride not in (1, 2):
            p.append("difference_stride must be 1 or 2")
        if not self.sigma_sentinel > 0:
            p.append("sentinel must be > 0")
        if self.realizations < 1:
            p.append("realizations must be >= 1")
        if self.alpha_K <= 0:
            p.append("alpha_k must be > 0")
        if not self.active_folds:
            p.append("at least one fold must be active")
        for f in self.active_folds:
            if f not in ("mean", "sigma", "kurtosis"):
                p.append(f"unknown fold {f!r}")
        if any(c < 1 for c in self.checkpoints):
            p.append("checkpoints must be >= 1")
        return p

    def validate(self) -> "ScenarioConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    def with_overrides(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    # -- mapping -----------------------------------------------------------

    def to_mapping(self) -> dict:
        return {
            "name": self.name,
            "agents": self.n_agents,
            "horizon": self.horizon,
            "realizations": self.realizations,
            "seed": self.master_seed,
            "checkpoints": list(self.checkpoints),
            "graph": {"degree": self.r, "reconnection": self.reconnection},
            "protocol": {
                "name": self.protocol,
                "depth": self.depth,
                "alpha_k": self.alpha_K,
                "weighted": self.weighting,
            },
            "confidence": {
                "delta": self.delta,
                "bound": self.bound_kind,
                "kappa_bound": self.kappa_bound,
                "fourth_moment_coefficient": self.fourth_moment_coefficient,
                "z_kurtosis": self.z_delta,
                "kurtosis_activation_time": self.kurtosis_activation_time,
                "folds": list(self.active_folds),
            },
            "estimation": {
                "sigma": self.sigma_estimator,
                "ts": self.T_s,
                "sentinel": self.sigma_sentinel,
                "difference_stride": self.difference_stride,
            },
            "classes": [
                {
                    "label": c.spec.label,
                    "mean": c.spec.mean,
                    "sigma": c.spec.sigma,
                    "family": c.spec.family_name,
                    "proportion": c.proportion,
                }
                for c in self.classes
            ],
        }

    @classmethod
    def from_mapping(cls, data) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        problems = []
        data = dict(data)
        kw = {}
        top = {
            "name": ("name", str),
            "agents": ("n_agents", int),
            "horizon": ("horizon", int),
            "realizations": ("realizations", int),
            "seed": ("master_seed", int),
        }
        sections = {
            "graph": {"degree": ("r", int), "reconnection": ("reconnection", bool)},
            "protocol": {
                "name": ("protocol", str),
                "depth": ("depth", int),
                "alpha_k": ("alpha_K", float),
                "weighted": ("weighting", bool),
            },
            "confidence": {
                "delta": ("delta", float),
                "bound": ("bound_kind", str),
                "kappa_bound": ("kappa_bound", float),
                "fourth_moment_coefficient": ("fourth_moment_coefficient", float),
                "z_kurtosis": ("z_delta", float),
                "kurtosis_activation_time": ("kurtosis_activation_time", int),
                "folds": ("active_folds", tuple),
            },
            "estimation": {
                "sigma": ("sigma_estimator", str),
                "ts": ("T_s", int),
                "sentinel": ("sigma_sentinel", float),
                "difference_stride": ("difference_stride", int),
            },
        }

        def take(key, value, target, kind, where):
            if value is None and target == "fourth_moment_coefficient":
                kw[target] = None
                return
            try:
                if kind is bool:
                    if not isinstance(value, bool):
                        raise TypeError
                    kw[target] = value
                elif kind is tuple:
                    kw[target] = tuple(str(v) for v in value)
                elif kind is int:
                    if isinstance(value, bool) or int(value) != value:
                        raise TypeError
                    kw[target] = int(value)
                else:
                    kw[target] = kind(value)
            except (TypeError, ValueError):
                problems.append(f"{where}{key}: bad value {value!r}")

        for key, value in data.items():
            if key in top:
                take(key, value, *top[key], "")
            elif key in sections:
                if not isinstance(value, dict):
                    problems.append(f"{key} must be a mapping")
                    continue
                for sub, subval in value.items():
                    if sub not in sections[key]:
                        problems.append(f"unknown key {key}.{sub}")
                    else:
                        take(sub, subval, *sections[key][sub], f"{key}.")
            elif key == "checkpoints":
                try:
                    kw["checkpoints"] = tuple(int(c) for c in value)
                except (TypeError, ValueError):
                    problems.append(f"checkpoints: bad value {value!r}")
            elif key == "classes":
                classes = []
                for i, entry in enumerate(value or []):
                    try:
                        extra = set(entry) - {"label", "mean", "sigma", "family", "proportion"}
                        if extra:
                            problems.append(f"classes[{i}]: unknown keys {sorted(extra)}")
                        spec = ClassSpec.from_string(
                            entry["mean"], entry["sigma"], entry.get("family", "gaussian"),
                            entry.get("label", i + 1),
                        )
                        classes.append(ClassEntry(spec, float(entry["proportion"])))
                    except KeyError as exc:
                        problems.append(f"classes[{i}]: missing {exc.args[0]}")
                    except (ColmeError, TypeError, ValueError) as exc:
                        problems.append(f"classes[{i}]: {exc}")
                kw["classes"] = tuple(classes)
            else:
                problems.append(f"unknown key {key}")
        if problems:
            raise ConfigError(problems)
        cfg = cls(**kw)
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        return cls.from_mapping(data)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False)


# -- presets -----------------------------------------------------------------

def _classes(*rows) -> tuple:
    return tuple(
        ClassEntry(ClassSpec.from_string(m, s, fam, label), p) for label, m, s, fam, p in rows
    )


def _base_presets() -> dict:
    return {
        "sec2-two-class-mean": ScenarioConfig(
            name="sec2-two-class-mean",
            classes=_classes((1, 0.1, 2.0, "gaussian", 0.5), (2, 0.9, 2.0, "gaussian", 0.5)),
            sigma_estimator="collaborative",
            active_folds=("mean",),
            horizon=2000,
        ),
        "sec5-two-class-sigma": ScenarioConfig(
            name="sec5-two-class-sigma",
            classes=_classes((1, 0.9, 1.2, "gaussian", 0.5), (2, 1.1, 1.8, "gaussian", 0.5)),
            active_folds=("mean", "sigma"),
            horizon=2000,
        ),
        "sec6-kurtosis": ScenarioConfig(
            name="sec6-kurtosis",
            classes=_classes(
                (1, 0.9, 1.9, "rademacher", 0.5), (2, 1.1, 2.1, "uniform_sum:4", 0.5)
            ),
            active_folds=("mean", "sigma", "kurtosis"),
            kurtosis_activation_time=500,
            reconnection=True,
            horizon=2000,
        ),
        "sec7-four-class": ScenarioConfig(
            name="sec7-four-class",
            classes=_classes(
                (1, 0.9, 1.8, "uniform_sum:2", 0.25),
                (2, 0.1, 2.0, "uniform_sum:2", 0.25),
                (3, 1.1, 1.2, "uniform_sum:2", 0.25),
                (4, 1.0, 1.9, "rademacher", 0.25),
            ),
            active_folds=("mean", "sigma", "kurtosis"),
            kurtosis_activation_time=500,
            reconnection=True,
            horizon=2500,
            checkpoints=(100, 500, 1000, 2000, 2500),
        ),
    }


def presets() -> dict:
    """Every bundled scenario keyed by name.

    Each base scenario (B-colME, unweighted) also comes as ``-weighted``,
    ``-c`` (C-colME) and ``-c-weighted``; the mean-only scenario additionally
    has a ``-colme`` variant.
    """
    out = {}
    for name, cfg in _base_presets().items():
        out[name] = cfg
        out[f"{name}-weighted"] = replace(cfg, name=f"{name}-weighted", weighting=True)
        out[f"{name}-c"] = replace(cfg, name=f"{name}-c", protocol="c-colme")
        out[f"{name}-c-weighted"] = replace(
            cfg, name=f"{name}-c-weighted", protocol="c-colme", weighting=True
        )
        if cfg.active_folds == ("mean",):
            out[f"{name}-colme"] = replace(cfg, name=f"{name}-colme", protocol="colme")
    return out


def get_preset(name: str) -> ScenarioConfig:
    table = presets()
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; see `colme presets`")
    return table[name]
