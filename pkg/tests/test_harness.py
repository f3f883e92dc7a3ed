import filecmp
import json

import numpy as np
import pytest

from colme.config import ClassEntry, ScenarioConfig, get_preset
from colme.distributions import ClassSpec
from colme.errors import ConfigError, InsufficientData
from colme.harness import (
    bootstrap_band, histogram, run_realization, run_scenario, theoretical_overlay, write_outputs,
)
from colme.separation import separation_table


@pytest.fixture(scope="module")
def sec5():
    return run_scenario(get_preset("sec5-two-class-sigma"))


@pytest.fixture(scope="module")
def sec7():
    return run_scenario(get_preset("sec7-four-class").with_overrides(realizations=5))


@pytest.mark.parametrize("protocol", ["colme", "b-colme", "c-colme"])
def test_single_class_has_no_wrong_links(protocol):
    cfg = ScenarioConfig(
        name="one", n_agents=40, r=4, classes=(ClassEntry(ClassSpec(1.0, 1.0), 1.0),),
        protocol=protocol, horizon=60, realizations=2, checkpoints=(),
    )
    m = run_scenario(cfg)
    assert np.all(m.wrong_link_fraction == 0.0)


def test_wrong_links_start_at_one(sec5):
    assert sec5.wrong_link_fraction[0] == 1.0
    assert np.all((sec5.wrong_link_fraction >= 0) & (sec5.wrong_link_fraction <= 1))


def test_mse_nonnegative(sec5):
    for s in (sec5.mse_local, sec5.mse_collab, sec5.mse_oracle):
        assert np.all(s >= 0)


def test_local_mse_matches_iid_averaging(sec5):
    cfg = sec5.config
    t = np.arange(50, cfg.horizon + 1)
    local = sum(0.5 * s.sigma**2 for s in cfg.class_specs) / t
    assert np.all(np.abs(sec5.mse_local[t - 1] / local - 1) < 0.15)


def test_oracle_mse_matches_iid_averaging():
    # the oracle error has two degrees of freedom per realization, so many
    # short realizations are needed for a 20% band
    cfg = get_preset("sec5-two-class-sigma").with_overrides(
        horizon=60, realizations=400, checkpoints=()
    )
    m = run_scenario(cfg)
    t = np.arange(50, 61)
    oracle = sum(0.5 * s.sigma**2 / n for s, n in zip(cfg.class_specs, cfg.class_sizes())) / t
    assert np.all(np.abs(m.mse_oracle[t - 1] / oracle - 1) < 0.20)


@pytest.mark.parametrize("name", ["sec5-two-class-sigma", "sec5-two-class-sigma-c"])
def test_collab_between_oracle_and_local_after_separation(name, sec5):
    # 30 realizations keep Monte Carlo noise below the collab/oracle gap
    m = sec5 if name == "sec5-two-class-sigma" else run_scenario(
        get_preset(name).with_overrides(realizations=30, checkpoints=())
    )
    green = max(p.time for p in separation_table(m.config.class_specs).values())
    i = np.arange(2 * green, m.config.horizon + 1) - 1
    # the oracle is the best linear unbiased estimate, so it only loses by noise
    assert np.all(0.98 * m.mse_oracle[i] <= m.mse_collab[i])
    assert np.all(m.mse_collab[i] <= m.mse_local[i])


def test_prune_times_track_separation_table(sec7):
    cfg = sec7.config
    table = separation_table(cfg.class_specs, cfg.delta, cfg.z_delta)
    labels = [c.spec.label for c in cfg.classes]
    for (i, j), p in table.items():
        pair = {labels[i], labels[j]}
        times = [e.t for e in sec7.prune_events if {e.class_a, e.class_b} == pair]
        assert abs(np.mean(times) / p.time - 1) <= 0.35, (pair, np.mean(times), p.time)


def test_kurtosis_only_pair_uses_kurtosis_fold(sec7):
    folds = {e.fold.label for e in sec7.prune_events if {e.class_a, e.class_b} == {1, 4}}
    assert folds == {"kurtosis"}


def test_realization_is_deterministic():
    cfg = get_preset("sec6-kurtosis").with_overrides(horizon=600, n_agents=60)
    a = run_realization(cfg, 3)
    b = run_realization(cfg, 3)
    assert np.array_equal(a.mse_collab, b.mse_collab)
    assert [(e.t, e.a, e.b) for e in a.events] == [(e.t, e.a, e.b) for e in b.events]


def test_backends_give_same_metrics():
    cfg = get_preset("sec6-kurtosis-weighted").with_overrides(horizon=700, n_agents=60)
    a = run_realization(cfg, 0, "python")
    b = run_realization(cfg, 0, "compiled")
    assert [(e.t, e.a, e.b, e.fold) for e in a.events] == [(e.t, e.a, e.b, e.fold) for e in b.events]
    assert np.allclose(a.mse_collab, b.mse_collab, rtol=1e-9)


def test_invalid_config_fails_before_running():
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig(n_agents=5, r=3, classes=(ClassEntry(ClassSpec(0, 1), 1.0),)))


def test_bootstrap_band_basics():
    same = np.tile(np.linspace(1, 2, 5), (6, 1))
    lo, hi = bootstrap_band(same)
    assert np.array_equal(lo, hi) and np.allclose(lo, same[0])
    x = np.random.default_rng(0).normal(size=(10, 50))
    lo, hi = bootstrap_band(x, seed=1)
    assert np.all(lo <= x.mean(axis=0)) and np.all(x.mean(axis=0) <= hi)
    with pytest.raises(InsufficientData):
        bootstrap_band(x[:1])


def test_bootstrap_width_scaling():
    rng = np.random.default_rng(2)
    w = {}
    for R in (10, 160):
        lo, hi = bootstrap_band(rng.normal(size=(R, 400)), seed=3)
        w[R] = np.mean(hi - lo)
    assert w[10] / w[160] == pytest.approx(4.0, rel=0.25)


def test_histogram():
    rows = histogram(np.full(10, 3.0), bins=5)
    assert sum(r["count"] > 0 for r in rows) == 1
    rows = histogram(np.random.default_rng(0).normal(2, 0.1, 5000), 40, [(1.0, 2.0, 0.1)])
    dens = np.array([r["density"] for r in rows])
    over = np.array([r["overlay_density"] for r in rows])
    assert np.abs(dens - over).max() < 0.6
    with pytest.raises(InsufficientData):
        histogram([], 3)


def test_overlays():
    cfg = get_preset("sec5-two-class-sigma")
    comps = theoretical_overlay(cfg, "sigma", 500)
    assert [c[1] for c in comps] == [1.2, 1.8]
    assert theoretical_overlay(cfg, "kurtosis", 600)[0][2] == pytest.approx(0.2)


def test_outputs_are_byte_identical(tmp_path):
    cfg = get_preset("sec6-kurtosis-weighted").with_overrides(
        n_agents=40, horizon=600, realizations=3, checkpoints=(100, 600)
    )
    write_outputs(run_scenario(cfg), tmp_path / "a")
    write_outputs(run_scenario(cfg, workers=2), tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"metrics.csv", "prune_events.csv", "summary.json", "graph_600.csv",
            "histogram_sigma_600.csv", "histogram_kurtosis_100.csv"} <= set(names)
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert not mismatch and not errors
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["expected_separation"]["1-2"]["kurtosis"] == 502
    header = (tmp_path / "a" / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("t,mse_local,mse_collab,mse_oracle,mse_collab_lo")
