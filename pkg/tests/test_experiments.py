import numpy as np
import pytest

from edem.config import ConfigError
from edem.experiments import (
    FIELDS,
    GridSummary,
    RunDataset,
    aggregate,
    de_deviation,
    log_linearity,
    longest_run_in_band,
    preset,
    preset_by_name,
    preset_names,
    presets_for_run,
    run_batch,
    second_half,
    sensitivity_grid,
    summarize_runs,
)


def test_preset_names_cover_runs():
    names = preset_names()
    assert names[:4] == ["1", "2", "3", "4"]
    assert {"5A", "5B", "7cb+1", "7cb0", "7cb-1", "9"} <= set(names)


def test_preset_name_spellings():
    assert preset_by_name("run7_cb-1") == preset_by_name("7cb-1")
    assert preset_by_name("run1").name == "run1"
    with pytest.raises(ConfigError):
        preset_by_name("nonsense")
    with pytest.raises(ConfigError):
        preset(5)
    with pytest.raises(ConfigError):
        preset(1, "A")


def test_preset_parameters():
    assert preset(2).sigma_bar == pytest.approx(0.25)
    assert preset(3).max_patience == 100
    assert preset(4).schedules.equilibrium_price() == pytest.approx(50.0)
    assert [c.c_b for c in presets_for_run(7)] == [1.0, 0.0, -1.0]
    shocks = preset(5, "B").shocks
    assert [s.tick for s in shocks] == list(range(0, 12_000, 2000))
    assert {s.value for s in shocks} == {75.0, 125.0}


def test_batch_shapes(small_edem):
    ds = run_batch(small_edem.replace(seeds=(0, 1, 2)))
    assert set(ds.columns) == set(FIELDS)
    assert ds.columns["price"].shape == (3, 200)
    assert np.isnan(ds.columns["implied_equilibrium"]).all()
    assert ds.rbar_values().size == 3 * 10
    assert ds.terminal_ratio().shape == (3,)


def test_batch_warns_about_late_shock(small_de):
    from edem.config import Shock

    cfg = small_de.replace(shocks=(Shock(10_000, "demand_intercept", 50.0),))
    with pytest.warns(UserWarning, match="beyond the run length"):
        run_batch(cfg)


def test_aggregate_percentiles():
    cols = {name: np.tile(np.arange(11.0)[:, None], (1, 4)) for name in FIELDS}
    ds = RunDataset(preset(1), tuple(range(11)), cols)
    agg = aggregate(ds)
    assert agg.ticks == 4
    np.testing.assert_allclose(agg.p10["price"], 1.0)
    np.testing.assert_allclose(agg.median["price"], 5.0)
    np.testing.assert_allclose(agg.p90["price"], 9.0)


def test_single_seed_aggregate_warns(small_de):
    ds = run_batch(small_de)
    with pytest.warns(UserWarning):
        aggregate(ds)


def test_deviation_and_second_half():
    assert list(second_half(np.arange(6))) == [3, 4, 5]
    cols = {name: np.full((2, 10), 110.0) for name in FIELDS}
    dev = de_deviation(RunDataset(preset(1), (0, 1), cols))
    assert dev["median"] == pytest.approx(0.10)


def test_log_linearity():
    t = np.arange(100)
    assert log_linearity(100 * np.exp(0.01 * t)) == pytest.approx(1.0)
    assert log_linearity(np.full(10, 5.0)) == 1.0
    assert log_linearity(100 + 50 * np.sin(t / 5.0)) < 0.5


def test_longest_run_in_band():
    s = np.array([100, 101, 99, 150, 100, 100.5, 101, 102.5])
    assert longest_run_in_band(s, 100.0, 0.02) == 3


def test_grid_summary_helpers():
    cells = np.array([[2.0, 20.0], [5.0, 50.0], [1.6, 3.0]])
    g = GridSummary((-1.0, 0.0, 1.0), (0.1, 0.2), cells)
    assert g.fraction_above(10) == pytest.approx(2 / 6)
    assert g.zero_column_max_count() == 2
    assert g.cell(0.0, 0.2) == 50.0 and g.max_cell == 50.0


def test_small_grid_runs():
    g = sensitivity_grid(seeds=(0,), ticks=60, c_b=(0.0, 1.0), sigma=(0.0, 0.1))
    assert g.cells.shape == (2, 2)
    # zero dispersion pins every value
    assert g.cell(0.0, 0.0) == 1.0 and g.cell(1.0, 0.0) == 1.0


def test_summarize_flags_missing(small_edem):
    ds = run_batch(small_edem)
    rows = summarize_runs({"small": ds}, expected=("run1", "small"))
    assert rows[0].missing and not rows[1].missing
    assert rows[1].value == pytest.approx(float(ds.terminal_ratio()[0]))
