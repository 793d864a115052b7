import pytest

from edem.config import (
    DE,
    EDEM,
    ConfigError,
    LinearSchedules,
    RunConfig,
    Shock,
    dumps_config,
    loads_config,
    parse_seeds,
)
from edem.experiments import preset, preset_names


def test_default_schedules_equilibrium():
    s = LinearSchedules()
    assert s.equilibrium_price() == pytest.approx(100.0)
    assert s.equilibrium_quantity() == pytest.approx(50.0)


def test_lowered_demand_moves_equilibrium_down():
    s = LinearSchedules(demand_intercept=50.0)
    assert s.equilibrium_price() == pytest.approx(50.0)
    assert s.equilibrium_quantity() == pytest.approx(25.0)


def test_parallel_schedules_rejected():
    with pytest.raises(ConfigError):
        LinearSchedules(supply_slope=0.5, demand_slope=0.5).equilibrium_price()


@pytest.mark.parametrize(
    "changes",
    [
        {"sigma_bar": 1.0},
        {"sigma_bar": -0.1},
        {"variant": "XYZ"},
        {"accept_rule": "other"},
        {"window": 0},
        {"ticks": 0},
        {"seeds": ()},
        {"n_sellers": 2000},
        {"schedules": LinearSchedules(supply_slope=-0.5)},
    ],
)
def test_invalid_configs_raise(changes):
    with pytest.raises(ConfigError):
        RunConfig(**changes).validate()


def test_sigma_growth_needs_a_cap_below_one():
    cfg = RunConfig(variant=EDEM, sigma_bar=0.05, sigma_growth=0.01, ticks=3000)
    with pytest.raises(ConfigError):
        cfg.validate()
    capped = cfg.replace(sigma_cap=0.8)
    capped.validate()
    assert capped.sigma_at_epoch(10_000) == pytest.approx(0.8)
    assert capped.sigma_at_epoch(2) == pytest.approx(0.07)


def test_unknown_shock_kind():
    with pytest.raises(ConfigError):
        Shock(10, "interest_rate", 1.0)


def test_initial_populations():
    assert RunConfig(variant=DE).initial_sellers == 50
    assert RunConfig(variant=EDEM).initial_buyers == 20
    assert RunConfig(variant=EDEM).initial_price == 100.0


def test_text_round_trip_for_every_preset():
    for name in preset_names():
        from edem.experiments import preset_by_name

        cfg = preset_by_name(name)
        assert loads_config(dumps_config(cfg)) == cfg


def test_percent_values_and_comments():
    cfg = loads_config("variant = EDEM  # speculative\nsigma_bar = 15%\nc_b = -1\nseeds = 0-2\n")
    assert cfg.sigma_bar == pytest.approx(0.15)
    assert cfg.c_b == -1.0
    assert cfg.seeds == (0, 1, 2)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        loads_config("colour = blue\n")


def test_parse_seeds():
    assert parse_seeds("0-3,7") == [0, 1, 2, 3, 7]
    assert parse_seeds("5") == [5]


def test_preset_run8_growth():
    cfg = preset(8)
    assert cfg.sigma_bar == pytest.approx(0.05)
    assert cfg.sigma_cap == pytest.approx(0.8)
    assert cfg.c_b == -1.0
