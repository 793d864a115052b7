"""Run presets, multi-seed batches, aggregation and the sensitivity grid."""

from __future__ import annotations

import logging
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .config import DE, EDEM, ConfigError, LinearSchedules, RunConfig, Shock
from .engine import Market, TickRecord

log = logging.getLogger(__name__)

FIELDS = ("price", "sellers", "buyers", "implied_equilibrium", "window_fill", "sigma_bar", "rbar")
PERCENTILES = (10.0, 50.0, 90.0)

GRID_CB = (-1.0, -0.5, 0.0, 0.5, 1.0)
GRID_SIGMA = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)

# run id -> scenario labels; None means the run has a single configuration
SCENARIOS = {5: ("A", "B"), 7: ("cb+1", "cb0", "cb-1")}


# ---------------------------------------------------------------------------
# presets


def _de(name: str, **changes) -> RunConfig:
    base = dict(ticks=20_000, seeds=tuple(range(10)))
    base.update(changes)
    return RunConfig(variant=DE, name=name, **base)


def _edem(name: str, **changes) -> RunConfig:
    base = dict(ticks=3000, seeds=tuple(range(10)), sigma_bar=0.15, c_b=0.0)
    base.update(changes)
    return RunConfig(variant=EDEM, name=name, **base)


def preset(run_id: int, scenario: Optional[str] = None) -> RunConfig:
    """Parameter vector of a numbered run.

    Run 5 takes scenario ``A`` (single shock) or ``B`` (toggling demand);
    Run 7 takes ``cb+1``, ``cb0`` or ``cb-1``. Run 9 returns the base config of
    one grid cell (C_b = 0, 15%) with the grid's seeds and tick budget.
    """
    if run_id in SCENARIOS and scenario is None:
        raise ConfigError(f"run {run_id} needs a scenario, one of {SCENARIOS[run_id]}")
    if run_id not in SCENARIOS and scenario is not None:
        raise ConfigError(f"run {run_id} has no scenarios")
    if scenario is not None and scenario not in SCENARIOS[run_id]:
        raise ConfigError(f"unknown scenario {scenario!r} for run {run_id}; expected {SCENARIOS[run_id]}")

    if run_id == 1:
        return _de("run1")
    if run_id == 2:
        return _de("run2", sigma_bar=0.25)
    if run_id == 3:
        return _de("run3", max_patience=100)
    if run_id == 4:
        return _de("run4", schedules=LinearSchedules(demand_intercept=50.0))
    if run_id == 5 and scenario == "A":
        shocks = (Shock(3000, "demand_intercept", 50.0), Shock(7000, "max_patience", 165.0))
        return _de("run5A", ticks=12_000, shocks=shocks)
    if run_id == 5:
        shocks = tuple(
            Shock(t, "demand_intercept", 125.0 if (t // 2000) % 2 else 75.0) for t in range(0, 12_000, 2000)
        )
        return _de("run5B", ticks=12_000, shocks=shocks)
    if run_id == 6:
        return _edem("run6")
    if run_id == 7:
        c_b = {"cb+1": 1.0, "cb0": 0.0, "cb-1": -1.0}[scenario]
        return _edem(f"run7_{scenario}", c_b=c_b)
    if run_id == 8:
        return _edem("run8", sigma_bar=0.05, sigma_growth=0.005, sigma_cap=0.80, c_b=-1.0)
    if run_id == 9:
        return _edem("run9", ticks=1500, seeds=tuple(range(5)))
    raise ConfigError(f"unknown run id {run_id}")


def preset_names() -> list[str]:
    """Every single-config preset name accepted by :func:`preset_by_name`."""
    names = []
    for run_id in range(1, 10):
        if run_id in SCENARIOS:
            names.extend(f"{run_id}{s}" for s in SCENARIOS[run_id])
        else:
            names.append(str(run_id))
    return names


def preset_by_name(name: str) -> RunConfig:
    """Resolve names such as ``"1"``, ``"5A"`` or ``"7cb-1"``.

    The dataset-file spellings ``"run1"`` and ``"run7_cb-1"`` are accepted too.
    """
    name = name.strip()
    if name.lower().startswith("run"):
        name = name[3:].replace("_", "")
    match = re.fullmatch(r"(\d)(A|B|cb[+-]?\d)?", name)
    if match is None:
        raise ConfigError(f"unknown preset {name!r}")
    return preset(int(match.group(1)), match.group(2))


def presets_for_run(run_id: int) -> list[RunConfig]:
    if run_id in SCENARIOS:
        return [preset(run_id, s) for s in SCENARIOS[run_id]]
    return [preset(run_id)]


# ---------------------------------------------------------------------------
# batches


@dataclass
class RunDataset:
    """Per-tick reporters stacked over seeds: each column is ``(n_seeds, ticks)``.

    Reporters that do not apply to the variant are NaN.
    """

    config: RunConfig
    seeds: tuple[int, ...]
    columns: dict[str, np.ndarray]

    @property
    def ticks(self) -> int:
        return self.columns["price"].shape[1]

    def __len__(self) -> int:
        return len(self.seeds) * self.ticks

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def terminal_ratio(self) -> np.ndarray:
        """Terminal price relative to the initial price, per seed."""
        return self.columns["price"][:, -1] / self.config.initial_price

    def rbar_values(self) -> np.ndarray:
        """All recorded per-epoch multipliers, seed-major."""
        rbar = self.columns["rbar"]
        return rbar[~np.isnan(rbar)]


def records_to_columns(records: Sequence[TickRecord]) -> dict[str, np.ndarray]:
    out = {}
    for name in FIELDS:
        out[name] = np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in records], dtype=float
        )
    return out


def run_seed(config: RunConfig, seed: int) -> dict[str, np.ndarray]:
    try:
        market = Market(config, seed)
        market.run()
    except Exception as exc:
        raise RuntimeError(f"{config.name}: seed {seed} failed: {exc}") from exc
    return records_to_columns(market.records)


def run_batch(config: RunConfig, progress: Optional[Callable[[int], None]] = None) -> RunDataset:
    """Run every seed of ``config`` in order and stack the reporters."""
    config.validate()
    for shock in config.shocks:
        if shock.tick >= config.ticks:
            warnings.warn(f"{config.name}: shock at tick {shock.tick} is beyond the run length {config.ticks}")
    per_seed = []
    for seed in config.seeds:
        per_seed.append(run_seed(config, seed))
        if progress is not None:
            progress(seed)
        log.debug("%s seed %d done", config.name, seed)
    columns = {name: np.vstack([cols[name] for cols in per_seed]) for name in FIELDS}
    return RunDataset(config, tuple(config.seeds), columns)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class AggregateSeries:
    """Per-tick 10th percentile, median and 90th percentile over seeds."""

    p10: dict[str, np.ndarray]
    median: dict[str, np.ndarray]
    p90: dict[str, np.ndarray]

    @property
    def ticks(self) -> int:
        return len(self.median["price"])


def aggregate(dataset: RunDataset) -> AggregateSeries:
    """Percentiles over the seed axis, linear interpolation between order statistics."""
    if len(dataset.seeds) < 2:
        warnings.warn("aggregating a single seed: bands collapse onto the series")
    bands: list[dict[str, np.ndarray]] = [{}, {}, {}]
    for name, values in dataset.columns.items():
        if np.isnan(values).all():
            nan = np.full(values.shape[1], np.nan)
            for band in bands:
                band[name] = nan
            continue
        with warnings.catch_warnings():
            # rbar is NaN off epoch boundaries
            warnings.simplefilter("ignore", RuntimeWarning)
            qs = np.nanpercentile(values, PERCENTILES, axis=0, method="linear")
        for band, q in zip(bands, qs):
            band[name] = q
    return AggregateSeries(*bands)


def second_half(series: np.ndarray) -> np.ndarray:
    """Burn-in convention for DE statistics: drop the first half of the run."""
    return series[len(series) // 2:]


def de_deviation(dataset: RunDataset) -> dict[str, float]:
    """Second-half deviation of the median price from the initial textbook price."""
    p_star = dataset.config.schedules.equilibrium_price()
    med = second_half(aggregate(dataset).median["price"])
    dev = med / p_star - 1.0
    return {"median": float(np.median(dev)), "min": float(dev.min()), "max": float(dev.max())}


def log_linearity(series: np.ndarray) -> float:
    """R^2 of a least-squares line through ``log(series)`` against tick."""
    y = np.log(np.asarray(series, dtype=float))
    x = np.arange(len(y), dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = ((y - y.mean()) ** 2).sum()
    return 1.0 if total == 0 else float(1.0 - (resid ** 2).sum() / total)


# ---------------------------------------------------------------------------
# sensitivity grid


@dataclass
class GridSummary:
    c_b: tuple[float, ...]
    sigma: tuple[float, ...]
    cells: np.ndarray  # (len(c_b), len(sigma)) median terminal v / v*
    datasets: dict[tuple[float, float], RunDataset] = field(default_factory=dict, repr=False)

    @property
    def log10(self) -> np.ndarray:
        return np.log10(self.cells)

    def fraction_above(self, level: float) -> float:
        return float((self.cells > level).mean())

    @property
    def max_cell(self) -> float:
        return float(self.cells.max())

    def cell(self, c_b: float, sigma: float) -> float:
        return float(self.cells[self.c_b.index(c_b), self.sigma.index(sigma)])

    def zero_column_max_count(self) -> int:
        """Number of dispersion columns in which C_b = 0 holds the largest cell."""
        row = self.c_b.index(0.0)
        return int(sum(self.cells[:, j].argmax() == row for j in range(len(self.sigma))))


def grid_config(c_b: float, sigma: float, base: Optional[RunConfig] = None) -> RunConfig:
    base = base or preset(9)
    return base.replace(name=f"run9_cb{c_b:+g}_s{round(sigma * 100):d}", c_b=c_b, sigma_bar=sigma)


def sensitivity_grid(
    seeds: Optional[Iterable[int]] = None,
    ticks: Optional[int] = None,
    c_b: Sequence[float] = GRID_CB,
    sigma: Sequence[float] = GRID_SIGMA,
    keep_datasets: bool = False,
) -> GridSummary:
    base = preset(9)
    if seeds is not None:
        base = base.replace(seeds=tuple(seeds))
    if ticks is not None:
        base = base.replace(ticks=ticks)
    cells = np.empty((len(c_b), len(sigma)))
    kept = {}
    for i, cb in enumerate(c_b):
        for j, s in enumerate(sigma):
            ds = run_batch(grid_config(cb, s, base))
            cells[i, j] = float(np.median(ds.terminal_ratio()))
            if keep_datasets:
                kept[cb, s] = ds
    return GridSummary(tuple(c_b), tuple(sigma), cells, kept)


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunOutcome:
    label: str
    variant: str
    metric: str
    value: Optional[float]
    low: Optional[float] = None
    high: Optional[float] = None

    @property
    def missing(self) -> bool:
        return self.value is None


def summarize_runs(datasets: dict[str, RunDataset], expected: Sequence[str] = ()) -> list[RunOutcome]:
    """One outcome per dataset: DE deviation band, or EDEM terminal median v / v*."""
    rows = []
    for label in list(expected) + [k for k in datasets if k not in expected]:
        ds = datasets.get(label)
        if ds is None:
            rows.append(RunOutcome(label, "?", "missing", None))
        elif ds.config.is_edem:
            rows.append(RunOutcome(label, EDEM, "terminal median v/v*", float(np.median(ds.terminal_ratio()))))
        else:
            dev = de_deviation(ds)
            rows.append(RunOutcome(label, DE, "second-half median deviation", dev["median"], dev["min"], dev["max"]))
    return rows


def longest_run_in_band(series: np.ndarray, centre: float, rel: float) -> int:
    """Longest stretch of consecutive ticks with ``|series - centre| <= rel * centre``."""
    inside = np.abs(np.asarray(series) - centre) <= rel * centre
    best = cur = 0
    for flag in inside:
        cur = cur + 1 if flag else 0
        best = max(best, cur)
    return best


__all__ = [
    "preset",
    "preset_by_name",
    "preset_names",
    "presets_for_run",
    "RunDataset",
    "run_batch",
    "AggregateSeries",
    "aggregate",
    "de_deviation",
    "log_linearity",
    "GridSummary",
    "sensitivity_grid",
    "summarize_runs",
    "longest_run_in_band",
]
