"""Order-statistic bias of the maximum bid, and empirical r-bar statistics.

The closed form is checked against a brute-force Monte Carlo oracle; the
r-bar statistics are read back from recorded value series so they work on
archived datasets as well as fresh ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Union

import numpy as np

from .agents import ContractError

if TYPE_CHECKING:
    from .experiments import RunDataset

OSTAT_N = (2, 3, 5, 10, 20)
OSTAT_SIGMA = (0.05, 0.15, 0.30)


def max_bid_bias(n: int, sigma: float) -> float:
    """Expected ratio of the highest of ``n`` bids to the true value: ``1 + sigma (n-1)/(n+1)``."""
    if n < 1:
        raise ContractError(f"need at least one bidder, got n={n}")
    if not 0 <= sigma < 1:
        raise ContractError(f"sigma must lie in [0, 1), got {sigma}")
    return 1.0 + sigma * (n - 1) / (n + 1)


def max_bid_bias_mc(
    n: int, sigma: float, samples: int, rng: Union[np.random.Generator, int, None] = None, chunk: int = 200_000
) -> tuple[float, float]:
    """Monte Carlo mean of ``1 + max(eps_1..eps_n)`` and its standard error."""
    if samples < 10_000:
        raise ContractError(f"need at least 10^4 samples, got {samples}")
    if n < 1:
        raise ContractError(f"need at least one bidder, got n={n}")
    rng = np.random.default_rng(rng)
    if sigma == 0:
        return 1.0, 0.0
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        ratios = 1.0 + rng.uniform(-sigma, sigma, size=(m, n)).max(axis=1)
        total += float(ratios.sum())
        total_sq += float(np.square(ratios).sum())
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)


@dataclass(frozen=True)
class OstatRow:
    n: int
    sigma: float
    closed_form: float
    mc_mean: float
    se: float

    @property
    def z(self) -> float:
        if self.se == 0:
            return 0.0 if self.mc_mean == self.closed_form else math.inf
        return (self.mc_mean - self.closed_form) / self.se

    @property
    def passed(self) -> bool:
        return abs(self.z) < 3.0


def verify_closed_form(
    ns: Sequence[int] = OSTAT_N,
    sigmas: Sequence[float] = OSTAT_SIGMA,
    samples: int = 1_000_000,
    seed: int = 0,
) -> list[OstatRow]:
    """Compare closed form and oracle on every ``(n, sigma)`` pair, one shared generator."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in ns:
        for sigma in sigmas:
            mean, se = max_bid_bias_mc(n, sigma, samples, rng)
            rows.append(OstatRow(n, sigma, max_bid_bias(n, sigma), mean, se))
    return rows


# ---------------------------------------------------------------------------
# empirical r-bar


@dataclass(frozen=True)
class RbarSample:
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.size and not (self.values > 0).all():
            raise ValueError("r-bar multipliers must be positive")

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def median(self) -> float:
        return float(np.median(self.values))

    @property
    def pr_above_one(self) -> float:
        return float((self.values > 1.0).mean())

    @property
    def pr_equal_one(self) -> float:
        return float((self.values == 1.0).mean())

    @property
    def mean_log(self) -> float:
        return float(np.log(self.values).mean())


def rbar_from_series(series: np.ndarray, epoch_length: int, initial: float) -> np.ndarray:
    """Per-epoch multipliers of one value series sampled after each tick.

    The update fires at ticks ``T-1, 2T-1, ...``; the multiplier is the ratio of
    consecutive boundary values, with ``initial`` standing before the first.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size == 0 or np.isnan(series).any():
        raise ValueError("value series must be a non-empty 1-D array without gaps")
    boundaries = series[epoch_length - 1::epoch_length]
    prev = np.concatenate(([initial], boundaries[:-1]))
    return boundaries / prev


def rbar_stats(
    dataset: Union["RunDataset", np.ndarray],
    epoch_length: Optional[int] = None,
    initial: Optional[float] = None,
) -> RbarSample:
    """Pool the per-epoch multipliers of every seed into one sample.

    Accepts a :class:`RunDataset` (defaults taken from its config) or a raw
    ``(n_seeds, ticks)`` array of value series.
    """
    if hasattr(dataset, "columns"):
        if "price" not in dataset.columns:
            raise ValueError("dataset has no value series")
        config = dataset.config
        epoch_length = epoch_length or config.init_patience
        initial = config.initial_price if initial is None else initial
        series = dataset.columns["price"]
    else:
        series = np.atleast_2d(np.asarray(dataset, dtype=float))
        if epoch_length is None or initial is None:
            raise ValueError("epoch_length and initial are required for a raw array")
    pooled = [rbar_from_series(row, epoch_length, initial) for row in series]
    return RbarSample(np.concatenate(pooled) if pooled else np.empty(0))


@dataclass(frozen=True)
class JensenReport:
    mean_log: float
    log_mean: float

    @property
    def gap(self) -> float:
        return self.log_mean - self.mean_log

    @property
    def holds(self) -> bool:
        # allow for round-off when every multiplier is identical
        return self.mean_log <= self.log_mean + 1e-12


def jensen_gap_check(sample: Union[RbarSample, Iterable[float]]) -> JensenReport:
    values = sample.values if isinstance(sample, RbarSample) else np.asarray(list(sample), dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    report = JensenReport(float(np.log(values).mean()), float(math.log(values.mean())))
    if not report.holds:
        raise AssertionError(f"mean log {report.mean_log} exceeds log mean {report.log_mean}")
    return report
