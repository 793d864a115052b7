"""Run configuration: the structural parameter vector of one simulation.

A :class:`RunConfig` is immutable. Anything that changes during a run (shocked
schedule intercepts, rebound patience, growing dispersion) lives on the market
state as a live copy, so the config echoed in an output header is always the
one the run started from.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

DE = "DE"
EDEM = "EDEM"
VARIANTS = (DE, EDEM)
ACCEPT_RULES = ("netlogo", "prose")
SHOCK_KINDS = ("demand_intercept", "supply_intercept", "max_patience")


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class LinearSchedules:
    """Linear supply/demand targets ``Qs(p) = a_s + b_s p``, ``Qd(p) = a_d + b_d p``."""

    supply_intercept: float = 0.0
    supply_slope: float = 0.5
    demand_intercept: float = 100.0
    demand_slope: float = -0.5

    def supply(self, price: float) -> float:
        return self.supply_intercept + self.supply_slope * price

    def demand(self, price: float) -> float:
        return self.demand_intercept + self.demand_slope * price

    def equilibrium_price(self) -> float:
        denom = self.supply_slope - self.demand_slope
        if denom == 0:
            raise ConfigError("parallel supply and demand schedules have no equilibrium")
        return (self.demand_intercept - self.supply_intercept) / denom

    def equilibrium_quantity(self) -> float:
        return self.supply(self.equilibrium_price())

    def validate(self) -> None:
        if not self.supply_slope > 0:
            raise ConfigError(f"supply slope must be positive, got {self.supply_slope}")
        if not self.demand_slope < 0:
            raise ConfigError(f"demand slope must be negative, got {self.demand_slope}")
        p, q = self.equilibrium_price(), self.equilibrium_quantity()
        if not (math.isfinite(p) and p > 0 and math.isfinite(q) and q > 0):
            raise ConfigError(f"implied equilibrium ({p}, {q}) is not finite and positive")


@dataclass(frozen=True)
class Shock:
    """A scheduled mutation of the live parameters, applied at the start of ``tick``."""

    tick: int
    kind: str
    value: float

    def __post_init__(self) -> None:
        if self.kind not in SHOCK_KINDS:
            raise ConfigError(f"unknown shock kind {self.kind!r}; expected one of {SHOCK_KINDS}")
        if self.tick < 0:
            raise ConfigError(f"shock tick must be non-negative, got {self.tick}")


@dataclass(frozen=True)
class RunConfig:
    """Parameter vector for one run (shared by every seed of a batch).

    ``sigma_bar`` and ``sigma_growth`` are decimals (0.05 means +-5%).
    ``max_patience`` bounds DE seller patience; ``init_patience`` is the EDEM
    epoch length and the EDEM seller patience.
    """

    variant: str = DE
    name: str = "custom"
    schedules: LinearSchedules = field(default_factory=LinearSchedules)
    sigma_bar: float = 0.05
    sigma_growth: float = 0.0
    sigma_cap: float | None = None
    max_patience: int = 50
    init_patience: int = 20
    respawn_patience_min: int = 50
    balance_period: int = 100
    window: int = 25
    c_b: float = 0.0
    n_sellers: int | None = None
    n_buyers: int | None = None
    ticks: int = 20_000
    seeds: tuple[int, ...] = tuple(range(10))
    shocks: tuple[Shock, ...] = ()
    accept_rule: str = "netlogo"
    ask_decrement: float = 0.015
    ask_decrement_empty: float = 0.003
    edem_ask_scale: float = 0.25
    decline_delay: int = 5
    width: int = 32
    height: int = 32
    fair_value: float = 100.0

    def __post_init__(self) -> None:
        # accept lists from callers and loaders; store tuples so the config hashes
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "shocks", tuple(sorted(self.shocks, key=lambda s: s.tick)))

    @property
    def is_edem(self) -> bool:
        return self.variant == EDEM

    @property
    def initial_price(self) -> float:
        """Price before any sale: textbook p* for DE, the fair value for EDEM."""
        if self.is_edem:
            return self.fair_value
        return self.schedules.equilibrium_price()

    @property
    def initial_sellers(self) -> int:
        if self.n_sellers is not None:
            return self.n_sellers
        return 20 if self.is_edem else round(self.schedules.equilibrium_quantity())

    @property
    def initial_buyers(self) -> int:
        if self.n_buyers is not None:
            return self.n_buyers
        return 20 if self.is_edem else round(self.schedules.equilibrium_quantity())

    def sigma_at_epoch(self, epoch: int) -> float:
        sigma = self.sigma_bar + self.sigma_growth * epoch
        if self.sigma_cap is not None:
            sigma = min(sigma, self.sigma_cap)
        return sigma

    def validate(self) -> "RunConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.accept_rule not in ACCEPT_RULES:
            raise ConfigError(f"accept_rule must be one of {ACCEPT_RULES}, got {self.accept_rule!r}")
        if not 0 <= self.sigma_bar < 1:
            raise ConfigError(f"sigma_bar must lie in [0, 1), got {self.sigma_bar}")
        top = self.sigma_cap if self.sigma_cap is not None else self.sigma_at_epoch(self.ticks)
        if self.sigma_growth and top >= 1:
            raise ConfigError("sigma_bar would reach 1 during the run; set sigma_cap below 1")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("grid dimensions must be positive")
        if self.initial_sellers > self.width * self.height:
            raise ConfigError(
                f"{self.initial_sellers} sellers requested but the grid has "
                f"{self.width * self.height} cells"
            )
        if self.initial_sellers < 1 or self.initial_buyers < 1:
            raise ConfigError("each side needs at least one agent")
        for name in ("max_patience", "init_patience", "balance_period", "window", "ticks"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0 <= self.ask_decrement < 1 and 0 < self.ask_decrement_empty < 1):
            raise ConfigError("ask_decrement must lie in [0, 1) and ask_decrement_empty in (0, 1)")
        if not 0 <= self.edem_ask_scale <= 1:
            raise ConfigError("edem_ask_scale must lie in [0, 1]")
        if self.decline_delay < 0:
            raise ConfigError("decline_delay must be non-negative")
        if self.fair_value <= 0:
            raise ConfigError("fair_value must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.is_edem:
            self.schedules.validate()
        return self

    def replace(self, **changes: Any) -> "RunConfig":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# flat key = value text format

_SCHEDULE_KEYS = {f.name for f in dataclasses.fields(LinearSchedules)}
_PERCENT_KEYS = {"sigma_bar", "sigma_growth", "sigma_cap"}


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_items(config: RunConfig) -> list[tuple[str, str]]:
    """Flatten ``config`` into ordered ``(key, value)`` string pairs."""
    items: list[tuple[str, str]] = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name == "schedules":
            for key in sorted(_SCHEDULE_KEYS):
                items.append((key, _format_value(getattr(value, key))))
        elif f.name == "seeds":
            items.append(("seeds", ",".join(str(s) for s in value)))
        elif f.name == "shocks":
            items.append(("shocks", ";".join(f"{s.tick}:{s.kind}:{s.value!r}" for s in value)))
        else:
            items.append((f.name, "" if value is None else _format_value(value)))
    return items


def dumps_config(config: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_items(config))


def _parse_number(key: str, text: str) -> float:
    text = text.strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    value = float(text)
    return value


def config_from_items(items: dict[str, str]) -> RunConfig:
    """Build a config from string pairs.

    Dispersion keys accept a trailing ``%`` (``sigma_bar = 15%``) and are
    stored as decimals.
    """
    kwargs: dict[str, Any] = {}
    sched: dict[str, float] = {}
    types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    for key, raw in items.items():
        raw = raw.strip()
        if key in _SCHEDULE_KEYS:
            sched[key] = float(raw)
        elif key == "seeds":
            kwargs["seeds"] = tuple(parse_seeds(raw))
        elif key == "shocks":
            shocks = []
            for part in filter(None, raw.split(";")):
                tick, kind, value = part.split(":")
                shocks.append(Shock(int(tick), kind.strip(), float(value)))
            kwargs["shocks"] = tuple(shocks)
        elif key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        elif raw == "" and key in ("n_sellers", "n_buyers", "sigma_cap"):
            kwargs[key] = None
        elif key in _PERCENT_KEYS:
            kwargs[key] = _parse_number(key, raw)
        elif key in ("variant", "name", "accept_rule"):
            kwargs[key] = raw
        elif "int" in str(types[key]) and "float" not in str(types[key]):
            kwargs[key] = int(raw)
        else:
            kwargs[key] = float(raw)
    if sched:
        kwargs["schedules"] = LinearSchedules(**sched)
    return RunConfig(**kwargs)


def loads_config(text: str) -> RunConfig:
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        items[key.strip()] = value
    return config_from_items(items)


def parse_seeds(text: str) -> list[int]:
    """Parse ``"0,1,2"`` or ``"0-9"`` (or a mix) into a seed list."""
    seeds: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds
