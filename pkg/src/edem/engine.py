"""Market state and the tick loop.

Every stochastic draw in a run comes from one ``random.Random`` seeded with
the run seed. The order in which the stream is consumed is listed in
:data:`DRAW_ORDER`; its hash is written into every dataset header so that a
change to the consumption order is visible in the output files.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import balancer, clearing
from .agents import Buyer, ContractError, Seller, purge_bids, remove_bid, wrap
from .config import ConfigError, LinearSchedules, RunConfig

DRAW_ORDER = (
    "init: seller cells via random.sample over all cell indices",
    "init: per seller in spawn order: u, ask factor (DE only), patience (DE only)",
    "init: per buyer in spawn order: u, x, y, heading",
    "tick: shuffle of buyers (spawn order) followed by sellers (spawn order)",
    "tick: per activated buyer without delay: bid eps if on an unbid seller cell, then heading wiggle",
    "tick: per timed-out seller: DE redraw patience; DE sale respawns seller then buyer",
    "spawn seller: rejection-sampled free cell (randrange per try), u, ask eps (DE), patience (DE)",
    "spawn buyer: u, x, y, heading",
    "DE balance (tick % T_B == 0): seller side then buyer side, victim via choice",
    "EDEM epoch (cycle counter 0): value update, then Bernoulli swap draw if frac(|C_b|) > 0, then victim choice per swap",
)


def registry_hash() -> str:
    """Short digest of :data:`DRAW_ORDER`."""
    return hashlib.sha256("\n".join(DRAW_ORDER).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TickRecord:
    seed: int
    tick: int
    price: float
    sellers: int
    buyers: int
    implied_equilibrium: Optional[float]
    window_fill: Optional[int]
    sigma_bar: Optional[float]
    rbar: Optional[float]


class Market:
    """Full mutable state of one run: grid, homes, agents, books and clock."""

    def __init__(self, config: RunConfig, seed: int, bid_log: Optional[list] = None):
        config.validate()
        self.config = config
        self.seed = seed
        self.rng = random.Random(seed)
        self.is_edem = config.is_edem
        self.width = config.width
        self.height = config.height
        self.n_cells = self.width * self.height
        self.bid_log = bid_log

        # live copies of the parameters that shocks and growth may change
        self.schedules = config.schedules
        self.max_patience = config.max_patience
        self.sigma_bar = config.sigma_bar

        self.fair_values = np.full(self.n_cells, config.fair_value)
        self.values = np.full(self.n_cells, config.initial_price)
        self.last_sale_price = np.full(self.n_cells, np.nan)
        self.last_sale_tick = np.full(self.n_cells, -1, dtype=np.int64)

        self.buyers: dict[int, Buyer] = {}
        self.sellers: dict[int, Seller] = {}
        self.occupancy: dict[int, Seller] = {}
        self._next_id = 0

        self.tick = 0
        self.window = clearing.SaleWindow(config.window)
        self.price = config.initial_price
        self.ledger = clearing.EpochLedger()
        self.cycle_counter = config.init_patience - 1
        self.epoch = 0
        self.boundary_values = [config.initial_price]
        self.rbar_history: list[float] = []
        self._shocks = list(config.shocks)
        self.records: list[TickRecord] = []
        self._populate()

    # -- setup -------------------------------------------------------------

    def _populate(self) -> None:
        cfg = self.config
        rng = self.rng
        cells = rng.sample(range(self.n_cells), cfg.initial_sellers)
        for cell in cells:
            u = rng.random()
            if self.is_edem:
                ask, patience = self.values[cell], cfg.init_patience
            else:
                ask = cfg.initial_price * (1.0 + rng.uniform(-cfg.sigma_bar, cfg.sigma_bar))
                patience = rng.randrange(cfg.init_patience)
            self._add_seller(u, cell, float(ask), patience)
        for _ in range(cfg.initial_buyers):
            self.spawn_buyer()

    def _new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def _add_seller(self, u: float, cell: int, ask: float, patience: int) -> Seller:
        seller = Seller(self._new_id(), u, cell, ask, patience)
        if not self.is_edem:
            # a listed DE home is valued at its list price
            self.values[cell] = ask
        self.sellers[seller.id] = seller
        self.occupancy[cell] = seller
        return seller

    # -- agent lifecycle ---------------------------------------------------

    def home_value(self, cell: int) -> float:
        return float(self.values[cell])

    def spawn_patience(self) -> int:
        """Patience of a newly spawned DE seller: uniform on ``[respawn_patience_min, init_patience)``.

        The interval is empty at every preset, in which case the lower bound is used.
        """
        lo, hi = self.config.respawn_patience_min, self.config.init_patience
        if hi <= lo:
            return lo
        return self.rng.randrange(lo, hi)

    def redraw_patience(self) -> int:
        if self.is_edem:
            return self.config.init_patience
        return self.rng.randrange(self.max_patience)

    def spawn_seller(self, respawn: bool = True) -> Seller:
        if len(self.occupancy) >= self.n_cells:
            raise ConfigError("no free cell left for a new seller")
        rng = self.rng
        cell = rng.randrange(self.n_cells)
        while cell in self.occupancy:
            cell = rng.randrange(self.n_cells)
        u = rng.random()
        if self.is_edem:
            return self._add_seller(u, cell, self.home_value(cell), self.config.init_patience)
        sigma = u * self.sigma_bar
        ask = self.price * (1.0 + rng.uniform(-sigma, sigma))
        return self._add_seller(u, cell, ask, self.spawn_patience())

    def spawn_buyer(self) -> Buyer:
        rng = self.rng
        u = rng.random()
        x = rng.uniform(0, self.width)
        y = rng.uniform(0, self.height)
        heading = rng.uniform(0, 360)
        x, y = wrap(x, y, self.width, self.height)
        buyer = Buyer(self._new_id(), u, x, y, heading)
        self.buyers[buyer.id] = buyer
        return buyer

    def spawn(self, side: str):
        return self.spawn_seller() if side == "seller" else self.spawn_buyer()

    def remove_seller(self, seller: Seller) -> None:
        if not seller.alive:
            raise ContractError(f"seller {seller.id} already removed")
        purge_bids(seller, self)
        del self.occupancy[seller.cell]
        del self.sellers[seller.id]
        seller.alive = False

    def remove_buyer(self, buyer: Buyer) -> None:
        if not buyer.alive:
            raise ContractError(f"buyer {buyer.id} already removed")
        purge_bids(buyer, self)
        self.ledger.forget(buyer.id)
        del self.buyers[buyer.id]
        buyer.alive = False

    def count(self, side: str) -> int:
        return len(self.sellers) if side == "seller" else len(self.buyers)

    def remove_random(self, side: str) -> None:
        pool = self.sellers if side == "seller" else self.buyers
        victim = pool[self.rng.choice(list(pool))]
        if side == "seller":
            self.remove_seller(victim)
        else:
            self.remove_buyer(victim)

    def commit(self, seller: Seller, buyer: Buyer, amount: float) -> None:
        """A buyer accepted ``seller``'s offer at ``amount``."""
        if self.is_edem:
            # a win: no sale, the buyer records the bid-to-value ratio
            self.ledger.record(buyer.id, amount / self.home_value(seller.cell))
            remove_bid(buyer, seller)
            seller.patience = self.redraw_patience()
        else:
            clearing.complete_sale(self, seller, buyer, amount)

    # -- clock -------------------------------------------------------------

    def implied_equilibrium(self) -> float:
        return self.schedules.equilibrium_price()

    def apply_shocks(self) -> None:
        """Apply every scheduled shock whose tick has arrived to the live parameters."""
        while self._shocks and self._shocks[0].tick <= self.tick:
            shock = self._shocks.pop(0)
            if shock.kind == "demand_intercept":
                self.schedules = LinearSchedules(
                    self.schedules.supply_intercept, self.schedules.supply_slope,
                    shock.value, self.schedules.demand_slope,
                )
            elif shock.kind == "supply_intercept":
                self.schedules = LinearSchedules(
                    shock.value, self.schedules.supply_slope,
                    self.schedules.demand_intercept, self.schedules.demand_slope,
                )
            else:
                self.max_patience = int(shock.value)

    def _epoch(self) -> float:
        rbar = clearing.epoch_update(self)
        self.rbar_history.append(rbar)
        self.epoch += 1
        self.price = float(self.values.mean())
        self.boundary_values.append(self.price)
        # the balancer reacts to the previous epoch's change, one epoch late
        if len(self.boundary_values) > 2:
            diff = self.boundary_values[-2] - self.boundary_values[-3]
            sign = (diff > 0) - (diff < 0)
        else:
            sign = 0
        self.sigma_bar = self.config.sigma_at_epoch(self.epoch)
        balancer.edem_balance(self, self.config.c_b, sign)
        self.cycle_counter = self.config.init_patience - 1
        return rbar

    def step(self) -> TickRecord:
        self.apply_shocks()
        order: list = list(self.buyers.values())
        order.extend(self.sellers.values())
        self.rng.shuffle(order)
        for agent in order:
            if agent.alive:
                agent.step(self)

        rbar = None
        if self.is_edem:
            if self.cycle_counter == 0:
                rbar = self._epoch()
            else:
                self.cycle_counter -= 1
            record = TickRecord(
                self.seed, self.tick, self.price, len(self.sellers), len(self.buyers),
                None, None, self.sigma_bar, rbar,
            )
        else:
            if self.tick % self.config.balance_period == 0:
                balancer.de_balance(self, self.schedules)
            record = TickRecord(
                self.seed, self.tick, self.price, len(self.sellers), len(self.buyers),
                self.implied_equilibrium(), self.window.fill, None, None,
            )
        self.records.append(record)
        self.tick += 1
        return record

    def run(self, ticks: Optional[int] = None) -> list[TickRecord]:
        for _ in range(self.config.ticks if ticks is None else ticks):
            self.step()
        return self.records

    # -- diagnostics -------------------------------------------------------

    def check_mirror(self) -> None:
        """Raise if the buyer-side and seller-side books disagree."""
        from_buyers = {(b.id, s, amt) for b in self.buyers.values() for s, amt in b.bids.items()}
        from_sellers = {(b, s.id, amt) for s in self.sellers.values() for b, amt in s.book.items()}
        if from_buyers != from_sellers:
            raise AssertionError(f"bid books out of sync: {from_buyers ^ from_sellers}")


def init_market(config: RunConfig, seed: int) -> Market:
    return Market(config, seed)


def step(market: Market) -> Market:
    market.step()
    return market


def run_seed(config: RunConfig, seed: int) -> list[TickRecord]:
    return Market(config, seed).run()


__all__ = ["Market", "TickRecord", "DRAW_ORDER", "registry_hash", "init_market", "step", "run_seed", "wrap"]
