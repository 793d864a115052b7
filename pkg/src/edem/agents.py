"""Buyers and sellers.

Bids live in two mirrored dictionaries: ``buyer.bids[seller_id]`` and
``seller.book[buyer_id]`` always hold the same amount. Every mutation goes
through :func:`place_bid`, :func:`remove_bid` or :func:`purge_bids` so the two
sides cannot drift.
"""

from __future__ import annotations

import math
import random
from typing import TYPE_CHECKING, Sequence

from .config import ConfigError

if TYPE_CHECKING:
    from .engine import Market


class ContractError(ValueError):
    """A function was called outside its documented preconditions."""


def estimate(value: float, sigma: float, rng: random.Random) -> float:
    """Noisy valuation ``value * (1 + eps)``, ``eps ~ U[-sigma, +sigma]``.

    Consumes exactly one draw from ``rng`` on every call, including ``sigma == 0``.
    """
    if not 0 <= sigma < 1:
        raise ConfigError(f"dispersion must lie in [0, 1), got {sigma}")
    if not value > 0:
        raise ContractError(f"value must be positive, got {value}")
    eps = rng.uniform(-sigma, sigma)
    return value * (1.0 + eps)


def accept(offered: float, outstanding: Sequence[float], rule: str = "netlogo") -> bool:
    """Buyer commitment rule.

    ``netlogo`` commits iff the offered bid is at or above the mean of the
    buyer's outstanding bids (offered bid included). ``prose`` is the inverted
    rule: commit iff strictly below the mean.
    """
    if not outstanding:
        raise ContractError("a buyer offered a contract must have at least one outstanding bid")
    benchmark = math.fsum(outstanding) / len(outstanding)
    if rule == "netlogo":
        return offered >= benchmark
    if rule == "prose":
        return offered < benchmark
    raise ConfigError(f"unknown accept rule {rule!r}")


def wrap(x: float, y: float, width: float, height: float) -> tuple[float, float]:
    """Reduce a position onto the torus ``[0, width) x [0, height)``."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ContractError(f"position must be finite, got ({x}, {y})")
    x %= width
    y %= height
    # float modulo can round up to the extent itself for tiny negative inputs
    if x >= width:
        x = 0.0
    if y >= height:
        y = 0.0
    return x, y


class Buyer:
    __slots__ = ("id", "u", "x", "y", "heading", "bids", "delay", "alive")

    def __init__(self, agent_id: int, u: float, x: float, y: float, heading: float):
        self.id = agent_id
        # dispersion as a fraction of the market-wide bound: sigma_i = u * sigma_bar
        self.u = u
        self.x = x
        self.y = y
        self.heading = heading
        self.bids: dict[int, float] = {}
        self.delay = 0
        self.alive = True

    def step(self, market: "Market") -> None:
        buyer_step(self, market)

    def __repr__(self) -> str:
        return f"Buyer(id={self.id}, pos=({self.x:.2f}, {self.y:.2f}), bids={len(self.bids)})"


class Seller:
    __slots__ = ("id", "u", "cell", "ask", "patience", "book", "alive")

    def __init__(self, agent_id: int, u: float, cell: int, ask: float, patience: int):
        self.id = agent_id
        self.u = u
        self.cell = cell
        self.ask = ask
        self.patience = patience
        self.book: dict[int, float] = {}
        self.alive = True

    @property
    def best_bid(self) -> tuple[int, float] | None:
        """Highest ``(buyer_id, amount)`` in the book; ties go to the lowest buyer id."""
        if not self.book:
            return None
        best_id = None
        best_amount = -math.inf
        for buyer_id, amount in self.book.items():
            if amount > best_amount or (amount == best_amount and buyer_id < best_id):
                best_id, best_amount = buyer_id, amount
        return best_id, best_amount

    def step(self, market: "Market") -> None:
        seller_step(self, market)

    def __repr__(self) -> str:
        return f"Seller(id={self.id}, cell={self.cell}, ask={self.ask:.3f}, book={len(self.book)})"


# ---------------------------------------------------------------------------
# mirrored bid books


def place_bid(buyer: Buyer, seller: Seller, amount: float) -> None:
    if amount <= 0:
        raise ContractError(f"bid amount must be positive, got {amount}")
    buyer.bids[seller.id] = amount
    seller.book[buyer.id] = amount


def remove_bid(buyer: Buyer, seller: Seller) -> None:
    del buyer.bids[seller.id]
    del seller.book[buyer.id]


def purge_bids(agent: Buyer | Seller, market: "Market") -> None:
    """Remove every bid touching ``agent`` from both sides of the mirror."""
    if isinstance(agent, Buyer):
        for seller_id in agent.bids:
            del market.sellers[seller_id].book[agent.id]
        agent.bids.clear()
    else:
        for buyer_id in agent.book:
            del market.buyers[buyer_id].bids[agent.id]
        agent.book.clear()


# ---------------------------------------------------------------------------
# behaviour


def buyer_step(buyer: Buyer, market: "Market") -> None:
    """Bid on the seller underfoot (once per seller), then wiggle and step forward."""
    if buyer.delay > 0:
        buyer.delay -= 1
        return
    rng = market.rng
    width, height = market.width, market.height
    seller = market.occupancy.get(int(buyer.y) * width + int(buyer.x))
    if seller is not None and seller.id not in buyer.bids:
        sigma = buyer.u * market.sigma_bar
        amount = market.home_value(seller.cell) * (1.0 + rng.uniform(-sigma, sigma))
        place_bid(buyer, seller, amount)
        if market.bid_log is not None:
            market.bid_log.append((market.tick, buyer.id, seller.id, amount, market.home_value(seller.cell)))
    buyer.heading = (buyer.heading + rng.uniform(-90.0, 90.0)) % 360.0
    rad = math.radians(buyer.heading)
    buyer.x, buyer.y = wrap(buyer.x + math.sin(rad), buyer.y + math.cos(rad), width, height)


def seller_step(seller: Seller, market: "Market") -> None:
    """Patience countdown; on timeout drop-and-lower or offer to the best bidder."""
    seller.patience -= 1
    if seller.patience > 0:
        return
    config = market.config
    if market.is_edem:
        # speculative-market sellers list at their own noisy read of the current value
        sigma = config.edem_ask_scale * seller.u * market.sigma_bar
        seller.ask = market.home_value(seller.cell) * (1.0 + market.rng.uniform(-sigma, sigma))
    best = seller.best_bid
    if best is None or best[1] < seller.ask:
        if not market.is_edem:
            # a rejected low bid is stronger news than silence
            dec = config.ask_decrement if best is not None else config.ask_decrement_empty
            seller.ask *= 1.0 - dec
            market.values[seller.cell] = seller.ask
        if best is not None:
            remove_bid(market.buyers[best[0]], seller)
        seller.patience = market.redraw_patience()
        return
    buyer_id, amount = best
    buyer = market.buyers[buyer_id]
    if accept(amount, list(buyer.bids.values()), config.accept_rule):
        market.commit(seller, buyer, amount)
    else:
        remove_bid(buyer, seller)
        buyer.delay = config.decline_delay
        seller.patience = market.redraw_patience()
