"""Price formation: the rolling sale window and the per-epoch value update."""

from __future__ import annotations

import math
from collections import deque
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

from .agents import Buyer, ContractError, Seller, purge_bids

if TYPE_CHECKING:
    from .engine import Market


class SaleWindow:
    """The last ``capacity`` sale prices plus a running count of all sales."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self.entries: deque[float] = deque(maxlen=capacity)
        self.total_sales = 0

    def append(self, price: float) -> None:
        self.entries.append(price)
        self.total_sales += 1

    @property
    def fill(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def market_price(window: SaleWindow, fallback: float) -> float:
    """Mean of the window entries, or ``fallback`` before the first sale."""
    if not window.entries:
        return fallback
    return math.fsum(window.entries) / len(window.entries)


def complete_sale(market: "Market", seller: Seller, buyer: Buyer, price: float) -> None:
    """Record a sale, retire both counterparties and spawn a replacement pair."""
    if not (seller.alive and buyer.alive):
        raise ContractError("sale involves an agent that has already left the market")
    market.window.append(price)
    market.last_sale_price[seller.cell] = price
    market.last_sale_tick[seller.cell] = market.tick
    market.remove_seller(seller)
    market.remove_buyer(buyer)
    market.values[seller.cell] = price
    market.price = market_price(market.window, market.config.initial_price)
    market.spawn_seller(respawn=True)
    market.spawn_buyer()


# ---------------------------------------------------------------------------
# epoch update


def mean_of_minima(min_ratios: Sequence[float]) -> float:
    """Default update statistic: arithmetic mean of the buyers' minimum ratios."""
    if not min_ratios:
        return 1.0
    return math.fsum(min_ratios) / len(min_ratios)


class EpochLedger:
    """Winning bid-to-value ratios per buyer for the epoch in progress."""

    def __init__(self) -> None:
        self.wins: dict[int, list[float]] = {}

    def record(self, buyer_id: int, ratio: float) -> None:
        if not ratio > 0:
            raise ContractError(f"win ratio must be positive, got {ratio}")
        self.wins.setdefault(buyer_id, []).append(ratio)

    def forget(self, buyer_id: int) -> None:
        self.wins.pop(buyer_id, None)

    @property
    def yellow(self) -> list[int]:
        return sorted(b for b, ratios in self.wins.items() if ratios)

    def min_ratios(self) -> list[float]:
        return [min(self.wins[b]) for b in self.yellow]

    def reset(self) -> None:
        self.wins.clear()


def compute_rbar(ledger: EpochLedger, statistic: Callable[[Sequence[float]], float] = mean_of_minima) -> float:
    return statistic(ledger.min_ratios())


def epoch_update(market: "Market", statistic: Callable[[Sequence[float]], float] = mean_of_minima) -> float:
    """Scale every home value by r-bar, reset the ledger and clear all epoch bids."""
    rbar = compute_rbar(market.ledger, statistic)
    market.values *= rbar
    market.ledger.reset()
    for seller in market.sellers.values():
        seller.book.clear()
    for buyer in market.buyers.values():
        buyer.bids.clear()
    return rbar


def window_oracle(sales: Iterable[float], capacity: int) -> list[float]:
    """Reference answer for the window contents: the tail of the full sale log."""
    log = list(sales)
    return log[-capacity:] if log else []


__all__ = [
    "SaleWindow",
    "market_price",
    "complete_sale",
    "EpochLedger",
    "mean_of_minima",
    "compute_rbar",
    "epoch_update",
    "window_oracle",
    "purge_bids",
]
