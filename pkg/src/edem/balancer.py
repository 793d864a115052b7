"""Population dynamics for both market variants."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

from .config import LinearSchedules

if TYPE_CHECKING:
    from .engine import Market

FLOOR = 1


def de_balance(market: "Market", schedules: LinearSchedules) -> tuple[int, int]:
    """Nudge each side one agent toward its linear target at the current price.

    A side below ``floor(target)`` gains an agent; above ``ceil(target)`` it loses
    a uniformly chosen one. Returns the (seller, buyer) population deltas.
    """
    price = market.price
    deltas = []
    for side, target in (("seller", schedules.supply(price)), ("buyer", schedules.demand(price))):
        count = market.count(side)
        if count < math.floor(target):
            market.spawn(side)
            deltas.append(1)
        elif count > math.ceil(target) and count > FLOOR:
            market.remove_random(side)
            deltas.append(-1)
        else:
            deltas.append(0)
    return deltas[0], deltas[1]


def swap_count(c_b: float, rng) -> int:
    """``floor(|c_b|)`` swaps plus one more with probability ``frac(|c_b|)``.

    Consumes one uniform draw only when the fractional part is non-zero.
    """
    magnitude = abs(c_b)
    whole = math.floor(magnitude)
    frac = magnitude - whole
    if frac > 0 and rng.random() < frac:
        whole += 1
    return whole


def edem_balance(market: "Market", c_b: float, delta_p_sign: int) -> tuple[int, int]:
    """Signed fractional balancer with a one-agent floor on each side.

    ``sign(c_b) * delta_p_sign == +1`` turns buyers into sellers; ``-1`` the
    reverse. Returns the (seller, buyer) population deltas.
    """
    direction = int(math.copysign(1, c_b)) * delta_p_sign if c_b else 0
    if direction == 0:
        return 0, 0
    n = swap_count(c_b, market.rng)
    src, dst = ("buyer", "seller") if direction > 0 else ("seller", "buyer")
    moved = 0
    for _ in range(n):
        if market.count(src) <= FLOOR:
            break
        market.remove_random(src)
        market.spawn(dst)
        moved += 1
    return (moved, -moved) if direction > 0 else (-moved, moved)
