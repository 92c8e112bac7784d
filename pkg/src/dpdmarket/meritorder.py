"""Copper-plate clearing from aggregated step curves.

Offers are stacked cheapest first (the merit order), bids most valuable
first, and the uniform price and volume come from where the two staircases
cross. Block minimum quantities are ignored here: the curves describe what
participants are willing to trade, not must-run obligations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from .orderbook import GREEN, OrderBook

_EPS = 1e-12


@dataclass(frozen=True)
class CurveBlock:
    quantity: float
    price: float
    participant: str
    green: bool = False


@dataclass(frozen=True)
class StepCurve:
    """Staircase with one entry per contributing block, in fill order.

    ``steps`` gives the merged breakpoints: ``(cumulative MWh, $/MWh)`` where
    each price holds up to its cumulative quantity.
    """

    kind: Literal["supply", "demand"]
    blocks: tuple[CurveBlock, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        prices = [b.price for b in self.blocks]
        ordered = all(a <= b for a, b in zip(prices, prices[1:])) if self.kind == "supply" \
            else all(a >= b for a, b in zip(prices, prices[1:]))
        if not ordered:
            raise ValueError(f"{self.kind} curve prices are not monotone")
        if any(not (b.quantity > 0) for b in self.blocks):
            raise ValueError("curve blocks must have positive quantity")

    @property
    def steps(self) -> list[tuple[float, float]]:
        out: list[tuple[float, float]] = []
        total = 0.0
        for b in self.blocks:
            total += b.quantity
            if out and out[-1][1] == b.price:
                out[-1] = (total, b.price)
            else:
                out.append((total, b.price))
        return out

    @property
    def total(self) -> float:
        return float(sum(b.quantity for b in self.blocks))

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ClearingPoint:
    price: float | None  # None when the curves never meet
    volume: float
    green_share: float
    degenerate: bool = False


def build_supply_curve(ob: OrderBook) -> StepCurve:
    entries = []
    for g in ob.generators:
        for l, b in enumerate(g.blocks):
            if b.quantity_max > 0:
                entries.append((b.price, g.id, l, CurveBlock(b.quantity_max, b.price, g.id, g.energy_class == GREEN)))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return StepCurve("supply", [e[3] for e in entries])


def build_demand_curve(ob: OrderBook) -> StepCurve:
    entries = []
    for ld in ob.loads:
        for j, b in enumerate(ld.blocks):
            if b.quantity_max > 0:
                entries.append((-b.value, ld.id, j, CurveBlock(b.quantity_max, b.value, ld.id)))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return StepCurve("demand", [e[3] for e in entries])


def intersect(supply: StepCurve, demand: StepCurve) -> ClearingPoint:
    """Uniform price and volume where supply meets demand.

    Trading continues while the next supply unit is no dearer than the next
    demand unit, so flat overlaps clear at the larger volume. The price is the
    flat curve's level at the stopping point; when both curves jump there the
    point is flagged degenerate and priced at the demand value, capped by the
    next supply offer.
    """
    S, D = supply.blocks, demand.blocks
    if supply.kind != "supply" or demand.kind != "demand":
        raise ValueError("intersect expects (supply, demand) curves")
    volume = green = 0.0
    i = j = 0
    rem_s = S[0].quantity if S else 0.0
    rem_d = D[0].quantity if D else 0.0
    while i < len(S) and j < len(D) and S[i].price <= D[j].price:
        q = min(rem_s, rem_d)
        volume += q
        if S[i].green:
            green += q
        rem_s -= q
        rem_d -= q
        if rem_s <= _EPS:
            i += 1
            rem_s = S[i].quantity if i < len(S) else 0.0
        if rem_d <= _EPS:
            j += 1
            rem_d = D[j].quantity if j < len(D) else 0.0

    if volume <= 0:
        return ClearingPoint(None, 0.0, 0.0)

    s_flat = i < len(S) and rem_s < S[i].quantity
    d_flat = j < len(D) and rem_d < D[j].quantity
    s_left = S[i].price if s_flat else S[i - 1].price
    s_right = S[i].price if i < len(S) else math.inf
    d_left = D[j].price if d_flat else D[j - 1].price
    if d_flat:
        price, degenerate = d_left, False
    elif s_flat:
        price, degenerate = s_left, False
    else:
        price, degenerate = min(d_left, s_right), True
    return ClearingPoint(price, volume, green / volume, degenerate)


def write_curve_csv(curve: StepCurve, path) -> Path:
    """Two-column staircase (cumulative MWh, $/MWh) ready for step plotting."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cumulative_mwh", "price_per_mwh"])
        for qty, price in curve.steps:
            w.writerow([f"{qty:.12g}", f"{price:.12g}"])
    return path
