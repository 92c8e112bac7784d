"""Market participants: classed generators with offer blocks, loads with bid blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

from .grid import BusId, Network, ValidationReport

GREEN = "green"
BLACK = "black"
EnergyClass = Literal["green", "black"]

# Importer defaults; green/black is otherwise an input label.
FUEL_CLASS = {
    "wind": GREEN, "solar": GREEN, "hydro": GREEN, "nuclear": GREEN,
    "coal": BLACK, "gas": BLACK, "ng": BLACK, "oil": BLACK, "dfo": BLACK,
}


@dataclass(frozen=True)
class OfferBlock:
    quantity_max: float
    price: float
    quantity_min: float = 0.0


@dataclass(frozen=True)
class BidBlock:
    quantity_max: float
    value: float
    quantity_min: float = 0.0


@dataclass(frozen=True)
class Generator:
    id: str
    bus: BusId
    energy_class: EnergyClass
    blocks: tuple[OfferBlock, ...]
    emission_factor: float = 0.0  # kg CO2e / MWh
    fuel: str = ""

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def capacity(self) -> float:
        return sum(b.quantity_max for b in self.blocks)

    @property
    def is_green(self) -> bool:
        return self.energy_class == GREEN


@dataclass(frozen=True)
class Load:
    id: str
    bus: BusId
    blocks: tuple[BidBlock, ...]
    alpha: float = 0.0  # uniform green premium, $/MWh

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def capacity(self) -> float:
        return sum(b.quantity_max for b in self.blocks)


@dataclass(frozen=True)
class OrderBook:
    generators: tuple[Generator, ...] = ()
    loads: tuple[Load, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "loads", tuple(self.loads))

    def generator(self, gen_id: str) -> Generator:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise KeyError(gen_id)

    def load(self, load_id: str) -> Load:
        for l in self.loads:
            if l.id == load_id:
                return l
        raise KeyError(load_id)

    def with_alphas(self, alphas) -> OrderBook:
        """Copy with ``alpha`` replaced per load id (mapping) or uniformly (scalar)."""
        if isinstance(alphas, (int, float)):
            loads = [replace(l, alpha=float(alphas)) for l in self.loads]
        else:
            loads = [replace(l, alpha=float(alphas.get(l.id, l.alpha))) for l in self.loads]
        return OrderBook(self.generators, loads)

    def with_load_values(self, value: float) -> OrderBook:
        """Copy with every bid block valued at ``value``."""
        loads = [replace(l, blocks=[replace(b, value=float(value)) for b in l.blocks]) for l in self.loads]
        return OrderBook(self.generators, loads)


def _check_block(report: ValidationReport, who: str, qmin: float, qmax: float, price: float) -> None:
    if not (math.isfinite(qmin) and math.isfinite(qmax) and 0 <= qmin <= qmax):
        report.add("invalid block bounds", f"{who} has block bounds [{qmin}, {qmax}]", who)
    if not math.isfinite(price):
        report.add("non-finite price", f"{who} has non-finite price {price}", who)


def validate_orderbook(ob: OrderBook, net: Network) -> ValidationReport:
    report = ValidationReport()
    buses = set(net.bus_index)
    ids: set = set()
    for g in ob.generators:
        who = f"generator {g.id!r}"
        if g.id in ids:
            report.add("duplicate participant id", f"{who} id is reused", g.id)
        ids.add(g.id)
        if g.bus not in buses:
            report.add("dangling bus", f"{who} sits at unknown bus {g.bus!r}", g.id)
        if g.energy_class not in (GREEN, BLACK):
            report.add("unknown energy class", f"{who} has class {g.energy_class!r}", g.id)
        if not (g.emission_factor >= 0) or not math.isfinite(g.emission_factor):
            report.add("negative emission factor", f"{who} has emission factor {g.emission_factor}", g.id)
        for b in g.blocks:
            _check_block(report, who, b.quantity_min, b.quantity_max, b.price)
        prices = [b.price for b in g.blocks]
        if any(later < earlier for earlier, later in zip(prices, prices[1:])):
            report.add("non-monotone offer", f"{who} offers prices {prices} (must be nondecreasing)", g.id)
    for l in ob.loads:
        who = f"load {l.id!r}"
        if l.id in ids:
            report.add("duplicate participant id", f"{who} id is reused", l.id)
        ids.add(l.id)
        if l.bus not in buses:
            report.add("dangling bus", f"{who} sits at unknown bus {l.bus!r}", l.id)
        if not (l.alpha >= 0) or not math.isfinite(l.alpha):
            report.add("negative alpha", f"{who} bids alpha {l.alpha}", l.id)
        for b in l.blocks:
            _check_block(report, who, b.quantity_min, b.quantity_max, b.value)
        values = [b.value for b in l.blocks]
        if any(later > earlier for earlier, later in zip(values, values[1:])):
            report.add("non-monotone bid", f"{who} bids values {values} (must be nonincreasing)", l.id)
    return report


def total_capacity(ob: OrderBook, energy_class: str = "all") -> float:
    """Sum of block ``quantity_max`` over generators of ``energy_class`` (green, black or all)."""
    if energy_class not in (GREEN, BLACK, "all"):
        raise ValueError(f"unknown energy class {energy_class!r}")
    return float(sum(g.capacity for g in ob.generators if energy_class == "all" or g.energy_class == energy_class))
