"""RES-share experiments: scaling, premium sampling, deltas, emissions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clearing import ClearingSolution, DpdSolution, clear_dpd, clear_standard, settle
from .grid import Network
from .lpsolve import Tolerances
from .orderbook import BLACK, GREEN, Load, OrderBook, total_capacity

# kg CO2e/MWh; midpoints inside the usual fossil and renewable ranges, not measured data.
DEFAULT_EMISSION_FACTORS = {
    "coal": 1000.0, "gas": 500.0, "ng": 500.0, "oil": 800.0, "dfo": 800.0,
    "nuclear": 5.0, "hydro": 10.0, "wind": 12.0, "solar": 45.0,
}


@dataclass
class ScenarioConfig:
    target_res_share: float = 0.5
    alpha_mean: float = 5.0
    alpha_std: float = 1.0
    rng_seed: int = 0
    # per-fuel overrides applied to generators before clearing; None keeps the book's factors
    emission_factors: dict[str, float] | None = None
    homes_per_mw: float = 800.0

    def __post_init__(self):
        if not 0.0 <= self.target_res_share <= 1.0:
            raise ValueError("target_res_share must lie in [0, 1]")
        if self.alpha_std < 0:
            raise ValueError("alpha_std must be nonnegative")
        if not self.homes_per_mw > 0:
            raise ValueError("homes_per_mw must be positive")


@dataclass
class DispatchDelta:
    delta_green: float
    delta_black: float


@dataclass
class ScenarioReport:
    res_share: float
    delta_green: float
    delta_black: float
    lambda_green: float
    congested_before: int
    congested_after: int
    avg_emissions_before: float
    avg_emissions_after: float
    homes_powered: int
    total_payments: float
    total_revenues: float
    merchandising_surplus: float
    standard_green: float = 0.0
    standard_black: float = 0.0
    dpd_green: float = 0.0
    dpd_black: float = 0.0
    alphas: dict[str, float] = field(default_factory=dict, repr=False)


def res_share(ob: OrderBook) -> float:
    total = total_capacity(ob)
    return total_capacity(ob, GREEN) / total if total > 0 else 0.0


def scale_res(net: Network, ob: OrderBook, target_share: float) -> OrderBook:
    """Rescale block quantities class-wise so green capacity is ``target_share`` of the total.

    Total capacity, locations and prices are preserved. ``net`` is accepted
    for symmetry with the other scenario steps and is not modified.
    """
    if not 0.0 < target_share < 1.0:
        raise ValueError("target share must lie strictly between 0 and 1")
    green, black = total_capacity(ob, GREEN), total_capacity(ob, BLACK)
    if green <= 0 or black <= 0:
        raise ValueError("both green and black capacity must be present to rescale")
    total = green + black
    factors = {GREEN: target_share * total / green, BLACK: (1.0 - target_share) * total / black}
    gens = []
    for g in ob.generators:
        f = factors[g.energy_class]
        if abs(f - 1.0) <= 1e-12:
            gens.append(g)
            continue
        blocks = [replace(b, quantity_min=b.quantity_min * f, quantity_max=b.quantity_max * f) for b in g.blocks]
        gens.append(replace(g, blocks=blocks))
    return OrderBook(gens, ob.loads)


def sample_alphas(loads: list[Load] | tuple[Load, ...], mean: float, std: float, seed: int) -> dict[str, float]:
    """Normal(mean, std) premiums truncated at zero by re-drawing negatives.

    Draws are assigned in sorted load-id order, so the result depends only on
    the set of ids, ``mean``, ``std`` and ``seed``.
    """
    if std < 0:
        raise ValueError("std must be nonnegative")
    if std == 0 and mean < 0:
        raise ValueError("a degenerate distribution at a negative mean cannot be truncated")
    ids = sorted((l.id for l in loads), key=str)
    rng = np.random.default_rng(seed)
    draws = rng.normal(mean, std, size=len(ids)) if std > 0 else np.full(len(ids), float(mean))
    negative = draws < 0
    while negative.any():
        draws[negative] = rng.normal(mean, std, size=int(negative.sum()))
        negative = draws < 0
    return dict(zip(ids, draws.tolist()))


def _same_instance(a: ClearingSolution, b: ClearingSolution) -> bool:
    return (set(a.gen_dispatch) == set(b.gen_dispatch)
            and set(a.load_served) == set(b.load_served)
            and a.network.bus_ids == b.network.bus_ids)


def dispatch_delta(standard: ClearingSolution, dpd: DpdSolution) -> DispatchDelta:
    """Per-class dispatch of the DPD clearing minus the standard clearing."""
    if not _same_instance(standard, dpd):
        raise ValueError("solutions come from different networks or order books")
    return DispatchDelta(dpd.green_dispatch - standard.green_dispatch,
                         dpd.black_dispatch - standard.black_dispatch)


def emissions_report(sol: ClearingSolution, ob: OrderBook | None = None) -> float:
    """Average kg CO2e per MWh of served load; NaN when nothing is served."""
    ob = ob or sol.orderbook
    served = sol.total_served
    if served <= 0:
        return math.nan
    emitted = sum(sol.output(g.id) * g.emission_factor for g in ob.generators)
    return float(emitted / served)


def homes_powered(delta_green: float, homes_per_mw: float = 800.0) -> int:
    """Homes an extra ``delta_green`` MWh supplies over one hour."""
    if delta_green < 0 or homes_per_mw < 0:
        raise ValueError("inputs must be nonnegative")
    return int(math.floor(round(delta_green * homes_per_mw, 9)))


def apply_emission_factors(ob: OrderBook, factors: dict[str, float]) -> OrderBook:
    gens = [replace(g, emission_factor=float(factors[g.fuel.lower()])) if g.fuel.lower() in factors else g
            for g in ob.generators]
    return OrderBook(gens, ob.loads)


def evaluate(net: Network, ob: OrderBook, config: ScenarioConfig, share: float | None = None,
             tolerances: Tolerances | None = None) -> ScenarioReport:
    """Clear ``ob`` both ways (after optional rescaling) and summarize the difference."""
    book = ob if share is None else scale_res(net, ob, share)
    if config.emission_factors:
        book = apply_emission_factors(book, config.emission_factors)
    alphas = sample_alphas(book.loads, config.alpha_mean, config.alpha_std, config.rng_seed)
    book = book.with_alphas(alphas)
    std = clear_standard(net, book, tolerances)
    dpd = clear_dpd(net, book, tolerances)
    delta = dispatch_delta(std, dpd)
    money = settle(dpd)
    return ScenarioReport(
        res_share=res_share(book) if share is None else share,
        delta_green=delta.delta_green,
        delta_black=delta.delta_black,
        lambda_green=dpd.lambda_green,
        congested_before=len(std.congested_lines),
        congested_after=len(dpd.congested_lines),
        avg_emissions_before=emissions_report(std, book),
        avg_emissions_after=emissions_report(dpd, book),
        homes_powered=homes_powered(max(delta.delta_green, 0.0), config.homes_per_mw),
        total_payments=money.total_payments,
        total_revenues=money.total_revenues,
        merchandising_surplus=money.merchandising_surplus,
        standard_green=std.green_dispatch,
        standard_black=std.black_dispatch,
        dpd_green=dpd.green_dispatch,
        dpd_black=dpd.black_dispatch,
        alphas=alphas,
    )


def res_sweep(net: Network, ob: OrderBook, config: ScenarioConfig, shares,
              tolerances: Tolerances | None = None) -> list[ScenarioReport]:
    """One :func:`evaluate` per RES share, all with the configured alpha seed."""
    shares = list(shares)
    for s in shares:
        if not 0.0 < s < 1.0:
            raise ValueError(f"share {s} outside (0, 1)")
    return [evaluate(net, ob, config, s, tolerances) for s in shares]
