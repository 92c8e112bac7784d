"""Standard and dual-pricing-dispatch (DPD) market clearing.

Both clearings maximize market surplus over a DC network. DPD adds, per
load, a green/black split of the energy it is served, a system-wide green
balance tying green allocations to green generation, and the reward
``alpha_i * green_i`` in the objective. Prices are constraint duals:

* black LMP at bus n  = dual of the bus-n balance row,
* lambda_green        = dual of the green balance row,
* green LMP at bus n  = black LMP + lambda_green.

Rows are written so that each dual is the welfare gained from one extra MWh
arriving for free at that row (a negative load perturbation), which makes
the duals directly interpretable as prices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lpsolve
from .exceptions import SolveError, ValidationError
from .grid import BusId, Network, add_dc_network, dc_flows, validate_network
from .lpsolve import LinearProgram, LPSolution, Tolerances
from .orderbook import GREEN, OrderBook, validate_orderbook

TOL_CONGEST = 1e-5
GREEN_BALANCE = "green_balance"


@dataclass
class ClearingSolution:
    gen_dispatch: dict[str, tuple[float, ...]]
    load_served: dict[str, tuple[float, ...]]
    angles: dict[BusId, float]
    flows: np.ndarray
    black_lmp: dict[BusId, float]
    objective: float
    congested_lines: list[int]
    network: Network = field(repr=False)
    orderbook: OrderBook = field(repr=False)
    lp: LinearProgram = field(repr=False)
    lp_solution: LPSolution = field(repr=False)

    def output(self, gen_id: str) -> float:
        return float(sum(self.gen_dispatch[gen_id]))

    def served(self, load_id: str) -> float:
        return float(sum(self.load_served[load_id]))

    def class_dispatch(self, energy_class: str) -> float:
        return float(sum(self.output(g.id) for g in self.orderbook.generators if g.energy_class == energy_class))

    @property
    def green_dispatch(self) -> float:
        return self.class_dispatch(GREEN)

    @property
    def black_dispatch(self) -> float:
        return self.class_dispatch("black")

    @property
    def total_generation(self) -> float:
        return float(sum(self.output(g) for g in self.gen_dispatch))

    @property
    def total_served(self) -> float:
        return float(sum(self.served(l) for l in self.load_served))


@dataclass
class DpdSolution(ClearingSolution):
    green_allocation: dict[str, float] = field(default_factory=dict)
    black_allocation: dict[str, float] = field(default_factory=dict)
    lambda_green: float = 0.0
    green_lmp: dict[BusId, float] = field(default_factory=dict)


@dataclass
class Settlement:
    load_payments: dict[str, float]
    generator_revenues: dict[str, float]

    @property
    def total_payments(self) -> float:
        return float(sum(self.load_payments.values()))

    @property
    def total_revenues(self) -> float:
        return float(sum(self.generator_revenues.values()))

    @property
    def merchandising_surplus(self) -> float:
        return self.total_payments - self.total_revenues


def _require_valid(net: Network, ob: OrderBook) -> None:
    report = validate_network(net)
    report.extend(validate_orderbook(ob, net))
    if not report.valid:
        raise ValidationError(report)


def _build(net: Network, ob: OrderBook) -> tuple[LinearProgram, dict[BusId, dict[str, float]]]:
    lp = LinearProgram()
    balance = add_dc_network(lp, net)
    for g in ob.generators:
        for l, blk in enumerate(g.blocks):
            name = lp.add_variable(f"gen:{g.id}:{l}", blk.quantity_min, blk.quantity_max, cost=-blk.price)
            lp.tags[("gen", g.id, l)] = name
            balance[g.bus][name] = balance[g.bus].get(name, 0.0) - 1.0
    for ld in ob.loads:
        for j, blk in enumerate(ld.blocks):
            name = lp.add_variable(f"load:{ld.id}:{j}", blk.quantity_min, blk.quantity_max, cost=blk.value)
            lp.tags[("load", ld.id, j)] = name
            balance[ld.bus][name] = balance[ld.bus].get(name, 0.0) + 1.0
    return lp, balance


def _add_balance_rows(lp: LinearProgram, net: Network, balance) -> None:
    # load + outflow - generation = 0; the dual is the nodal price.
    for bus in net.buses:
        lp.tags[("balance", bus.id)] = lp.add_equality(f"balance:{bus.id}", balance[bus.id])


def build_standard_clearing(net: Network, ob: OrderBook) -> LinearProgram:
    """Market-surplus LP: bid value of served load minus offer cost of dispatch."""
    lp, balance = _build(net, ob)
    _add_balance_rows(lp, net, balance)
    return lp


def build_dpd_clearing(net: Network, ob: OrderBook) -> LinearProgram:
    """Standard LP plus per-load green/black split and the green balance row."""
    lp, balance = _build(net, ob)
    _add_balance_rows(lp, net, balance)
    green_row: dict[str, float] = {}
    for ld in ob.loads:
        cap = ld.capacity
        g = lp.add_variable(f"green:{ld.id}", 0.0, cap, cost=ld.alpha)
        b = lp.add_variable(f"black:{ld.id}", 0.0, cap)
        lp.tags[("green", ld.id)] = g
        lp.tags[("black", ld.id)] = b
        split = {g: 1.0, b: 1.0}
        for j in range(len(ld.blocks)):
            split[lp.tags[("load", ld.id, j)]] = -1.0
        lp.tags[("split", ld.id)] = lp.add_equality(f"split:{ld.id}", split)
        green_row[g] = 1.0
    for gen in ob.generators:
        if gen.energy_class == GREEN:
            for l in range(len(gen.blocks)):
                green_row[lp.tags[("gen", gen.id, l)]] = -1.0
    # Written as "allocated <= generated". With alpha >= 0 the optimum is the
    # same as for the equality, and the row's dual is then sign-restricted;
    # the equality form is degenerate whenever every served MWh is green and
    # can return a negative multiplier from an equally optimal vertex.
    lp.tags[("green_balance",)] = lp.add_constraint(GREEN_BALANCE, green_row, -math.inf, 0.0)
    return lp


def _close_green_balance(ob: OrderBook, green: dict[str, float], black: dict[str, float],
                         generated: float) -> float:
    """Move black allocation to green until allocations match green output.

    Returns the objective change, which is zero unless the solver stopped
    within tolerance of a better allocation.
    """
    shortfall = generated - sum(green.values())
    gained = 0.0
    for ld in sorted(ob.loads, key=lambda l: (-l.alpha, str(l.id))):
        if shortfall <= 0:
            break
        move = min(shortfall, black[ld.id])
        if move > 0:
            green[ld.id] += move
            black[ld.id] -= move
            gained += ld.alpha * move
            shortfall -= move
    return gained


def _solve(lp: LinearProgram, tolerances: Tolerances | None) -> LPSolution:
    sol = lpsolve.solve(lp, tolerances)
    if not sol.optimal:
        raise SolveError(sol.status, f"clearing LP ended with status {sol.status}: {sol.message}")
    return sol


def _congested(net: Network, flows: np.ndarray, tol: float) -> list[int]:
    out = []
    for k, line in enumerate(net.lines):
        f = flows[k]
        if abs(f - line.flow_max) <= tol or abs(f - line.flow_min) <= tol:
            out.append(k)
    return out


def _common(net: Network, ob: OrderBook, lp: LinearProgram, sol: LPSolution, tol_congest: float) -> dict:
    x = sol.primal
    angles = {b.id: x[lp.tags[("angle", b.id)]] for b in net.buses}
    flows = dc_flows(net, angles)
    return dict(
        gen_dispatch={g.id: tuple(x[lp.tags[("gen", g.id, l)]] for l in range(len(g.blocks))) for g in ob.generators},
        load_served={ld.id: tuple(x[lp.tags[("load", ld.id, j)]] for j in range(len(ld.blocks))) for ld in ob.loads},
        angles=angles,
        flows=flows,
        black_lmp={b.id: sol.duals[lp.tags[("balance", b.id)]] for b in net.buses},
        objective=sol.objective_value,
        congested_lines=_congested(net, flows, tol_congest),
        network=net,
        orderbook=ob,
        lp=lp,
        lp_solution=sol,
    )


def clear_standard(net: Network, ob: OrderBook, tolerances: Tolerances | None = None,
                   tol_congest: float = TOL_CONGEST, validate: bool = True) -> ClearingSolution:
    """Clear by plain surplus maximization; black LMPs are the balance duals.

    Raises ValidationError on invalid inputs and SolveError when the LP has
    no verified optimum.
    """
    if validate:
        _require_valid(net, ob)
    lp = build_standard_clearing(net, ob)
    sol = _solve(lp, tolerances)
    return ClearingSolution(**_common(net, ob, lp, sol, tol_congest))


def clear_dpd(net: Network, ob: OrderBook, tolerances: Tolerances | None = None,
              tol_congest: float = TOL_CONGEST, validate: bool = True) -> DpdSolution:
    """Clear with green premiums; adds allocations, lambda_green and green LMPs."""
    if validate:
        _require_valid(net, ob)
    lp = build_dpd_clearing(net, ob)
    sol = _solve(lp, tolerances)
    common = _common(net, ob, lp, sol, tol_congest)
    lam = sol.duals[lp.tags[("green_balance",)]]
    x = sol.primal
    green = {ld.id: x[lp.tags[("green", ld.id)]] for ld in ob.loads}
    black = {ld.id: x[lp.tags[("black", ld.id)]] for ld in ob.loads}
    generated = sum(x[lp.tags[("gen", g.id, l)]] for g in ob.generators if g.energy_class == GREEN
                    for l in range(len(g.blocks)))
    common["objective"] += _close_green_balance(ob, green, black, generated)
    return DpdSolution(
        **common,
        green_allocation=green,
        black_allocation=black,
        lambda_green=lam,
        green_lmp={bus: price + lam for bus, price in common["black_lmp"].items()},
    )


def congested_lines(sol: ClearingSolution, tol_congest: float = TOL_CONGEST) -> list[int]:
    """Indices of lines whose flow sits within ``tol_congest`` MW of a limit."""
    return _congested(sol.network, sol.flows, tol_congest)


def settle(sol: ClearingSolution, net: Network | None = None, ob: OrderBook | None = None) -> Settlement:
    """Payments and revenues at black/green LMPs.

    Loads pay the black LMP of their bus on their black allocation and the
    green LMP on their green allocation; green generators are paid the green
    LMP, black generators the black LMP. A standard solution settles entirely
    at black LMPs.
    """
    net = net or sol.network
    ob = ob or sol.orderbook
    black = sol.black_lmp
    green = getattr(sol, "green_lmp", None) or black
    is_dpd = isinstance(sol, DpdSolution)
    payments = {}
    for ld in ob.loads:
        if is_dpd:
            payments[ld.id] = (black[ld.bus] * sol.black_allocation[ld.id]
                               + green[ld.bus] * sol.green_allocation[ld.id])
        else:
            payments[ld.id] = black[ld.bus] * sol.served(ld.id)
    revenues = {}
    for g in ob.generators:
        price = green[g.bus] if (is_dpd and g.energy_class == GREEN) else black[g.bus]
        revenues[g.id] = price * sol.output(g.id)
    for v in (*payments.values(), *revenues.values()):
        if not math.isfinite(v):
            raise ValueError("settlement produced a non-finite amount")
    return Settlement(payments, revenues)
