"""DC-network market clearing with separate green and black energy prices."""

__version__ = "0.1.0"

from .exceptions import CaseFormatError, MarketError, SolveError, ValidationError
from .lpsolve import LinearProgram, LPSolution, Tolerances, solve
from .grid import Bus, Line, Network, ValidationReport, dc_flows, dc_power_flow, max_deliverable, validate_network
from .orderbook import BLACK, GREEN, BidBlock, Generator, Load, OfferBlock, OrderBook, total_capacity, validate_orderbook
from .clearing import (ClearingSolution, DpdSolution, Settlement, build_dpd_clearing, build_standard_clearing,
                       clear_dpd, clear_standard, congested_lines, settle)
from .meritorder import ClearingPoint, StepCurve, build_demand_curve, build_supply_curve, intersect
from .scenario import (ScenarioConfig, ScenarioReport, dispatch_delta, emissions_report, evaluate, homes_powered,
                       res_sweep, sample_alphas, scale_res)
from .caseio import BUNDLED_CASES, ImportOptions, bundled_case, import_case, write_native
from .export import export_results

__all__ = [name for name in dir() if not name.startswith("_")]
