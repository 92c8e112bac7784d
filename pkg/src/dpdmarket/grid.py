"""DC power-flow network model.

Susceptances are expressed in MW/rad so that a line carries
``susceptance * (angle_from - angle_to)`` MW. Importers convert per-unit
reactance ``x`` on base ``S`` to ``S / x``; an impedance in ohms with a unit
voltage base maps to ``1 / x``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import lpsolve
from .exceptions import SolveError

BusId = Union[int, str]


@dataclass(frozen=True)
class Bus:
    id: BusId
    name: str = ""
    coordinates: tuple[float, float] | None = None  # (latitude, longitude)


@dataclass(frozen=True)
class Line:
    from_bus: BusId
    to_bus: BusId
    susceptance: float
    flow_min: float = -math.inf
    flow_max: float = math.inf
    name: str = ""

    @classmethod
    def rated(cls, from_bus: BusId, to_bus: BusId, susceptance: float, rating: float | None, name: str = "") -> Line:
        """Line with symmetric limits ``[-rating, rating]`` (``None`` = unlimited)."""
        r = math.inf if rating is None else float(rating)
        return cls(from_bus, to_bus, float(susceptance), -r, r, name)

    @property
    def label(self) -> str:
        return self.name or f"{self.from_bus}-{self.to_bus}"

    @property
    def limited(self) -> bool:
        return math.isfinite(self.flow_min) or math.isfinite(self.flow_max)


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    reference_bus: BusId
    base_mva: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))

    @cached_property
    def bus_index(self) -> dict[BusId, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def bus_ids(self) -> list[BusId]:
        return [b.id for b in self.buses]

    def without_limits(self) -> Network:
        """Copper-plate twin: same topology, every line unlimited."""
        lines = [Line(l.from_bus, l.to_bus, l.susceptance, name=l.name) for l in self.lines]
        return Network(self.buses, lines, self.reference_bus, self.base_mva)

    def incidence(self) -> sp.csr_matrix:
        """Line-by-bus incidence matrix (+1 at from_bus, -1 at to_bus)."""
        idx = self.bus_index
        n_l = len(self.lines)
        rows = np.repeat(np.arange(n_l), 2)
        cols = np.array([[idx[l.from_bus], idx[l.to_bus]] for l in self.lines], dtype=int).reshape(-1)
        vals = np.tile([1.0, -1.0], n_l)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_l, len(self.buses)))


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    subject: object = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.findings

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def add(self, code: str, message: str, subject=None) -> None:
        self.findings.append(Finding(code, message, subject))

    def extend(self, other: ValidationReport) -> ValidationReport:
        self.findings.extend(other.findings)
        return self

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{f.code}: {f.message}" for f in self.findings)


def validate_network(net: Network) -> ValidationReport:
    report = ValidationReport()
    seen: set = set()
    for bus in net.buses:
        if bus.id in seen:
            report.add("duplicate bus id", f"bus id {bus.id!r} appears more than once", bus.id)
        seen.add(bus.id)
    if net.reference_bus not in seen:
        report.add("missing reference", f"reference bus {net.reference_bus!r} is not a bus", net.reference_bus)

    pairs: set = set()
    for k, line in enumerate(net.lines):
        tag = f"line {k} ({line.label})"
        for end in (line.from_bus, line.to_bus):
            if end not in seen:
                report.add("unknown bus", f"{tag} references unknown bus {end!r}", k)
        if line.from_bus == line.to_bus:
            report.add("self loop", f"{tag} starts and ends at the same bus", k)
        if not (line.susceptance > 0) or not math.isfinite(line.susceptance):
            report.add("nonpositive susceptance", f"{tag} has susceptance {line.susceptance}", k)
        if not (line.flow_min <= 0 <= line.flow_max):
            report.add("limits do not bracket zero", f"{tag} has limits [{line.flow_min}, {line.flow_max}]", k)
        pair = frozenset((line.from_bus, line.to_bus))
        if pair in pairs and len(pair) == 2:
            report.add("parallel lines", f"{tag} duplicates an earlier line between the same buses", k)
        pairs.add(pair)

    if net.buses and "missing reference" not in report.codes():
        adj: dict = {b.id: set() for b in net.buses}
        for line in net.lines:
            if line.from_bus in adj and line.to_bus in adj:
                adj[line.from_bus].add(line.to_bus)
                adj[line.to_bus].add(line.from_bus)
        reached = {net.reference_bus}
        stack = [net.reference_bus]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in reached:
                    reached.add(nxt)
                    stack.append(nxt)
        isolated = [b for b in adj if b not in reached]
        if isolated:
            report.add("disconnected", f"{len(isolated)} bus(es) unreachable from the reference bus: "
                       + ", ".join(map(str, isolated[:10])), isolated)
    return report


def dc_flows(net: Network, angles: Mapping[BusId, float]) -> np.ndarray:
    """Per-line flow in MW, oriented from ``from_bus`` to ``to_bus``."""
    missing = [b.id for b in net.buses if b.id not in angles]
    if missing:
        raise KeyError(f"no angle given for bus(es) {missing[:10]}")
    return np.array([l.susceptance * (angles[l.from_bus] - angles[l.to_bus]) for l in net.lines], dtype=float)


def susceptance_matrix(net: Network) -> sp.csr_matrix:
    """Nodal susceptance (weighted Laplacian) matrix, MW/rad."""
    C = net.incidence()
    b = sp.diags([l.susceptance for l in net.lines])
    return (C.T @ b @ C).tocsr()


def dc_power_flow(net: Network, injections: Mapping[BusId, float]) -> dict[BusId, float]:
    """Angles (rad) produced by net MW injections; the reference bus is pinned to 0.

    Injections must sum to zero (the DC model is lossless).
    """
    idx = net.bus_index
    p = np.zeros(len(net.buses))
    for bus, mw in injections.items():
        p[idx[bus]] += mw
    if abs(p.sum()) > 1e-9 * max(1.0, np.abs(p).sum()):
        raise ValueError(f"injections do not balance (sum {p.sum():.6g} MW)")
    B = susceptance_matrix(net)
    keep = np.arange(len(net.buses)) != idx[net.reference_bus]
    theta = np.zeros(len(net.buses))
    if keep.any():
        theta[keep] = spla.spsolve(B[keep][:, keep].tocsc(), p[keep])
    return {bus.id: float(theta[i]) for i, bus in enumerate(net.buses)}


def add_dc_network(lp: lpsolve.LinearProgram, net: Network, with_limits: bool = True) -> dict[BusId, dict[str, float]]:
    """Declare angle columns, line-limit rows and the reference pin on ``lp``.

    Returns per-bus coefficient maps for the outgoing-flow term
    ``sum_m B_nm (theta_n - theta_m)`` that callers fold into their balance rows.
    """
    flows_out: dict[BusId, dict[str, float]] = {b.id: {} for b in net.buses}
    for bus in net.buses:
        lp.tags[("angle", bus.id)] = lp.add_variable(f"theta:{bus.id}", -math.inf, math.inf)
    for k, line in enumerate(net.lines):
        tf, tt = lp.tags[("angle", line.from_bus)], lp.tags[("angle", line.to_bus)]
        b = line.susceptance
        out_f, out_t = flows_out[line.from_bus], flows_out[line.to_bus]
        out_f[tf] = out_f.get(tf, 0.0) + b
        out_f[tt] = out_f.get(tt, 0.0) - b
        out_t[tt] = out_t.get(tt, 0.0) + b
        out_t[tf] = out_t.get(tf, 0.0) - b
        if with_limits:  # unlimited lines get a free row so every line has a flow readout
            lp.tags[("line", k)] = lp.add_constraint(
                f"flow:{k}:{line.label}", {tf: b, tt: -b}, line.flow_min, line.flow_max)
    lp.tags[("reference",)] = lp.add_equality(
        f"ref:{net.reference_bus}", {lp.tags[("angle", net.reference_bus)]: 1.0}, 0.0)
    return flows_out


def _source_map(sources) -> dict[BusId, float]:
    if isinstance(sources, Mapping):
        items = sources.items()
    else:
        items = sources
    out: dict[BusId, float] = {}
    for bus, cap in items:
        if cap < 0:
            raise ValueError(f"negative source capacity at bus {bus!r}")
        out[bus] = out.get(bus, 0.0) + float(cap)
    return out


def max_deliverable(net: Network, sources: Mapping[BusId, float] | Iterable[tuple[BusId, float]], sink: BusId,
                    tolerances: lpsolve.Tolerances | None = None) -> float:
    """Largest withdrawal at ``sink`` that ``sources`` alone can feed under line limits."""
    caps = _source_map(sources)
    lp = lpsolve.LinearProgram()
    flows_out = add_dc_network(lp, net)
    inject = {bus: lp.add_variable(f"source:{bus}", 0.0, cap) for bus, cap in caps.items()}
    draw = lp.add_variable("sink", 0.0, math.inf, cost=1.0)
    for bus in net.buses:
        coeffs = dict(flows_out[bus.id])
        if bus.id in inject:
            coeffs[inject[bus.id]] = -1.0
        if bus.id == sink:
            coeffs[draw] = 1.0
        lp.add_equality(f"balance:{bus.id}", coeffs)
    sol = lpsolve.solve(lp, tolerances)
    if not sol.optimal:
        raise SolveError(sol.status, f"deliverability LP ended with status {sol.status}: {sol.message}")
    return sol.primal[draw]
