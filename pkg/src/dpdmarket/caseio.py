"""Case ingestion: the native JSON schema and a MATPOWER-style subset.

Native schema (``format: "dpdmarket-case"``, ``version: 1``)::

    {
      "format": "dpdmarket-case", "version": 1,
      "name": "three-bus",                       # optional
      "base_mva": 100.0,                         # optional, default 100
      "reference_bus": "G",
      "buses": [{"id": "G", "name": "", "lat": null, "lon": null}],
      "lines": [{"from": "G", "to": "B",
                 "susceptance": 1.0,             # MW/rad; or "reactance": x  (susceptance = 1/x)
                 "flow_min": -1.0, "flow_max": 1.0,   # or "rating": r for [-r, r]; null = unlimited
                 "name": ""}],
      "generators": [{"id": "g", "bus": "G", "class": "green", "fuel": "wind",
                      "emission_factor": 0.0,
                      "blocks": [{"quantity_min": 0, "quantity_max": 4, "price": 0}]}],
      "loads": [{"id": "l", "bus": "L", "alpha": 0.0,
                 "blocks": [{"quantity_min": 0, "quantity_max": 10, "value": 4}]}]
    }

MATPOWER subset: ``mpc.baseMVA``, ``mpc.bus``, ``mpc.gen``, ``mpc.branch``,
``mpc.gencost`` plus the optional cell arrays ``mpc.genfuel`` and
``mpc.bus_name``. Generator costs become at most K monotone offer blocks
priced at the average incremental cost between equal-capacity knots on
``[0, Pmax]``; each bus with positive ``Pd`` becomes one load bidding its
demand at a flat value.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CaseFormatError, ValidationError
from .grid import Bus, Line, Network, validate_network
from .orderbook import FUEL_CLASS, GREEN, BLACK, BidBlock, Generator, Load, OfferBlock, OrderBook, validate_orderbook
from .scenario import DEFAULT_EMISSION_FACTORS

NATIVE_FORMAT = "dpdmarket-case"


@dataclass
class ImportOptions:
    blocks_per_generator: int = 3
    load_value: float = 20.0
    fuel_classes: dict[str, str] = field(default_factory=lambda: dict(FUEL_CLASS))
    emission_factors: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_EMISSION_FACTORS))
    default_fuel: str | None = None  # used when a case carries no genfuel table
    honor_pmin: bool = False
    coordinates_path: str | Path | None = None  # CSV: bus_id, lat, lon


# ---------------------------------------------------------------------------
# native JSON


def _get(obj: dict, key: str, where: str, path, default=...):
    if not isinstance(obj, dict):
        raise CaseFormatError("expected an object", path=path, field=where)
    if key not in obj:
        if default is ...:
            raise CaseFormatError("missing required entry", path=path, field=f"{where}.{key}" if where else key)
        return default
    return obj[key]


def _num(value, where: str, path, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseFormatError(f"expected a number, got {value!r}", path=path, field=where)
    return float(value)


def _list(value, where: str, path) -> list:
    if not isinstance(value, list):
        raise CaseFormatError("expected a list", path=path, field=where)
    return value


def _bus_id(value, where: str, path):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise CaseFormatError(f"bus ids must be integers or strings, got {value!r}", path=path, field=where)
    return value


def _parse_native(doc, path) -> tuple[Network, OrderBook]:
    if _get(doc, "format", "", path, None) not in (None, NATIVE_FORMAT):
        raise CaseFormatError(f"unknown format {doc.get('format')!r}", path=path, field="format")
    base = _num(_get(doc, "base_mva", "", path, 100.0), "base_mva", path)
    if not base > 0:
        raise CaseFormatError("base_mva must be positive", path=path, field="base_mva")

    buses = []
    for i, b in enumerate(_list(_get(doc, "buses", "", path), "buses", path)):
        w = f"buses[{i}]"
        lat = _num(_get(b, "lat", w, path, None), f"{w}.lat", path, allow_none=True)
        lon = _num(_get(b, "lon", w, path, None), f"{w}.lon", path, allow_none=True)
        coords = (lat, lon) if lat is not None and lon is not None else None
        buses.append(Bus(_bus_id(_get(b, "id", w, path), f"{w}.id", path), str(_get(b, "name", w, path, "")), coords))

    lines = []
    for i, l in enumerate(_list(_get(doc, "lines", "", path, []), "lines", path)):
        w = f"lines[{i}]"
        if "susceptance" in l:
            sus = _num(l["susceptance"], f"{w}.susceptance", path)
        elif "reactance" in l:
            x = _num(l["reactance"], f"{w}.reactance", path)
            if x == 0:
                raise CaseFormatError("zero reactance", path=path, field=f"{w}.reactance")
            sus = 1.0 / x
        else:
            raise CaseFormatError("needs susceptance or reactance", path=path, field=w)
        if "rating" in l:
            r = _num(l["rating"], f"{w}.rating", path, allow_none=True)
            lo, hi = (-math.inf, math.inf) if r is None else (-r, r)
        else:
            lo = _num(_get(l, "flow_min", w, path, None), f"{w}.flow_min", path, allow_none=True)
            hi = _num(_get(l, "flow_max", w, path, None), f"{w}.flow_max", path, allow_none=True)
            lo = -math.inf if lo is None else lo
            hi = math.inf if hi is None else hi
        lines.append(Line(_bus_id(_get(l, "from", w, path), f"{w}.from", path),
                          _bus_id(_get(l, "to", w, path), f"{w}.to", path),
                          sus, lo, hi, str(_get(l, "name", w, path, ""))))
    net = Network(buses, lines, _bus_id(_get(doc, "reference_bus", "", path), "reference_bus", path), base)

    gens = []
    for i, g in enumerate(_list(_get(doc, "generators", "", path, []), "generators", path)):
        w = f"generators[{i}]"
        blocks = []
        for k, blk in enumerate(_list(_get(g, "blocks", w, path), f"{w}.blocks", path)):
            bw = f"{w}.blocks[{k}]"
            blocks.append(OfferBlock(
                _num(_get(blk, "quantity_max", bw, path), f"{bw}.quantity_max", path),
                _num(_get(blk, "price", bw, path), f"{bw}.price", path),
                _num(_get(blk, "quantity_min", bw, path, 0.0), f"{bw}.quantity_min", path),
            ))
        cls = _get(g, "class", w, path)
        if cls not in (GREEN, BLACK):
            raise CaseFormatError(f"class must be green or black, got {cls!r}", path=path, field=f"{w}.class")
        gens.append(Generator(str(_get(g, "id", w, path)), _bus_id(_get(g, "bus", w, path), f"{w}.bus", path),
                              cls, blocks,
                              _num(_get(g, "emission_factor", w, path, 0.0), f"{w}.emission_factor", path),
                              str(_get(g, "fuel", w, path, ""))))
    loads = []
    for i, ld in enumerate(_list(_get(doc, "loads", "", path, []), "loads", path)):
        w = f"loads[{i}]"
        blocks = []
        for k, blk in enumerate(_list(_get(ld, "blocks", w, path), f"{w}.blocks", path)):
            bw = f"{w}.blocks[{k}]"
            blocks.append(BidBlock(
                _num(_get(blk, "quantity_max", bw, path), f"{bw}.quantity_max", path),
                _num(_get(blk, "value", bw, path), f"{bw}.value", path),
                _num(_get(blk, "quantity_min", bw, path, 0.0), f"{bw}.quantity_min", path),
            ))
        loads.append(Load(str(_get(ld, "id", w, path)), _bus_id(_get(ld, "bus", w, path), f"{w}.bus", path),
                          blocks, _num(_get(ld, "alpha", w, path, 0.0), f"{w}.alpha", path)))
    return net, OrderBook(gens, loads)


def loads_native(text: str, path=None) -> tuple[Network, OrderBook]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFormatError(exc.msg, path=path, line=exc.lineno) from None
    return _parse_native(doc, path)


def _limit(v: float):
    return None if math.isinf(v) else v


def native_document(net: Network, ob: OrderBook, name: str = "") -> dict:
    doc = {"format": NATIVE_FORMAT, "version": 1}
    if name:
        doc["name"] = name
    doc["base_mva"] = net.base_mva
    doc["reference_bus"] = net.reference_bus
    doc["buses"] = [{"id": b.id, "name": b.name,
                     "lat": b.coordinates[0] if b.coordinates else None,
                     "lon": b.coordinates[1] if b.coordinates else None} for b in net.buses]
    doc["lines"] = [{"from": l.from_bus, "to": l.to_bus, "susceptance": l.susceptance,
                     "flow_min": _limit(l.flow_min), "flow_max": _limit(l.flow_max), "name": l.name}
                    for l in net.lines]
    doc["generators"] = [{"id": g.id, "bus": g.bus, "class": g.energy_class, "fuel": g.fuel,
                          "emission_factor": g.emission_factor,
                          "blocks": [{"quantity_min": b.quantity_min, "quantity_max": b.quantity_max,
                                      "price": b.price} for b in g.blocks]} for g in ob.generators]
    doc["loads"] = [{"id": l.id, "bus": l.bus, "alpha": l.alpha,
                     "blocks": [{"quantity_min": b.quantity_min, "quantity_max": b.quantity_max,
                                 "value": b.value} for b in l.blocks]} for l in ob.loads]
    return doc


def dumps_native(net: Network, ob: OrderBook, name: str = "") -> str:
    return json.dumps(native_document(net, ob, name), indent=2) + "\n"


def write_native(net: Network, ob: OrderBook, path, name: str = "") -> Path:
    path = Path(path)
    path.write_text(dumps_native(net, ob, name))
    return path


# ---------------------------------------------------------------------------
# MATPOWER subset

_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*")
_NUMBER = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$|^[-+]?(Inf|inf|NaN|nan)$")


def _strip_comment(line: str) -> str:
    quote = False
    for i, ch in enumerate(line):
        if ch == "'":
            quote = not quote
        elif ch == "%" and not quote:
            return line[:i]
    return line


def parse_matpower_tables(text: str, path=None) -> dict[str, object]:
    """Numeric matrices, scalars and string cell arrays assigned to ``mpc.*``."""
    lines = [_strip_comment(l) for l in text.splitlines()]
    out: dict[str, object] = {}
    i = 0
    while i < len(lines):
        m = _ASSIGN.search(lines[i])
        if not m:
            i += 1
            continue
        name, rest, start = m.group(1), lines[i][m.end():], i + 1
        opener = rest.lstrip()[:1]
        if opener in ("[", "{"):
            closer = "]" if opener == "[" else "}"
            body_lines = []
            j = i
            chunk = rest.lstrip()[1:]
            while True:
                if closer in chunk:
                    body_lines.append((j + 1, chunk[:chunk.index(closer)]))
                    break
                body_lines.append((j + 1, chunk))
                j += 1
                if j >= len(lines):
                    raise CaseFormatError(f"table mpc.{name} opened on line {start} is never closed",
                                          path=path, line=len(lines), field=f"mpc.{name}")
                chunk = lines[j]
            if opener == "[":
                rows = []
                for lineno, body in body_lines:
                    for raw_row in body.split(";"):
                        tokens = [t for t in re.split(r"[\s,]+", raw_row.strip()) if t]
                        if not tokens:
                            continue
                        for t in tokens:
                            if not _NUMBER.match(t):
                                raise CaseFormatError(f"bad number {t!r} in mpc.{name}", path=path,
                                                      line=lineno, field=f"mpc.{name}")
                        rows.append([float(t) for t in tokens])
                width = {len(r) for r in rows}
                if len(width) > 1:
                    raise CaseFormatError(f"ragged rows in mpc.{name}", path=path, line=start, field=f"mpc.{name}")
                out[name] = np.array(rows, dtype=float) if rows else np.zeros((0, 0))
            else:
                out[name] = [s for _, body in body_lines for s in re.findall(r"'([^']*)'", body)]
            i = j + 1
        else:
            token = rest.split(";")[0].strip()
            if _NUMBER.match(token):
                out[name] = float(token)
            elif token.startswith("'"):
                out[name] = token.strip("'")
            i += 1
    return out


def _cost_blocks(model: int, params: np.ndarray, pmax: float, k: int) -> list[float]:
    """Average incremental cost on K equal-capacity segments of [0, pmax]."""
    knots = np.linspace(0.0, pmax, k + 1)
    if model == 2:
        coeffs = params  # highest order first, $/h with p in MW
        cost = np.polyval(coeffs, knots)
    elif model == 1:
        pts = params.reshape(-1, 2)
        xs, fs = pts[:, 0], pts[:, 1]
        cost = np.interp(knots, xs, fs)
        if len(xs) > 1:
            lo_slope = (fs[1] - fs[0]) / (xs[1] - xs[0]) if xs[1] != xs[0] else 0.0
            hi_slope = (fs[-1] - fs[-2]) / (xs[-1] - xs[-2]) if xs[-1] != xs[-2] else 0.0
            cost = np.where(knots < xs[0], fs[0] + lo_slope * (knots - xs[0]), cost)
            cost = np.where(knots > xs[-1], fs[-1] + hi_slope * (knots - xs[-1]), cost)
    else:
        raise ValueError(f"unsupported cost model {model}")
    prices = np.diff(cost) / np.diff(knots)
    # non-convex curves would give a decreasing offer; keep the merit order valid
    return np.maximum.accumulate(prices).tolist()


def _read_coordinates(path) -> dict:
    coords = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = row.get("bus_id")
            try:
                key = int(key)
            except (TypeError, ValueError):
                pass
            coords[key] = (float(row["lat"]), float(row["lon"]))
    return coords


def loads_matpower(text: str, options: ImportOptions | None = None, path=None) -> tuple[Network, OrderBook]:
    opts = options or ImportOptions()
    t = parse_matpower_tables(text, path)
    for name in ("bus", "gen", "branch"):
        if name not in t or not isinstance(t[name], np.ndarray):
            raise CaseFormatError(f"missing mpc.{name} table", path=path, field=f"mpc.{name}")
    base = float(t.get("baseMVA", 100.0))
    bus_t, gen_t, br_t = t["bus"], t["gen"], t["branch"]
    if bus_t.shape[1] < 3 or gen_t.shape[1] < 10 or br_t.shape[1] < 11:
        raise CaseFormatError("bus/gen/branch tables have too few columns", path=path)
    names = t.get("bus_name") or []
    coords = _read_coordinates(opts.coordinates_path) if opts.coordinates_path else {}

    buses, ref = [], None
    kept = set()
    for i, row in enumerate(bus_t):
        bid, btype = int(row[0]), int(row[1])
        if btype == 4:
            continue
        kept.add(bid)
        buses.append(Bus(bid, names[i] if i < len(names) else "", coords.get(bid)))
        if btype == 3 and ref is None:
            ref = bid
    if ref is None:
        raise CaseFormatError("no reference (type 3) bus", path=path, field="mpc.bus")

    merged: dict[tuple, list[tuple[float, float]]] = {}
    for i, row in enumerate(br_t):
        f, to, x, rate, status = int(row[0]), int(row[1]), row[3], row[5], row[10]
        if status <= 0 or f not in kept or to not in kept:
            continue
        if x == 0:
            raise CaseFormatError("zero series reactance", path=path, field=f"mpc.branch[{i}]")
        key = (f, to) if (to, f) not in merged else (to, f)
        merged.setdefault(key, []).append((base / x, rate))
    lines = []
    for (f, to), parts in merged.items():
        total = sum(b for b, _ in parts)
        # parallel circuits share flow in proportion to susceptance
        limits = [r * total / b for b, r in parts if r > 0]
        lines.append(Line.rated(f, to, total, min(limits) if limits else None))
    net = Network(buses, lines, ref, base)

    fuels = t.get("genfuel")
    cost = t.get("gencost")
    gens = []
    for k, row in enumerate(gen_t):
        bus, pmax, pmin, status = int(row[0]), row[8], row[9], row[7]
        if status <= 0 or pmax <= 0 or bus not in kept:
            continue
        if fuels is not None and k < len(fuels):
            fuel = fuels[k].strip().lower()
        elif opts.default_fuel:
            fuel = opts.default_fuel.lower()
        else:
            raise CaseFormatError("no fuel for generator and no default_fuel", path=path, field=f"mpc.gen[{k}]")
        cls = opts.fuel_classes.get(fuel)
        if cls is None:
            raise CaseFormatError(f"unknown fuel {fuel!r} (add it to fuel_classes)", path=path,
                                  field=f"mpc.genfuel[{k}]")
        K = max(1, int(opts.blocks_per_generator))
        if cost is not None and k < len(cost):
            crow = cost[k]
            model, n = int(crow[0]), int(crow[3])
            width = 2 * n if model == 1 else n
            params = crow[4:4 + width]
            if len(params) < width:
                raise CaseFormatError("gencost row shorter than its NCOST", path=path, field=f"mpc.gencost[{k}]")
            try:
                prices = _cost_blocks(model, params, pmax, K)
            except ValueError as exc:
                raise CaseFormatError(str(exc), path=path, field=f"mpc.gencost[{k}]") from None
        else:
            prices = [0.0] * K
        size = pmax / K
        floor = max(pmin, 0.0) if opts.honor_pmin else 0.0
        blocks = []
        for price in prices:
            qmin = min(size, floor)
            floor -= qmin
            blocks.append(OfferBlock(size, float(price), qmin))
        gens.append(Generator(f"gen{k + 1}", bus, cls, blocks, float(opts.emission_factors.get(fuel, 0.0)), fuel))

    loads = []
    for row in bus_t:
        bid, pd = int(row[0]), row[2]
        if bid in kept and pd > 0:
            loads.append(Load(f"load{bid}", bid, [BidBlock(float(pd), float(opts.load_value))]))
    return net, OrderBook(gens, loads)


# ---------------------------------------------------------------------------


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".m":
        return "matpower"
    if suffix == ".json":
        return "native"
    head = Path(path).read_text()[:4096]
    return "matpower" if "mpc." in head else "native"


def import_case(path, options: ImportOptions | None = None, fmt: str = "auto",
                validate: bool = True) -> tuple[Network, OrderBook]:
    """Read a case file into a (Network, OrderBook) pair.

    Raises CaseFormatError (with line/field when known) on malformed input and,
    when ``validate`` is set, ValidationError if the result breaks an invariant.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CaseFormatError(f"cannot read case: {exc.strerror or exc}", path=path) from None
    fmt = detect_format(path) if fmt == "auto" else fmt
    if fmt == "native":
        net, ob = loads_native(text, path)
    elif fmt == "matpower":
        net, ob = loads_matpower(text, options, path)
    else:
        raise ValueError(f"unknown case format {fmt!r}")
    if validate:
        report = validate_network(net).extend(validate_orderbook(ob, net))
        if not report.valid:
            raise ValidationError(report)
    return net, ob


def bundled_case(name: str) -> Path:
    """Path of a case shipped with the package (``three_bus`` or ``fig1``)."""
    path = Path(__file__).parent / "data" / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled case named {name!r}")
    return path


BUNDLED_CASES = ("three_bus", "fig1")
