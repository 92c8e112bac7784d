import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpdmarket import (BLACK, GREEN, BidBlock, Generator, Load, OfferBlock, OrderBook, build_demand_curve,
                       build_supply_curve, clear_standard, intersect)
from dpdmarket.meritorder import CurveBlock, StepCurve, write_curve_csv
from instances import random_market


def test_three_bus_supply_steps(three_bus):
    _, ob = three_bus
    assert build_supply_curve(ob).steps == [(4.0, 0.0), (8.0, 10.0)]


def test_three_bus_demand_steps(three_bus):
    _, ob = three_bus
    assert build_demand_curve(ob).steps == [(10.0, 4.0)]


def test_empty_book_gives_empty_curves():
    assert build_supply_curve(OrderBook()).steps == []
    assert build_demand_curve(OrderBook()).steps == []
    point = intersect(build_supply_curve(OrderBook()), build_demand_curve(OrderBook()))
    assert point.price is None and point.volume == 0.0


def test_equal_prices_merge_into_one_step():
    ob = OrderBook([Generator("a", 1, GREEN, [OfferBlock(2, 5)]), Generator("b", 1, BLACK, [OfferBlock(3, 5)])],
                   [Load("x", 1, [BidBlock(1, 9)]), Load("y", 1, [BidBlock(2, 9)])])
    assert build_supply_curve(ob).steps == [(5.0, 5.0)]
    assert build_demand_curve(ob).steps == [(3.0, 9.0)]
    assert [b.participant for b in build_supply_curve(ob).blocks] == ["a", "b"]


def test_three_bus_intersection(three_bus):
    _, ob = three_bus
    point = intersect(build_supply_curve(ob), build_demand_curve(ob))
    assert point.volume == pytest.approx(4.0)
    assert point.price == pytest.approx(4.0)
    assert point.green_share == pytest.approx(1.0)
    assert not point.degenerate


def test_demand_below_supply_clears_nothing():
    ob = OrderBook([Generator("g", 1, BLACK, [OfferBlock(5, 10)])], [Load("d", 1, [BidBlock(5, 3)])])
    point = intersect(build_supply_curve(ob), build_demand_curve(ob))
    assert point.volume == 0.0 and point.price is None


def test_flat_overlap_takes_largest_volume():
    ob = OrderBook([Generator("g", 1, BLACK, [OfferBlock(5, 7)])], [Load("d", 1, [BidBlock(3, 7)])])
    point = intersect(build_supply_curve(ob), build_demand_curve(ob))
    assert point.volume == pytest.approx(3.0) and point.price == pytest.approx(7.0)


def test_curve_monotonicity_enforced():
    with pytest.raises(ValueError):
        StepCurve("supply", [CurveBlock(1, 5, "a"), CurveBlock(1, 3, "b")])
    with pytest.raises(ValueError):
        StepCurve("demand", [CurveBlock(0, 5, "a")])


def test_curve_csv(tmp_path, three_bus):
    _, ob = three_bus
    path = write_curve_csv(build_supply_curve(ob), tmp_path / "s.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["cumulative_mwh", "price_per_mwh"]
    assert len(rows) > 1


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_cleared_point_respects_both_curves(seed):
    _, ob = random_market(np.random.default_rng(seed), max_participants=10)
    s, d = build_supply_curve(ob), build_demand_curve(ob)
    point = intersect(s, d)
    assert point.volume <= min(s.total, d.total) + 1e-9
    if point.volume > 0:
        def price_at(curve, q):
            for cum, p in curve.steps:
                if q <= cum + 1e-12:
                    return p
        assert price_at(s, point.volume) <= point.price + 1e-9
        assert point.price <= price_at(d, point.volume) + 1e-9


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_volume_matches_unconstrained_lp(seed):
    net, ob = random_market(np.random.default_rng(seed), max_participants=10)
    point = intersect(build_supply_curve(ob), build_demand_curve(ob))
    sol = clear_standard(net.without_limits(), ob)
    assert point.volume == pytest.approx(sol.total_served, abs=1e-6)
    if point.volume > 0 and not point.degenerate:
        for bus in net.bus_ids:
            assert sol.black_lmp[bus] == pytest.approx(point.price, abs=1e-6)
