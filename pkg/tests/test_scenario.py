import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpdmarket import (BLACK, GREEN, Bus, Generator, Load, BidBlock, Network, OfferBlock, OrderBook, ScenarioConfig,
                       clear_dpd, clear_standard, dispatch_delta, emissions_report, evaluate, homes_powered, res_sweep,
                       sample_alphas, scale_res, total_capacity)
from dpdmarket.scenario import apply_emission_factors, res_share
from instances import random_market


def single_bus_book(green=20.0, black=80.0):
    net = Network([Bus("n")], [], "n")
    ob = OrderBook([Generator("w", "n", GREEN, [OfferBlock(green / 2, 0), OfferBlock(green / 2, 1)], 12.0, "wind"),
                    Generator("c", "n", BLACK, [OfferBlock(black, 15)], 1000.0, "coal")],
                   [Load("d", "n", [BidBlock(60, 30), BidBlock(60, 5)])])
    return net, ob


def test_scale_to_half():
    net, ob = single_bus_book()
    scaled = scale_res(net, ob, 0.5)
    assert total_capacity(scaled, GREEN) == pytest.approx(50.0)
    assert total_capacity(scaled, BLACK) == pytest.approx(50.0)
    assert scaled.generator("w").blocks[0].quantity_max == pytest.approx(10.0 * 2.5)
    assert scaled.generator("c").blocks[0].quantity_max == pytest.approx(80.0 * 0.625)
    assert scaled.generator("c").blocks[0].price == 15


def test_scale_to_current_share_is_identity():
    net, ob = single_bus_book()
    assert scale_res(net, ob, 0.2) == ob


def test_scale_requires_both_classes():
    net, ob = single_bus_book()
    black_only = OrderBook([ob.generator("c")], ob.loads)
    with pytest.raises(ValueError):
        scale_res(net, black_only, 0.5)
    with pytest.raises(ValueError):
        scale_res(net, ob, 1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), share=st.floats(0.01, 0.99))
def test_scaling_preserves_total_and_hits_target(seed, share):
    net, ob = random_market(np.random.default_rng(seed), max_participants=10)
    if total_capacity(ob, GREEN) == 0 or total_capacity(ob, BLACK) == 0:
        return
    scaled = scale_res(net, ob, share)
    assert total_capacity(scaled) == pytest.approx(total_capacity(ob), rel=1e-9)
    assert res_share(scaled) == pytest.approx(share, abs=1e-9)


def test_degenerate_alpha_distribution():
    loads = [Load(f"l{i}", 1, [BidBlock(1, 1)]) for i in range(5)]
    assert set(sample_alphas(loads, 5.0, 0.0, 3).values()) == {5.0}


def test_alpha_draws_are_reproducible():
    loads = [Load(f"l{i}", 1, [BidBlock(1, 1)]) for i in range(50)]
    assert sample_alphas(loads, 5, 1, 42) == sample_alphas(list(reversed(loads)), 5, 1, 42)
    assert sample_alphas(loads, 5, 1, 42) != sample_alphas(loads, 5, 1, 43)


def test_alpha_sample_statistics():
    loads = [Load(f"l{i:05d}", 1, [BidBlock(1, 1)]) for i in range(10_000)]
    draws = np.array(list(sample_alphas(loads, 5.0, 1.0, 0).values()))
    assert abs(draws.mean() - 5.0) <= 0.05
    assert draws.min() >= 0.0


def test_truncation_removes_negatives_near_zero_mean():
    loads = [Load(f"l{i}", 1, [BidBlock(1, 1)]) for i in range(2000)]
    draws = np.array(list(sample_alphas(loads, 0.2, 1.0, 5).values()))
    assert draws.min() >= 0.0
    with pytest.raises(ValueError):
        sample_alphas(loads, 1.0, -1.0, 0)


def test_three_bus_dispatch_delta(three_bus):
    net, ob = three_bus
    delta = dispatch_delta(clear_standard(net, ob), clear_dpd(net, ob))
    assert delta.delta_green == pytest.approx(1.0, abs=1e-6)
    assert delta.delta_black == pytest.approx(1.0, abs=1e-6)
    zero = ob.with_alphas(0.0)
    delta = dispatch_delta(clear_standard(net, zero), clear_dpd(net, zero))
    assert abs(delta.delta_green) <= 1e-6 and abs(delta.delta_black) <= 1e-6


def test_dispatch_delta_rejects_mismatched_instances(three_bus, fig1):
    with pytest.raises(ValueError):
        dispatch_delta(clear_standard(*three_bus), clear_dpd(*fig1))


def test_emissions_arithmetic(three_bus):
    net, ob = three_bus
    book = apply_emission_factors(ob, {"wind": 0.0, "gas": 500.0})
    sol = clear_dpd(net, book)  # 4 MWh green, 1 MWh black
    assert emissions_report(sol) == pytest.approx(100.0, abs=1e-6)
    green_only = clear_standard(net, book)
    assert emissions_report(green_only) == pytest.approx(0.0, abs=1e-9)


def test_emissions_undefined_without_load(three_bus):
    net, ob = three_bus
    sol = clear_standard(net, ob.with_load_values(-5.0))
    assert math.isnan(emissions_report(sol))


def test_emissions_invariant_under_block_split():
    net = Network([Bus("n")], [], "n")
    load = Load("d", "n", [BidBlock(7, 50)])
    one = OrderBook([Generator("c", "n", BLACK, [OfferBlock(10, 5)], 800.0)], [load])
    two = OrderBook([Generator("c", "n", BLACK, [OfferBlock(4, 5), OfferBlock(6, 5)], 800.0)], [load])
    assert emissions_report(clear_standard(net, one)) == pytest.approx(emissions_report(clear_standard(net, two)))


@pytest.mark.parametrize("mwh, expected", [(239.0, 191_200), (0.0, 0), (1.0, 800)])
def test_homes(mwh, expected):
    assert homes_powered(mwh, 800) == expected


def test_homes_rejects_negative():
    with pytest.raises(ValueError):
        homes_powered(-1.0)


def test_sweep_is_deterministic_and_ordered():
    net, ob = single_bus_book()
    cfg = ScenarioConfig(alpha_mean=5, alpha_std=1, rng_seed=9)
    a = res_sweep(net, ob, cfg, [0.2, 0.5, 0.8])
    b = res_sweep(net, ob, cfg, [0.2, 0.5, 0.8])
    assert a == b
    assert [r.res_share for r in a] == [0.2, 0.5, 0.8]
    assert res_sweep(net, ob, cfg, []) == []
    with pytest.raises(ValueError):
        res_sweep(net, ob, cfg, [1.2])


def test_report_fields_are_consistent():
    net, ob = single_bus_book()
    r = evaluate(net, ob, ScenarioConfig(rng_seed=1), 0.5)
    assert r.delta_green == pytest.approx(r.dpd_green - r.standard_green)
    assert r.delta_black == pytest.approx(r.dpd_black - r.standard_black)
    assert r.delta_green >= -1e-6 and r.lambda_green >= -1e-9
    assert r.homes_powered == homes_powered(max(r.delta_green, 0.0), 800)
    for v in (r.avg_emissions_before, r.avg_emissions_after, r.total_payments, r.merchandising_surplus):
        assert math.isfinite(v)


def test_emission_overrides_from_config():
    net, ob = single_bus_book()
    r = evaluate(net, ob, ScenarioConfig(emission_factors={"coal": 0.0, "wind": 0.0}))
    assert r.avg_emissions_before == 0.0 and r.avg_emissions_after == 0.0


def test_config_invariants():
    for bad in (dict(target_res_share=1.5), dict(alpha_std=-1), dict(homes_per_mw=0)):
        with pytest.raises(ValueError):
            ScenarioConfig(**bad)


def test_high_res_emissions_do_not_rise_without_extra_black():
    """When DPD adds no black energy, the served mix can only get cleaner."""
    checked = 0
    for seed in range(40):
        net, ob = random_market(np.random.default_rng(seed))
        if total_capacity(ob, GREEN) == 0 or total_capacity(ob, BLACK) == 0:
            continue
        book = scale_res(net, ob, 0.7)
        book = OrderBook([g.__class__(g.id, g.bus, g.energy_class, g.blocks,
                                      10.0 if g.energy_class == GREEN else 900.0) for g in book.generators], book.loads)
        std, dpd = clear_standard(net, book), clear_dpd(net, book)
        delta = dispatch_delta(std, dpd)
        if abs(delta.delta_black) > 1e-7 or std.total_served <= 1e-6:
            continue
        assert emissions_report(dpd) <= emissions_report(std) + 1e-6
        checked += 1
    assert checked >= 5
