"""Auction game: best responses, convergence, pricing, equilibrium quality."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from ehrelay.auction import (
    B_MAX,
    LN2,
    AuctionConfig,
    allocate_auction,
    best_response,
    contraction_modulus,
    full_budget_price,
    interior_target,
    iteration_spectral_radius,
    payoff,
    predict_allocation,
    quit_price,
    response_weights,
    run_auction,
    select_price,
    winner_maximizing_price,
)
from ehrelay.model import ChannelDraw, SystemConfig, derive_params, harvest
from oracles import golden_section_max


def rand_instance(rng, n=None, scale=1.0):
    n = n if n is not None else int(rng.integers(1, 11))
    g2 = rng.exponential(scale, n) + 1e-9
    pr = float(rng.exponential(5.0)) + 0.1
    return g2, pr


def test_payoff_zero_bid_is_zero():
    g2 = np.array([1.0, 2.0])
    bids = np.array([0.0, 3.0])
    assert payoff(0, bids, 0.5, 4.0, g2, 0.04) == 0.0


def test_payoff_increasing_when_power_is_free():
    g2 = np.array([1.0])
    vals = [payoff(0, np.array([b]), 0.0, 4.0, g2, 0.04) for b in (0.1, 1.0, 10.0, 100.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_best_response_quit_branch():
    g2 = np.array([1.0, 0.5])
    price = quit_price(g2)[0] * 1.01  # above both quit prices
    assert best_response(0, np.ones(2), price, 4.0, g2, 0.04) == 0.0
    assert best_response(1, np.ones(2), price, 4.0, g2, 0.04) == 0.0


def test_best_response_cap_branch():
    g2 = np.array([5.0])
    price = float(full_budget_price(g2, 2.0)[0]) * 0.9
    assert best_response(0, np.ones(1), price, 2.0, g2, 0.02) == B_MAX


def test_best_response_interior_formula():
    g2 = np.array([2.0, 1.0])
    price, pr, xi = 0.2, 5.0, 0.05
    t = 1.0 / (2.0 * LN2 * price) - 1.0 / g2[0]
    bids = np.array([1.3, 0.7])
    want = t / (pr - t) * (bids[1] + xi)
    assert best_response(0, bids, price, pr, g2, xi) == pytest.approx(want, rel=1e-12)


def test_best_response_rejects_nonpositive_price():
    with pytest.raises(ValueError):
        best_response(0, np.ones(1), 0.0, 1.0, np.array([1.0]), 0.01)


def test_best_response_matches_golden_section_argmax():
    # numerical argmax of the payoff over own bid, others fixed
    rng = np.random.default_rng(3)
    for _ in range(25):
        g2, pr = rand_instance(rng, n=3)
        price = select_price(g2, pr)
        bids = rng.exponential(1.0, 3)
        xi = 0.01 * pr
        i = int(rng.integers(3))

        def util(x):
            b = bids.copy()
            b[i] = x
            return payoff(i, b, price, pr, g2, xi)

        xstar = golden_section_max(util, 0.0, B_MAX)
        br = best_response(i, bids, price, pr, g2, xi)
        assert util(br) >= util(xstar) - 1e-6


def test_local_information_form_identity():
    # interior response equals rho_i (P_r - P_ri) b_i / P_ri at any state
    g2 = np.array([2.0, 1.0, 0.5])
    pr, xi, price = 5.0, 0.05, 0.2
    bids = np.array([1.4, 0.2, 3.0])
    t = interior_target(price, g2)
    shares = bids / (bids.sum() + xi) * pr
    for i in range(3):
        if not 0.0 < t[i] < pr:
            continue
        rho = t[i] / (pr - t[i])
        want = rho * (pr - shares[i]) * bids[i] / shares[i]
        got = best_response(i, bids, price, pr, g2, xi)
        assert got == pytest.approx(want, rel=1e-12)


def test_single_user_fixed_point():
    g2 = np.array([1.5])
    pr = 3.0
    price = select_price(g2, pr)
    t = float(interior_target(price, g2)[0])
    state = run_auction(g2, pr, AuctionConfig(price=price, reserve=0.03))
    assert state.converged
    assert float(state.allocation[0]) == pytest.approx(t, abs=1e-9)
    # closed-form fixed point b* = T/(P_r - T) xi
    assert float(state.bids[0]) == pytest.approx(t / (pr - t) * 0.03, rel=1e-8)


def test_all_priced_out():
    g2 = np.array([1.0, 0.5])
    price = float(quit_price(g2).max()) * 1.1
    state = run_auction(g2, 4.0, AuctionConfig(price=price, reserve=0.04))
    assert state.converged
    assert not state.bids.any()
    assert not state.allocation.any()


def test_run_auction_converges_with_modulus_rate():
    rng = np.random.default_rng(11)
    for _ in range(40):
        g2, pr = rand_instance(rng)
        price = select_price(g2, pr)
        mu = contraction_modulus(price, pr, g2)
        assert mu < 1.0
        state = run_auction(g2, pr, AuctionConfig(price=price, reserve=0.01 * pr))
        assert state.converged
        assert state.iterations <= 500
        assert state.residual <= 1e-10


def test_reserve_share_stays_at_relay():
    g2 = np.array([2.0, 1.0])
    pr = 3.0
    price = select_price(g2, pr)
    state = run_auction(g2, pr, AuctionConfig(price=price, reserve=0.03))
    assert state.converged
    assert float(state.allocation.sum()) < pr


@given(seed=hst.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_contraction_certificate_property(seed):
    # ||BR(x) - BR(y)||_2 <= mu ||x - y||_2 whenever mu < 1
    rng = np.random.default_rng(seed)
    g2, pr = rand_instance(rng)
    n = g2.size
    price = select_price(g2, pr)
    mu = contraction_modulus(price, pr, g2)
    if not mu < 1.0:
        return
    xi = 0.01 * pr
    x = rng.exponential(1.0, n)
    y = rng.exponential(1.0, n)
    bx = np.array([best_response(i, x, price, pr, g2, xi) for i in range(n)])
    by = np.array([best_response(i, y, price, pr, g2, xi) for i in range(n)])
    lhs = float(np.linalg.norm(bx - by))
    rhs = mu * float(np.linalg.norm(x - y))
    assert lhs <= rhs + 1e-9 * max(1.0, rhs)


@given(seed=hst.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_spectral_radius_below_certificate(seed):
    rng = np.random.default_rng(seed)
    g2, pr = rand_instance(rng)
    price = float(rng.uniform(quit_price(g2).min() * 0.2, quit_price(g2).max()))
    if price <= 0.0:
        return
    mu = contraction_modulus(price, pr, g2)
    if math.isinf(mu):
        return
    assert iteration_spectral_radius(price, pr, g2) <= mu + 1e-9


def test_response_weights_zero_off_interior():
    g2 = np.array([10.0, 1.0, 0.01])
    pr = 2.0
    price = 0.25
    t = interior_target(price, g2)
    rho = response_weights(price, pr, g2)
    for i in range(3):
        if t[i] <= 0.0 or t[i] >= pr:
            assert rho[i] == 0.0
        else:
            assert rho[i] == pytest.approx(t[i] / (pr - t[i]))


def test_select_price_certified_and_inside_bracket():
    rng = np.random.default_rng(5)
    for _ in range(50):
        g2, pr = rand_instance(rng)
        price = select_price(g2, pr)
        assert contraction_modulus(price, pr, g2) < 1.0
        assert price < float(quit_price(g2).max())


def test_select_price_single_user_strictly_interior():
    for g, pr in [(1.0, 3.0), (0.2, 0.5), (5.0, 0.01), (0.01, 0.1)]:
        g2 = np.array([g])
        price = select_price(g2, pr)
        assert float(full_budget_price(g2, pr)[0]) < price < float(quit_price(g2)[0])


def test_select_price_validation():
    with pytest.raises(ValueError):
        select_price(np.array([]), 1.0)
    with pytest.raises(ValueError):
        select_price(np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        select_price(np.array([1.0]), 1.0, margin=-0.1)


def test_predict_allocation_matches_dynamics():
    rng = np.random.default_rng(17)
    for _ in range(60):
        g2, pr = rand_instance(rng, scale=0.0625)
        price = winner_maximizing_price(g2, pr, 1.0)
        xi = 0.01 * pr
        pred = predict_allocation(price, pr, g2, xi)
        assert pred is not None
        state = run_auction(g2, pr, AuctionConfig(price=price, reserve=xi))
        assert state.converged
        assert state.allocation == pytest.approx(pred, abs=1e-6 * max(1.0, pr))


def test_winner_maximizing_price_serves_at_least_certified():
    rng = np.random.default_rng(23)
    a = 1.0
    for _ in range(60):
        g2, pr = rand_instance(rng, scale=0.0625)
        need = a / g2

        def served_at(price):
            state = run_auction(g2, pr, AuctionConfig(price=price, reserve=0.01 * pr))
            assert state.converged
            return int((state.allocation >= need).sum())

        assert served_at(winner_maximizing_price(g2, pr, a)) >= served_at(
            select_price(g2, pr)
        )


def test_winner_maximizing_price_validation():
    with pytest.raises(ValueError):
        winner_maximizing_price(np.array([1.0]), 0.0, 1.0)
    with pytest.raises(ValueError):
        winner_maximizing_price(np.array([1.0]), 1.0, 1.0, radius_limit=1.5)


def _auction_setup(h2, g2, rate=0.5, power=10.0):
    config = SystemConfig(pairs=len(h2), rate=rate, source_power=power)
    params = derive_params(config)
    draw = ChannelDraw(h2=np.asarray(h2, float), g2=np.asarray(g2, float))
    return draw, harvest(draw, config, params), config, params


def test_allocate_auction_budget_and_masks():
    draw, state, config, params = _auction_setup(
        [0.5, 0.05, 2.0], [0.8, 1.0, 1.5]
    )
    alloc = allocate_auction(draw, state, config, params)
    assert alloc.powers[1] == 0.0  # not decoded
    assert (alloc.powers >= 0.0).all()
    assert alloc.leftover > 0.0  # reserve share withheld
    assert alloc.total == pytest.approx(state.total_power, rel=1e-9)


def test_allocate_auction_empty_set():
    draw, state, config, params = _auction_setup([0.01, 0.02], [1.0, 1.0])
    alloc = allocate_auction(draw, state, config, params)
    assert not alloc.powers.any() and alloc.leftover == 0.0


def test_allocate_auction_rejects_unknown_policy():
    draw, state, config, params = _auction_setup([0.5], [1.0])
    with pytest.raises(ValueError, match="price_policy"):
        allocate_auction(draw, state, config, params, price_policy="cheapest")


def test_allocate_auction_policies_differ_only_in_price():
    draw, state, config, params = _auction_setup(
        [0.5, 0.7, 2.0], [0.1, 0.25, 0.9]
    )
    a = allocate_auction(draw, state, config, params, price_policy="max-winners")
    b = allocate_auction(draw, state, config, params, price_policy="certified")
    need = params.snr_threshold / draw.g2
    served_a = int(((a.powers >= need) & state.decoded).sum())
    served_b = int(((b.powers >= need) & state.decoded).sum())
    assert served_a >= served_b
