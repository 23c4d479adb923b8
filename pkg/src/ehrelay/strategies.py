"""Relay power-allocation strategies.

All allocators share one convention: ``powers`` has one entry per pair
(zero off the decoding set), ``powers.sum() + leftover`` equals the
harvested budget, and a destination succeeds iff ``p * |g|^2 >= a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelDraw, DerivedParams, HarvestState, SystemConfig

__all__ = [
    "PowerAllocation",
    "allocate_individual",
    "allocate_equal",
    "allocate_waterfill",
    "allocate_maxmin",
    "maxmin_common_rate",
    "allocate",
    "STRATEGY_NAMES",
]

STRATEGY_NAMES = ("individual", "equal", "waterfill", "maxmin", "auction")


@dataclass(eq=False)
class PowerAllocation:
    """Per-pair relay powers plus any unspent budget."""

    powers: np.ndarray
    leftover: float

    @property
    def total(self) -> float:
        return float(self.powers.sum()) + self.leftover


def allocate_individual(
    draw: ChannelDraw, state: HarvestState, config: SystemConfig, params: DerivedParams
) -> PowerAllocation:
    """Each pair spends exactly the energy its own first hop harvested.

    Distributed operation: no pooling, p_i = eta * (P_s |h_i|^2 - a) on the
    decoding set.  The allocation tends to zero as |h_i|^2 approaches the
    decode threshold from above.
    """
    powers = np.zeros(config.pairs)
    d = state.decoded
    powers[d] = config.eta * (config.source_power * draw.h2[d] - params.snr_threshold)
    return PowerAllocation(powers=powers, leftover=0.0)


def allocate_equal(state: HarvestState) -> PowerAllocation:
    """Pooled budget split evenly over the decoding set."""
    powers = np.zeros(state.decoded.shape[0])
    if state.n_decoded > 0:
        powers[state.decoded] = state.total_power / state.n_decoded
    return PowerAllocation(powers=powers, leftover=0.0)


def allocate_waterfill(
    draw: ChannelDraw, state: HarvestState, config: SystemConfig, params: DerivedParams
) -> PowerAllocation:
    """Sequential allocation maximizing the number of served destinations.

    Decoded pairs are visited in descending |g|^2 order (ties broken by
    ascending pair index); each is granted exactly the power a / |g|^2
    that guarantees its success while the remaining budget suffices.  The
    walk stops at the first unaffordable pair; whatever remains stays at
    the relay as ``leftover``.  Serving cheapest-first makes the served
    count the maximum achievable within the budget.
    """
    powers = np.zeros(config.pairs)
    remaining = state.total_power
    if state.n_decoded > 0:
        idx = state.decoded_indices
        # descending gain with ascending-index tie-break: argsort is stable
        order = idx[np.argsort(-draw.g2[idx], kind="stable")]
        for i in order:
            need = params.snr_threshold / draw.g2[i]
            if need > remaining:
                break
            powers[i] = need
            remaining -= need
    return PowerAllocation(powers=powers, leftover=remaining)


def maxmin_common_rate(
    draw: ChannelDraw, state: HarvestState, params: DerivedParams
) -> float:
    """Common second-hop rate under the max-min fair allocation."""
    if state.n_decoded == 0:
        return 0.0
    inv_sum = float((1.0 / draw.g2[state.decoded]).sum())
    return 0.5 * math.log2(1.0 + state.total_power / inv_sum)


def allocate_maxmin(
    draw: ChannelDraw, state: HarvestState, config: SystemConfig, params: DerivedParams
) -> PowerAllocation:
    """Max-min fair allocation: every decoded pair gets the same rate.

    The optimum equalizes received SNRs, p_i = (2^(2t) - 1) / |g_i|^2 with
    the common rate t = (1/2) log2(1 + P_r / sum_i 1/|g_i|^2), and spends
    the whole budget.
    """
    powers = np.zeros(config.pairs)
    if state.n_decoded > 0:
        d = state.decoded
        inv = 1.0 / draw.g2[d]
        powers[d] = (state.total_power / float(inv.sum())) * inv
    return PowerAllocation(powers=powers, leftover=0.0)


def allocate(
    name: str,
    draw: ChannelDraw,
    state: HarvestState,
    config: SystemConfig,
    params: DerivedParams,
    *,
    auction_opts: dict | None = None,
) -> PowerAllocation:
    """Dispatch by strategy name (see ``STRATEGY_NAMES``)."""
    if name == "individual":
        return allocate_individual(draw, state, config, params)
    if name == "equal":
        return allocate_equal(state)
    if name == "waterfill":
        return allocate_waterfill(draw, state, config, params)
    if name == "maxmin":
        return allocate_maxmin(draw, state, config, params)
    if name == "auction":
        from .auction import allocate_auction

        return allocate_auction(draw, state, config, params, **(auction_opts or {}))
    raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")
