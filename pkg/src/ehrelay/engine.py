"""Monte Carlo outage engine.

Trials are grouped into fixed-size blocks; block ``b`` draws its channels
from a dedicated substream keyed by ``(seed, b)`` (see
:func:`ehrelay.model.sample_block`), and per-block statistics are reduced
in block order.  Estimates are therefore bit-identical for any worker
count and any assignment of blocks to workers.

Per-trial outage rule, shared by every strategy: pair i is in outage iff
it is outside the decoding set or its granted power falls short of the
requirement ``a / |g_i|^2`` (equivalently, received SNR below the decode
threshold).  The comparison is done in requirement form so that a
strategy granting exactly the requirement is served regardless of
rounding.  Per-trial metrics are the outage fraction, the all-pairs-fail
event (the best-positioned pair failed), the some-pair-fails event (the
worst-positioned pair failed), and the number of served destinations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import (
    ChannelDraw,
    DerivedParams,
    HarvestState,
    SystemConfig,
    derive_params,
    harvest,
    sample_block,
    sample_channels,
)
from .strategies import PowerAllocation, STRATEGY_NAMES, allocate

__all__ = [
    "TrialResult",
    "OutageReport",
    "DEFAULT_BLOCK_SIZE",
    "evaluate_draw",
    "run_trial",
    "run_experiment",
    "worst_case_equivalence_check",
]

DEFAULT_BLOCK_SIZE = 16384


@dataclass(eq=False)
class TrialResult:
    """Outcome of a single channel draw under one strategy."""

    outage: np.ndarray
    success_count: int
    leftover: float


@dataclass(frozen=True)
class OutageReport:
    """Aggregated Monte Carlo estimates.

    ``average`` is the mean per-pair outage fraction; ``best``/``worst``
    are the all-fail and any-fail trial frequencies.  Standard errors are
    binomial for the Bernoulli events and sample-based for the averaged
    fraction and the success count (pairs within a trial are correlated
    through the shared budget).
    """

    strategy: str
    trials: int
    seed: int
    average: float
    average_stderr: float
    best: float
    best_stderr: float
    worst: float
    worst_stderr: float
    mean_success: float
    mean_success_stderr: float
    mean_leftover: float


def evaluate_draw(
    draw: ChannelDraw,
    config: SystemConfig,
    strategy: str,
    *,
    params: DerivedParams | None = None,
    auction_opts: dict | None = None,
) -> TrialResult:
    """Allocate and apply the outage rule to one draw."""
    if params is None:
        params = derive_params(config)
    state = harvest(draw, config, params)
    alloc = allocate(strategy, draw, state, config, params, auction_opts=auction_opts)
    served = state.decoded & (alloc.powers >= params.snr_threshold / draw.g2)
    return TrialResult(
        outage=~served,
        success_count=int(served.sum()),
        leftover=alloc.leftover,
    )


def run_trial(
    rng: np.random.Generator,
    config: SystemConfig,
    strategy: str,
    *,
    auction_opts: dict | None = None,
) -> TrialResult:
    """Sample one draw from ``rng`` and evaluate it."""
    draw = sample_channels(rng, config)
    return evaluate_draw(draw, config, strategy, auction_opts=auction_opts)


# --------------------------------------------------------------------------
# vectorized per-block evaluation
# --------------------------------------------------------------------------

def _decode_and_budget(
    h2: np.ndarray, config: SystemConfig, params: DerivedParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    decoded = h2 > params.decode_threshold
    surplus = config.eta * (config.source_power * h2 - params.snr_threshold)
    pr = np.where(decoded, surplus, 0.0).sum(axis=1)
    return decoded, decoded.sum(axis=1), pr


def _served_individual(h2, g2, decoded, n, pr, config, params):
    p = config.eta * (config.source_power * h2 - params.snr_threshold)
    return decoded & (p >= params.snr_threshold / g2)


def _served_equal(h2, g2, decoded, n, pr, config, params):
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(n > 0, pr / np.maximum(n, 1), 0.0)
    return decoded & (share[:, None] >= params.snr_threshold / g2)


def _served_waterfill(h2, g2, decoded, n, pr, config, params):
    a = params.snr_threshold
    need = np.where(decoded, a / g2, np.inf)
    order = np.argsort(need, axis=1, kind="stable")
    sorted_need = np.take_along_axis(need, order, axis=1)
    spent = np.cumsum(sorted_need, axis=1)
    served_sorted = spent <= pr[:, None]
    served = np.zeros_like(decoded)
    np.put_along_axis(served, order, served_sorted, axis=1)
    return served & decoded


def _served_maxmin(h2, g2, decoded, n, pr, config, params):
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_sum = np.where(decoded, 1.0 / g2, 0.0).sum(axis=1)
        common_snr = np.where(n > 0, pr / np.where(inv_sum > 0, inv_sum, 1.0), 0.0)
    # every decoded pair gets the same received SNR; all succeed or none do
    return decoded & (common_snr >= params.snr_threshold)[:, None]


_VECTOR_STRATEGIES = {
    "individual": _served_individual,
    "equal": _served_equal,
    "waterfill": _served_waterfill,
    "maxmin": _served_maxmin,
}


def _waterfill_leftover(g2, decoded, pr, params):
    need = np.where(decoded, params.snr_threshold / g2, np.inf)
    sorted_need = np.sort(need, axis=1)
    spent = np.cumsum(sorted_need, axis=1)
    served = spent <= pr[:, None]
    total_spent = np.where(served, sorted_need, 0.0).sum(axis=1)
    return pr - total_spent


def _evaluate_block(
    h2: np.ndarray,
    g2: np.ndarray,
    config: SystemConfig,
    params: DerivedParams,
    strategy: str,
    auction_opts: dict | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Served mask, success counts and leftovers for one block of draws."""
    decoded, n, pr = _decode_and_budget(h2, config, params)
    if strategy in _VECTOR_STRATEGIES:
        served = _VECTOR_STRATEGIES[strategy](h2, g2, decoded, n, pr, config, params)
        if strategy == "waterfill":
            leftover = _waterfill_leftover(g2, decoded, pr, params)
        else:
            leftover = np.zeros(h2.shape[0])
        return served, served.sum(axis=1), leftover

    if strategy != "auction":
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGY_NAMES}")
    served = np.zeros(h2.shape, dtype=bool)
    leftover = np.zeros(h2.shape[0])
    for t in range(h2.shape[0]):
        res = evaluate_draw(
            ChannelDraw(h2=h2[t], g2=g2[t]),
            config,
            "auction",
            params=params,
            auction_opts=auction_opts,
        )
        served[t] = ~res.outage
        leftover[t] = res.leftover
    return served, served.sum(axis=1), leftover


@dataclass
class _Accumulator:
    trials: int = 0
    frac_sum: float = 0.0
    frac_sq_sum: float = 0.0
    all_fail: int = 0
    any_fail: int = 0
    success_sum: float = 0.0
    success_sq_sum: float = 0.0
    leftover_sum: float = 0.0

    def add_block(self, served: np.ndarray, counts: np.ndarray, leftover: np.ndarray, pairs: int) -> None:
        frac = 1.0 - counts / pairs
        self.trials += counts.shape[0]
        self.frac_sum += float(frac.sum())
        self.frac_sq_sum += float((frac * frac).sum())
        self.all_fail += int((counts == 0).sum())
        self.any_fail += int((counts < pairs).sum())
        self.success_sum += float(counts.sum())
        self.success_sq_sum += float((counts.astype(float) ** 2).sum())
        self.leftover_sum += float(leftover.sum())


def _sample_stderr(total: float, total_sq: float, n: int) -> float:
    if n < 2:
        return math.nan
    var = max(total_sq - total * total / n, 0.0) / (n - 1)
    return math.sqrt(var / n)


def _binomial_stderr(count: int, n: int) -> float:
    p = count / n
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def run_experiment(
    config: SystemConfig,
    strategy: str,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    auction_opts: dict | None = None,
) -> OutageReport:
    """Estimate the outage metrics of ``strategy`` over ``trials`` draws.

    Block b covers trials [b * block_size, ...) and is computed entirely
    from its own substream; per-block partial sums are reduced in block
    order, so the report does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if strategy not in STRATEGY_NAMES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGY_NAMES}")
    params = derive_params(config)
    n_blocks = (trials + block_size - 1) // block_size

    def one_block(b: int):
        size = min(block_size, trials - b * block_size)
        h2, g2 = sample_block(seed, b, size, config)
        return _evaluate_block(h2, g2, config, params, strategy, auction_opts)

    acc = _Accumulator()
    if workers == 1:
        results = map(one_block, range(n_blocks))
        for served, counts, leftover in results:
            acc.add_block(served, counts, leftover, config.pairs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for served, counts, leftover in pool.map(one_block, range(n_blocks)):
                acc.add_block(served, counts, leftover, config.pairs)

    t = acc.trials
    return OutageReport(
        strategy=strategy,
        trials=t,
        seed=seed,
        average=acc.frac_sum / t,
        average_stderr=_sample_stderr(acc.frac_sum, acc.frac_sq_sum, t),
        best=acc.all_fail / t,
        best_stderr=_binomial_stderr(acc.all_fail, t),
        worst=acc.any_fail / t,
        worst_stderr=_binomial_stderr(acc.any_fail, t),
        mean_success=acc.success_sum / t,
        mean_success_stderr=_sample_stderr(acc.success_sum, acc.success_sq_sum, t),
        mean_leftover=acc.leftover_sum / t,
    )


def worst_case_equivalence_check(
    config: SystemConfig, trials: int, seed: int, *, block_size: int = DEFAULT_BLOCK_SIZE
) -> int:
    """Count trials where water-filling and max-min disagree on the
    worst-pair outage event.

    Both fail some pair iff the budget cannot cover every decoded pair's
    requirement, so the count should be zero.
    """
    params = derive_params(config)
    n_blocks = (trials + block_size - 1) // block_size
    mismatches = 0
    for b in range(n_blocks):
        size = min(block_size, trials - b * block_size)
        h2, g2 = sample_block(seed, b, size, config)
        decoded, n, pr = _decode_and_budget(h2, config, params)
        wf = _served_waterfill(h2, g2, decoded, n, pr, config, params)
        mm = _served_maxmin(h2, g2, decoded, n, pr, config, params)
        wf_worst = (wf.sum(axis=1) < config.pairs)
        mm_worst = (mm.sum(axis=1) < config.pairs)
        mismatches += int((wf_worst != mm_worst).sum())
    return mismatches
