"""System model: configuration, Rayleigh fading, power-splitting harvest.

M source-destination pairs communicate through one decode-and-forward
relay.  In the first phase every source transmits at power ``source_power``;
the relay splits each received signal, decoding when the channel is strong
enough and harvesting the surplus.  In the second phase the harvested
budget is allocated across the decoded pairs' second hops.

Noise variances are normalized to one, so ``source_power`` is the transmit
SNR.  Squared channel magnitudes are exponential with mean equal to the
per-link variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "DerivedParams",
    "ChannelDraw",
    "HarvestState",
    "power_from_snr_db",
    "derive_params",
    "sample_channels",
    "sample_block",
    "block_rng",
    "power_split_theta",
    "harvest",
]


def power_from_snr_db(snr_db: float) -> float:
    """Transmit SNR in dB to linear source power (unit noise variance)."""
    return 10.0 ** (snr_db / 10.0)


def _as_variance_tuple(value, pairs: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        value = (float(value),) * pairs
    else:
        value = tuple(float(v) for v in value)
    if len(value) != pairs:
        raise ValueError(f"{name} must be scalar or length {pairs}, got {len(value)}")
    if any(not math.isfinite(v) or v <= 0.0 for v in value):
        raise ValueError(f"{name} entries must be finite and positive")
    return value


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters for one operating point.

    pairs:         number of source-destination pairs M
    rate:          target rate R in bit/s/Hz (two-phase transmission)
    source_power:  source transmit power = transmit SNR (unit noise)
    eta:           energy harvesting efficiency, in (0, 1]
    h_variance:    first-hop |h|^2 means, scalar or per pair
    g_variance:    second-hop |g|^2 means, scalar or per pair
    """

    pairs: int
    rate: float
    source_power: float
    eta: float = 1.0
    h_variance: tuple[float, ...] | float = 1.0
    g_variance: tuple[float, ...] | float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.pairs, int) or self.pairs < 1:
            raise ValueError(f"pairs must be a positive integer, got {self.pairs!r}")
        if not (math.isfinite(self.rate) and self.rate > 0.0):
            raise ValueError(f"rate must be positive, got {self.rate!r}")
        if not (math.isfinite(self.source_power) and self.source_power > 0.0):
            raise ValueError(f"source_power must be positive, got {self.source_power!r}")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        object.__setattr__(
            self, "h_variance", _as_variance_tuple(self.h_variance, self.pairs, "h_variance")
        )
        object.__setattr__(
            self, "g_variance", _as_variance_tuple(self.g_variance, self.pairs, "g_variance")
        )

    @property
    def unit_variances(self) -> bool:
        return all(v == 1.0 for v in self.h_variance) and all(
            v == 1.0 for v in self.g_variance
        )


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from (rate, source_power).

    snr_threshold:    a = 2^(2R) - 1, the post-processing SNR a link must
                      clear for decoding at rate R over half the slot
    decode_threshold: epsilon = a / source_power, the |h|^2 level above
                      which the relay decodes (and below which the power
                      splitter sends everything to the energy harvester)
    """

    snr_threshold: float
    decode_threshold: float


def derive_params(config: SystemConfig) -> DerivedParams:
    a = 2.0 ** (2.0 * config.rate) - 1.0
    return DerivedParams(snr_threshold=a, decode_threshold=a / config.source_power)


@dataclass(eq=False)
class ChannelDraw:
    """One realization of the squared channel gains (length M each)."""

    h2: np.ndarray
    g2: np.ndarray


@dataclass(eq=False)
class HarvestState:
    """Decoding set and harvested relay budget for one draw.

    decoded:     boolean mask over pairs, True where |h|^2 exceeds the
                 decode threshold (strict)
    n_decoded:   number of decoded pairs
    total_power: harvested budget sum_i eta * (P_s |h_i|^2 - a) over the
                 decoded set
    """

    decoded: np.ndarray
    n_decoded: int
    total_power: float

    @property
    def decoded_indices(self) -> np.ndarray:
        return np.flatnonzero(self.decoded)


def sample_channels(rng: np.random.Generator, config: SystemConfig) -> ChannelDraw:
    """Draw one set of squared channel gains (h first, then g)."""
    h2 = rng.exponential(scale=np.asarray(config.h_variance))
    g2 = rng.exponential(scale=np.asarray(config.g_variance))
    return ChannelDraw(h2=h2, g2=g2)


def block_rng(seed: int, block_index: int) -> np.random.Generator:
    """Generator for one trial block, independent across block indices."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, block_index))))


def sample_block(
    seed: int, block_index: int, size: int, config: SystemConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized channel draws for trials [block_index * B, ...): (h2, g2).

    Row t of the returned arrays is the draw for the t-th trial of the
    block.  All h2 values are drawn before all g2 values, so the block is
    a pure function of (seed, block_index, size, config): any partition of
    a trial range into blocks reproduces identical draws.
    """
    rng = block_rng(seed, block_index)
    h2 = rng.exponential(scale=np.asarray(config.h_variance), size=(size, config.pairs))
    g2 = rng.exponential(scale=np.asarray(config.g_variance), size=(size, config.pairs))
    return h2, g2


def power_split_theta(source_power: float, h2: float, snr_threshold: float) -> float:
    """Fraction of received power routed to the energy harvester.

    The splitter keeps just enough signal power for decoding at the target
    rate, theta = 1 - a / (P_s |h|^2), and sends everything to the
    harvester (theta would go negative; clamp to 0, no decoding) when the
    channel cannot support the rate anyway.
    """
    if h2 < 0.0:
        raise ValueError("h2 must be non-negative")
    received = source_power * h2
    if received <= snr_threshold:
        return 0.0
    return 1.0 - snr_threshold / received


def harvest(draw: ChannelDraw, config: SystemConfig, params: DerivedParams) -> HarvestState:
    """Decoding set and harvested budget for one draw.

    A pair is decoded iff its first-hop gain strictly exceeds the decode
    threshold; each decoded pair contributes eta * (P_s |h|^2 - a) to the
    relay budget (the surplus past what decoding itself consumes).
    """
    decoded = draw.h2 > params.decode_threshold
    surplus = config.source_power * draw.h2 - params.snr_threshold
    total = config.eta * float(surplus[decoded].sum())
    return HarvestState(decoded=decoded, n_decoded=int(decoded.sum()), total_power=total)
