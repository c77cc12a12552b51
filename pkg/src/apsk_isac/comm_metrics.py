"""Communication metrics over the complex AWGN channel.

The channel gain and transmit power enter only through the SNR, so every
function works with unit noise power and the constellation scaled by
``sqrt(snr)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation, build_comm_optimal_family
from .geometry import dmin

LOG2_2PIE_4 = math.log2(2 * math.pi * math.e / 4)
DEFAULT_SAMPLES = 200_000
_CHUNK_ELEMENTS = 1 << 21


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelSpec:
    snr_c: float
    sigma_c2: float = 1.0

    def __post_init__(self):
        if not self.snr_c > 0:
            raise ValueError(f"SNR must be positive, got {self.snr_c}")

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelSpec":
        return cls(db_to_linear(snr_db))

    @property
    def snr_c_db(self) -> float:
        return 10.0 * math.log10(self.snr_c)


@dataclass(frozen=True)
class MiEstimate:
    value_bits: float
    std_error_bits: float
    n_samples: int
    seed: int


def estimate_mi(
    c: Constellation,
    ch: ChannelSpec,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> MiEstimate:
    """Monte Carlo estimate of I(X;Y) in bits for uniform input over ``c``.

    Each sample contributes ``m - log2 sum_i exp(|z|^2 - |sqrt(snr)(x - x_i) + z|^2)``,
    accumulated in the log domain with max subtraction. The random draws
    depend only on ``(seed, n_samples)``.
    """
    if n_samples < 1000:
        raise ValueError(f"n_samples must be >= 1000, got {n_samples}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, c.size, size=n_samples)
    z = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)) * math.sqrt(0.5)

    amp = math.sqrt(ch.snr_c)
    pts = amp * c.points
    vals = np.empty(n_samples)
    chunk = max(1, _CHUNK_ELEMENTS // c.size)
    for start in range(0, n_samples, chunk):
        zs = z[start:start + chunk]
        diff = pts[idx[start:start + chunk], None] - pts[None, :] + zs[:, None]
        expo = np.abs(zs)[:, None] ** 2 - (diff.real**2 + diff.imag**2)
        top = expo.max(axis=1)
        lse = top + np.log(np.exp(expo - top[:, None]).sum(axis=1))
        vals[start:start + chunk] = c.m - lse / math.log(2)

    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    if not (math.isfinite(mean) and math.isfinite(se)):
        raise FloatingPointError("non-finite value in mutual information accumulation")
    return MiEstimate(mean, se, n_samples, int(seed))


def gaussian_capacity(ch: ChannelSpec) -> float:
    return math.log2(1.0 + ch.snr_c)


def _dmin2(c, d_min):
    d = dmin(c) if d_min is None else d_min
    if not d > 0:
        raise ValueError("minimum distance must be positive")
    return d * d


def mi_lower_bound(c: Constellation, ch: ChannelSpec, d_min: float | None = None) -> float:
    """Distance-based lower bound on I(X;Y) in bits."""
    d2 = _dmin2(c, d_min)
    return c.m - LOG2_2PIE_4 - math.log2(1.0 + 16.0 / (math.pi * ch.snr_c * d2))


def gap_upper_bound(c: Constellation, ch: ChannelSpec, d_min: float | None = None) -> float:
    """Upper bound on C(snr) - I(X;Y) in bits."""
    d2 = _dmin2(c, d_min)
    s = ch.snr_c
    inner = (1.0 + s + 16.0 / (math.pi * d2 * s) + 16.0 / (math.pi * d2)) / 2**c.m
    return LOG2_2PIE_4 + math.log2(inner)


@dataclass
class GapRow:
    snr_db: float
    m: int
    K: int
    capacity: float
    mi: MiEstimate
    gap_bound: float

    @property
    def gap(self) -> float:
        return self.capacity - self.mi.value_bits


@dataclass
class ConstantGapReport:
    alpha: int
    rows: list[GapRow] = field(default_factory=list)

    @property
    def gaps(self) -> list[float]:
        return [r.gap for r in self.rows]

    @property
    def spread(self) -> float:
        g = self.gaps
        return max(g) - min(g) if g else 0.0


def size_for_snr(snr_db: float) -> int:
    """Bits per symbol ``ceil(log2 snr) + 2`` used for the constant-gap experiment."""
    return max(2, math.ceil(math.log2(db_to_linear(snr_db))) + 2)


def constant_gap_check(
    alpha: int,
    snr_db_list,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> ConstantGapReport:
    """Gap to capacity of the communication-optimal family with ``m`` grown with SNR."""
    report = ConstantGapReport(alpha)
    for i, snr_db in enumerate(snr_db_list):
        ch = ChannelSpec.from_db(snr_db)
        m = size_for_snr(snr_db)
        c = build_comm_optimal_family(m, alpha)
        est = estimate_mi(c, ch, n_samples, seed + i)
        report.rows.append(GapRow(snr_db, m, c.K, gaussian_capacity(ch), est, gap_upper_bound(c, ch)))
    return report
