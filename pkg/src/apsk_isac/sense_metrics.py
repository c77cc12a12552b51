"""Sensing metrics: conditional CRB for the sensing channel gain and its energy-variance bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constellation import Constellation


@dataclass(frozen=True)
class SensingSpec:
    sigma_s2: float = 1.0
    P: float = 1.0
    L: int = 64

    def __post_init__(self):
        if not self.sigma_s2 > 0 or not self.P > 0:
            raise ValueError(f"sigma_s2 and P must be positive, got {self.sigma_s2}, {self.P}")
        if self.L < 1:
            raise ValueError(f"block length must be >= 1, got {self.L}")

    @property
    def floor(self) -> float:
        """CRB of a constant unit-energy block, ``sigma_s2 / (P L)``."""
        return self.sigma_s2 / (self.P * self.L)


class CrbEstimate(NamedTuple):
    mean: float
    std_error: float


def crb_conditional(energies, s: SensingSpec) -> float:
    """CRB ``sigma_s2 / (P ||x||^2)`` for a block with the given symbol energies."""
    total = float(np.sum(energies))
    if not total > 0:
        raise ValueError("block energy must be positive")
    return s.sigma_s2 / (s.P * total)


def variance_metric(c: Constellation) -> float:
    return c.moments[1]


def avg_crb_bound(c: Constellation, s: SensingSpec) -> float:
    """Upper bound on the average conditional CRB.

    Uses the constellation's exact minimum symbol energy as ``delta``, the
    largest admissible value.
    """
    delta = c.min_energy
    if not delta > 0:
        raise ValueError("constellation contains the origin; the energy-variance bound needs delta > 0")
    var = variance_metric(c)
    if var == 0.0:
        return s.floor
    return (s.sigma_s2 / s.P) * (1.0 / s.L + var / (s.L**2 * delta))


def avg_crb_monte_carlo(
    c: Constellation,
    s: SensingSpec,
    n_blocks: int = 10_000,
    seed: int = 0,
) -> CrbEstimate:
    """Average of :func:`crb_conditional` over i.i.d. uniform blocks of length L."""
    if n_blocks < 1000:
        raise ValueError(f"n_blocks must be >= 1000, got {n_blocks}")
    rng = np.random.default_rng(seed)
    energies = c.energies
    totals = np.empty(n_blocks)
    rows = max(1, (1 << 20) // s.L)
    for start in range(0, n_blocks, rows):
        n = min(rows, n_blocks - start)
        idx = rng.integers(0, c.size, size=(n, s.L))
        totals[start:start + n] = energies[idx].sum(axis=1)
    crb = s.sigma_s2 / (s.P * totals)
    return CrbEstimate(float(crb.mean()), float(crb.std(ddof=1) / math.sqrt(n_blocks)))
