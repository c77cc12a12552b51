"""Minimum distance and energy moments of APSK constellations.

The structured minimum distance splits into intra-ring chords and inter-ring
law-of-cosines distances; :func:`brute_force_dmin` is the independent
pairwise oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import ApskDesign, Constellation, DesignError

ANGLE_TOL = 1e-12


def wrap_angle(phi):
    """Reduce angles into (-pi, pi]."""
    phi = np.asarray(phi, dtype=float)
    out = np.pi - np.mod(np.pi - phi, 2 * np.pi)
    return out


def intra_ring_dmin(r: float, N: int) -> float:
    """Chord ``2 r sin(pi/N)`` between neighbours on one ring; ``inf`` for a single point."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if N < 1:
        raise ValueError(f"ring needs at least one point, got N={N}")
    if N == 1:
        return math.inf
    return 2.0 * r * math.sin(math.pi / N)


def _offset_scan(N1: int, N2: int, phi1: float, phi2: float):
    n1 = np.arange(N1) / N1
    n2 = np.arange(N2) / N2
    theta = (phi1 - phi2) + 2 * np.pi * np.subtract.outer(n1, n2)
    dev = np.abs(wrap_angle(theta))
    idx = np.unravel_index(int(np.argmin(dev)), dev.shape)
    delta = float(dev[idx])
    if delta < ANGLE_TOL:
        delta = 0.0
    return delta, (int(idx[0]), int(idx[1]))


def ring_phase_offset(N1: int, N2: int, phi1: float, phi2: float) -> float:
    """Smallest angular separation between the points of two rings.

    Exhaustive scan over all ``N1 * N2`` point pairs.
    """
    return _offset_scan(N1, N2, phi1, phi2)[0]


def ring_phase_offset_lcm(N1: int, N2: int, phi1: float, phi2: float) -> float:
    """Closed form of :func:`ring_phase_offset`.

    The angle differences between the two rings form the lattice
    ``phi1 - phi2 + 2*pi*j / lcm(N1, N2)``.
    """
    step = 2 * math.pi / math.lcm(N1, N2)
    rem = math.fmod(phi1 - phi2, step) % step
    delta = min(rem, step - rem)
    return 0.0 if delta < ANGLE_TOL else delta


def inter_ring_dmin(r1: float, r2: float, N1: int, N2: int, phi1: float, phi2: float) -> float:
    if r1 <= 0 or r2 <= 0:
        raise ValueError(f"radii must be positive, got {r1}, {r2}")
    delta = ring_phase_offset(N1, N2, phi1, phi2)
    d2 = r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(delta)
    return math.sqrt(max(d2, 0.0))


@dataclass(frozen=True)
class DistanceReport:
    d_min: float
    argmin_pair: tuple[int, int]
    intra_min: tuple[float, ...]
    inter_min: np.ndarray
    delta_angles: np.ndarray

    @property
    def intra_overall(self) -> float:
        return min(self.intra_min)

    @property
    def inter_overall(self) -> float:
        if self.inter_min.size == 0:
            return math.inf
        return float(np.min(self.inter_min))

    @property
    def adjacent_inter_min(self) -> float:
        K = self.inter_min.shape[0]
        if K < 2:
            return math.inf
        return float(min(self.inter_min[k, k + 1] for k in range(K - 1)))

    def to_dict(self) -> dict:
        def fin(x):
            return None if not math.isfinite(x) else float(x)

        return {
            "d_min": float(self.d_min),
            "argmin_pair": list(self.argmin_pair),
            "intra_min": [fin(x) for x in self.intra_min],
            "inter_min": [[fin(x) for x in row] for row in self.inter_min],
            "delta_angles": [[fin(x) for x in row] for row in self.delta_angles],
        }


def min_distance(c: Constellation, design: ApskDesign | None = None, method: str = "scan") -> DistanceReport:
    """Minimum distance of an APSK constellation from its ring decomposition.

    All ring pairs are evaluated, not only adjacent ones. ``method="scan"``
    finds each ring-pair angle offset by exhaustive search; ``"lcm"`` uses the
    closed form, which is much cheaper for large constellations.
    """
    if method not in ("scan", "lcm"):
        raise ValueError(f"unknown method {method!r}")
    design = design if design is not None else c.design
    if design is None or c.ring_radii is None:
        raise DesignError("min_distance needs an APSK constellation with a design")
    if design.m != c.m or design.ring_counts != c.design.ring_counts:
        raise DesignError("design does not match the constellation's ring structure")
    if not np.allclose(np.asarray(design.ring_radii_raw) / design.ring_radii_raw[0],
                       np.asarray(c.ring_radii) / c.ring_radii[0], rtol=1e-9):
        raise DesignError("design radii do not match the constellation")

    radii = c.ring_radii
    counts = design.ring_counts
    phases = design.phase_offsets
    K = design.K
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])

    intra = tuple(intra_ring_dmin(r, n) for r, n in zip(radii, counts))
    best = math.inf
    pair = (0, 0)
    for k in range(K):
        if intra[k] < best:
            best, pair = intra[k], (int(offsets[k]), int(offsets[k]) + 1)

    if method == "lcm":
        inter, deltas = _inter_lcm(radii, counts, phases)
        if K > 1:
            k, kp = np.unravel_index(int(np.argmin(inter)), inter.shape)
            if inter[k, kp] < best:
                _, (n, npr) = _offset_scan(counts[k], counts[kp], phases[k], phases[kp])
                best, pair = float(inter[k, kp]), (int(offsets[k]) + n, int(offsets[kp]) + npr)
        return DistanceReport(best, pair, intra, inter, deltas)

    inter = np.full((K, K), math.inf)
    deltas = np.zeros((K, K))
    frac = np.concatenate([np.arange(n) / n for n in counts])
    phase = np.repeat(np.asarray(phases), counts)
    for k in range(K - 1):
        lo, hi = offsets[k], offsets[k] + counts[k]
        # ring k against every point of rings k+1..K in one exhaustive scan
        theta = (phases[k] + 2 * np.pi * frac[lo:hi])[:, None] - (phase[hi:] + 2 * np.pi * frac[hi:])[None, :]
        dev = np.abs(wrap_angle(theta))
        col_min = dev.min(axis=0)
        seg = np.minimum.reduceat(col_min, offsets[k + 1:] - hi)
        seg[seg < ANGLE_TOL] = 0.0
        r1, r2 = radii[k], np.asarray(radii[k + 1:])
        d = np.sqrt(np.maximum(r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(seg), 0.0))
        inter[k, k + 1:] = inter[k + 1:, k] = d
        deltas[k, k + 1:] = deltas[k + 1:, k] = seg
        j = int(np.argmin(d))
        if d[j] < best:
            kp = k + 1 + j
            a, b = offsets[kp] - hi, offsets[kp] - hi + counts[kp]
            n, npr = np.unravel_index(int(np.argmin(dev[:, a:b])), (counts[k], counts[kp]))
            best, pair = float(d[j]), (int(lo + n), int(offsets[kp] + npr))

    return DistanceReport(best, pair, intra, inter, deltas)


def _inter_lcm(radii, counts, phases):
    n = np.asarray(counts)
    step = 2 * np.pi / np.lcm.outer(n, n)
    ph = np.asarray(phases)
    rem = np.mod(np.subtract.outer(ph, ph), step)
    deltas = np.minimum(rem, step - rem)
    deltas[deltas < ANGLE_TOL] = 0.0
    r = np.asarray(radii)
    d2 = r[:, None] ** 2 + r[None, :] ** 2 - 2 * np.outer(r, r) * np.cos(deltas)
    inter = np.sqrt(np.maximum(d2, 0.0))
    np.fill_diagonal(inter, np.inf)
    np.fill_diagonal(deltas, 0.0)
    return inter, deltas


def pairwise_min(points, chunk: int = 512):
    """Exact minimum pairwise distance and the index pair that attains it."""
    pts = np.asarray(points, dtype=complex).reshape(-1)
    if pts.size < 2:
        raise ValueError("need at least two points")
    best, pair = math.inf, (0, 1)
    for start in range(0, pts.size, chunk):
        block = pts[start:start + chunk]
        d = np.abs(block[:, None] - pts[None, :])
        rows = np.arange(block.size)
        d[rows, start + rows] = np.inf
        i = int(np.argmin(d))
        r, col = divmod(i, pts.size)
        if d[r, col] < best:
            best, pair = float(d[r, col]), tuple(sorted((start + r, col)))
    return best, pair


def brute_force_dmin(c) -> float:
    pts = c.points if isinstance(c, Constellation) else c
    return pairwise_min(pts)[0]


def dmin(c: Constellation, method: str = "scan") -> float:
    """Minimum distance, structured when a ring design is attached."""
    if c.design is not None:
        return min_distance(c, method=method).d_min
    return brute_force_dmin(c)


def energy_moments(c: Constellation) -> tuple[float, float, float]:
    """``(E|X|^2, Var|X|^2, E|X|^4)`` under uniform input."""
    return c.moments


def ring_fourth_sum(c: Constellation) -> float:
    """``sum_k N_k r_k^4`` over the normalized rings."""
    if c.design is not None:
        return float(sum(n * r**4 for n, r in zip(c.design.ring_counts, c.ring_radii)))
    return float(np.sum(c.energies**2))


def fourth_moment_compare(a: Constellation, b: Constellation, tol: float = 1e-12) -> int:
    """-1 if ``a`` has the smaller fourth moment (hence variance), 1 if ``b`` does, 0 if equal.

    Moments are per-point averages so constellations of different size compare
    on the same footing; at equal size this is the ring-sum comparison.
    """
    fa, fb = a.moments[2], b.moments[2]
    if abs(fa - fb) <= tol:
        return 0
    return -1 if fa < fb else 1
