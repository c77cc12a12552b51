"""APSK constellation construction and normalization.

All builders return a :class:`Constellation` normalized to unit mean symbol
energy. APSK points are generated in polar form, so per-point amplitudes are
kept alongside the complex points and energy moments are computed from them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

ENERGY_TOL = 1e-12
DISTINCT_TOL = 1e-12


class DesignError(ValueError):
    """Raised when a constellation design violates a structural constraint."""


@dataclass(frozen=True)
class ApskDesign:
    """Ring structure of an APSK constellation before normalization."""

    m: int
    ring_counts: tuple[int, ...]
    ring_radii_raw: tuple[float, ...]
    phase_offsets: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ring_counts", tuple(int(n) for n in self.ring_counts))
        object.__setattr__(self, "ring_radii_raw", tuple(float(r) for r in self.ring_radii_raw))
        if not self.phase_offsets:
            object.__setattr__(self, "phase_offsets", (0.0,) * len(self.ring_counts))
        else:
            object.__setattr__(self, "phase_offsets", tuple(float(p) for p in self.phase_offsets))

        if self.m < 1:
            raise DesignError(f"m must be >= 1, got {self.m}")
        K = len(self.ring_counts)
        if K < 1:
            raise DesignError("at least one ring is required")
        if len(self.ring_radii_raw) != K or len(self.phase_offsets) != K:
            raise DesignError(
                f"ring_counts, ring_radii_raw and phase_offsets must have equal length "
                f"(got {K}, {len(self.ring_radii_raw)}, {len(self.phase_offsets)})"
            )
        if any(n < 1 for n in self.ring_counts):
            raise DesignError(f"every ring needs at least one point: {self.ring_counts}")
        if sum(self.ring_counts) != 2**self.m:
            raise DesignError(
                f"ring counts sum to {sum(self.ring_counts)}, expected 2^{self.m} = {2**self.m}"
            )
        radii = np.asarray(self.ring_radii_raw)
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            raise DesignError(f"ring radii must be positive: {self.ring_radii_raw}")
        if np.any(np.diff(radii) <= 0):
            raise DesignError(f"ring radii must be strictly increasing: {self.ring_radii_raw}")

    @property
    def K(self) -> int:
        return len(self.ring_counts)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "ring_counts": list(self.ring_counts),
            "ring_radii_raw": list(self.ring_radii_raw),
            "phase_offsets": list(self.phase_offsets),
        }


@dataclass(frozen=True)
class TradeoffParams:
    """Parameters of the tradeoff APSK family.

    ``alpha`` sets the ring count and per-ring growth, ``b`` and ``c`` shape the
    radii through ``f(k) = k - c*sqrt(k) + b``. ``rings`` optionally overrides
    the ring count given by ``alpha``.
    """

    m: int
    alpha: int
    b: float = 0.0
    c: float = 0.0
    rings: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DesignError(f"m must be >= 1, got {self.m}")
        if not 1 <= self.alpha <= 2**self.m:
            raise DesignError(f"alpha must lie in [1, 2^m] = [1, {2**self.m}], got {self.alpha}")
        if self.b < 0 or self.c < 0:
            raise DesignError(f"b and c must be non-negative, got b={self.b}, c={self.c}")
        if self.rings is not None and self.rings < 1:
            raise DesignError(f"ring override must be >= 1, got {self.rings}")

    @property
    def K(self) -> int:
        if self.rings is not None:
            return self.rings
        return ring_count(self.m, self.alpha)

    def f(self, k):
        k = np.asarray(k, dtype=float)
        return k - self.c * np.sqrt(k) + self.b

    def key(self) -> tuple:
        return (self.alpha, self.b, self.c)


class Constellation:
    """Normalized finite constellation with cached energy moments.

    Treated as immutable: the point and amplitude arrays are read-only.
    """

    def __init__(
        self,
        points,
        m: int,
        amplitudes=None,
        design: ApskDesign | None = None,
        ring_radii=None,
        label: str = "",
        meta: dict | None = None,
    ):
        points = np.array(points, dtype=complex).reshape(-1)
        if points.size != 2**m:
            raise DesignError(f"expected {2**m} points for m={m}, got {points.size}")
        if amplitudes is None:
            amplitudes = np.abs(points)
        amplitudes = np.array(amplitudes, dtype=float).reshape(-1)
        points.flags.writeable = False
        amplitudes.flags.writeable = False
        self.points = points
        self.amplitudes = amplitudes
        self.m = m
        self.design = design
        self.ring_radii = None if ring_radii is None else tuple(float(r) for r in ring_radii)
        self.label = label
        self.meta = dict(meta or {})

        energies = amplitudes**2
        mean = energies.mean()
        # two-pass form keeps constant-modulus variance at exactly zero
        self.moments = (float(mean), float(np.mean((energies - mean) ** 2)), float(np.mean(energies**2)))
        self.min_energy = float(energies.min())

        if abs(self.moments[0] - 1.0) > ENERGY_TOL:
            raise DesignError(f"mean energy {self.moments[0]!r} is not normalized")

    def __len__(self) -> int:
        return self.points.size

    def __repr__(self) -> str:
        name = self.label or "Constellation"
        return f"<{name}: m={self.m}, K={self.K}, var={self.moments[1]:.6g}>"

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def K(self) -> int:
        return self.design.K if self.design is not None else len(np.unique(np.round(self.amplitudes, 12)))

    @property
    def energies(self) -> np.ndarray:
        return self.amplitudes**2

    def rotated(self, angle: float) -> "Constellation":
        """Copy of this constellation under a global phase rotation."""
        design = None
        if self.design is not None:
            design = ApskDesign(
                self.design.m,
                self.design.ring_counts,
                self.design.ring_radii_raw,
                tuple(p + angle for p in self.design.phase_offsets),
            )
        return Constellation(
            self.points * np.exp(1j * angle),
            self.m,
            amplitudes=self.amplitudes,
            design=design,
            ring_radii=self.ring_radii,
            label=self.label,
            meta=self.meta,
        )

    def to_dict(self) -> dict:
        meta = {"label": self.label, "m": self.m, "K": self.K}
        if self.design is not None:
            meta["N_k"] = list(self.design.ring_counts)
            meta["radii"] = list(self.ring_radii)
            meta["design"] = self.design.to_dict()
        meta.update(self.meta)
        meta.update(
            mean_energy=self.moments[0],
            energy_variance=self.moments[1],
            fourth_moment=self.moments[2],
            min_energy=self.min_energy,
        )
        return {
            "meta": meta,
            "points": [{"re": float(p.real), "im": float(p.imag)} for p in self.points],
        }


def ring_count(m: int, alpha: int) -> int:
    """Number of rings ``floor(sqrt(2^(m+1) / alpha))`` in exact integer arithmetic."""
    if alpha < 1:
        raise DesignError(f"alpha must be >= 1, got {alpha}")
    return math.isqrt(2 ** (m + 1) // alpha)


def tradeoff_ring_counts(m: int, alpha: int, K: int) -> tuple[int, ...]:
    counts = [alpha * k for k in range(1, K)]
    last = 2**m - sum(counts)
    if last < 1:
        raise DesignError(
            f"last ring would hold {last} points (m={m}, alpha={alpha}, K={K})"
        )
    return tuple(counts) + (last,)


def build_apsk(design: ApskDesign, label: str = "", meta: dict | None = None) -> Constellation:
    """Build the normalized APSK point set of ``design``.

    A single global factor rescales the raw radii to unit mean energy.
    """
    counts = np.asarray(design.ring_counts)
    raw = np.asarray(design.ring_radii_raw)
    scale = math.sqrt(2**design.m / float(np.sum(counts * raw**2)))
    radii = raw * scale

    if np.any(np.diff(radii) <= DISTINCT_TOL):
        raise DesignError("adjacent rings coincide after normalization")
    for r, n in zip(radii, counts):
        if n > 1 and 2 * r * math.sin(math.pi / n) <= DISTINCT_TOL:
            raise DesignError(f"ring of radius {r} with {n} points has coincident points")

    pts, amps = [], []
    for r, n, phi in zip(radii, counts, design.phase_offsets):
        ang = phi + 2 * np.pi * np.arange(n) / n
        pts.append(r * np.exp(1j * ang))
        amps.append(np.full(n, r))

    return Constellation(
        np.concatenate(pts),
        design.m,
        amplitudes=np.concatenate(amps),
        design=design,
        ring_radii=radii,
        label=label or f"{2**design.m}-APSK",
        meta=meta,
    )


def tradeoff_design(p: TradeoffParams) -> ApskDesign:
    """Ring structure of the tradeoff family member for ``p``."""
    K = p.K
    ks = np.arange(1, K + 1)
    f = p.f(ks)
    if np.any(f <= 0):
        bad = int(ks[np.argmax(f <= 0)])
        raise DesignError(f"f(k) = k - c*sqrt(k) + b is non-positive at k={bad} (b={p.b}, c={p.c})")
    if np.any(np.diff(f) <= 0):
        raise DesignError(f"f(k) is not strictly increasing on 1..{K} (b={p.b}, c={p.c})")
    counts = tradeoff_ring_counts(p.m, p.alpha, K)
    radii = f / math.sqrt(2**p.m)
    return ApskDesign(p.m, counts, tuple(radii), (0.0,) * K)


def build_tradeoff_family(p: TradeoffParams) -> Constellation:
    design = tradeoff_design(p)
    K = design.K
    meta = {
        "params": {"alpha": p.alpha, "b": p.b, "c": p.c, "rings": p.rings},
        "radii_raw": list(design.ring_radii_raw),
        # remainder ring larger than the arithmetic progression would give it
        "oversized_last_ring": bool(K > 1 and design.ring_counts[-1] > p.alpha * K),
    }
    return build_apsk(design, label=f"{2**p.m}-APSK(alpha={p.alpha},b={p.b:g},c={p.c:g})", meta=meta)


def build_comm_optimal_family(m: int, alpha: int) -> Constellation:
    """Communication-optimal member: constant ``alpha``, unperturbed radii ``f(k) = k``."""
    return build_tradeoff_family(TradeoffParams(m, alpha, 0.0, 0.0))


def build_psk(m: int) -> Constellation:
    if m < 1:
        raise DesignError(f"m must be >= 1, got {m}")
    design = ApskDesign(m, (2**m,), (1.0,), (0.0,))
    return build_apsk(design, label=f"{2**m}-PSK")


def build_qam(m: int) -> Constellation:
    """Square QAM on odd-integer coordinates, unit mean energy."""
    if m < 2 or m % 2:
        raise DesignError(f"square QAM needs an even m >= 2, got {m}")
    side = 2 ** (m // 2)
    levels = 2.0 * np.arange(side) - (side - 1)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    pts = (re + 1j * im).reshape(-1)
    # mean of (2i - (s-1))^2 over i is (s^2 - 1)/3 per dimension
    scale = math.sqrt(2 * (side**2 - 1) / 3)
    pts = pts / scale
    amps = np.sqrt(re.reshape(-1) ** 2 + im.reshape(-1) ** 2) / scale
    return Constellation(pts, m, amplitudes=amps, label=f"{2**m}-QAM")


def from_points(points: Sequence[complex], label: str = "", normalize: bool = True) -> Constellation:
    """Wrap an arbitrary point set of size 2^m as a Constellation."""
    pts = np.asarray(points, dtype=complex).reshape(-1)
    m = int(round(math.log2(pts.size)))
    if 2**m != pts.size:
        raise DesignError(f"point count {pts.size} is not a power of two")
    if normalize:
        pts = pts / math.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(pts, m, label=label)


def to_json(c: Constellation, **extra: Any) -> str:
    d = c.to_dict()
    d["meta"].update(extra)
    return json.dumps(d, indent=2, sort_keys=False)


def from_json(text: str) -> Constellation:
    """Inverse of :func:`to_json`.

    APSK constellations are rebuilt from their stored design so the ring
    structure survives the round trip.
    """
    d = json.loads(text)
    meta = d.get("meta", {})
    pts = np.array([p["re"] + 1j * p["im"] for p in d["points"]])
    if "design" in meta:
        dd = meta["design"]
        design = ApskDesign(dd["m"], dd["ring_counts"], dd["ring_radii_raw"], dd["phase_offsets"])
        c = build_apsk(design, label=meta.get("label", ""))
        if not np.allclose(c.points, pts, atol=1e-9):
            raise DesignError("stored points do not match the stored design")
        return c
    return from_points(pts, label=meta.get("label", ""), normalize=False)
