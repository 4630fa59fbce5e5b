"""Dyadic (Littlewood-Paley) operators in phase and frequency space.

The bump/annulus pair is built from the classic exp(-1/t) transition so the
partition of unity telescopes exactly: psi(r) + sum_j phi(2^-j r) equals
psi(2^-(J+1) r), which is identically 1 on the covered dyadic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DistributionField, sobolev_norm, weighted_l2_norm

__all__ = [
    "LittlewoodPaleyPair",
    "make_lp_pair",
    "phase_block",
    "freq_block",
    "NormEquivalence",
    "norm_equivalence_check",
]

# Support constants: psi lives on [0, 4/3], phi on [3/4, 8/3].
_INNER = 0.75
_OUTER = 4.0 / 3.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) glue between."""
    t = np.asarray(t, dtype=float)
    lo = np.exp(-1.0 / np.maximum(t, 1e-300))
    hi = np.exp(-1.0 / np.maximum(1.0 - t, 1e-300))
    out = lo / (lo + hi)
    out = np.where(t <= 0.0, 0.0, out)
    out = np.where(t >= 1.0, 1.0, out)
    return out


@dataclass(frozen=True)
class LittlewoodPaleyPair:
    """Radial profiles psi (bump) and phi (annulus) plus the block ceiling."""

    j_max: int

    def psi(self, r) -> np.ndarray:
        """Smooth bump: 1 on [0, 3/4], 0 beyond 4/3."""
        r = np.asarray(r, dtype=float)
        return 1.0 - _smooth_step((r - _INNER) / (_OUTER - _INNER))

    def phi(self, r) -> np.ndarray:
        """Annulus profile phi(r) = psi(r/2) - psi(r), supported in [3/4, 8/3]."""
        r = np.asarray(r, dtype=float)
        return self.psi(0.5 * r) - self.psi(r)


def make_lp_pair(j_max: int = 8) -> LittlewoodPaleyPair:
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    return LittlewoodPaleyPair(j_max=j_max)


def _radial_multiplier(lp: LittlewoodPaleyPair, j: int, r: np.ndarray) -> np.ndarray:
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    if j == -1:
        return lp.psi(r)
    return lp.phi(np.ldexp(r, -j))  # phi(2^-j r) without forming 2^-j


def phase_block(f: DistributionField, j: int, lp: LittlewoodPaleyPair) -> DistributionField:
    """Pointwise dyadic cutoff in velocity: psi(|v|) f at j = -1, phi(2^-j |v|) f else."""
    r = np.sqrt(f.grid.speed_sq())
    return f.with_values(_radial_multiplier(lp, j, r) * f.values)


def freq_block(f: DistributionField, j: int, lp: LittlewoodPaleyPair) -> DistributionField:
    """Band-limited component: the same radial cutoff applied as a DFT multiplier."""
    rho = np.sqrt(f.grid.freq_sq())
    mult = _radial_multiplier(lp, j, rho)
    out = np.fft.ifftn(mult * np.fft.fftn(f.values)).real
    return f.with_values(out)


@dataclass(frozen=True)
class NormEquivalence:
    """Two-sided comparison of a weighted Sobolev norm with its dyadic sums.

    freq_ratio:  ||f||^2_{H^m_l} / sum_j 2^{2jm} ||freq_block_j f||^2_{L^2_l}
    phase_ratio: ||f||^2_{H^m_l} / sum_k 2^{2kl} ||phase_block_k f||^2_{H^m}
    """

    freq_ratio: float
    phase_ratio: float

    @property
    def ratio_lo(self) -> float:
        return min(self.freq_ratio, self.phase_ratio)

    @property
    def ratio_hi(self) -> float:
        return max(self.freq_ratio, self.phase_ratio)


def norm_equivalence_check(f: DistributionField, m: float, l: float,
                           lp: LittlewoodPaleyPair) -> NormEquivalence:
    """Compare ||f||^2_{H^m_l} against both dyadic square sums."""
    if not -2.0 <= m <= 2.0:
        raise ValueError(f"m must lie in [-2, 2], got {m}")
    direct = sobolev_norm(f, m, l) ** 2
    freq_sum = 0.0
    phase_sum = 0.0
    for j in range(-1, lp.j_max + 1):
        scale = 1.0 if j == -1 else float(np.ldexp(1.0, j))
        freq_sum += scale ** (2.0 * m) * weighted_l2_norm(freq_block(f, j, lp), l) ** 2
        phase_sum += scale ** (2.0 * l) * sobolev_norm(phase_block(f, j, lp), m, 0.0) ** 2
    return NormEquivalence(freq_ratio=direct / freq_sum, phase_ratio=direct / phase_sum)
