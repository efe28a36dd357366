"""Closed-form signal model of a K-antenna power-splitting SIMO receiver.

Each antenna splits its received signal: a fraction ``lam[k]`` of the power goes
to the information-detection (ID) chain, the rest to a single energy-harvesting
(EH) chain that co-phases all antennas before rectification.

All rates are in bits per channel use (log base 2), all energies in watts.
The vectorised functions accept split vectors of shape ``(..., K)`` and
evaluate along the last axis, which the exhaustive-search baselines rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "InvalidParametersError",
    "ChannelRealization",
    "SystemParams",
    "Combiner",
    "check_split",
    "rate_with_combiner",
    "optimal_id_combiner",
    "max_rate",
    "constraint_rate",
    "energy_with_weights",
    "max_energy",
    "multichain_energy",
    "optimal_eh_weights",
]


class InvalidParametersError(ValueError):
    """Raised when channel, system parameters or split vectors are invalid."""


@dataclass(frozen=True)
class ChannelRealization:
    """Complex amplitude gains ``h_k`` of the SIMO link."""

    gains: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        if h.ndim != 1 or h.size < 1:
            raise InvalidParametersError("channel must be a non-empty 1-D vector")
        if not np.all(np.isfinite(h)):
            raise InvalidParametersError("channel gains must be finite")
        if not np.any(h != 0):
            raise InvalidParametersError("at least one channel gain must be nonzero")
        h.setflags(write=False)
        object.__setattr__(self, "gains", h)

    @classmethod
    def from_polar(cls, magnitudes, phases) -> "ChannelRealization":
        mag = np.asarray(magnitudes, dtype=float)
        ph = np.asarray(phases, dtype=float)
        if mag.shape != ph.shape:
            raise InvalidParametersError("magnitudes and phases must have equal length")
        if np.any(mag < 0):
            raise InvalidParametersError("magnitudes must be nonnegative")
        return cls(mag * np.exp(1j * ph))

    @property
    def K(self) -> int:
        return self.gains.size

    @property
    def g1(self) -> np.ndarray:
        """Squared magnitudes ``|h_k|**2``."""
        return np.abs(self.gains) ** 2

    @property
    def g2(self) -> np.ndarray:
        """Magnitudes ``|h_k|``."""
        return np.abs(self.gains)


@dataclass(frozen=True)
class SystemParams:
    """Transmit power, noise variances and RF-to-DC conversion efficiency.

    Parameters
    ----------
    transmit_power : float
        Average transmit power ``P`` in watts, ``> 0``.
    antenna_noise_var : float
        Antenna noise variance (before splitting), ``>= 0``.
    processing_noise_var : float
        Noise variance added in each ID chain after splitting, ``> 0``.
    conversion_efficiency : float
        Fraction of combined RF power converted to DC, in ``(0, 1]``.
    """

    transmit_power: float = 2.0
    antenna_noise_var: float = 0.1
    processing_noise_var: float = 0.1
    conversion_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("transmit_power", "antenna_noise_var",
                     "processing_noise_var", "conversion_efficiency"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidParametersError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.transmit_power <= 0:
            raise InvalidParametersError("transmit_power must be > 0")
        if self.antenna_noise_var < 0:
            raise InvalidParametersError("antenna_noise_var must be >= 0")
        if self.processing_noise_var <= 0:
            raise InvalidParametersError("processing_noise_var must be > 0")
        if not 0 < self.conversion_efficiency <= 1:
            raise InvalidParametersError("conversion_efficiency must lie in (0, 1]")

    @property
    def tau(self) -> float:
        return self.conversion_efficiency

    def antenna_noise(self, K: int) -> np.ndarray:
        # Per-antenna storage; only homogeneous noise is exposed.
        return np.full(K, self.antenna_noise_var)

    def processing_noise(self, K: int) -> np.ndarray:
        return np.full(K, self.processing_noise_var)


class Combiner(NamedTuple):
    u: np.ndarray
    degenerate: bool


def check_split(lam, K: int) -> np.ndarray:
    """Validate a split vector (or a stack of them) against ``K`` antennas."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0 or lam.shape[-1] != K:
        raise InvalidParametersError(f"split vector must have {K} entries on its last axis")
    if not np.all(np.isfinite(lam)) or np.any(lam < 0) or np.any(lam > 1):
        raise InvalidParametersError("power splitting coefficients must lie in [0, 1]")
    return lam


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_with_combiner(ch: ChannelRealization, p: SystemParams, lam, u) -> float:
    """Rate of the ID chain for an arbitrary linear combiner ``u``."""
    lam = check_split(lam, ch.K)
    u = np.asarray(u, dtype=complex)
    if u.shape != (ch.K,):
        raise InvalidParametersError(f"combiner must have {ch.K} entries")
    if not np.any(u != 0):
        raise InvalidParametersError("combiner must be nonzero")
    signal = abs(np.vdot(u, np.sqrt(lam) * ch.gains)) ** 2 * p.transmit_power
    noise = np.sum(np.abs(u) ** 2 * (lam * p.antenna_noise(ch.K) + p.processing_noise(ch.K)))
    if noise <= 0:
        raise InvalidParametersError("combined noise power is zero")
    return float(np.log2(1.0 + signal / noise))


def optimal_id_combiner(ch: ChannelRealization, p: SystemParams, lam) -> Combiner:
    """SNR-maximising combiner, normalised to unit length.

    The target matrix ``(L S_w + S_n)^-1 L^1/2 h h^H L^1/2`` has rank one, so
    its principal eigenvector is ``(L S_w + S_n)^-1 L^1/2 h`` up to scaling.
    """
    lam = check_split(lam, ch.K)
    if lam.ndim != 1:
        raise InvalidParametersError("optimal_id_combiner takes a single split vector")
    whitening = lam * p.antenna_noise(ch.K) + p.processing_noise(ch.K)
    u = np.sqrt(lam) * ch.gains / whitening
    norm = np.linalg.norm(u)
    if norm == 0:
        e = np.zeros(ch.K, dtype=complex)
        e[0] = 1.0
        return Combiner(e, True)
    return Combiner(u / norm, False)


def max_rate(ch: ChannelRealization, p: SystemParams, lam):
    """Achievable rate with the optimal ID combiner."""
    lam = check_split(lam, ch.K)
    snr = lam * ch.g1 * p.transmit_power / (
        lam * p.antenna_noise(ch.K) + p.processing_noise(ch.K))
    return _scalar(np.log2(1.0 + snr.sum(axis=-1)))


def constraint_rate(ch: ChannelRealization, p: SystemParams, lam):
    """Rate achieved by the matched combiner ``L^1/2 h`` that ignores antenna noise.

    Antenna noise still enters the SNR denominator. The ``0/0`` case (no power
    reaches the ID chain) evaluates to zero.
    """
    lam = check_split(lam, ch.K)
    g1 = ch.g1
    num = p.transmit_power * (lam @ g1) ** 2
    den = (lam ** 2 * g1 * p.antenna_noise(ch.K)).sum(axis=-1) + (
        lam * g1 * p.processing_noise(ch.K)).sum(axis=-1)
    ratio = np.divide(num, den, out=np.zeros_like(np.asarray(num, dtype=float)),
                      where=np.asarray(den) > 0)
    return _scalar(np.log2(1.0 + ratio))


def energy_with_weights(ch: ChannelRealization, p: SystemParams, lam, v) -> float:
    """Harvested energy for unit-modulus EH combining weights ``v``."""
    lam = check_split(lam, ch.K)
    v = np.asarray(v, dtype=complex)
    if v.shape != (ch.K,):
        raise InvalidParametersError(f"EH weights must have {ch.K} entries")
    if not np.allclose(np.abs(v), 1.0, rtol=0, atol=1e-9):
        raise InvalidParametersError("EH weights must have unit magnitude")
    coherent = abs(np.sum(np.sqrt(1.0 - lam) * np.conj(v) * ch.gains)) ** 2
    noise = np.sum((1.0 - lam) * p.antenna_noise(ch.K))
    return float(p.tau * p.transmit_power * coherent + p.tau * noise)


def optimal_eh_weights(ch: ChannelRealization) -> np.ndarray:
    """Co-phasing weights ``h_k / |h_k|`` (any unit phase where ``h_k = 0``)."""
    mag = ch.g2
    return np.where(mag > 0, ch.gains / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def max_energy(ch: ChannelRealization, p: SystemParams, lam):
    """Energy harvested by the single co-phased conversion chain."""
    lam = check_split(lam, ch.K)
    rest = 1.0 - lam
    coherent = (np.sqrt(rest) @ ch.g2) ** 2
    noise = rest @ p.antenna_noise(ch.K)
    return _scalar(p.tau * p.transmit_power * coherent + p.tau * noise)


def multichain_energy(ch: ChannelRealization, p: SystemParams, lam):
    """Energy with one conversion chain per antenna (no co-phasing gain)."""
    lam = check_split(lam, ch.K)
    rest = 1.0 - lam
    return _scalar(p.tau * p.transmit_power * (rest @ ch.g1)
                   + p.tau * (rest @ p.antenna_noise(ch.K)))
