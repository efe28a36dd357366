"""Quadratic reformulation of the rate/energy pair and the first-order
linearisation of the harvested energy around an expansion point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, InvalidParametersError, SystemParams, check_split

__all__ = [
    "MAX_ANTENNAS",
    "EXPANSION_CLAMP",
    "TaylorDomainError",
    "ProblemData",
    "LinearizedEnergy",
    "build_problem_data",
    "clamp_expansion_point",
    "taylor_sqrt",
    "linearize_energy",
    "approx_energy",
]

MAX_ANTENNAS = 16
EXPANSION_CLAMP = 1.0 - 1e-6
_DOMAIN_MARGIN = 1e-9


class TaylorDomainError(ValueError):
    """Expansion point outside the domain where ``sqrt(1 - x)`` is differentiable."""


@dataclass(frozen=True)
class ProblemData:
    g1: np.ndarray
    g2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    Sigma: np.ndarray
    sigma: np.ndarray
    transmit_power: float

    @property
    def K(self) -> int:
        return self.g1.size


@dataclass(frozen=True)
class LinearizedEnergy:
    """Quadratic surrogate ``Gamma + lam' G2p lam / 4 - zeta' G2pp lam``."""

    a: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    M: np.ndarray
    Gamma: float
    G2: np.ndarray
    G2p: np.ndarray
    G2pp: np.ndarray
    zeta: np.ndarray


def build_problem_data(ch: ChannelRealization, p: SystemParams) -> ProblemData:
    if ch.K > MAX_ANTENNAS:
        raise InvalidParametersError(f"at most {MAX_ANTENNAS} antennas are supported, got {ch.K}")
    g1 = ch.g1
    g2 = ch.g2
    P = p.transmit_power
    G1 = np.outer(g1, g1)
    G2 = P * np.outer(g2, g2) + p.antenna_noise_var * np.eye(ch.K)
    # matched-filter outputs see noise scaled by |h_k|^2
    Sigma = np.diag(g1 * p.antenna_noise(ch.K))
    sigma = g1 * p.processing_noise(ch.K)
    return ProblemData(g1=g1, g2=g2, G1=G1, G2=G2, Sigma=Sigma, sigma=sigma,
                       transmit_power=P)


def clamp_expansion_point(a) -> np.ndarray:
    return np.clip(np.asarray(a, dtype=float), 0.0, EXPANSION_CLAMP)


def taylor_sqrt(a_k: float, lambda_k: float) -> float:
    """First-order expansion of ``sqrt(1 - lambda_k)`` around ``a_k``."""
    if not a_k < 1:
        raise TaylorDomainError(f"expansion point must be < 1, got {a_k}")
    root = np.sqrt(1.0 - a_k)
    return float(root - 0.5 * (lambda_k - a_k) / root)


def linearize_energy(pd: ProblemData, a, p: SystemParams) -> LinearizedEnergy:
    a = np.asarray(a, dtype=float)
    if a.shape != (pd.K,):
        raise InvalidParametersError(f"expansion point must have {pd.K} entries")
    if np.any(a < 0):
        raise TaylorDomainError(f"expansion point entry {int(np.argmin(a))} is negative")
    bad = np.flatnonzero(a > 1.0 - _DOMAIN_MARGIN)
    if bad.size:
        raise TaylorDomainError(
            f"expansion point entry {bad[0]} = {a[bad[0]]!r} is too close to 1")
    root = np.sqrt(1.0 - a)
    alpha = root
    beta = a / root
    M = np.diag(1.0 / root)
    G2 = pd.G2
    Gamma = float(alpha @ G2 @ alpha + 0.25 * beta @ G2 @ beta + alpha @ G2 @ beta)
    G2p = M.T @ G2 @ M
    G2p = 0.5 * (G2p + G2p.T)
    G2pp = G2 @ M
    zeta = alpha + 0.5 * beta
    return LinearizedEnergy(a=a.copy(), alpha=alpha, beta=beta, M=M, Gamma=Gamma,
                            G2=G2, G2p=G2p, G2pp=G2pp, zeta=zeta)


def approx_energy(le: LinearizedEnergy, lam, p: SystemParams):
    """Linearised harvested energy in watts (efficiency applied)."""
    lam = check_split(lam, le.a.size)
    quad = 0.25 * np.einsum("...i,ij,...j->...", lam, le.G2p, lam)
    lin = lam @ (le.zeta @ le.G2pp)
    value = p.tau * (le.Gamma + quad - lin)
    return float(value) if np.ndim(value) == 0 else value
