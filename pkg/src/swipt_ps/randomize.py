"""Gaussian randomisation: turn a relaxed ``(lam, Lam)`` into a rank-one split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, SystemParams, max_energy
from .sdp import SdrSolution

__all__ = [
    "RoundingConfig",
    "RoundingResult",
    "sampling_covariance",
    "sample_candidates",
    "clip_to_box",
    "rate_feasible",
    "filter_and_select",
]


@dataclass(frozen=True)
class RoundingConfig:
    """Parameters of the randomisation step.

    ``covariance="schur"`` samples with ``Lam - lam lam'`` (the spread left by
    the relaxation); ``"literal"`` uses ``Lam`` itself as the covariance.
    """

    n_samples: int = 1000
    seed: int = 0
    psd_floor: float = 0.0
    covariance: str = "schur"

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValueError("n_samples must be >= 1")
        if self.psd_floor < 0:
            raise ValueError("psd_floor must be >= 0")
        if self.covariance not in ("schur", "literal"):
            raise ValueError("covariance must be 'schur' or 'literal'")


@dataclass(frozen=True)
class RoundingResult:
    best_lambda: np.ndarray | None
    best_energy: float | None
    n_feasible: int
    candidates_examined: int

    @property
    def found(self) -> bool:
        return self.best_lambda is not None


def sampling_covariance(sol: SdrSolution, cfg: RoundingConfig) -> np.ndarray:
    lam = sol.lambda_star
    C = sol.Lambda_star if cfg.covariance == "literal" else sol.Lambda_star - np.outer(lam, lam)
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    return (V * np.maximum(w, cfg.psd_floor)) @ V.T


def sample_candidates(sol: SdrSolution, cfg: RoundingConfig) -> np.ndarray:
    """Draw ``n_samples`` real Gaussian vectors around the relaxed ``lam``.

    Rows of the returned ``(N, K)`` array are candidates. Draws are made row
    by row, so a run with a larger ``n_samples`` extends a smaller one.
    """
    if sol.lambda_star is None:
        raise ValueError("cannot sample from a solution without a primal point")
    lam = sol.lambda_star
    cov = sampling_covariance(sol, cfg)
    w, V = np.linalg.eigh(cov)
    factor = V * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((int(cfg.n_samples), lam.size))
    return lam + z @ factor.T


def clip_to_box(candidate, lo, hi) -> np.ndarray:
    return np.minimum(np.maximum(np.asarray(candidate, dtype=float), lo), hi)


def rate_feasible(pd, psi: float, lam) -> np.ndarray:
    """Rank-one rate test ``P lam'G1 lam >= (2^psi - 1)(lam'Sigma lam + lam'sigma)``.

    Works on a single vector or on rows of a 2-D array.
    """
    lam = np.asarray(lam, dtype=float)
    signal = pd.transmit_power * (lam @ pd.g1) ** 2
    noise = np.einsum("...i,ij,...j->...", lam, pd.Sigma, lam) + lam @ pd.sigma
    # no power in the ID chain means zero rate, not 0 >= 0
    return (signal - (2.0 ** psi - 1.0) * noise >= 0) & ((noise > 0) | (psi == 0))


def filter_and_select(candidates, pd, ch: ChannelRealization, p: SystemParams,
                      psi: float, box) -> RoundingResult:
    """Keep rate-feasible candidates and return the one harvesting the most energy.

    Ties go to the lowest candidate index.
    """
    cands = np.atleast_2d(np.asarray(candidates, dtype=float))
    lo, hi = box
    inside = np.all((cands >= lo) & (cands <= hi), axis=1)
    feasible = inside & rate_feasible(pd, psi, cands)
    n_feasible = int(feasible.sum())
    if n_feasible == 0:
        return RoundingResult(None, None, 0, len(cands))
    idx = np.flatnonzero(feasible)
    energies = max_energy(ch, p, cands[idx])
    best = idx[int(np.argmax(energies))]
    return RoundingResult(cands[best].copy(), float(np.max(energies)), n_feasible, len(cands))
