"""Rate-energy boundary of the power-splitting receiver.

``solve_single`` maximises the harvested energy under a rate demand by
successive linearisation: around the current split ``a`` the energy is
replaced by its first-order surrogate, the lifted relaxation is solved inside
a trust box, and Gaussian randomisation turns the relaxed solution back into
a split that meets the demand. ``sweep_region`` repeats this over a grid of
demands. The remaining functions are the reference receivers used to judge
it: an exhaustive grid search, antenna switching and one-chain-per-antenna
harvesting.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import randomize
from .model import (
    ChannelRealization,
    InvalidParametersError,
    SystemParams,
    constraint_rate,
    max_energy,
    max_rate,
    multichain_energy,
)
from .sdp import assemble_sdr, solve_sdr
from .taylor import build_problem_data, clamp_expansion_point, linearize_energy

__all__ = [
    "AlgoConfig",
    "RegionPoint",
    "IterRecord",
    "GridTooLargeError",
    "AsRegion",
    "solve_single",
    "sweep_region",
    "grid_oracle",
    "oracle_frontier",
    "as_region",
    "multichain_region",
    "psi_grid",
]

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 10 ** 8
_CHUNK = 1 << 18


@dataclass(frozen=True)
class AlgoConfig:
    """Tuning of the successive-relaxation loop.

    Parameters
    ----------
    eta : float or sequence of float
        Trust-box scale; the box half-width is ``eta * min(a)``, each entry
        in ``(0, 1)``.
    n_samples : int
        Gaussian randomisations per outer iteration.
    conv_tol : float
        Stop once an iteration improves the energy by less than this many
        watts per unit conversion efficiency.
    max_outer_iters : int
        Hard cap on outer iterations.
    sdp_tol : float
        Certified tolerance passed to the SDR solver.
    seed : int
        Root of all random streams.
    eps_floor : float
        Lower bound on the trust-box half-width.
    covariance : {"schur", "literal"}
        Covariance used for randomisation (see :class:`RoundingConfig`).
    """

    eta: float | tuple = 0.5
    n_samples: int = 1000
    conv_tol: float = 1e-5
    max_outer_iters: int = 30
    sdp_tol: float = 1e-7
    seed: int = 0
    eps_floor: float = 1e-3
    covariance: str = "schur"

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if np.any(eta <= 0) or np.any(eta >= 1):
            raise InvalidParametersError("eta entries must lie in (0, 1)")
        if self.n_samples < 1:
            raise InvalidParametersError("n_samples must be >= 1")
        if not self.conv_tol > 0:
            raise InvalidParametersError("conv_tol must be > 0")
        if self.max_outer_iters < 1:
            raise InvalidParametersError("max_outer_iters must be >= 1")
        if not 0 < self.sdp_tol <= 1e-4:
            raise InvalidParametersError("sdp_tol must lie in (0, 1e-4]")
        if not self.eps_floor > 0:
            raise InvalidParametersError("eps_floor must be > 0")
        if self.covariance not in ("schur", "literal"):
            raise InvalidParametersError("covariance must be 'schur' or 'literal'")
        if np.ndim(self.eta):
            object.__setattr__(self, "eta", tuple(float(e) for e in eta))

    def eta_vector(self, K: int) -> np.ndarray:
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if eta.size == 1:
            return np.full(K, eta[0])
        if eta.size != K:
            raise InvalidParametersError(f"eta must have 1 or {K} entries")
        return eta


@dataclass(frozen=True)
class IterRecord:
    iteration: int
    a: np.ndarray
    eps: np.ndarray
    sdr_objective: float
    sdr_status: str
    energy: float
    n_feasible: int


@dataclass
class RegionPoint:
    """One point of a rate-energy boundary.

    ``rate_exact`` uses the optimal combiner, ``rate_constraint`` the matched
    combiner the demand ``psi`` is imposed on, ``energy`` is in watts.
    """

    psi: float
    rate_exact: float
    rate_constraint: float
    energy: float
    lam: np.ndarray | None
    outer_iters: int = 0
    converged: bool = True
    method: str = "ps"
    trace: list = field(default_factory=list, repr=False)
    message: str = ""


def _point(ch, p, psi, lam, method, iters=0, converged=True, trace=None, message=""):
    return RegionPoint(
        psi=float(psi),
        rate_exact=float(max_rate(ch, p, lam)),
        rate_constraint=float(constraint_rate(ch, p, lam)),
        energy=float(max_energy(ch, p, lam)),
        lam=np.asarray(lam, dtype=float),
        outer_iters=iters,
        converged=converged,
        method=method,
        trace=trace or [],
        message=message,
    )


def _failed_point(psi, method, message):
    nan = float("nan")
    return RegionPoint(psi=float(psi), rate_exact=nan, rate_constraint=nan, energy=nan,
                       lam=None, outer_iters=0, converged=False, method=method,
                       message=message)


def _stream_seed(seed: int, psi_index: int, iteration: int) -> int:
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(psi_index), int(iteration)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def solve_single(ch: ChannelRealization, p: SystemParams, psi: float,
                 cfg: AlgoConfig | None = None, psi_index: int = 0) -> RegionPoint:
    """Maximise harvested energy subject to a rate demand of ``psi`` bits.

    The returned point carries the per-iteration history in ``trace``. The
    demand is imposed on the matched-combiner rate, so the reported
    ``rate_constraint`` is at least ``psi`` whenever the point converged.
    """
    cfg = cfg or AlgoConfig()
    top = max_rate(ch, p, np.ones(ch.K))
    if not math.isfinite(psi) or psi < 0:
        raise InvalidParametersError(f"rate demand must be >= 0, got {psi}")
    if psi > top * (1 + 1e-12):
        raise InvalidParametersError(
            f"rate demand {psi} exceeds the all-ID rate {top}")
    if psi == 0:
        return _point(ch, p, psi, np.zeros(ch.K), "ps")
    if psi >= top * (1 - 1e-12):
        return _point(ch, p, psi, np.ones(ch.K), "ps")

    pd = build_problem_data(ch, p)
    tau = p.tau
    eta = cfg.eta_vector(ch.K)
    a = clamp_expansion_point(np.full(ch.K, psi / top))

    best_lam = None
    best_energy = -math.inf
    if randomize.rate_feasible(pd, psi, a):
        best_lam, best_energy = a.copy(), float(max_energy(ch, p, a))

    trace: list[IterRecord] = []
    converged = False
    message = ""
    for it in range(cfg.max_outer_iters):
        eps = np.maximum(eta * a.min(), cfg.eps_floor)
        le = linearize_energy(pd, a, p)
        inst = assemble_sdr(pd, le, psi, a, eps)
        sol = solve_sdr(inst, cfg.sdp_tol)
        if not sol.optimal:
            trace.append(IterRecord(it, a.copy(), eps, sol.objective, sol.status,
                                    best_energy, 0))
            message = f"relaxation {sol.status} at iteration {it}"
            converged = best_lam is not None
            break

        box = (inst.box_lo, inst.box_hi)
        rcfg = randomize.RoundingConfig(n_samples=cfg.n_samples,
                                        seed=_stream_seed(cfg.seed, psi_index, it),
                                        covariance=cfg.covariance)
        cands = randomize.clip_to_box(randomize.sample_candidates(sol, rcfg), *box)
        rounded = randomize.filter_and_select(cands, pd, ch, p, psi, box)
        if not rounded.found:
            mean = randomize.clip_to_box(sol.lambda_star, *box)
            rounded = randomize.filter_and_select(mean[None, :], pd, ch, p, psi, box)

        improvement = 0.0
        if rounded.found and rounded.best_energy > best_energy:
            improvement = rounded.best_energy - best_energy if best_lam is not None else math.inf
            best_lam, best_energy = rounded.best_lambda, rounded.best_energy
            a = clamp_expansion_point(best_lam)
        trace.append(IterRecord(it, inst.diag_coupling.copy(), eps, sol.objective, sol.status,
                                best_energy, rounded.n_feasible))
        if best_lam is not None and improvement < cfg.conv_tol * tau:
            converged = True
            break
    else:
        message = "max_outer_iters reached"

    if best_lam is None:
        start = np.full(ch.K, psi / top)
        return _point(ch, p, psi, start, "ps", iters=len(trace), converged=False,
                      trace=trace, message=message or "no rate-feasible split found")
    return _point(ch, p, psi, best_lam, "ps", iters=len(trace), converged=converged,
                  trace=trace, message=message)


def psi_grid(ch: ChannelRealization, p: SystemParams, n_points: int) -> np.ndarray:
    """``n_points`` evenly spaced demands from 0 to the all-ID rate."""
    if n_points < 1:
        return np.zeros(0)
    top = max_rate(ch, p, np.ones(ch.K))
    if n_points == 1:
        return np.array([0.0])
    grid = np.linspace(0.0, top, n_points)
    grid[-1] = top
    return grid


def sweep_region(ch: ChannelRealization, p: SystemParams, psis,
                 cfg: AlgoConfig | None = None) -> list[RegionPoint]:
    """Solve every demand independently; a failing demand yields a marked row."""
    cfg = cfg or AlgoConfig()
    out = []
    for i, psi in enumerate(psis):
        try:
            out.append(solve_single(ch, p, float(psi), cfg, psi_index=i))
        except (InvalidParametersError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("psi=%s failed: %s", psi, exc)
            out.append(_failed_point(psi, "ps", str(exc)))
    return out


# --------------------------------------------------------------------------
# exhaustive search
# --------------------------------------------------------------------------

class GridTooLargeError(ValueError):
    pass


def _grid_axis(delta: float) -> np.ndarray:
    if not 0 < delta <= 0.5:
        raise InvalidParametersError("grid step must lie in (0, 0.5]")
    n = int(math.floor(1.0 / delta + 1e-9))
    axis = np.arange(n + 1) * delta
    axis[np.isclose(axis, 1.0, rtol=0, atol=1e-12)] = 1.0
    return np.minimum(axis, 1.0)


def _scan(ch, p, psis, delta, use_exact_rate, energy_fn):
    """Best grid split for each demand; ties go to the lowest flat grid index."""
    axis = _grid_axis(delta)
    total = axis.size ** ch.K
    if total > MAX_GRID_POINTS:
        raise GridTooLargeError(
            f"grid has {axis.size}^{ch.K} = {total:.3g} points (limit {MAX_GRID_POINTS:.0e})")
    rate_fn = max_rate if use_exact_rate else constraint_rate
    psis = np.asarray(psis, dtype=float)
    best_idx = np.full(psis.size, -1, dtype=np.int64)
    best_val = np.full(psis.size, -np.inf)
    shape = (axis.size,) * ch.K
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        lam = axis[np.stack(np.unravel_index(flat, shape), axis=-1)]
        rates = np.atleast_1d(rate_fn(ch, p, lam))
        energies = np.atleast_1d(energy_fn(ch, p, lam))
        for j, psi in enumerate(psis):
            feasible = rates >= psi - 1e-12
            if not feasible.any():
                continue
            masked = np.where(feasible, energies, -np.inf)
            k = int(np.argmax(masked))
            if masked[k] > best_val[j]:
                best_val[j] = masked[k]
                best_idx[j] = flat[k]
    lams = [axis[np.array(np.unravel_index(i, shape))] if i >= 0 else None for i in best_idx]
    return lams, best_val


def grid_oracle(ch: ChannelRealization, p: SystemParams, psi: float, delta: float,
                use_exact_rate: bool = False):
    """Exhaustive search on the uniform grid ``{0, delta, 2 delta, ...}^K``.

    Returns ``(lam, energy)``; ``(None, -inf)`` when no grid point meets the
    demand.
    """
    lams, vals = _scan(ch, p, [psi], delta, use_exact_rate, max_energy)
    return lams[0], float(vals[0])


def oracle_frontier(ch: ChannelRealization, p: SystemParams, psis, delta: float,
                    use_exact_rate: bool = False, multichain: bool = False,
                    method: str | None = None) -> list[RegionPoint]:
    energy_fn = multichain_energy if multichain else max_energy
    method = method or ("multichain" if multichain else "oracle")
    lams, _ = _scan(ch, p, psis, delta, use_exact_rate, energy_fn)
    out = []
    for psi, lam in zip(psis, lams):
        if lam is None:
            out.append(_failed_point(psi, method, "no grid point meets the demand"))
            continue
        pt = _point(ch, p, psi, lam, method)
        if multichain:
            pt.energy = float(multichain_energy(ch, p, lam))
        out.append(pt)
    return out


def multichain_region(ch: ChannelRealization, p: SystemParams, psis, delta: float,
                      use_exact_rate: bool = True) -> list[RegionPoint]:
    """Grid-search boundary of the receiver with one conversion chain per antenna."""
    return oracle_frontier(ch, p, psis, delta, use_exact_rate=use_exact_rate, multichain=True)


# --------------------------------------------------------------------------
# antenna switching
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AsRegion:
    lambdas: np.ndarray     # (2^K, K) binary splits
    points: np.ndarray      # (2^K, 2) columns rate, energy
    hull: np.ndarray        # (V, 2) vertices of the time-sharing boundary, rate ascending


def _upper_hull(points: np.ndarray) -> np.ndarray:
    pts = sorted(map(tuple, points))
    hull: list[tuple] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    return np.array(hull)


def as_region(ch: ChannelRealization, p: SystemParams) -> AsRegion:
    """All ``2^K`` antenna-switching configurations and their time-sharing hull."""
    if ch.K > 20:
        raise InvalidParametersError("antenna switching enumeration supports K <= 20")
    lambdas = np.array(list(itertools.product((1.0, 0.0), repeat=ch.K)))
    points = np.column_stack([np.atleast_1d(max_rate(ch, p, lambdas)),
                              np.atleast_1d(max_energy(ch, p, lambdas))])
    hull = _upper_hull(points)
    # keep the Pareto part: from the highest-energy vertex to the highest-rate one
    start = int(np.flatnonzero(hull[:, 1] == hull[:, 1].max())[-1])
    return AsRegion(lambdas=lambdas, points=points, hull=hull[start:])
