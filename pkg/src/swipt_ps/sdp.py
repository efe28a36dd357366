"""Lifted semidefinite relaxation of the linearised energy maximisation and a
small dense interior-point solver for it.

The relaxation works over ``(lam, Lam)`` with

    maximise    Gamma + tr(Lam C) + c' lam
    subject to  tr(Lam R) + r' lam >= 0              (rate demand)
                lo <= lam <= hi                       (trust box)
                diag(Lam) = a * lam                   (diagonal coupling)
                [[Lam, lam], [lam', 1]] >= 0          (Schur lift)

The diagonal coupling is eliminated by parametrising ``diag(Lam)`` through
``lam``; the remaining free entries of ``Lam`` and ``lam`` form the decision
vector of a log-barrier path-following method with one PSD block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .taylor import LinearizedEnergy, ProblemData

__all__ = [
    "SdrAssemblyError",
    "SdrInstance",
    "SdrSolution",
    "KktResiduals",
    "assemble_sdr",
    "solve_sdr",
    "check_schur",
    "schur_lift",
    "rank1_objective",
    "rank1_feasible",
    "dump_instance",
    "load_instance",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"

_PIN_TOL = 1e-12
_MAX_NEWTON = 60


class SdrAssemblyError(ValueError):
    """The trust box is empty or the inputs are inconsistent."""


@dataclass(frozen=True)
class SdrInstance:
    K: int
    psi: float
    obj_offset: float
    obj_lin_lambda: np.ndarray
    obj_lin_Lambda: np.ndarray
    rate_Lambda: np.ndarray
    rate_lambda: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    diag_coupling: np.ndarray

    def __post_init__(self):
        if np.any(self.box_lo > self.box_hi):
            raise SdrAssemblyError("box_lo must not exceed box_hi")
        if np.any(self.box_lo < 0) or np.any(self.box_hi > 1):
            raise SdrAssemblyError("box must lie inside [0, 1]")
        for name in ("obj_lin_lambda", "obj_lin_Lambda", "rate_Lambda", "rate_lambda"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise SdrAssemblyError(f"{name} has non-finite entries")

    @property
    def rate_factor(self) -> float:
        return 2.0 ** self.psi - 1.0

    def objective(self, lam, Lam) -> float:
        return float(self.obj_offset + np.sum(Lam * self.obj_lin_Lambda)
                     + self.obj_lin_lambda @ lam)

    def rate_slack(self, lam, Lam) -> float:
        return float(np.sum(Lam * self.rate_Lambda) + self.rate_lambda @ lam)


@dataclass(frozen=True)
class KktResiduals:
    primal_feas: float
    dual_feas: float
    complementarity: float
    psd_min_eig: float

    def worst(self) -> float:
        return max(self.primal_feas, self.dual_feas, self.complementarity,
                   max(0.0, -self.psd_min_eig))


@dataclass(frozen=True)
class SdrSolution:
    lambda_star: np.ndarray | None
    Lambda_star: np.ndarray | None
    objective: float
    status: str
    kkt_residuals: KktResiduals | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def assemble_sdr(pd: ProblemData, le: LinearizedEnergy, psi: float, a, eps) -> SdrInstance:
    """Build the relaxed problem around expansion point ``a`` with trust radius ``eps``.

    The conversion efficiency is left out of the objective; it does not move
    the maximiser.
    """
    a = np.asarray(a, dtype=float)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), a.shape)
    if psi < 0 or not math.isfinite(psi):
        raise SdrAssemblyError(f"rate demand must be finite and >= 0, got {psi}")
    if np.any(eps <= 0):
        raise SdrAssemblyError("trust radius must be positive")
    lo = np.maximum(a - eps, 0.0)
    hi = np.minimum(a + eps, 1.0)
    if np.any(lo > hi):
        k = int(np.argmax(lo > hi))
        raise SdrAssemblyError(f"trust box is empty on coordinate {k}")
    factor = 2.0 ** psi - 1.0
    return SdrInstance(
        K=pd.K,
        psi=float(psi),
        obj_offset=le.Gamma,
        obj_lin_lambda=-(le.G2pp.T @ le.zeta),
        obj_lin_Lambda=0.25 * le.G2p,
        rate_Lambda=pd.transmit_power * pd.G1 - factor * pd.Sigma,
        rate_lambda=-factor * pd.sigma,
        box_lo=lo,
        box_hi=hi,
        diag_coupling=a.copy(),
    )


def schur_lift(Lam, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    K = lam.size
    X = np.empty((K + 1, K + 1))
    X[:K, :K] = Lam
    X[:K, K] = lam
    X[K, :K] = lam
    X[K, K] = 1.0
    return X


def check_schur(Lam, lam, tol: float = 0.0) -> bool:
    """True iff ``[[Lam, lam], [lam', 1]]`` is PSD up to ``-tol``.

    Equivalent to ``Lam - lam lam'`` having all eigenvalues ``>= -tol`` only
    in the limit ``tol -> 0``; for ``tol > 0`` the two tests differ by a
    factor depending on ``|lam|``.
    """
    X = schur_lift(Lam, lam)
    X = 0.5 * (X + X.T)
    return bool(np.linalg.eigvalsh(X)[0] >= -tol)


def rank1_objective(inst: SdrInstance, lam) -> float:
    lam = np.asarray(lam, dtype=float)
    return inst.objective(lam, np.outer(lam, lam))


def rank1_feasible(inst: SdrInstance, lam, tol: float = 1e-9) -> bool:
    """Whether ``(lam, lam lam')`` satisfies every constraint of the relaxation."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < inst.box_lo - tol) or np.any(lam > inst.box_hi + tol):
        return False
    if np.any(np.abs(lam ** 2 - inst.diag_coupling * lam) > tol):
        return False
    scale = 1.0 + np.abs(inst.rate_Lambda).sum() + np.abs(inst.rate_lambda).sum()
    return inst.rate_slack(lam, np.outer(lam, lam)) >= -tol * scale


# --------------------------------------------------------------------------
# reduction to an inequality-form problem over a single LMI
# --------------------------------------------------------------------------

@dataclass
class _Reduced:
    """``max c0 + c'x  s.t.  G x <= h,  X0 + sum_j x_j F_j >= 0``."""

    lam0: np.ndarray
    lam_basis: np.ndarray          # (K, n)
    Lam0: np.ndarray
    Lam_basis: np.ndarray          # (n, K, K)
    X0: np.ndarray
    F: np.ndarray                  # (n, m, m)
    c0: float
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    rate_row: int | None           # index of the rate row inside G, if present
    rate_scale: float
    x_start: np.ndarray

    def lift(self, x):
        return self.lam0 + self.lam_basis @ x, self.Lam0 + np.tensordot(x, self.Lam_basis, axes=1)


def _reduce(inst: SdrInstance) -> _Reduced | None:
    """Eliminate pinned coordinates and the diagonal coupling.

    Returns ``None`` when the coupling and the box are incompatible.
    """
    K = inst.K
    a = inst.diag_coupling
    lo = np.maximum(inst.box_lo, 0.0)
    hi = np.minimum(inst.box_hi, a)       # Lam_kk >= lam_k**2 implies lam_k <= a_k
    if np.any(lo > hi + _PIN_TOL):
        return None

    pinned: dict[int, float] = {}
    fixed: dict[int, float] = {}
    free: list[int] = []
    for k in range(K):
        if hi[k] <= _PIN_TOL:
            pinned[k] = 0.0
        elif lo[k] >= a[k] - _PIN_TOL:
            pinned[k] = float(a[k])
        elif hi[k] - lo[k] <= _PIN_TOL:
            fixed[k] = 0.5 * (lo[k] + hi[k])
        else:
            free.append(k)
    block = sorted(free + list(fixed))
    pairs = [(block[i], block[j]) for i in range(len(block)) for j in range(i + 1, len(block))]
    var_of = {k: idx for idx, k in enumerate(free)}
    n = len(free) + len(pairs)

    def lift(x):
        lam = np.zeros(K)
        for k, v in {**pinned, **fixed}.items():
            lam[k] = v
        for k in free:
            lam[k] = x[var_of[k]]
        Lam = np.zeros((K, K))
        for k in block:
            Lam[k, k] = a[k] * lam[k]
        for idx, (i, j) in enumerate(pairs):
            Lam[i, j] = Lam[j, i] = x[len(free) + idx]
        for k, v in pinned.items():
            # zero Schur-complement row: Lam_kj = lam_k lam_j
            Lam[k, :] = v * lam
            Lam[:, k] = v * lam
            Lam[k, k] = a[k] * v
        return lam, Lam

    lam0, Lam0 = lift(np.zeros(n))
    lam_basis = np.zeros((K, n))
    Lam_basis = np.zeros((n, K, K))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        lam_j, Lam_j = lift(e)
        lam_basis[:, j] = lam_j - lam0
        Lam_basis[j] = Lam_j - Lam0

    m = len(block) + 1
    sel = np.array(block, dtype=int)

    def block_lmi(lam, Lam, const):
        X = np.zeros((m, m))
        X[:-1, :-1] = Lam[np.ix_(sel, sel)]
        X[:-1, -1] = lam[sel]
        X[-1, :-1] = lam[sel]
        X[-1, -1] = 1.0 if const else 0.0
        return X

    X0 = block_lmi(lam0, Lam0, True)
    F = np.stack([block_lmi(lam_basis[:, j], Lam_basis[j], False) for j in range(n)]) \
        if n else np.zeros((0, m, m))

    c0 = inst.objective(lam0, Lam0)
    c = np.array([np.sum(Lam_basis[j] * inst.obj_lin_Lambda) + inst.obj_lin_lambda @ lam_basis[:, j]
                  for j in range(n)])

    rows, rhs = [], []
    for k in free:
        j = var_of[k]
        if lo[k] > 0:
            row = np.zeros(n)
            row[j] = -1.0
            rows.append(row)
            rhs.append(-lo[k])
        if hi[k] < a[k]:
            row = np.zeros(n)
            row[j] = 1.0
            rows.append(row)
            rhs.append(hi[k])

    rate_row = None
    rate_scale = 1.0
    if inst.rate_factor > 0 or np.any(inst.rate_lambda != 0):
        r0 = inst.rate_slack(lam0, Lam0)
        r = np.array([inst.rate_slack(lam_basis[:, j], Lam_basis[j]) for j in range(n)])
        rate_scale = max(np.abs(inst.rate_Lambda).max(), np.abs(inst.rate_lambda).max(), 1e-300)
        rows.append(-r / rate_scale)
        rhs.append(r0 / rate_scale)
        rate_row = len(rows) - 1

    G = np.array(rows).reshape(len(rows), n)
    h = np.array(rhs, dtype=float)

    x_start = np.zeros(n)
    mid = 0.5 * (lo + hi)
    for k in free:
        x_start[var_of[k]] = mid[k]
    lam_s = lam0 + lam_basis @ x_start
    for idx, (i, j) in enumerate(pairs):
        x_start[len(free) + idx] = lam_s[i] * lam_s[j]

    return _Reduced(lam0=lam0, lam_basis=lam_basis, Lam0=Lam0, Lam_basis=Lam_basis,
                    X0=X0, F=F, c0=c0, c=c, G=G, h=h, rate_row=rate_row,
                    rate_scale=rate_scale, x_start=x_start)


# --------------------------------------------------------------------------
# log-barrier path following
# --------------------------------------------------------------------------

class _NumericalFailure(RuntimeError):
    pass


def _chol_ok(X) -> bool:
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return False
    return True


class _Barrier:
    def __init__(self, c, G, h, X0, F):
        self.c, self.G, self.h, self.X0, self.F = c, G, h, X0, F
        self.m_lin = G.shape[0]
        self.m_psd = X0.shape[0]

    @property
    def degree(self) -> int:
        return self.m_lin + self.m_psd

    def strictly_feasible(self, x) -> bool:
        s = self.h - self.G @ x
        if np.any(s <= 0):
            return False
        return _chol_ok(self.X0 + np.tensordot(x, self.F, axes=1))

    def value(self, x, t):
        s = self.h - self.G @ x
        X = self.X0 + np.tensordot(x, self.F, axes=1)
        sign, logdet = np.linalg.slogdet(X)
        return -t * (self.c @ x) - np.sum(np.log(s)) - logdet

    def derivatives(self, x, t):
        s = self.h - self.G @ x
        X = self.X0 + np.tensordot(x, self.F, axes=1)
        Xinv = np.linalg.inv(X)
        Y = np.einsum("ab,jbc->jac", Xinv, self.F)
        grad = -t * self.c + self.G.T @ (1.0 / s) - np.einsum("jaa->j", Y)
        hess = (self.G.T * (1.0 / s ** 2)) @ self.G + np.einsum("iab,jba->ij", Y, Y)
        return grad, 0.5 * (hess + hess.T), s, Xinv

    def center(self, x, t):
        """Damped Newton minimisation of the barrier at parameter ``t``."""
        steps = 0
        for steps in range(1, _MAX_NEWTON + 1):
            grad, hess, _, _ = self.derivatives(x, t)
            d = np.sqrt(np.clip(np.diag(hess), 1e-300, None))
            scaled = hess / np.outer(d, d)
            try:
                dx = -np.linalg.solve(scaled, grad / d) / d
            except np.linalg.LinAlgError:
                dx = -np.linalg.lstsq(scaled, grad / d, rcond=None)[0] / d
            if not np.all(np.isfinite(dx)):
                raise _NumericalFailure("non-finite Newton step")
            dec2 = -grad @ dx
            if dec2 < 0:
                raise _NumericalFailure("Newton direction is not a descent direction")
            if dec2 / 2 <= 1e-11:
                return x, steps
            f0 = self.value(x, t)
            step = 1.0
            while True:
                cand = x + step * dx
                if self.strictly_feasible(cand) and self.value(cand, t) <= f0 - 0.25 * step * dec2:
                    break
                step *= 0.5
                if step < 1e-14:
                    if dec2 < 1e-7:
                        return x, steps
                    raise _NumericalFailure("line search failed")
            x = cand
        return x, steps

    def dual(self, x, t):
        """Dual estimate corrected to first order by one more Newton step."""
        grad, hess, s, Xinv = self.derivatives(x, t)
        try:
            dx = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            dx = np.zeros_like(x)
        z = (1.0 + (self.G @ dx) / s) / (t * s)
        dX = np.tensordot(dx, self.F, axes=1)
        Z = (Xinv - Xinv @ dX @ Xinv) / t
        return z, 0.5 * (Z + Z.T)


def _path_follow(bar: _Barrier, x, scale: float, tol: float, max_iter: int,
                 stop=None, mu: float = 10.0):
    """Follow the central path until the barrier gap drops below ``tol * scale``.

    ``stop(x, t)`` may end the run early and its return value is passed back.
    Returns ``(x, t, outer_iterations, early_result)``.
    """
    t = bar.degree / max(scale, 1e-12)
    for it in range(1, max_iter + 1):
        x, _ = bar.center(x, t)
        if stop is not None:
            result = stop(x, t)
            if result is not None:
                return x, t, it, result
        if bar.degree / t <= tol * scale:
            return x, t, it, None
        t *= mu
    return x, t, max_iter, MAX_ITERATIONS


def solve_sdr(inst: SdrInstance, tol: float = 1e-7, max_iter: int = 100) -> SdrSolution:
    """Solve the relaxed problem to a certified tolerance.

    Infeasible rate demands are reported through ``status``, never raised.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    red = _reduce(inst)
    if red is None:
        return SdrSolution(None, None, -math.inf, INFEASIBLE)
    n = red.c.size
    if n == 0:
        return _finish_fixed(inst, red, tol)

    x = red.x_start.copy()
    G, h = red.G.copy(), red.h.copy()
    iterations = 0
    try:
        if red.rate_row is not None and h[red.rate_row] - G[red.rate_row] @ x <= 0:
            x, h, iters, status = _phase_one(red, x, G, h, tol, max_iter)
            iterations += iters
            if status is not None:
                return SdrSolution(None, None, -math.inf, status, iterations=iterations)
        bar = _Barrier(red.c, G, h, red.X0, red.F)
        obj_scale = 1.0 + abs(red.c0) + np.abs(red.c).sum()
        x, t, iters, flag = _path_follow(bar, x, obj_scale, tol, max_iter)
        iterations += iters
    except (_NumericalFailure, np.linalg.LinAlgError):
        return SdrSolution(None, None, -math.inf, NUMERICAL_FAILURE, iterations=iterations)

    lam, Lam = red.lift(x)
    Lam = 0.5 * (Lam + Lam.T)
    objective = inst.objective(lam, Lam)
    kkt = _kkt(inst, red, bar, x, t, objective)
    status = flag or OPTIMAL
    if status == OPTIMAL and kkt.worst() > max(10 * tol, 1e-6):
        status = NUMERICAL_FAILURE
    return SdrSolution(lam, Lam, objective, status, kkt, iterations)


def _phase_one(red: _Reduced, x, G, h, tol, max_iter):
    """Maximise the rate slack over the box and the LMI to find a strict start.

    Returns the start point, possibly with the rate row relaxed by at most
    ``tol`` when the feasible set has no interior.
    """
    row = red.rate_row
    others = np.arange(G.shape[0]) != row
    bar = _Barrier(-G[row], G[others], h[others], red.X0, red.F)

    def stop(xc, t):
        slack = h[row] - G[row] @ xc
        if slack > 0:
            return "feasible"
        if slack + bar.degree / t < -tol:
            return INFEASIBLE
        return None

    x, t, iters, result = _path_follow(bar, x, 1.0, tol, max_iter, stop=stop)
    slack = h[row] - G[row] @ x
    if result == "feasible":
        return x, h, iters, None
    if result == INFEASIBLE:
        return x, h, iters, INFEASIBLE
    if slack >= -tol:
        h = h.copy()
        h[row] += -slack + 0.5 * tol
        return x, h, iters, None
    return x, h, iters, result


def _finish_fixed(inst: SdrInstance, red: _Reduced, tol: float) -> SdrSolution:
    x = np.zeros(0)
    lam, Lam = red.lift(x)
    if red.G.shape[0] and np.any(red.h < -tol):
        return SdrSolution(None, None, -math.inf, INFEASIBLE)
    X = schur_lift(Lam, lam)
    min_eig = float(np.linalg.eigvalsh(X)[0])
    if min_eig < -tol:
        return SdrSolution(None, None, -math.inf, INFEASIBLE)
    objective = inst.objective(lam, Lam)
    viol = float(max(0.0, -np.min(red.h))) if red.h.size else 0.0
    kkt = KktResiduals(primal_feas=viol, dual_feas=0.0, complementarity=0.0, psd_min_eig=min_eig)
    return SdrSolution(lam, Lam, objective, OPTIMAL, kkt, 0)


def _kkt(inst, red, bar, x, t, objective) -> KktResiduals:
    z, Z = bar.dual(x, t)
    stationarity = red.c - bar.G.T @ z + np.einsum("ab,jba->j", Z, red.F)
    dual_feas = float(np.linalg.norm(stationarity) / (1.0 + np.linalg.norm(red.c)))
    s = red.h - red.G @ x
    primal_feas = float(max(0.0, -s.min())) if s.size else 0.0
    X = bar.X0 + np.tensordot(x, bar.F, axes=1)
    comp = float(z @ (bar.h - bar.G @ x) + np.sum(Z * X)) / (1.0 + abs(objective))
    lam, Lam = red.lift(x)
    min_eig = float(np.linalg.eigvalsh(schur_lift(0.5 * (Lam + Lam.T), lam))[0])
    return KktResiduals(primal_feas, dual_feas, comp, min_eig)


# --------------------------------------------------------------------------
# plain-text instance dump
# --------------------------------------------------------------------------

_DUMP_HEADER = "# swipt-ps sdr-instance v1"
_VECTORS = ("obj_lin_lambda", "rate_lambda", "box_lo", "box_hi", "diag_coupling")
_MATRICES = ("obj_lin_Lambda", "rate_Lambda")


def dump_instance(inst: SdrInstance, path) -> None:
    """Write ``inst`` as plain text: scalars, then vectors, then row-major matrices."""
    lines = [_DUMP_HEADER, f"K {inst.K}", f"psi {inst.psi!r}", f"obj_offset {inst.obj_offset!r}"]
    for name in _VECTORS:
        vec = getattr(inst, name)
        lines.append(f"vector {name} {vec.size}")
        lines.append(" ".join(repr(float(v)) for v in vec))
    for name in _MATRICES:
        mat = getattr(inst, name)
        lines.append(f"matrix {name} {mat.shape[0]} {mat.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in mat)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_instance(path) -> SdrInstance:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _DUMP_HEADER:
        raise ValueError(f"{path}: not an sdr-instance dump")
    fields: dict = {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        if parts[0] == "vector":
            fields[parts[1]] = np.array([float(v) for v in lines[i].split()])
            i += 1
        elif parts[0] == "matrix":
            rows, cols = int(parts[2]), int(parts[3])
            fields[parts[1]] = np.array([[float(v) for v in lines[i + r].split()]
                                         for r in range(rows)]).reshape(rows, cols)
            i += rows
        elif parts[0] == "K":
            fields["K"] = int(parts[1])
        else:
            fields[parts[0]] = float(parts[1])
    return SdrInstance(**fields)
