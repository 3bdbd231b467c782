"""Canonical SDP ``inf {<A0, X> : <A_j, X> = y_j, X PSD}`` and its max-entropy twin.

Conventions: ``<A, B> = tr(A^T B)`` and dX is Lebesgue measure on the
d(d+1)/2 upper-triangle entries of a symmetric matrix.  Under these,
``ln int_{PSD} exp(-<Z, X>) dX = phi(Z) = C_d - (d+1)/2 ln det Z`` with
``C_d = ln Gamma_d((d+1)/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _psd
from ._psd import multivariate_gamma_constant, psd_log_barrier, psd_log_barrier_gradient
from .errors import (
    DependentConstraints,
    DimensionUnsupported,
    DomainViolation,
    NoInteriorDual,
    NotConverged,
    NotPositiveDefinite,
    Unbounded,
)
from .lp_bridge import IdentityRow, LimitBracket
from .maxent_core import MaxentProblem, SDPCone, SolverOptions, solve_dual
from .oracles import CHUNK, make_generator

__all__ = [
    "SDPInstance",
    "multivariate_gamma_constant",
    "psd_log_barrier",
    "psd_log_barrier_gradient",
    "gram_j_h",
    "normalize_sdp_instance",
    "sdp_log_Z",
    "sdp_barrier_dual_solve",
    "sdp_dual_limit",
    "theorem_sdp_identity_report",
    "mc_psd_integral",
]

UNBOUNDED_NORM = 1e8


def gram_j_h(A_js) -> float:
    """sqrt(det G) with G_ik = tr(A_i A_k): the constant Jacobian factor of h."""
    A_js = np.asarray(A_js, float)
    if A_js.ndim == 2:
        A_js = A_js[None]
    G = np.einsum("iab,kba->ik", A_js, A_js)
    det = float(np.linalg.det(G))
    if det <= 1e-12:
        raise DependentConstraints(f"det of the trace Gram matrix is {det:.3g}; the A_j are dependent")
    return math.sqrt(det)


@dataclass(frozen=True, eq=False)
class SDPInstance:
    A0: np.ndarray
    A_js: np.ndarray
    y: np.ndarray
    log_s: float
    lambda0: np.ndarray | None = None
    shift: float = 0.0

    @classmethod
    def from_arrays(cls, A0, A_js, y) -> "SDPInstance":
        A0 = _psd.symmetrize(A0)
        A_js = np.asarray(A_js, float)
        if A_js.ndim == 2:
            A_js = A_js[None]
        A_js = 0.5 * (A_js + np.transpose(A_js, (0, 2, 1)))
        y = np.asarray(y, float).ravel()
        d, m = A0.shape[0], A_js.shape[0]
        if A_js.shape[1:] != (d, d) or y.size != m:
            raise ValueError("shape mismatch between A0, A_js and y")
        if m >= d * (d + 1) // 2:
            raise ValueError("need m < d(d+1)/2")
        gram_j_h(A_js)
        if not _psd.is_pd(A0):
            raise NotPositiveDefinite("A0 must be positive definite; use normalize_sdp_instance")
        return cls(A0, A_js, y, -psd_log_barrier(A0))

    @property
    def d(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return self.A_js.shape[0]

    def S(self, lam) -> np.ndarray:
        return self.A0 - np.tensordot(np.asarray(lam, float), self.A_js, axes=1)

    def to_problem(self) -> MaxentProblem:
        return MaxentProblem(SDPCone(self.A0, self.A_js), self.y)


def normalize_sdp_instance(A0, A_js, y, lambda0=None, iters: int = 500) -> SDPInstance:
    """Replace A0 by A0 - sum lambda0_j A_j when A0 is not positive definite.

    Without ``lambda0`` a point is searched by subgradient ascent on the
    smallest eigenvalue of A0 - sum lam_j A_j (step 1/k).
    """
    A0 = _psd.symmetrize(A0)
    A_js = np.asarray(A_js, float)
    if A_js.ndim == 2:
        A_js = A_js[None]
    y = np.asarray(y, float).ravel()
    if lambda0 is None and _psd.is_pd(A0):
        return SDPInstance.from_arrays(A0, A_js, y)
    if lambda0 is None:
        lam = np.zeros(A_js.shape[0])
        best, best_f = lam, -math.inf
        for k in range(1, iters + 1):
            w, V = np.linalg.eigh(A0 - np.tensordot(lam, A_js, axes=1))
            if w[0] > best_f:
                best, best_f = lam.copy(), float(w[0])
            u = V[:, 0]
            lam = lam - np.einsum("a,jab,b->j", u, A_js, u) / k
        if not best_f > 0:
            raise NoInteriorDual("no lam0 with A0 - sum lam0_j A_j positive definite found")
        lambda0 = best
    lambda0 = np.asarray(lambda0, float).ravel()
    inst = SDPInstance.from_arrays(A0 - np.tensordot(lambda0, A_js, axes=1), A_js, y)
    return SDPInstance(inst.A0, inst.A_js, inst.y, inst.log_s, lambda0, float(lambda0 @ y))


def sdp_log_Z(inst: SDPInstance, lam) -> float:
    """ln Z(lam) = ln s + phi(A0 - sum lam_j A_j)."""
    try:
        return inst.log_s + psd_log_barrier(inst.S(np.atleast_1d(lam)))
    except NotPositiveDefinite as exc:
        raise DomainViolation("A0 - sum lam_j A_j is not positive definite") from exc


def _barrier_newton(inst: SDPInstance, eps: float, lam: np.ndarray, max_iters: int = 200) -> np.ndarray:
    k = 0.5 * (inst.d + 1)
    y = inst.y
    ytol = 1e-12 * max(1.0, float(np.max(np.abs(y))))
    C = multivariate_gamma_constant(inst.d)

    def value(l):
        try:
            return float(l @ y) - eps * (C - k * _psd.logdet_pd(inst.S(l)))
        except NotPositiveDefinite:
            return -math.inf

    normA = np.sqrt(np.einsum("jab,jab->j", inst.A_js, inst.A_js))

    def noise(l, Sinv):
        # rounding floor of the stationarity residual from errors in the entries of S
        dS = 4 * np.finfo(float).eps * (np.abs(inst.A0).max() + np.abs(l) @ np.abs(inst.A_js).reshape(len(l), -1).max(axis=1))
        return float(eps * k * np.linalg.norm(Sinv, 2) ** 2 * dS * inst.d * normA.max())

    f = value(lam)
    for _ in range(max_iters):
        Sinv = _psd.inv_pd(inst.S(lam))
        B = np.einsum("ab,jbc->jac", Sinv, inst.A_js)
        g = y - eps * k * np.einsum("jaa->j", B)
        if np.max(np.abs(g)) <= max(ytol, 10 * noise(lam, Sinv)):
            return lam
        H = eps * k * np.einsum("iab,jba->ij", B, B)
        step = np.linalg.solve(0.5 * (H + H.T), g)
        dec = float(g @ step)
        dS = -np.tensordot(step, inst.A_js, axes=1)
        t = min(1.0, 0.95 * _psd.max_psd_step(inst.S(lam), dS))
        if dec < 1e-14 * (1.0 + abs(f)):
            lam = lam + t * step
            f = value(lam)
            continue
        while True:
            trial = lam + t * step
            ft = value(trial)
            if ft >= f + 1e-4 * t * dec or t < 1e-30:
                break
            t *= 0.5
        lam, f = trial, ft
        if np.linalg.norm(lam) > UNBOUNDED_NORM:
            raise Unbounded("barrier iterates diverge; y is outside the interior of h(PSD)")
    Sinv = _psd.inv_pd(inst.S(lam))
    g = y - eps * k * np.einsum("ab,jba->j", Sinv, inst.A_js)
    if np.max(np.abs(g)) > max(1e-8 * max(1.0, float(np.max(np.abs(y)))), 100 * noise(lam, Sinv)):
        raise NotConverged(f"SDP barrier Newton did not converge at eps={eps}")
    return lam


def _path(inst: SDPInstance, epsilon: float) -> np.ndarray:
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    lam = np.zeros(inst.m)
    eps = max(1.0, epsilon)
    while True:
        lam = _barrier_newton(inst, eps, lam)
        if eps <= epsilon:
            return lam
        eps = max(epsilon, eps / 10.0)


def sdp_barrier_dual_solve(inst: SDPInstance, epsilon: float):
    """(lambda_eps, tau*_eps(y)) for sup <lam, y> - eps phi(A0 - sum lam_j A_j)."""
    lam = _path(inst, epsilon)
    return lam, float(lam @ inst.y) - epsilon * psd_log_barrier(inst.S(lam))


def sdp_dual_limit(inst: SDPInstance, gap_tol: float = 1e-9) -> LimitBracket:
    """Bracket the dual SDP value tau*(y) along the barrier path.

    At a central point X(eps) = eps (d+1)/2 S^-1 is primal feasible and the
    duality gap <S, X(eps)> equals eps d(d+1)/2; eps is chosen so that the gap
    is at most ``gap_tol``.
    """
    k = 0.5 * (inst.d + 1)
    eps = gap_tol / (k * inst.d)
    lam = _path(inst, eps)
    return LimitBracket(float(lam @ inst.y), eps * k * inst.d, eps)


def theorem_sdp_identity_report(inst: SDPInstance, eps_list, opts: SolverOptions | None = None):
    """Rows (eps, tau*_eps, eps*Theta(y/eps), |eps Theta(y/eps) + eps ln s - tau*_eps|)."""
    opts = opts or SolverOptions(max_iters=500)
    problem = inst.to_problem()
    rows = []
    for eps in eps_list:
        eps = float(eps)
        res = solve_dual(problem.with_y(inst.y / eps), opts)
        if not res.converged:
            raise NotConverged(f"max-entropy dual at eps={eps} ended with status {res.status.value}")
        eps_theta = eps * res.theta
        _, tau = sdp_barrier_dual_solve(inst, eps)
        rows.append(IdentityRow(eps, tau, eps_theta, abs(eps_theta + eps * inst.log_s - tau)))
    return rows


def mc_psd_integral(Z, n_samples: int, seed: int, kappa: float = 0.5):
    """Importance-sampling estimate of int_{PSD} exp(-<Z, X>) dX.

    Diagonal entries are drawn from exponentials with rate lambda_min(Z),
    off-diagonal X_ij from N(0, kappa X_ii X_jj); draws that are not PSD get
    weight zero.  The conditional scale keeps the weights bounded on the PSD
    set (|X_ij| <= sqrt(X_ii X_jj) there), so the variance is finite.
    Returns (estimate, standard error).
    """
    Z = _psd.symmetrize(Z)
    d = Z.shape[0]
    if d > 3:
        raise DimensionUnsupported("mc_psd_integral supports d <= 3")
    _psd.pd_cholesky(Z)
    rate = float(np.linalg.eigvalsh(Z)[0])
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    total, total_sq, done, stream = 0.0, 0.0, 0, 0
    while done < n_samples:
        size = min(CHUNK, n_samples - done)
        rng = make_generator(seed, stream)
        u = rng.random((size, d))
        z = rng.standard_normal((size, n_off))
        diag = -np.log1p(-u) / rate
        sd = np.sqrt(kappa * diag[:, iu[0]] * diag[:, iu[1]])
        off = sd * z
        X = np.zeros((size, d, d))
        X[:, np.arange(d), np.arange(d)] = diag
        X[:, iu[0], iu[1]] = off
        X[:, iu[1], iu[0]] = off
        psd = np.linalg.eigvalsh(X)[:, 0] >= 0
        inner = np.einsum("ab,nab->n", Z, X)
        log_q = np.sum(math.log(rate) - rate * diag, axis=1) + np.sum(
            -0.5 * z**2 - np.log(sd) - 0.5 * math.log(2 * math.pi), axis=1
        )
        w = np.where(psd, np.exp(-inner - log_q), 0.0)
        total += float(np.sum(w))
        total_sq += float(np.sum(w * w))
        done += size
        stream += 1
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return mean, math.sqrt(var / n_samples)
