"""KL max-entropy problems, their log-partition functions and the dual solver.

Sign convention: ``Z(lam) = E_P[exp(<lam, h(X)>)]`` is the moment generating
function of the pushforward ``h#P``.  The Laplace transform of the fiber
density ``v`` is ``L_v(lam) = int exp(-<lam, y>) v(y) dy``, so ``Z(lam) =
L_v(-lam)``.

Three reference-measure backends are supported:

* :class:`LPOrthant` -- ``P(dx) = s exp(-<c, x>) dx`` on the nonnegative
  orthant with ``h(x) = A x`` and ``s = prod(c)``.
* :class:`SDPCone` -- ``P(dX) = s exp(-<A0, X>) dX`` on the PSD cone with
  ``h(X) = (<A_j, X>)_j``.
* :class:`BoxQuadrature` -- a catalogued density on a box with a catalogued
  smooth moment map, integrated by tensor Gauss-Legendre quadrature.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import _psd
from .errors import (
    DomainViolation,
    LimitUnsupported,
    NotConverged,
    NotPositiveDefinite,
    QuadratureUnsupported,
    RankDeficient,
)

BOX_NODES = 64
BOX_MAX_DIM = 3


def _frozen(a, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LPOrthant:
    A: np.ndarray
    c: np.ndarray

    kind = "lp"

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A), 2)
        c = _frozen(np.ravel(self.c), 1)
        m, d = A.shape
        if c.shape[0] != d:
            raise ValueError(f"c has length {c.shape[0]}, A has {d} columns")
        if m > d:
            raise ValueError("need m <= d")
        if np.linalg.matrix_rank(A) < m:
            raise RankDeficient("A must have full row rank")
        if np.any(c <= 0):
            raise ValueError("c must be strictly positive (normalize the instance first)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def log_s(self) -> float:
        return float(np.sum(np.log(self.c)))

    def _slack(self, lam) -> np.ndarray:
        sl = self.c - self.A.T @ lam
        if not np.all(sl > 0):
            raise DomainViolation(f"c - A^T lam = {sl} is not strictly positive")
        return sl

    def in_domain(self, lam) -> bool:
        return bool(np.all(self.c - self.A.T @ np.asarray(lam, float) > 0))

    def log_partition(self, lam) -> float:
        sl = self._slack(lam)
        return self.log_s - float(np.sum(np.log(sl)))

    def derivatives(self, lam):
        inv = 1.0 / self._slack(lam)
        grad = self.A @ inv
        hess = (self.A * inv**2) @ self.A.T
        return grad, hess

    def max_step(self, lam, direction) -> float:
        sl = self._slack(lam)
        ds = -self.A.T @ direction
        neg = ds < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(sl[neg] / -ds[neg]))

    def moment(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.A.T

    def log_density(self, x) -> float:
        x = np.asarray(x, float)
        if x.shape != (self.d,):
            raise ValueError(f"expected a point of dimension {self.d}")
        if np.any(x < 0):
            return -math.inf
        return self.log_s - float(self.c @ x)


@dataclass(frozen=True, eq=False)
class SDPCone:
    A0: np.ndarray
    A_js: np.ndarray

    kind = "sdp"

    def __post_init__(self):
        A0 = _psd.symmetrize(self.A0)
        A_js = np.array(self.A_js, dtype=float)
        if A_js.ndim == 2:
            A_js = A_js[None]
        d = A0.shape[0]
        if A_js.ndim != 3 or A_js.shape[1:] != (d, d):
            raise ValueError("A_js must be a list of d x d matrices")
        A_js = 0.5 * (A_js + np.transpose(A_js, (0, 2, 1)))
        m = A_js.shape[0]
        if m >= d * (d + 1) // 2:
            raise ValueError("need m < d(d+1)/2")
        gram = np.einsum("iab,jab->ij", A_js, A_js)
        if np.linalg.det(gram) <= 1e-12:
            raise RankDeficient("A_j are linearly dependent")
        if not _psd.is_pd(A0):
            raise NotPositiveDefinite("A0 must be positive definite (normalize the instance first)")
        object.__setattr__(self, "A0", _frozen(A0))
        object.__setattr__(self, "A_js", _frozen(A_js))

    @property
    def m(self) -> int:
        return self.A_js.shape[0]

    @property
    def d(self) -> int:
        return self.A0.shape[0]

    @property
    def log_s(self) -> float:
        return -_psd.psd_log_barrier(self.A0)

    def _S(self, lam) -> np.ndarray:
        return self.A0 - np.tensordot(np.asarray(lam, float), self.A_js, axes=1)

    def in_domain(self, lam) -> bool:
        return _psd.is_pd(self._S(lam))

    def log_partition(self, lam) -> float:
        S = self._S(lam)
        try:
            return self.log_s + _psd.psd_log_barrier(S)
        except NotPositiveDefinite as exc:
            raise DomainViolation("A0 - sum lam_j A_j is not positive definite") from exc

    def derivatives(self, lam):
        try:
            Sinv = _psd.inv_pd(self._S(lam))
        except NotPositiveDefinite as exc:
            raise DomainViolation("A0 - sum lam_j A_j is not positive definite") from exc
        k = 0.5 * (self.d + 1)
        B = np.einsum("ab,jbc->jac", Sinv, self.A_js)  # S^-1 A_j
        grad = k * np.einsum("jaa->j", B)
        hess = k * np.einsum("iab,jba->ij", B, B)
        return grad, 0.5 * (hess + hess.T)

    def max_step(self, lam, direction) -> float:
        dS = -np.tensordot(np.asarray(direction, float), self.A_js, axes=1)
        return _psd.max_psd_step(self._S(lam), dS)

    def moment(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        return np.einsum("jab,...ab->...j", self.A_js, X)

    def log_density(self, X) -> float:
        X = np.asarray(X, float)
        if X.shape != (self.d, self.d):
            raise ValueError(f"expected a {self.d} x {self.d} matrix")
        if np.linalg.eigvalsh(_psd.symmetrize(X))[0] < 0:
            return -math.inf
        return self.log_s - float(np.sum(self.A0 * X))


# Catalogued densities are normalized analytically on the box.
def _uniform_logpdf(x, lo, hi):
    return np.full(x.shape[:-1], -float(np.sum(np.log(hi - lo))))


def _exp_neg_sum_logpdf(x, lo, hi):
    # product of truncated unit-rate exponentials
    lognorm = np.sum(np.log(np.exp(-lo) - np.exp(-hi)))
    return -np.sum(x, axis=-1) - lognorm


BOX_DENSITIES: dict[str, Callable] = {
    "uniform": _uniform_logpdf,
    "exp_neg_sum": _exp_neg_sum_logpdf,
}


def _map_identity(x):
    return x


def _map_sum(x):
    return np.sum(x, axis=-1, keepdims=True)


def _map_sum_squares(x):
    return np.sum(x**2, axis=-1, keepdims=True)


def _map_sum_and_sum_squares(x):
    return np.stack([np.sum(x, axis=-1), np.sum(x**2, axis=-1)], axis=-1)


BOX_MAPS: dict[str, tuple[Callable, Callable[[int], int]]] = {
    # id -> (map, output dimension as a function of d)
    "identity": (_map_identity, lambda d: d),
    "sum": (_map_sum, lambda d: 1),
    "sum_squares": (_map_sum_squares, lambda d: 1),
    "sum_and_sum_squares": (_map_sum_and_sum_squares, lambda d: 2),
}


@functools.lru_cache(maxsize=16)
def _box_rule(bounds: tuple, density_id: str, map_id: str):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    t, w = np.polynomial.legendre.leggauss(BOX_NODES)
    axes = [0.5 * (h - l) * t + 0.5 * (h + l) for l, h in zip(lo, hi)]
    wts = [0.5 * (h - l) * w for l, h in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(bounds))
    logw = np.log(np.stack(np.meshgrid(*wts, indexing="ij"), axis=-1).reshape(-1, len(bounds))).sum(axis=1)
    logw = logw + BOX_DENSITIES[density_id](pts, lo, hi)
    H = BOX_MAPS[map_id][0](pts)
    logw.setflags(write=False)
    H.setflags(write=False)
    return logw, H


@dataclass(frozen=True, eq=False)
class BoxQuadrature:
    bounds: tuple
    density_id: str = "uniform"
    map_id: str = "identity"

    kind = "box"

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]):
            raise ValueError("bounds must be a list of (lo, hi) with lo < hi")
        if self.density_id not in BOX_DENSITIES:
            raise ValueError(f"unknown density_id {self.density_id!r}; known: {sorted(BOX_DENSITIES)}")
        if self.map_id not in BOX_MAPS:
            raise ValueError(f"unknown map_id {self.map_id!r}; known: {sorted(BOX_MAPS)}")
        object.__setattr__(self, "bounds", tuple((float(l), float(h)) for l, h in b))
        if self.m > self.d:
            raise ValueError("need m <= d")

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def m(self) -> int:
        return BOX_MAPS[self.map_id][1](self.d)

    def _rule(self):
        if self.d > BOX_MAX_DIM:
            raise QuadratureUnsupported(f"box quadrature supports d <= {BOX_MAX_DIM}, got {self.d}")
        return _box_rule(self.bounds, self.density_id, self.map_id)

    def in_domain(self, lam) -> bool:
        return True

    def log_partition(self, lam) -> float:
        logw, H = self._rule()
        return float(logsumexp(logw + H @ np.asarray(lam, float)))

    def derivatives(self, lam):
        logw, H = self._rule()
        a = logw + H @ np.asarray(lam, float)
        q = np.exp(a - logsumexp(a))
        mean = q @ H
        Hc = H - mean
        cov = (Hc * q[:, None]).T @ Hc
        return mean, 0.5 * (cov + cov.T)

    def max_step(self, lam, direction) -> float:
        return math.inf

    def moment(self, x) -> np.ndarray:
        return BOX_MAPS[self.map_id][0](np.asarray(x, float))

    def log_density(self, x) -> float:
        x = np.asarray(x, float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        if x.shape != (self.d,):
            raise ValueError(f"expected a point of dimension {self.d}")
        if np.any(x < lo) or np.any(x > hi):
            return -math.inf
        return float(BOX_DENSITIES[self.density_id](x[None], lo, hi)[0])


Backend = LPOrthant | SDPCone | BoxQuadrature


@dataclass(frozen=True, eq=False)
class MaxentProblem:
    """Reference measure + moment map (the backend) and target moments ``y``."""

    backend: Backend
    y: np.ndarray

    def __post_init__(self):
        y = _frozen(np.ravel(self.y), 1)
        if y.shape[0] != self.backend.m:
            raise ValueError(f"y has length {y.shape[0]}, the moment map has m={self.backend.m}")
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.backend.m

    def with_y(self, y) -> "MaxentProblem":
        return dataclasses.replace(self, y=y)

    def mean_moment(self) -> np.ndarray:
        """E_P[h], the target at which Theta vanishes."""
        return log_partition_derivatives(self, np.zeros(self.m))[0]


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    DIVERGING = "diverging-unbounded"


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-10
    max_iters: int = 100
    fraction_to_boundary: float = 0.95
    armijo_c: float = 1e-4
    divergence_norm_bound: float = 1e8

    def __post_init__(self):
        for name in ("grad_tol", "max_iters", "fraction_to_boundary", "armijo_c", "divergence_norm_bound"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.fraction_to_boundary >= 1:
            raise ValueError("fraction_to_boundary must be < 1")


@dataclass(frozen=True, eq=False)
class DualResult:
    lambda_star: np.ndarray
    theta: float
    log_Z_at_star: float
    grad_residual: float
    iterations: int
    status: Status

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def to_dict(self) -> dict:
        return {
            "lambda_star": [float(v) for v in self.lambda_star],
            "theta": float(self.theta),
            "log_Z": float(self.log_Z_at_star),
            "grad_residual": float(self.grad_residual),
            "iterations": int(self.iterations),
            "status": self.status.value,
        }


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def log_partition(problem: MaxentProblem, lam) -> float:
    """ln Z(lam) for the problem's reference measure and moment map."""
    lam = np.asarray(lam, float).reshape(problem.m)
    return problem.backend.log_partition(lam)


def log_partition_derivatives(problem: MaxentProblem, lam):
    """Gradient (tilted mean of h) and Hessian (tilted covariance) of ln Z."""
    lam = np.asarray(lam, float).reshape(problem.m)
    return problem.backend.derivatives(lam)


def _newton_direction(hess, rhs):
    try:
        L = np.linalg.cholesky(hess)
        return np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(hess, rhs, rcond=None)[0]


def solve_dual(problem: MaxentProblem, opts: SolverOptions | None = None) -> DualResult:
    """Maximize g(lam) = <lam, y> - ln Z(lam) by damped Newton from lam = 0.

    Steps are clipped to a fraction of the distance to the domain boundary and
    then backtracked until the Armijo condition holds.  A run whose iterate
    norm exceeds ``opts.divergence_norm_bound`` is reported as
    ``diverging-unbounded``; that happens when ``y`` is not in the interior of
    the moment cone.
    """
    opts = opts or SolverOptions()
    backend, y = problem.backend, problem.y
    lam = np.zeros(problem.m)
    logZ = backend.log_partition(lam)
    status = Status.MAX_ITER
    it = 0
    while True:
        grad, hess = backend.derivatives(lam)
        r = y - grad
        res = float(np.max(np.abs(r)))
        if res <= opts.grad_tol:
            status = Status.CONVERGED
            break
        if it >= opts.max_iters:
            break
        step = _newton_direction(hess, r)
        alpha = min(1.0, opts.fraction_to_boundary * backend.max_step(lam, step))
        g0 = float(lam @ y) - logZ
        slope = float(r @ step)
        # Inside the quadratic region the predicted increase is below the
        # rounding floor of g; take the clipped step without backtracking.
        skip_search = slope < 1e-13 * (1.0 + abs(g0))
        while True:
            trial = lam + alpha * step
            try:
                trial_logZ = backend.log_partition(trial)
            except DomainViolation:
                alpha *= 0.5
                continue
            if skip_search or float(trial @ y) - trial_logZ >= g0 + opts.armijo_c * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-30:
                break
        lam, logZ = trial, trial_logZ
        it += 1
        if float(np.linalg.norm(lam)) > opts.divergence_norm_bound:
            status = Status.DIVERGING
            res = float(np.max(np.abs(y - backend.derivatives(lam)[0])))
            break
    return DualResult(
        lambda_star=_frozen(lam),
        theta=float(lam @ y) - logZ,
        log_Z_at_star=logZ,
        grad_residual=res,
        iterations=it,
        status=status,
    )


def theta_and_perspective(
    problem: MaxentProblem, y, epsilon: float, opts: SolverOptions | None = None
) -> float:
    """Perspective function eps * Theta(y / eps), with its exact eps = 0 limit.

    For eps = 0 the LP backend returns the LP optimal value from vertex
    enumeration; the SDP backend returns the dual SDP value bracketed by the
    barrier path (see :func:`cramer_bridge.sdp_bridge.sdp_dual_limit`).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    y = np.asarray(y, float).reshape(problem.m)
    if epsilon > 0:
        res = solve_dual(problem.with_y(y / epsilon), opts)
        if not res.converged:
            raise NotConverged(f"dual solve at y/eps ended with status {res.status.value}")
        return epsilon * res.theta
    b = problem.backend
    if isinstance(b, LPOrthant):
        from .lp_bridge import LPInstance, lp_vertex_oracle

        return lp_vertex_oracle(LPInstance.from_arrays(b.A, b.c, y))[0]
    if isinstance(b, SDPCone):
        from .sdp_bridge import SDPInstance, sdp_dual_limit

        return sdp_dual_limit(SDPInstance.from_arrays(b.A0, b.A_js, y)).value
    raise LimitUnsupported("the eps = 0 limit is only available for the lp and sdp backends")


def optimal_density_at(problem: MaxentProblem, result: DualResult, x) -> float:
    """q*(x) = p(x) exp(<lam*, h(x)>) / Z(lam*); zero outside the domain."""
    if not result.converged:
        raise NotConverged(f"dual result has status {result.status.value}")
    logp = problem.backend.log_density(x)
    if logp == -math.inf:
        return 0.0
    hx = np.ravel(problem.backend.moment(np.asarray(x, float)))
    return math.exp(logp + float(result.lambda_star @ hx) - result.log_Z_at_star)
