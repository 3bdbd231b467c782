"""Canonical LP ``min {<c,x> : A x = y, x >= 0}`` and its max-entropy twin.

With reference density ``s exp(-<c,x>)`` on the orthant (``s = prod c``) and
``h(x) = A x`` one has ``ln Z(lam) = ln s - sum_j ln (c - A^T lam)_j``, so the
perspective ``eps * Theta(y/eps)`` equals the log-barrier dual value
``tau_eps(y)`` shifted by ``-eps ln s``.  This module holds the barrier solver
(written independently of :mod:`cramer_bridge.maxent_core`), the vertex
enumeration oracle, feasible-basis data and the Brion-Vergne formula.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateVertex,
    DomainViolation,
    Infeasible,
    NearPole,
    NoInteriorDual,
    NotConverged,
    PoleViolation,
    RankDeficient,
    TooLarge,
    Unbounded,
    UnsupportedDimension,
)
from .maxent_core import LPOrthant, MaxentProblem, SolverOptions, solve_dual

MAX_BASES = 10**6
DEGENERATE_TOL = 1e-9
FEAS_TOL = 1e-12
POLE_TOL = 1e-9
UNBOUNDED_NORM = 1e8


@dataclass(frozen=True, eq=False)
class LPInstance:
    A: np.ndarray
    c: np.ndarray
    y: np.ndarray
    s: float
    lambda0: np.ndarray | None = None
    shift: float = 0.0  # <lambda0, y>; original optimal value = normalized + shift

    @classmethod
    def from_arrays(cls, A, c, y) -> "LPInstance":
        A = np.atleast_2d(np.asarray(A, float))
        c = np.asarray(c, float).ravel()
        y = np.asarray(y, float).ravel()
        if y.size != A.shape[0] or c.size != A.shape[1]:
            raise ValueError("shape mismatch between A, c and y")
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise RankDeficient("A must have full row rank")
        if np.any(c <= 0):
            raise ValueError("c must be positive; use normalize_instance")
        return cls(A, c, y, float(np.prod(c)))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def log_s(self) -> float:
        return float(np.sum(np.log(self.c)))

    def to_problem(self) -> MaxentProblem:
        return MaxentProblem(LPOrthant(self.A, self.c), self.y)


def _dual_interior_search(A, c, iters=500):
    """Subgradient descent on f(lam) = max_j (A^T lam - c)_j with step 1/k."""
    lam = np.zeros(A.shape[0])
    best, best_f = lam.copy(), float(np.max(A.T @ lam - c))
    for k in range(1, iters + 1):
        r = A.T @ lam - c
        j = int(np.argmax(r))
        lam = lam - A[:, j] / k
        f = float(np.max(A.T @ lam - c))
        if f < best_f:
            best, best_f = lam.copy(), f
    return best, best_f


def normalize_instance(A, c, y, lambda0=None) -> LPInstance:
    """Make the cost strictly positive by shifting along a dual-interior point.

    If ``c > 0`` the instance is returned as is.  Otherwise ``c`` is replaced
    by ``c - A^T lambda0`` for the given ``lambda0`` or one found by
    subgradient descent; ``shift = <lambda0, y>`` restores the original
    objective value.
    """
    A = np.atleast_2d(np.asarray(A, float))
    c = np.asarray(c, float).ravel()
    y = np.asarray(y, float).ravel()
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise RankDeficient("A must have full row rank")
    if lambda0 is None and np.all(c > 0):
        return LPInstance.from_arrays(A, c, y)
    if lambda0 is None:
        lambda0, f = _dual_interior_search(A, c)
        if not f < 0:
            raise NoInteriorDual(
                f"no lam0 with A^T lam0 < c found (best max_j (A^T lam - c)_j = {f:.3g}); "
                "the dual may be infeasible"
            )
    lambda0 = np.asarray(lambda0, float).ravel()
    ct = c - A.T @ lambda0
    if np.any(ct <= 0):
        raise NoInteriorDual(f"supplied lambda0 is not dual interior: c - A^T lambda0 = {ct}")
    return LPInstance(A, ct, y, float(np.prod(ct)), lambda0, float(lambda0 @ y))


# ---------------------------------------------------------------------------
# Log-barrier dual
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BarrierPoint:
    lam: np.ndarray
    value: float  # tau_eps(y)
    x: np.ndarray  # eps / (c - A^T lam)
    epsilon: float


def _barrier_newton(inst: LPInstance, eps: float, lam: np.ndarray, max_iters=200) -> np.ndarray:
    A, c, y = inst.A, inst.c, inst.y
    ytol = 1e-12 * max(1.0, float(np.max(np.abs(y))))

    def value(l):
        sl = c - A.T @ l
        if np.any(sl <= 0):
            return -math.inf
        return float(l @ y) + eps * float(np.sum(np.log(sl)))

    def noise(l, sl, x):
        # rounding floor of the stationarity residual: slack errors ~ u*(|c| + |A^T||l|)
        dsl = 4 * np.finfo(float).eps * (np.abs(c) + np.abs(A.T) @ np.abs(l))
        return float(np.max(np.abs(A) @ (x * dsl / sl)))

    f = value(lam)
    for _ in range(max_iters):
        sl = c - A.T @ lam
        x = eps / sl
        g = y - A @ x
        if np.max(np.abs(g)) <= max(ytol, 10 * noise(lam, sl, x)):
            return lam
        H = (A * (x / sl)) @ A.T
        step = np.linalg.solve(H, g)
        dec = float(g @ step)
        ds = -A.T @ step
        neg = ds < 0
        t = 1.0
        if np.any(neg):
            t = min(1.0, 0.95 * float(np.min(sl[neg] / -ds[neg])))
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
            raise Unbounded("barrier iterates diverge; y is outside the interior of A R^d_+")
    sl = c - A.T @ lam
    x = eps / sl
    if np.max(np.abs(y - A @ x)) > max(1e-8 * max(1.0, float(np.max(np.abs(y)))), 100 * noise(lam, sl, x)):
        raise NotConverged(f"barrier Newton did not converge at eps={eps}")
    return lam


def barrier_path(inst: LPInstance, epsilon: float) -> BarrierPoint:
    """Central-path point at ``epsilon``, reached by warm-started continuation
    from eps = max(1, epsilon) downward by factors of 10."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    lam = np.zeros(inst.m)
    eps = max(1.0, epsilon)
    while True:
        lam = _barrier_newton(inst, eps, lam)
        if eps <= epsilon:
            break
        eps = max(epsilon, eps / 10.0)
    sl = inst.c - inst.A.T @ lam
    value = float(lam @ inst.y) + epsilon * float(np.sum(np.log(sl)))
    return BarrierPoint(lam, value, epsilon / sl, epsilon)


def barrier_dual_solve(inst: LPInstance, epsilon: float):
    """(lambda_eps, tau_eps(y)) for sup <lam, y> + eps sum_j ln (c - A^T lam)_j."""
    pt = barrier_path(inst, epsilon)
    return pt.lam, pt.value


@dataclass(frozen=True)
class LimitBracket:
    """Bracket [lower, lower + gap] around an optimal value.

    ``lower = <lambda_eps, y>`` is the value of a strictly dual-feasible
    point; ``gap`` is the exact central-path duality gap.  The primal value
    is not recomputed from x(eps) because at tiny eps the slacks carry
    relative rounding errors that swamp the gap itself.
    """

    lower: float
    gap: float
    epsilon: float

    @property
    def upper(self) -> float:
        return self.lower + self.gap

    @property
    def value(self) -> float:
        return self.lower + 0.5 * self.gap


def lp_barrier_limit(inst: LPInstance, gap_tol: float = 1e-9) -> LimitBracket:
    """Bracket tau(y) using a central-path point with duality gap eps*d <= gap_tol."""
    pt = barrier_path(inst, gap_tol / inst.d)
    return LimitBracket(float(pt.lam @ inst.y), pt.epsilon * inst.d, pt.epsilon)


# ---------------------------------------------------------------------------
# Bases and vertices
# ---------------------------------------------------------------------------


def _check_budget(inst: LPInstance):
    if math.comb(inst.d, inst.m) > MAX_BASES:
        raise TooLarge(f"C({inst.d},{inst.m}) exceeds the enumeration budget {MAX_BASES}")


def _bases(inst: LPInstance):
    """Yield (sigma, A_sigma, x_sigma) for every feasible basis, lexicographic in sigma."""
    _check_budget(inst)
    for sigma in itertools.combinations(range(inst.d), inst.m):
        As = inst.A[:, sigma]
        if abs(np.linalg.det(As)) <= 1e-12:
            continue
        xs = np.linalg.solve(As, inst.y)
        if np.all(xs >= -FEAS_TOL):
            yield sigma, As, xs


def lp_vertex_oracle(inst: LPInstance):
    """tau(y) and a minimizer by brute-force enumeration of all bases."""
    best, xbest = math.inf, None
    for sigma, _, xs in _bases(inst):
        x = np.zeros(inst.d)
        x[list(sigma)] = np.maximum(xs, 0.0)
        val = float(inst.c @ x)
        if val < best:
            best, xbest = val, x
    if xbest is None:
        raise Infeasible("no feasible basis: {x >= 0 : A x = y} is empty")
    return best, xbest


@dataclass(frozen=True, eq=False)
class FeasibleBasis:
    sigma: tuple
    A_sigma: np.ndarray
    x_sigma: np.ndarray
    pi_sigma: np.ndarray
    reduced_costs: dict
    det_abs: float


@dataclass(frozen=True, eq=False)
class BasisCatalog:
    bases: list
    degenerate: bool
    y: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.bases)


def enumerate_feasible_bases(inst: LPInstance) -> BasisCatalog:
    out, degenerate = [], False
    for sigma, As, xs in _bases(inst):
        pi = np.linalg.solve(As.T, inst.c[list(sigma)])
        rc = {j: float(inst.c[j] - pi @ inst.A[:, j]) for j in range(inst.d) if j not in sigma}
        if np.any(xs <= DEGENERATE_TOL):
            degenerate = True
        out.append(FeasibleBasis(sigma, As, xs, pi, rc, float(abs(np.linalg.det(As)))))
    return BasisCatalog(out, degenerate, inst.y.copy())


def _basis_weight(b: FeasibleBasis) -> float:
    prod = math.prod(b.reduced_costs.values())
    return 1.0 / (b.det_abs * prod)


def _check_simple(catalog: BasisCatalog):
    if catalog.degenerate:
        raise DegenerateVertex("the fiber polyhedron has a degenerate vertex")
    for b in catalog.bases:
        near = [j for j, r in b.reduced_costs.items() if abs(r) <= POLE_TOL]
        if near:
            raise NearPole(f"basis {b.sigma}: reduced cost of column(s) {near} vanishes")


def brion_vergne_density(catalog: BasisCatalog, inst: LPInstance) -> float:
    """v(y) = s * sum_sigma exp(-<pi_sigma, y>) / (|det A_sigma| prod_{j not in sigma} rc_j).

    Valid when the fiber polyhedron is simple; an empty catalog gives 0.
    """
    _check_simple(catalog)
    y = inst.y if catalog.y is None else catalog.y
    total = sum(math.exp(-float(b.pi_sigma @ y)) * _basis_weight(b) for b in catalog.bases)
    return inst.s * total


def brion_vergne_density_at(A, c, y, perturb: bool = False):
    """Density at y from a fresh catalog; optionally nudges a degenerate y by
    1e-7 along A @ 1 and reports that it did.  Returns (value, perturbed)."""
    inst = LPInstance.from_arrays(A, c, y)
    cat = enumerate_feasible_bases(inst)
    if cat.degenerate and perturb:
        y2 = inst.y + 1e-7 * inst.A @ np.ones(inst.d) / np.sqrt(inst.d)
        inst = LPInstance.from_arrays(A, c, y2)
        return brion_vergne_density(enumerate_feasible_bases(inst), inst), True
    return brion_vergne_density(cat, inst), False


def partial_fraction_Z(catalog: BasisCatalog, inst: LPInstance, lam) -> float:
    """Z(lam) as a sum of simple poles over feasible bases (m = 1 only).

    For m = 1 the cone A R^d_+ has at most two chambers, y > 0 and y < 0.  A
    basis of the y > 0 chamber contributes ``w_sigma / (pi_sigma - lam)`` and
    requires ``lam < pi_sigma``; one of the y < 0 chamber contributes
    ``w_sigma / (lam - pi_sigma)`` and requires ``lam > pi_sigma``.  The
    catalog covers the chamber of ``catalog.y``; the opposite chamber is
    enumerated here when A has entries of both signs.
    """
    if inst.m != 1:
        raise UnsupportedDimension("the partial-fraction form is implemented for m = 1 only")
    lam = float(np.ravel(lam)[0])
    y = float((inst.y if catalog.y is None else catalog.y)[0])
    if y == 0:
        raise ValueError("catalog must be built at y != 0")
    chambers = [(catalog, 1.0 if y > 0 else -1.0)]
    row = inst.A[0]
    if np.any(row * y < 0):
        other = LPInstance(inst.A, inst.c, np.array([-y]), inst.s)
        chambers.append((enumerate_feasible_bases(other), -chambers[0][1]))
    total = 0.0
    for cat, sign in chambers:
        _check_simple(cat)
        for b in cat.bases:
            gap = sign * (float(b.pi_sigma[0]) - lam)
            if gap <= 0:
                raise PoleViolation(f"lam={lam} is on the wrong side of the pole pi={b.pi_sigma[0]}")
            total += _basis_weight(b) / gap
    return inst.s * total


def closed_form_Z(inst: LPInstance, lam) -> float:
    sl = inst.c - inst.A.T @ np.atleast_1d(np.asarray(lam, float))
    if np.any(sl <= 0):
        raise DomainViolation("A^T lam < c fails")
    return inst.s / float(np.prod(sl))


# ---------------------------------------------------------------------------
# Identity report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityRow:
    epsilon: float
    tau_eps: float
    eps_theta: float
    residual: float

    def as_tuple(self):
        return (self.epsilon, self.tau_eps, self.eps_theta, self.residual)


def theorem_lp_identity_report(inst: LPInstance, eps_list, opts: SolverOptions | None = None):
    """Rows (eps, tau_eps, eps*Theta(y/eps), residual) plus a final eps = 0 row.

    For eps > 0 the residual is ``|eps Theta(y/eps) + eps ln s - tau_eps|``,
    where Theta comes from the max-entropy Newton solver and tau_eps from the
    barrier solver.  The eps = 0 row holds the vertex-enumeration optimum
    ``tau(y)`` and, in the eps_theta column, the limit of the barrier path
    (midpoint of a bracket of width <= 1e-9); its residual is their gap.
    """
    opts = opts or SolverOptions(max_iters=500)
    problem = inst.to_problem()
    rows = []
    for eps in eps_list:
        eps = float(eps)
        if not eps > 0:
            raise ValueError("eps_list entries must be > 0")
        res = solve_dual(problem.with_y(inst.y / eps), opts)
        if not res.converged:
            raise NotConverged(f"max-entropy dual at eps={eps} ended with status {res.status.value}")
        eps_theta = eps * res.theta
        _, tau = barrier_dual_solve(inst, eps)
        rows.append(IdentityRow(eps, tau, eps_theta, abs(eps_theta + eps * inst.log_s - tau)))
    tau0, _ = lp_vertex_oracle(inst)
    lim = lp_barrier_limit(inst).value
    rows.append(IdentityRow(0.0, tau0, lim, abs(lim - tau0)))
    return rows
