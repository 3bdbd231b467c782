"""Fiber densities of linear moment maps on the orthant.

For ``h(x) = A x`` and ``p(x) = s exp(-<c, x>)`` on ``x >= 0`` the pushforward
``h#P`` has density

    v(y) = s / sqrt(det(A A^T)) * int_{x >= 0, A x = y} exp(-<c, x>) dH^{d-m}.

The fiber is parametrized as ``x = x0 + F t`` with F an orthonormal basis of
null(A); with orthonormal columns the Hausdorff measure on the fiber is
Lebesgue measure in ``t``, so no metric factor has to be worked out by hand.
The parameter polytope is triangulated and ``exp`` of an affine function is
integrated exactly on each simplex through divided differences of ``exp``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (
    CodimUnsupported,
    DegenerateFiber,
    RankDeficient,
    SamplingUnsupported,
    UnboundedFiber,
)
from .maxent_core import LPOrthant, MaxentProblem, SDPCone
from .oracles import sample_reference

SERIES_SPREAD = 1e-3
DEDUP_TOL = 1e-9
QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-12, limit=200)


@dataclass(frozen=True, eq=False)
class FiberFrame:
    base_point: np.ndarray
    frame: np.ndarray  # d x (d - m), orthonormal columns spanning null(A)


def null_space_frame(A, y) -> FiberFrame:
    A = np.atleast_2d(np.asarray(A, float))
    y = np.asarray(y, float).ravel()
    m, d = A.shape
    U, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > max(m, d) * np.finfo(float).eps * sv[0])) if sv.size else 0
    if rank < m:
        raise RankDeficient(f"A has row rank {rank} < {m}")
    x0 = Vt[:m].T @ ((U.T @ y) / sv)
    return FiberFrame(x0, Vt[m:].T.copy())


# ---------------------------------------------------------------------------
# Exact integration of exp(affine) over simplices
# ---------------------------------------------------------------------------


def _dd_series(z: np.ndarray) -> float:
    # exp[z_0..z_k] = e^mu * sum_n h_n(z - mu) / (n + k)!, h_n complete homogeneous
    k = z.size - 1
    mu = float(np.mean(z))
    w = z - mu
    nterms = 30
    h = np.zeros(nterms)
    h[0] = 1.0
    for wi in w:
        for n in range(1, nterms):
            h[n] += wi * h[n - 1]
    total = sum(h[n] / math.factorial(n + k) for n in range(nterms))
    return math.exp(mu) * total


def exp_divided_difference(z) -> float:
    """Divided difference exp[z_0, ..., z_k] for k <= 2.

    Equivalently the integral of exp(sum u_i z_i) over the standard
    k-simplex {u >= 0, sum u = 1} (Hermite-Genocchi).
    """
    z = np.sort(np.asarray(z, float).ravel())
    k = z.size - 1
    if k == 0:
        return math.exp(z[0])
    if z[-1] - z[0] < SERIES_SPREAD:
        return _dd_series(z)
    if k == 1:
        dz = z[1] - z[0]
        return math.exp(z[1]) * -math.expm1(-dz) / dz
    if k == 2:
        return (exp_divided_difference(z[:2]) - exp_divided_difference(z[1:])) / (z[0] - z[2])
    raise ValueError("divided differences implemented for at most 3 nodes")


def exp_simplex_integral(vertices, alpha: float, beta) -> float:
    """int_S exp(alpha + <beta, t>) dt over the simplex with the given k+1 vertices."""
    V = np.asarray(vertices, float)
    k = V.shape[0] - 1
    edges = (V[1:] - V[0]).reshape(k, k)
    vol_factor = abs(float(np.linalg.det(edges))) if k else 1.0  # k! * vol(S)
    z = alpha + V @ np.asarray(beta, float)
    return vol_factor * exp_divided_difference(z)


# ---------------------------------------------------------------------------
# Fiber polytope
# ---------------------------------------------------------------------------


def _interval(x0, f, tol):
    lo, hi = -math.inf, math.inf
    for a, b in zip(x0, f):
        # constraint a + b t >= 0
        if abs(b) <= tol:
            if a < -tol:
                return None
            continue
        bound = -a / b
        if b > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    if lo > hi + tol:
        return None
    return lo, hi


def _polygon(x0, F, tol):
    """Vertices (angularly sorted) of {t in R^2 : x0 + F t >= 0}; None if empty."""
    d = F.shape[0]
    for j in range(d):
        n = F[j]
        if np.linalg.norm(n) <= tol:
            continue
        perp = np.array([-n[1], n[0]]) / np.linalg.norm(n)
        for u in (perp, -perp):
            if np.all(F @ u >= -1e-12):
                # nontrivial recession direction: unbounded unless empty
                if _polygon_vertices(x0, F, tol).size:
                    raise UnboundedFiber("the fiber polygon is unbounded")
    V = _polygon_vertices(x0, F, tol)
    if V.size == 0:
        return None
    g = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - g[1], V[:, 0] - g[0]))
    return V[order]


def _polygon_vertices(x0, F, tol):
    d = F.shape[0]
    pts = []
    for i in range(d):
        for j in range(i + 1, d):
            M = F[[i, j]]
            if abs(np.linalg.det(M)) <= 1e-14:
                continue
            t = np.linalg.solve(M, -x0[[i, j]])
            if np.all(x0 + F @ t >= -tol):
                if not any(np.max(np.abs(t - p)) <= DEDUP_TOL * max(1.0, np.max(np.abs(t))) for p in pts):
                    pts.append(t)
    return np.array(pts).reshape(-1, 2)


def fiber_density_quadrature(A, c, y) -> float:
    """v(y) by exact integration over the fiber polytope (codimension d-m <= 2).

    Returns 0 for an empty fiber.  Raises DegenerateFiber when the fiber is
    nonempty but lower-dimensional (y on a wall of the cone A R^d_+).
    """
    A = np.atleast_2d(np.asarray(A, float))
    c = np.asarray(c, float).ravel()
    if np.any(c <= 0):
        raise ValueError("c must be strictly positive")
    m, d = A.shape
    k = d - m
    if k > 2:
        raise CodimUnsupported(f"fiber quadrature supports d - m <= 2, got {k}")
    fr = null_space_frame(A, y)
    x0, F = fr.base_point, fr.frame
    scale = float(np.prod(c)) / math.sqrt(float(np.linalg.det(A @ A.T)))
    alpha = -float(c @ x0)
    beta = -F.T @ c
    tol = 1e-12 * max(1.0, float(np.max(np.abs(x0))))

    if k == 0:
        return scale * math.exp(alpha) if np.all(x0 >= -tol) else 0.0

    if k == 1:
        iv = _interval(x0, F[:, 0], tol)
        if iv is None:
            return 0.0
        lo, hi = iv
        b = float(beta[0])
        if math.isinf(lo) or math.isinf(hi):
            # half-line; integrable because c > 0 on the recession direction
            if math.isinf(lo) and math.isinf(hi):
                raise CodimUnsupported("fiber is a full line")
            if math.isinf(hi):
                return scale * -math.exp(alpha + b * lo) / b
            return scale * math.exp(alpha + b * hi) / b
        if hi - lo <= tol:
            raise DegenerateFiber(f"fiber at y={np.ravel(y)} is a single point")
        return scale * exp_simplex_integral([[lo], [hi]], alpha, beta)

    V = _polygon(x0, F, tol)
    if V is None:
        return 0.0
    if V.shape[0] < 3:
        raise DegenerateFiber(f"fiber at y={np.ravel(y)} is lower-dimensional")
    g = V.mean(axis=0)
    total, area = 0.0, 0.0
    for i in range(V.shape[0]):
        tri = np.array([g, V[i], V[(i + 1) % V.shape[0]]])
        area += 0.5 * abs(np.linalg.det(tri[1:] - tri[0]))
        total += exp_simplex_integral(tri, alpha, beta)
    if area <= 1e-14 * max(1.0, float(np.max(np.abs(V))) ** 2):
        raise DegenerateFiber(f"fiber at y={np.ravel(y)} has zero area")
    return scale * total


# ---------------------------------------------------------------------------
# Density estimates
# ---------------------------------------------------------------------------

METHODS = ("quadrature", "brion-vergne", "mc-histogram")


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    grid: np.ndarray  # (n, m)
    values: np.ndarray
    method: str
    std_errors: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.std_errors is not None) != (self.method == "mc-histogram"):
            raise ValueError("std_errors must be present exactly for mc-histogram estimates")
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("density values must be nonnegative")

    def to_csv(self) -> str:
        m = self.grid.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"y{i + 1}" for i in range(m)] + ["value", "std_error", "method"])
        for i, (pt, val) in enumerate(zip(self.grid, self.values)):
            se = "" if self.std_errors is None else repr(float(self.std_errors[i]))
            w.writerow([repr(float(v)) for v in pt] + [repr(float(val)), se, self.method])
        return buf.getvalue()


def fiber_density_estimate(A, c, grid, method: str = "quadrature") -> DensityEstimate:
    """Evaluate v on a list of points by quadrature or by the Brion-Vergne sum."""
    from .lp_bridge import brion_vergne_density_at

    A = np.atleast_2d(np.asarray(A, float))
    grid = np.asarray(grid, float).reshape(-1, A.shape[0])
    if method == "quadrature":
        vals = [fiber_density_quadrature(A, c, y) for y in grid]
    elif method == "brion-vergne":
        vals = [brion_vergne_density_at(A, c, y)[0] for y in grid]
    else:
        raise ValueError("use pushforward_histogram for mc-histogram estimates")
    return DensityEstimate(grid, np.array(vals), method)


def _edges_list(bins, m):
    if m == 1 and np.ndim(bins) == 1 and not isinstance(bins[0], (list, tuple, np.ndarray)):
        return [np.asarray(bins, float)]
    edges = [np.asarray(b, float) for b in bins]
    if len(edges) != m:
        raise ValueError(f"need {m} edge arrays")
    return edges


def _centers(edges):
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1).reshape(-1, len(edges))


def pushforward_histogram(problem: MaxentProblem, n_samples: int, bins, seed: int) -> DensityEstimate:
    """Histogram estimate of the density of h#P from n seeded draws of P.

    ``bins`` is an array of edges (m = 1) or a list of m edge arrays.  Values
    are counts / (n * bin volume); std errors are binomial per bin.
    """
    if isinstance(problem.backend, SDPCone):
        raise SamplingUnsupported("use sdp_bridge.mc_psd_integral for the PSD cone")
    if n_samples < 10**4:
        raise ValueError("n_samples must be at least 1e4")
    m = problem.m
    edges = _edges_list(bins, m)
    batch = sample_reference(problem, n_samples, seed)
    H = problem.backend.moment(batch.points).reshape(n_samples, m)
    counts, _ = np.histogramdd(H, bins=edges)
    counts = counts.ravel()
    widths = np.stack(np.meshgrid(*[np.diff(e) for e in edges], indexing="ij"), axis=-1).reshape(-1, m)
    vol = np.prod(widths, axis=1)
    p = counts / n_samples
    return DensityEstimate(
        _centers(edges), p / vol, "mc-histogram", np.sqrt(p * (1 - p) / n_samples) / vol
    )


def bin_averages(A, c, edges) -> np.ndarray:
    """Exact-quadrature bin averages of v on a 1-D grid of edges (m = 1)."""
    edges = np.asarray(edges, float)
    v = _safe_density(A, c)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: v(np.array([t])), a, b, points=[0.0] if a < 0 < b else None, **QUAD_OPTS)
        out.append(val / (b - a))
    return np.array(out)


# ---------------------------------------------------------------------------
# Integrals against v (coarea right-hand sides)
# ---------------------------------------------------------------------------


def _safe_density(A, c):
    def v(y):
        try:
            return fiber_density_quadrature(A, c, y)
        except DegenerateFiber:
            return 0.0  # measure-zero walls of the cone

    return v


def integrate_against_fiber_density(A, c, g) -> float:
    """int g(y) v(y) dy over R^m for m in {1, 2}, by adaptive quadrature.

    m = 1 integrates each half-line separately; m = 2 uses polar coordinates
    with the angular range split at the directions of the columns of A, where
    v is not smooth.
    """
    A = np.atleast_2d(np.asarray(A, float))
    m = A.shape[0]
    v = _safe_density(A, c)

    def gv(y):
        vy = v(y)
        return 0.0 if vy == 0.0 else g(y) * vy  # g may overflow where v has underflowed

    if m == 1:
        total = 0.0
        row = A[0]
        f = lambda t: gv(np.array([t]))  # noqa: E731
        if np.any(row > 0):
            total += integrate.quad(f, 0, np.inf, **QUAD_OPTS)[0]
        if np.any(row < 0):
            total += integrate.quad(f, -np.inf, 0, **QUAD_OPTS)[0]
        return total
    if m == 2:
        angles = np.sort(np.mod(np.arctan2(A[1], A[0]), 2 * np.pi))
        cuts = np.unique(np.concatenate([[0.0], angles, [2 * np.pi]]))
        opts = dict(epsabs=1e-12, epsrel=1e-10, limit=100)

        def radial(theta):
            u = np.array([math.cos(theta), math.sin(theta)])
            return integrate.quad(lambda r: gv(r * u) * r, 0, np.inf, **opts)[0]

        return sum(integrate.quad(radial, a, b, **opts)[0] for a, b in zip(cuts[:-1], cuts[1:]) if b - a > 1e-15)
    raise CodimUnsupported("integration against v is implemented for m <= 2")


def laplace_transform_of_density(A, c, lam) -> float:
    """int exp(<lam, y>) v(y) dy, i.e. L_v(-lam), from the quadrature density."""
    lam = np.asarray(lam, float).ravel()
    return integrate_against_fiber_density(A, c, lambda y: math.exp(float(lam @ y)))


def _mgf_domain_1d(A, c):
    a = np.asarray(A, float).ravel()
    c = np.asarray(c, float).ravel()
    hi = min((cj / aj for aj, cj in zip(a, c) if aj > 0), default=math.inf)
    lo = max((cj / aj for aj, cj in zip(a, c) if aj < 0), default=-math.inf)
    return lo, hi


def cramer_transform_of_density(A, c, y, tol: float = 1e-11, max_iters: int = 100) -> float:
    """sup_lam lam*y - ln int exp(lam t) v(t) dt for m = 1, by Newton on lam.

    The moments int t^k exp(lam t) v(t) dt (k = 0, 1, 2) are computed by
    quadrature of v, so this route never touches the closed-form partition
    function.
    """
    A = np.atleast_2d(np.asarray(A, float))
    if A.shape[0] != 1:
        raise CodimUnsupported("cramer_transform_of_density is implemented for m = 1")
    y = float(np.ravel(y)[0])
    lo, hi = _mgf_domain_1d(A, c)

    def moments(lam):
        return [
            integrate_against_fiber_density(A, c, lambda t, k=k: float(t[0]) ** k * math.exp(lam * float(t[0])))
            for k in range(3)
        ]

    lam = 0.0
    for _ in range(max_iters):
        M0, M1, M2 = moments(lam)
        mean = M1 / M0
        var = M2 / M0 - mean**2
        r = y - mean
        if abs(r) <= tol * max(1.0, abs(y)):
            return lam * y - math.log(M0)
        step = r / var
        t = 1.0
        if step > 0 and math.isfinite(hi):
            t = min(t, 0.95 * (hi - lam) / step)
        if step < 0 and math.isfinite(lo):
            t = min(t, 0.95 * (lo - lam) / step)
        lam += t * step
    raise RuntimeError("Cramer transform Newton did not converge")


# ---------------------------------------------------------------------------
# Coarea identity
# ---------------------------------------------------------------------------

G_CATALOG = ("constant", "linear", "exponential")


def coarea_residual(problem: MaxentProblem, g_id: str, w=None, tol: float = 1e-6):
    """Both sides of int g(h(x)) p(x) dx = int g(y) v(y) dy and their gap.

    The left side is analytic for the catalogued test functions: 1,
    <w, A E[x]>, and Z(w) = s / prod(c - A^T w).  The right side is adaptive
    quadrature against :func:`fiber_density_quadrature`.  ``tol`` is reported
    back through the third element only when exceeded (it does not change
    the quadrature).
    """
    b = problem.backend
    if not isinstance(b, LPOrthant):
        raise CodimUnsupported("coarea_residual needs the lp backend")
    if b.d - b.m > 2 or b.m > 2:
        raise CodimUnsupported("coarea_residual needs d - m <= 2 and m <= 2")
    if g_id not in G_CATALOG:
        raise ValueError(f"unknown g_id {g_id!r}; known: {G_CATALOG}")
    w = np.zeros(b.m) if w is None else np.asarray(w, float).ravel()
    if g_id == "constant":
        lhs = 1.0
        g = lambda y: 1.0  # noqa: E731
    elif g_id == "linear":
        lhs = float(w @ (b.A @ (1.0 / b.c)))
        g = lambda y: float(w @ y)  # noqa: E731
    else:
        lhs = math.exp(b.log_partition(w))
        g = lambda y: math.exp(float(w @ y))  # noqa: E731
    rhs = integrate_against_fiber_density(b.A, b.c, g)
    return lhs, rhs, abs(lhs - rhs)
