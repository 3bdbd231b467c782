"""Machine-readable verification suites.

Each suite returns a list of :class:`Check` records with the measured values
and the tolerance they were held to.  All randomness is derived from the
suite seed through :func:`cramer_bridge.oracles.make_generator`, so a report
is a deterministic function of ``(suite, seed)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import fiber_geometry as fg
from . import lp_bridge as lp
from . import maxent_core as mc
from . import oracles as orc
from . import sdp_bridge as sdp
from .errors import CramerBridgeError, NoInteriorDual

SUITES = ("core", "fiber", "lp", "sdp", "oracles")
EPS_LP = (1.0, 0.3, 0.1, 0.03, 0.01)
EPS_SDP = (1.0, 0.1, 0.01)

# stream offsets keep the suites' random draws disjoint for a common seed
_STREAM = {"core": 1000, "fiber": 2000, "lp": 3000, "sdp": 4000, "oracles": 5000}


@dataclass
class Check:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: float | None = None

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "measured": _clean(self.measured), "tolerance": self.tolerance}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _rng(seed, suite, k=0):
    return orc.make_generator(seed, _STREAM[suite] + k)


def e1_problem(y=1.0):
    return mc.MaxentProblem(mc.LPOrthant([[1.0, 1.0]], [1.0, 2.0]), [y])


def e2_problem(y=3.0):
    return mc.MaxentProblem(mc.SDPCone(np.eye(2), [np.eye(2)]), [y])


def random_lp_instance(rng, d, m):
    """Random instance with y = A x0 for x0 > 0 and c > 0."""
    while True:
        A = rng.normal(size=(m, d))
        if np.linalg.matrix_rank(A) == m:
            break
    x0 = rng.uniform(0.5, 2.0, size=d)
    c = rng.uniform(0.5, 2.0, size=d)
    return lp.LPInstance.from_arrays(A, c, A @ x0)


def random_pd(rng, d, floor=0.3):
    B = rng.normal(size=(d, d))
    return B @ B.T / d + floor * np.eye(d)


def random_sym(rng, d):
    B = rng.normal(size=(d, d))
    return 0.5 * (B + B.T)


def random_sdp_instance(rng, d=3, m=2):
    A_js = [random_sym(rng, d) for _ in range(m)]
    X0 = random_pd(rng, d)
    return sdp.SDPInstance.from_arrays(random_pd(rng, d), A_js, [float(np.sum(Aj * X0)) for Aj in A_js])


def box_problem():
    return mc.MaxentProblem(mc.BoxQuadrature(((0.0, 1.0), (0.0, 2.0)), "exp_neg_sum", "sum_and_sum_squares"), [0.0, 0.0])


def _interior_lambda(backend, rng, scale=0.5):
    """Random lambda inside the domain: a uniform fraction of the distance to the boundary."""
    while True:
        u = rng.normal(size=backend.m)
        u /= np.linalg.norm(u)
        t = backend.max_step(np.zeros(backend.m), u)
        t = min(t, 3.0)
        lam = scale * rng.uniform(0.0, 1.0) * t * u
        if backend.in_domain(lam):
            return lam


def _backends(seed):
    rng = _rng(seed, "core", 1)
    return {
        "lp-E1": e1_problem(),
        "lp-random": random_lp_instance(rng, 4, 2).to_problem(),
        "sdp-E2": e2_problem(),
        "sdp-random": random_sdp_instance(rng).to_problem(),
        "box": box_problem(),
    }


# ---------------------------------------------------------------------------
# core
# ---------------------------------------------------------------------------


def suite_core(seed: int) -> list[Check]:
    out = []
    probs = _backends(seed)
    rng = _rng(seed, "core", 2)

    out.append(Check("E1 ln Z(0.5) = ln(8/3)", abs(mc.log_partition(e1_problem(), [0.5]) - math.log(8 / 3)) <= 1e-12,
                     {"value": mc.log_partition(e1_problem(), [0.5])}, 1e-12))
    g, H = mc.log_partition_derivatives(e2_problem(), [0.0])
    out.append(Check("E2 grad and hessian at 0 equal 3", abs(g[0] - 3) + abs(H[0, 0] - 3) <= 1e-12,
                     {"grad": g, "hess": H}, 1e-12))

    for name, P in probs.items():
        b = P.backend
        min_eig, fd_err = math.inf, 0.0
        for i in range(100):
            lam = _interior_lambda(b, rng)
            _, H = b.derivatives(lam)
            min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(H))))
            if i < 20:
                gr = b.derivatives(lam)[0]
                err = orc.finite_diff_check(b.log_partition, lambda l: b.derivatives(l)[0], lam, 1e-5)
                fd_err = max(fd_err, err / max(1.0, float(np.max(np.abs(gr)))))
        out.append(Check(f"{name}: hessian PSD at 100 interior points", min_eig >= -1e-10, {"min_eigenvalue": min_eig}, -1e-10))
        out.append(Check(f"{name}: gradient vs central differences at 20 points", fd_err <= 1e-6, {"max_rel_error": fd_err}, 1e-6))

        mean = P.mean_moment()
        r0 = mc.solve_dual(P.with_y(mean))
        out.append(Check(f"{name}: theta at the reference mean", r0.converged and abs(r0.theta) <= 1e-10,
                         {"theta": r0.theta, "status": r0.status.value}, 1e-10))

        # targets are tilted means, hence inside the moment cone interior
        ys = [b.derivatives(_interior_lambda(b, rng, 0.6))[0] for _ in range(6)]
        res = [mc.solve_dual(P.with_y(y)) for y in ys]
        conv = all(r.converged for r in res)
        stat = max(r.grad_residual for r in res)
        tmin = min(r.theta for r in res)
        out.append(Check(f"{name}: stationarity of converged solves", conv and stat <= mc.SolverOptions().grad_tol,
                         {"max_grad_residual": stat, "all_converged": conv}, mc.SolverOptions().grad_tol))
        out.append(Check(f"{name}: theta nonnegative", tmin >= -1e-10, {"min_theta": tmin}, -1e-10))
        worst = -math.inf
        for i in range(0, len(ys), 2):
            mid = mc.solve_dual(P.with_y(0.5 * (ys[i] + ys[i + 1])))
            worst = max(worst, mid.theta - 0.5 * (res[i].theta + res[i + 1].theta))
        out.append(Check(f"{name}: midpoint convexity", worst <= 1e-8, {"max_violation": worst}, 1e-8))

    # E1 at y=1: lambda* solves lam^2 - lam - 1 = 0, and (1 - lam)(2 - lam) = 2 + sqrt(5)
    r = mc.solve_dual(e1_problem(1.0))
    lam_exact = (1 - math.sqrt(5)) / 2
    theta_exact = lam_exact - math.log(2 / (2 + math.sqrt(5)))
    err = max(abs(r.lambda_star[0] - lam_exact), abs(r.theta - theta_exact))
    out.append(Check("E1 solve_dual at y=1", r.converged and err <= 1e-10,
                     {"lambda_star": r.lambda_star, "theta": r.theta}, 1e-10))
    q0 = mc.optimal_density_at(e1_problem(1.0), r, [0.0, 0.0])
    out.append(Check("E1 optimal density at the origin", abs(q0 - (2 + math.sqrt(5))) <= 1e-9, {"q_star": q0}, 1e-9))

    # moment recovery by importance weighting over P-samples
    for name in ("lp-E1", "box"):
        P = probs[name]
        b = P.backend
        y = b.derivatives(_interior_lambda(b, rng, 0.4))[0] if name == "box" else np.array([1.0])
        res = mc.solve_dual(P.with_y(y))
        batch = orc.sample_reference(P, 200_000, seed)
        H = b.moment(batch.points).reshape(len(batch), -1)
        w = np.exp(H @ res.lambda_star - res.log_Z_at_star)
        vals = H * w[:, None]
        est = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(len(batch))
        z = float(np.max(np.abs(est - y) / se))
        out.append(Check(f"{name}: importance-weighted moments match y", z <= 3.0, {"estimate": est, "target": y, "max_z": z}, 3.0))
    return out


# ---------------------------------------------------------------------------
# fiber
# ---------------------------------------------------------------------------


def _hist_agreement(A, c, P, seed, edges, n=10**6):
    h = fg.pushforward_histogram(P, n, edges, seed)
    ref = fg.bin_averages(A, c, edges)
    ok = np.abs(h.values - ref) <= 3 * h.std_errors + 1e-15
    return float(np.mean(ok)), h, ref


def suite_fiber(seed: int) -> list[Check]:
    out = []
    A, c = [[1.0, 1.0]], [1.0, 2.0]
    v1 = fg.fiber_density_quadrature(A, c, [1.0])
    exact = 2 * (math.exp(-1) - math.exp(-2))
    out.append(Check("E1 v(1) = 2(e^-1 - e^-2)", abs(v1 - exact) <= 1e-12 * exact, {"value": v1, "exact": exact}, 1e-12))
    out.append(Check("E1 v(-1) = 0", fg.fiber_density_quadrature(A, c, [-1.0]) == 0.0, {"value": fg.fiber_density_quadrature(A, c, [-1.0])}, 0.0))

    lhs_rhs = {}
    for g_id, w, tol in (("constant", None, 1e-6), ("linear", [1.0], 1e-6), ("exponential", [0.5], 1e-5)):
        lhs, rhs, resid = fg.coarea_residual(e1_problem(), g_id, w)
        lhs_rhs[g_id] = (lhs, rhs)
        out.append(Check(f"E1 coarea with g={g_id}", resid <= tol, {"lhs": lhs, "rhs": rhs, "residual": resid}, tol))

    grid = np.linspace(-1.0, 0.9, 22)[1:-1]
    worst = 0.0
    for lam in grid:
        lap = fg.laplace_transform_of_density(A, c, [lam])
        cf = 2.0 / ((1 - lam) * (2 - lam))
        worst = max(worst, abs(lap - cf) / cf)
    out.append(Check("E1 Laplace transform of v equals Z on 20 lambdas in (-1, 0.9)", worst <= 1e-6, {"max_rel_error": worst}, 1e-6))

    edges = np.round(np.arange(0.0, 6.0 + 1e-9, 0.1), 10)
    frac, h, ref = _hist_agreement(A, c, e1_problem(), seed, edges)
    out.append(Check("E1 histogram vs quadrature bin averages on [0, 6)", frac >= 0.95, {"fraction_within_3se": frac, "bins": len(ref)}, 0.95))
    neg = fg.pushforward_histogram(e1_problem(), 10**5, [-1.0, 0.0], seed)
    out.append(Check("E1 histogram on y < 0 is zero", float(neg.values[0]) == 0.0, {"value": neg.values[0]}, 0.0))

    # codimension 2 instance and cone exterior
    rng = _rng(seed, "fiber", 1)
    A2 = np.array([[1.0, 0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 1.0]])
    c2 = rng.uniform(0.5, 2.0, size=4)
    outside = [[-0.5, 1.0], [1.0, -0.2], [-1.0, -1.0], [3.0, 0.5 * 3.0 - 1.6]]
    vals_out = [fg.fiber_density_quadrature(A2, c2, y) for y in outside] + [
        fg.fiber_density_quadrature([[1, 2, 3.0]], [1, 1, 1.0], [-0.1])
    ]
    out.append(Check("v vanishes outside the cone A R^d_+", all(v == 0.0 for v in vals_out), {"values": vals_out}, 0.0))

    diffs = []
    A3 = np.array([[1.0, 2.0, 3.0]])
    c3 = rng.uniform(0.5, 2.0, size=3)
    for perm in ([2, 0, 1], [1, 2, 0]):
        for yy in ([0.7], [2.5]):
            a = fg.fiber_density_quadrature(A3, c3, yy)
            b = fg.fiber_density_quadrature(A3[:, perm], c3[perm], yy)
            diffs.append(abs(a - b) / a)
    for perm in ([3, 1, 0, 2], [2, 3, 1, 0]):
        for yy in ([1.0, 0.8], [2.0, 1.5]):
            a = fg.fiber_density_quadrature(A2, c2, yy)
            b = fg.fiber_density_quadrature(A2[:, perm], c2[perm], yy)
            diffs.append(abs(a - b) / a)
    out.append(Check("frame invariance under column permutations", max(diffs) <= 1e-10, {"max_rel_diff": max(diffs)}, 1e-10))

    fr = fg.null_space_frame(A2, [1.0, 0.8])
    inv = max(float(np.max(np.abs(A2 @ fr.frame))), float(np.max(np.abs(fr.frame.T @ fr.frame - np.eye(2)))),
              float(np.max(np.abs(A2 @ fr.base_point - [1.0, 0.8]))))
    out.append(Check("null-space frame invariants", inv <= 1e-12, {"max_violation": inv}, 1e-12))
    return out


# ---------------------------------------------------------------------------
# lp
# ---------------------------------------------------------------------------


def suite_lp(seed: int) -> list[Check]:
    out = []
    A, c = [[1.0, 1.0]], [1.0, 2.0]
    e1 = lp.LPInstance.from_arrays(A, c, [1.0])

    # three-way density agreement on E1 and a random codimension-2 instance
    rows = []
    ys = [0.5, 1.0, 1.5, 2.0, 3.0]
    P = e1_problem()
    n = 10**6
    w = 0.1
    worst_rel, worst_z = 0.0, 0.0
    for i, yv in enumerate(ys):
        bv = lp.brion_vergne_density_at(A, c, [yv])[0]
        q = fg.fiber_density_quadrature(A, c, [yv])
        hist = fg.pushforward_histogram(P, n, [yv - w / 2, yv + w / 2], seed + i)
        avg = fg.bin_averages(A, c, [yv - w / 2, yv + w / 2])[0]
        z = abs(float(hist.values[0]) - avg) / float(hist.std_errors[0])
        # the point values sit within the bin-average of the histogram's target up to O(w^2)
        zp = max(abs(float(hist.values[0]) - bv), abs(float(hist.values[0]) - q)) / float(hist.std_errors[0])
        rel = abs(bv - q) / q
        worst_rel, worst_z = max(worst_rel, rel), max(worst_z, zp)
        rows.append({"y": yv, "brion_vergne": bv, "quadrature": q, "histogram": float(hist.values[0]),
                     "std_error": float(hist.std_errors[0]), "z_bin_average": z})
    out.append(Check("three-way density agreement on E1: BV vs quadrature", worst_rel <= 1e-8, {"rows": rows, "max_rel": worst_rel}, 1e-8))
    out.append(Check("three-way density agreement on E1: histogram within 3 std errors", worst_z <= 3.0, {"max_z": worst_z}, 3.0))

    rng = _rng(seed, "lp", 1)
    A2 = np.array([[1.0, 0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 1.0]])
    c2 = rng.uniform(0.5, 2.0, size=4)
    worst = 0.0
    for yy in ([1.0, 0.8], [2.0, 1.5], [0.5, 1.2]):
        bv, _ = lp.brion_vergne_density_at(A2, c2, yy)
        q = fg.fiber_density_quadrature(A2, c2, yy)
        worst = max(worst, abs(bv - q) / q)
    out.append(Check("BV vs quadrature on a codimension-2 instance", worst <= 1e-8, {"max_rel": worst, "c": c2}, 1e-8))

    # identity, certificate and barrier-to-LP convergence
    insts = {"E1": e1}
    for k in range(5):
        d = int(rng.integers(2, 6))
        m = int(rng.integers(1, min(3, d - 1) + 1))
        insts[f"random-{k} (d={d}, m={m})"] = random_lp_instance(rng, d, m)
    for name, inst in insts.items():
        rep = lp.theorem_lp_identity_report(inst, EPS_LP)
        worst = max(r.residual for r in rep if r.epsilon > 0)
        out.append(Check(f"{name}: barrier / maxent identity", worst <= 1e-8,
                         {"rows": [r.as_tuple() for r in rep]}, 1e-8))
        tau, _ = lp.lp_vertex_oracle(inst)
        cert, conv = 0.0, []
        for eps in EPS_LP:
            pt = lp.barrier_path(inst, eps)
            cert = max(cert, abs(float(inst.c @ pt.x) - float(pt.lam @ inst.y) - eps * inst.d))
            gap = tau - float(pt.lam @ inst.y)
            conv.append((eps, gap))
        out.append(Check(f"{name}: central-path certificate", cert <= 1e-8, {"max_error": cert}, 1e-8))
        ok = all(-1e-8 <= g <= e * inst.d + 1e-8 for e, g in conv)
        out.append(Check(f"{name}: barrier value within eps*d of the LP optimum", ok, {"eps_gap": conv, "tau": tau}, 1e-8))

    # partial fractions
    cases = {"E1": e1}
    for k in range(3):
        d = int(rng.integers(2, 7))
        cases[f"random-m1-{k} (d={d})"] = random_lp_instance(rng, d, 1)
    for name, inst in cases.items():
        cat = lp.enumerate_feasible_bases(inst)
        a = inst.A[0]
        hi = min((cj / aj for aj, cj in zip(a, inst.c) if aj > 0), default=2.0)
        lo = max((cj / aj for aj, cj in zip(a, inst.c) if aj < 0), default=-2.0)
        lams = lo + (hi - lo) * (np.arange(1, 51) / 51.0)
        worst = max(abs(lp.partial_fraction_Z(cat, inst, [l]) - lp.closed_form_Z(inst, [l])) / lp.closed_form_Z(inst, [l]) for l in lams)
        out.append(Check(f"{name}: partial-fraction Z equals closed form at 50 lambdas", worst <= 1e-10, {"max_rel": worst}, 1e-10))

    # normalization examples
    inst = lp.normalize_instance([[1.0, 1.0]], [-1.0, 2.0], [1.0], lambda0=[-2.0])
    out.append(Check("normalize with lambda0 = -2", np.allclose(inst.c, [1.0, 4.0]) and abs(inst.shift + 2.0) <= 1e-15,
                     {"c": inst.c, "shift": inst.shift}, 0.0))
    try:
        lp.normalize_instance([[1.0, -1.0]], [-1.0, -1.0], [0.0])
        flagged = False
    except NoInteriorDual:
        flagged = True
    out.append(Check("dual-infeasible instance reports NoInteriorDual", flagged, {}, None))

    # vertex oracle vs basis catalog on a seeded 4x2 instance
    r7 = orc.make_generator(7, 0)
    i7 = random_lp_instance(r7, 4, 2)
    cat = lp.enumerate_feasible_bases(i7)
    verts = 0
    for sig in combinations(range(4), 2):
        As = i7.A[:, sig]
        if abs(np.linalg.det(As)) > 1e-12 and np.all(np.linalg.solve(As, i7.y) >= -1e-12):
            verts += 1
    lim = lp.barrier_path(i7, 1e-6)
    tau7, _ = lp.lp_vertex_oracle(i7)
    out.append(Check("4x2 instance (seed 7): basis count and barrier limit", len(cat.bases) == verts and abs(float(lim.lam @ i7.y) - tau7) <= 1e-4,
                     {"bases": len(cat.bases), "vertices": verts, "tau": tau7, "barrier_1e-6": float(lim.lam @ i7.y)}, 1e-4))
    return out


# ---------------------------------------------------------------------------
# sdp
# ---------------------------------------------------------------------------


def suite_sdp(seed: int) -> list[Check]:
    out = []
    rng = _rng(seed, "sdp", 1)
    consts = [sdp.multivariate_gamma_constant(d) for d in (1, 2, 3)]
    target = [0.0, math.log(math.pi / 2), math.log(math.pi**2 / 2)]
    err = max(abs(a - b) for a, b in zip(consts, target))
    out.append(Check("C_1, C_2, C_3 closed forms", err <= 1e-12, {"values": consts}, 1e-12))

    worst = 0.0
    for i in range(10):
        d = 2 if i < 5 else 3
        Z = random_pd(rng, d)
        grad = sdp.psd_log_barrier_gradient(Z)
        fd = np.zeros((d, d))
        for a in range(d):
            for b in range(d):
                E = np.zeros((d, d))
                E[a, b] = 1e-5
                fd[a, b] = (sdp.psd_log_barrier(Z + E) - sdp.psd_log_barrier(Z - E)) / 2e-5
        worst = max(worst, float(np.max(np.abs(fd - grad))))
    out.append(Check("phi gradient vs entrywise central differences", worst <= 1e-6, {"max_abs_error": worst}, 1e-6))

    zs = []
    for i in range(5):
        d = 1 if i < 2 else 2
        Z = random_pd(rng, d)
        est, se = sdp.mc_psd_integral(Z, 200_000, seed + i)
        exact = math.exp(sdp.psd_log_barrier(Z))
        zs.append(abs(est - exact) / se if se > 0 else (0.0 if abs(est - exact) <= 1e-12 * exact else math.inf))
    out.append(Check("mc_psd_integral vs exp(phi(Z)) at 5 random Z", max(zs) <= 3.0, {"z_scores": zs}, 3.0))

    e2 = sdp.SDPInstance.from_arrays(np.eye(2), [np.eye(2)], [3.0])
    insts = {"E2 y=3": e2, "E2 y=2": sdp.SDPInstance.from_arrays(np.eye(2), [np.eye(2)], [2.0]),
             "random d=3 m=2": random_sdp_instance(rng)}
    for name, inst in insts.items():
        rep = sdp.theorem_sdp_identity_report(inst, EPS_SDP)
        worst = max(r.residual for r in rep)
        out.append(Check(f"{name}: barrier / maxent identity", worst <= 1e-8, {"rows": [r.as_tuple() for r in rep]}, 1e-8))
        P = inst.to_problem()
        A0inv = np.linalg.inv(inst.A0)
        mean = [(inst.d + 1) / 2 * float(np.trace(A0inv @ Aj)) for Aj in inst.A_js]
        r = mc.solve_dual(P.with_y(mean))
        out.append(Check(f"{name}: theta vanishes at the reference mean", r.converged and abs(r.theta) <= 1e-8,
                         {"theta": r.theta, "mean": mean}, 1e-8))

    C2 = consts[1]
    rows = []
    ok = True
    for eps in (1.0, 0.1, 0.01, 1e-3, 1e-4):
        _, val = sdp.sdp_barrier_dual_solve(e2, eps)
        # on E2 the bound is attained: tau*_eps(3) = 3 - 3 eps - eps C_2 + 3 eps ln eps
        bound = 3 * eps + eps * C2 + 3 * eps * abs(math.log(eps))
        closed = 3 - 3 * eps - eps * C2 + 3 * eps * math.log(eps)
        rows.append((eps, val, abs(val - 3.0), bound))
        ok &= abs(val - 3.0) <= bound + 1e-8 and abs(val - closed) <= 1e-8
    lim = sdp.sdp_dual_limit(e2)
    rows.append((0.0, lim.value, abs(lim.value - 3.0), lim.gap))
    ok &= abs(lim.value - 3.0) <= 1e-8
    out.append(Check("E2: tau*_eps(3) approaches 3 at the closed-form rate", ok, {"rows": rows}, 1e-8))
    return out


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def suite_oracles(seed: int) -> list[Check]:
    out = []
    c = np.array([1.0, 2.0])
    b1 = orc.sample_orthant_exponential(c, 300_000, seed)
    b2 = orc.sample_orthant_exponential(c, 300_000, seed)
    e = e1_problem()
    m1, m2 = orc.mc_mgf(b1, e, [0.5]), orc.mc_mgf(b2, e, [0.5])
    same = b1.points.tobytes() == b2.points.tobytes() and m1 == m2
    out.append(Check("identical seeds give bit-identical batches and estimates", same, {"estimate": m1}, None))

    mean = b1.points.mean(axis=0)
    se = b1.points.std(axis=0, ddof=1) / math.sqrt(len(b1))
    z = float(np.max(np.abs(mean - 1 / c) / se))
    out.append(Check("exponential sampler means 1/c", z <= 3.0, {"mean": mean, "max_z": z}, 3.0))

    hits = 0
    for s in range(100):
        est, se1 = orc.mc_mgf(orc.sample_orthant_exponential(c, 10_000, seed * 1000 + s), e, [0.5])
        hits += abs(est - 8 / 3) <= 3 * se1
    out.append(Check("coverage of +-3 std errors over 100 seeds (E1, lambda=0.5)", hits >= 97, {"hits": hits}, 97))

    fd = orc.finite_diff_check(lambda l: mc.log_partition(e, l), lambda l: mc.log_partition_derivatives(e, l)[0], [0.0])
    out.append(Check("finite differences of ln Z at 0 (E1)", fd <= 1e-8, {"discrepancy": fd}, 1e-8))
    return out


_RUNNERS = {"core": suite_core, "fiber": suite_fiber, "lp": suite_lp, "sdp": suite_sdp, "oracles": suite_oracles}


def run_suite(suite: str, seed: int) -> dict:
    """Run one suite (or ``all``) and return a JSON-ready report."""
    names = SUITES if suite == "all" else (suite,)
    for n in names:
        if n not in _RUNNERS:
            raise KeyError(f"unknown suite {suite!r}; known: {SUITES + ('all',)}")
    checks = []
    for n in names:
        try:
            got = _RUNNERS[n](seed)
        except CramerBridgeError as exc:
            got = [Check(f"{n}: suite raised", False, {"error": f"{type(exc).__name__}: {exc}"}, None)]
        checks.extend((n, c) for c in got)
    return {
        "suite": suite,
        "seed": int(seed),
        "generator_id": orc.GENERATOR_ID,
        "passed": all(c.passed for _, c in checks),
        "checks": [{"suite": n, **c.to_dict()} for n, c in checks],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
