"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or directly
with ``python tests/test_acceptance.py`` for a plain summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from cramer_bridge import fiber_geometry as fg
from cramer_bridge import lp_bridge as lp
from cramer_bridge import sdp_bridge as sdp
from cramer_bridge.maxent_core import solve_dual
from cramer_bridge.oracles import finite_diff_check, finite_diff_hessian_check, make_generator
from cramer_bridge.verify import _backends, _interior_lambda, random_lp_instance

EPS_LP = [1.0, 0.3, 0.1, 0.03, 0.01]
E1_A, E1_C = [[1.0, 1.0]], [1.0, 2.0]
RESULTS = {}


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def lp_instances():
    rng = make_generator(2024, 1)
    out = {"E1": lp.LPInstance.from_arrays(E1_A, E1_C, [1.0])}
    for k in range(5):
        d = int(rng.integers(2, 6))
        m = int(rng.integers(1, min(3, d - 1) + 1))
        out[f"random-{k}(d={d},m={m})"] = random_lp_instance(rng, d, m)
    return out


def test_criterion_1_lp_identity():
    worst = 0.0
    for inst in lp_instances().values():
        for eps in EPS_LP:
            # two independent routes: max-entropy Newton at y/eps, barrier Newton at eps
            theta = solve_dual(inst.to_problem().with_y(inst.y / eps))
            assert theta.converged
            _, tau = lp.barrier_dual_solve(inst, eps)
            worst = max(worst, abs(eps * theta.theta + eps * inst.log_s - tau))
    assert report(1, worst <= 1e-8, f"max |eps*Theta(y/eps) + eps*ln s - tau_eps| = {worst:.3e} (tol 1e-8), 6 instances x 5 eps")


def test_criterion_2_barrier_to_lp():
    worst_gap_excess, worst_cert = -math.inf, 0.0
    for inst in lp_instances().values():
        tau, _ = lp.lp_vertex_oracle(inst)
        for eps in EPS_LP:
            pt = lp.barrier_path(inst, eps)
            dual = float(pt.lam @ inst.y)
            worst_gap_excess = max(worst_gap_excess, abs(dual - tau) - eps * inst.d)
            worst_cert = max(worst_cert, abs(float(inst.c @ pt.x) - dual - eps * inst.d))
    ok = worst_gap_excess <= 1e-8 and worst_cert <= 1e-8
    assert report(2, ok, f"max(|<lam,y> - tau| - eps*d) = {worst_gap_excess:.3e}, certificate error = {worst_cert:.3e} (tol 1e-8)")


def test_criterion_3_three_way_density():
    exact = 2 * (math.exp(-1) - math.exp(-2))
    bv = lp.brion_vergne_density_at(E1_A, E1_C, [1.0])[0]
    q = fg.fiber_density_quadrature(E1_A, E1_C, [1.0])
    rel = abs(bv - q) / q
    edges = np.linspace(0.0, 6.0, 61)
    P = lp.LPInstance.from_arrays(E1_A, E1_C, [1.0]).to_problem()
    h = fg.pushforward_histogram(P, 10**6, edges, 42)
    ref = fg.bin_averages(E1_A, E1_C, edges)
    frac = float(np.mean(np.abs(h.values - ref) <= 3 * h.std_errors))
    mass = fg.integrate_against_fiber_density(E1_A, E1_C, lambda y: 1.0)
    ok = rel <= 1e-8 and abs(q - exact) <= 1e-8 * exact and frac >= 0.95 and abs(mass - 1) <= 1e-6
    assert report(3, ok, f"v(1): BV {bv:.10f}, quadrature {q:.10f}, 2(e^-1-e^-2) {exact:.10f}, rel {rel:.1e}; "
                         f"histogram bins within 3 SE {frac:.3f}; int v = {mass:.12f}")


def test_criterion_4_laplace_and_cramer():
    lams = np.linspace(-1.0, 0.9, 22)[1:-1]
    worst = max(abs(fg.laplace_transform_of_density(E1_A, E1_C, [l]) - 2 / ((1 - l) * (2 - l))) / (2 / ((1 - l) * (2 - l)))
                for l in lams)
    P = lp.LPInstance.from_arrays(E1_A, E1_C, [1.0]).to_problem()
    diffs = []
    for y in (0.5, 1.0, 1.5, 3.0):
        via_log_z = solve_dual(P.with_y([y])).theta
        via_density = fg.cramer_transform_of_density(E1_A, E1_C, [y])
        diffs.append(abs(via_log_z - via_density))
    ok = worst <= 1e-6 and max(diffs) <= 1e-8
    assert report(4, ok, f"Laplace of v vs Z on 20 lambdas: max rel {worst:.2e} (tol 1e-6); "
                         f"Theta two routes at y in (0.5,1,1.5,3): max diff {max(diffs):.2e} (tol 1e-8)")


def test_criterion_5_sdp():
    t0 = time.time()
    est, se = sdp.mc_psd_integral(np.eye(2), 10**7, 1)
    elapsed = time.time() - t0
    z = abs(est - math.pi / 2) / se
    e2 = sdp.SDPInstance.from_arrays(np.eye(2), [np.eye(2)], [3.0])
    rows = sdp.theorem_sdp_identity_report(e2, [1.0, 0.1, 0.01])
    resid = max(r.residual for r in rows)
    C2 = sdp.multivariate_gamma_constant(2)
    # on E2 the rate bound holds with equality, so allow rounding-level slack
    rate_excess = -math.inf
    for eps in (1.0, 0.1, 0.01, 1e-3):
        _, tau = sdp.sdp_barrier_dual_solve(e2, eps)
        rate_excess = max(rate_excess, abs(tau - 3) - (3 * eps + eps * C2 + 3 * eps * abs(math.log(eps))))
    ok = z <= 3 and elapsed <= 300 and resid <= 1e-8 and rate_excess <= 1e-8
    assert report(5, ok, f"MC PSD integral {est:.6f} +- {se:.1e} vs pi/2 (z={z:.2f}, {elapsed:.1f}s); "
                         f"identity residual {resid:.1e}; rate-bound excess {rate_excess:.1e}")


def test_criterion_6_solver_health():
    rng = make_generator(42, 77)
    worst_g, worst_h, worst_mean, min_theta = 0.0, 0.0, 0.0, math.inf
    for P in _backends(42).values():
        b = P.backend
        for _ in range(20):
            lam = _interior_lambda(b, rng)
            g, H = b.derivatives(lam)
            worst_g = max(worst_g, finite_diff_check(b.log_partition, lambda l: b.derivatives(l)[0], lam, 1e-5)
                          / max(1.0, float(np.max(np.abs(g)))))
            worst_h = max(worst_h, finite_diff_hessian_check(lambda l: b.derivatives(l)[0], lambda l: b.derivatives(l)[1], lam, 1e-5)
                          / max(1.0, float(np.max(np.abs(H)))))
            r = solve_dual(P.with_y(b.derivatives(_interior_lambda(b, rng, 0.6))[0]))
            min_theta = min(min_theta, r.theta)
        worst_mean = max(worst_mean, abs(solve_dual(P.with_y(P.mean_moment())).theta))
    ok = worst_g <= 1e-6 and worst_h <= 1e-5 and min_theta >= -1e-10 and worst_mean <= 1e-8
    assert report(6, ok, f"gradient FD rel {worst_g:.1e} (tol 1e-6), hessian FD rel {worst_h:.1e}; "
                         f"min Theta {min_theta:.2e}; max |Theta(E_P h)| {worst_mean:.1e} (tol 1e-8); lp, sdp, box")


def test_criterion_7_partial_fractions():
    rng = make_generator(2024, 7)
    insts = [lp.LPInstance.from_arrays(E1_A, E1_C, [1.0])]
    insts += [random_lp_instance(rng, int(rng.integers(2, 7)), 1) for _ in range(3)]
    worst = 0.0
    for inst in insts:
        cat = lp.enumerate_feasible_bases(inst)
        a = inst.A[0]
        hi = min((cj / aj for aj, cj in zip(a, inst.c) if aj > 0), default=2.0)
        lo = max((cj / aj for aj, cj in zip(a, inst.c) if aj < 0), default=-3.0)
        for l in lo + (hi - lo) * np.arange(1, 51) / 51:
            z = lp.closed_form_Z(inst, [l])
            worst = max(worst, abs(lp.partial_fraction_Z(cat, inst, [l]) - z) / z)
    assert report(7, worst <= 1e-10, f"partial-fraction vs closed-form Z, 4 instances x 50 lambdas: max rel {worst:.1e} (tol 1e-10)")


def test_criterion_8_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        r = subprocess.run([sys.executable, "-m", "cramer_bridge", "verify", "--suite", "all", "--seed", "42", "--out", str(path)],
                           capture_output=True)
        outs.append((r.returncode, path.read_bytes()))
    ok = outs[0] == outs[1] and outs[0][0] == 0
    assert report(8, ok, f"verify all --seed 42 twice: exit codes {outs[0][0]},{outs[1][0]}; identical bytes: {outs[0][1] == outs[1][1]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
