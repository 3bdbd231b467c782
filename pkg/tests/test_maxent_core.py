import math

import numpy as np
import pytest

from cramer_bridge.errors import DomainViolation, LimitUnsupported, NotConverged, QuadratureUnsupported
from cramer_bridge.maxent_core import (
    BoxQuadrature,
    LPOrthant,
    MaxentProblem,
    SDPCone,
    SolverOptions,
    Status,
    log_partition,
    log_partition_derivatives,
    optimal_density_at,
    solve_dual,
    theta_and_perspective,
)
from cramer_bridge.oracles import finite_diff_check, mc_mgf, sample_orthant_exponential

GOLDEN = (1 + math.sqrt(5)) / 2
# 10 lam^2 - 28 lam + 17 = 0, smaller root: the eps = 0.1 barrier point on E1
LAM_01 = (28 - math.sqrt(28**2 - 4 * 10 * 17)) / 20


class TestLogPartition:
    def test_e1_values(self, e1):
        assert log_partition(e1, [0.0]) == 0.0
        assert log_partition(e1, [0.5]) == pytest.approx(math.log(8 / 3), abs=1e-14)

    def test_e1_outside_domain(self, e1):
        with pytest.raises(DomainViolation):
            log_partition(e1, [1.5])

    def test_e1_mc_oracle(self, e1):
        batch = sample_orthant_exponential([1.0, 2.0], 10**6, 11)
        est, se = mc_mgf(batch, e1, [0.3])
        assert abs(est - math.exp(log_partition(e1, [0.3]))) <= 3 * se

    def test_e2_values(self, e2):
        assert log_partition(e2, [0.0]) == pytest.approx(0.0, abs=1e-14)
        assert log_partition(e2, [-0.5]) == pytest.approx(-3 * math.log(1.5), abs=1e-13)
        with pytest.raises(DomainViolation):
            log_partition(e2, [2.0])

    def test_box_uniform_sum_matches_closed_form(self):
        # E exp(lam (x1 + x2)) on [0,1]^2 = ((e^lam - 1)/lam)^2
        P = MaxentProblem(BoxQuadrature(((0, 1), (0, 1)), "uniform", "sum"), [1.0])
        lam = 0.7
        assert log_partition(P, [lam]) == pytest.approx(2 * math.log(math.expm1(lam) / lam), abs=1e-13)

    def test_box_dimension_limit(self):
        P = MaxentProblem(BoxQuadrature(((0, 1),) * 4, "uniform", "sum"), [2.0])
        with pytest.raises(QuadratureUnsupported):
            log_partition(P, [0.1])


class TestDerivatives:
    def test_e1_at_zero(self, e1):
        g, H = log_partition_derivatives(e1, [0.0])
        assert g[0] == pytest.approx(1.5, abs=1e-15)
        assert H[0, 0] == pytest.approx(1.25, abs=1e-15)

    def test_e2_at_zero(self, e2):
        g, H = log_partition_derivatives(e2, [0.0])
        assert g[0] == pytest.approx(3.0, abs=1e-14)
        assert H[0, 0] == pytest.approx(3.0, abs=1e-14)

    def test_e1_gradient_finite_difference(self, e1):
        err = finite_diff_check(lambda l: log_partition(e1, l), lambda l: log_partition_derivatives(e1, l)[0], [0.0])
        assert err <= 1e-8


class TestSolveDual:
    def test_at_reference_mean(self, e1):
        r = solve_dual(e1.with_y([1.5]))
        assert r.status is Status.CONVERGED
        assert abs(r.lambda_star[0]) <= 1e-12 and abs(r.theta) <= 1e-12

    def test_e1_y1(self, e1):
        r = solve_dual(e1)
        assert r.converged
        assert r.lambda_star[0] == pytest.approx(1 - GOLDEN, abs=1e-10)
        assert r.theta == pytest.approx(1 - GOLDEN - math.log(2 / (2 + math.sqrt(5))), abs=1e-10)
        assert r.theta == pytest.approx(0.132454, abs=1e-6)
        assert r.grad_residual <= SolverOptions().grad_tol

    def test_theta_is_exact_combination(self, e1):
        r = solve_dual(e1.with_y([0.8]))
        assert r.theta == float(r.lambda_star @ np.array([0.8])) - r.log_Z_at_star

    def test_e2_y2(self, e2):
        r = solve_dual(e2.with_y([2.0]))
        assert r.lambda_star[0] == pytest.approx(-0.5, abs=1e-10)
        assert r.theta == pytest.approx(-1 + 3 * math.log(1.5), abs=1e-10)

    def test_outside_moment_cone_diverges(self, e1):
        r = solve_dual(e1.with_y([-1.0]))
        assert r.status is Status.DIVERGING
        assert not r.converged

    def test_iteration_budget(self, e1):
        r = solve_dual(e1.with_y([0.01]), SolverOptions(max_iters=2))
        assert r.status is Status.MAX_ITER

    def test_invalid_options(self):
        with pytest.raises(ValueError):
            SolverOptions(fraction_to_boundary=1.0)
        with pytest.raises(ValueError):
            SolverOptions(grad_tol=0.0)


class TestPerspective:
    def test_eps_one(self, e1):
        assert theta_and_perspective(e1, [1.0], 1.0) == pytest.approx(0.1324543, abs=1e-7)

    def test_eps_tenth(self, e1):
        tau = LAM_01 + 0.1 * (math.log(1 - LAM_01) + math.log(2 - LAM_01))
        assert theta_and_perspective(e1, [1.0], 0.1) == pytest.approx(tau - 0.1 * math.log(2), abs=1e-10)

    def test_eps_zero_lp(self, e1):
        assert theta_and_perspective(e1, [1.0], 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_eps_zero_sdp(self, e2):
        assert theta_and_perspective(e2, [3.0], 0.0) == pytest.approx(3.0, abs=1e-8)

    def test_eps_zero_box(self):
        P = MaxentProblem(BoxQuadrature(((0, 1),), "uniform", "identity"), [0.5])
        with pytest.raises(LimitUnsupported):
            theta_and_perspective(P, [0.5], 0.0)


class TestOptimalDensity:
    def test_reference_density(self, e1):
        r = solve_dual(e1.with_y([1.5]))
        assert optimal_density_at(e1, r, [0.0, 0.0]) == pytest.approx(2.0, abs=1e-12)

    def test_tilted_density(self, e1):
        r = solve_dual(e1)
        assert optimal_density_at(e1, r, [0.0, 0.0]) == pytest.approx(2 + math.sqrt(5), abs=1e-9)

    def test_outside_domain_is_zero(self, e1):
        r = solve_dual(e1)
        assert optimal_density_at(e1, r, [-1.0, 0.5]) == 0.0

    def test_not_converged(self, e1):
        r = solve_dual(e1.with_y([-1.0]))
        with pytest.raises(NotConverged):
            optimal_density_at(e1, r, [0.0, 0.0])

    def test_mc_normalization(self, e1):
        r = solve_dual(e1)
        x = sample_orthant_exponential([1.0, 2.0], 10**6, 5).points
        ratio = np.exp(r.lambda_star[0] * x.sum(axis=1) - r.log_Z_at_star)
        se = ratio.std(ddof=1) / math.sqrt(len(ratio))
        assert abs(ratio.mean() - 1.0) <= 3 * se


class TestBackendValidation:
    def test_lp_needs_positive_c(self):
        with pytest.raises(ValueError):
            LPOrthant([[1.0, 1.0]], [-1.0, 2.0])

    def test_lp_rank(self):
        with pytest.raises(ValueError):
            LPOrthant([[1.0, 1.0], [2.0, 2.0]], [1.0, 1.0])

    def test_sdp_needs_pd_a0(self):
        with pytest.raises(ValueError):
            SDPCone(np.diag([1.0, -1.0]), [np.eye(2)])

    def test_sdp_too_many_constraints(self):
        E = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0, 1.0], [1.0, 0]])]
        with pytest.raises(ValueError):
            SDPCone(np.eye(2), E)
