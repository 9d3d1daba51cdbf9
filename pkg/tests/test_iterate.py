import numpy as np
import pytest

import travwave as tw
from travwave.spectral import Field, Grid1D


class TestClassicalStep:
    def test_fixed_point_at_solution(self, soliton_problem, soliton_exact):
        stepped = tw.classical_step(soliton_problem, soliton_exact)
        assert (stepped - soliton_exact).norm <= 1e-10 * soliton_exact.norm

    def test_exact_scaling_law(self, soliton_problem, soliton_exact):
        p = soliton_problem.degree
        for t in (0.9, 1.01):
            out = tw.classical_step(soliton_problem, t * soliton_exact)
            assert (out - t**p * soliton_exact).norm <= 1e-12 * (t**p * soliton_exact).norm

    def test_iterated_scaling_growth(self, soliton_problem, soliton_exact):
        # u_n = t^{p^n} u*: three classical steps from 1.01*u*
        t, p = 1.01, soliton_problem.degree
        u = t * soliton_exact
        for n in (1, 2, 3):
            u = tw.classical_step(soliton_problem, u)
            expected = t ** (p ** n)
            assert u.norm / soliton_exact.norm == pytest.approx(expected, rel=1e-10)

    def test_divergence_from_scaled_exact(self, soliton_problem, soliton_exact):
        seed = 1.1 * soliton_exact
        result = tw.solve(soliton_problem, None, seed,
                          tw.IterationConfig(max_iterations=40))
        assert result.status == "diverged"
        assert result.trace.iteration_count <= 20


class TestStabilizedStep:
    def test_solution_maps_to_itself_with_unit_factor(self, soliton_problem, soliton_exact):
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        out, s_val = tw.stabilized_step(soliton_problem, factor, soliton_exact)
        assert s_val == pytest.approx(1.0, abs=1e-10)
        assert (out - soliton_exact).norm <= 1e-9 * soliton_exact.norm

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_one_step_scaling_identity(self, soliton_problem, soliton_exact, t):
        # with q = -p the scaled solution returns in a single step
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        out, s_val = tw.stabilized_step(soliton_problem, factor, t * soliton_exact)
        assert s_val == pytest.approx(t**factor.degree, rel=1e-10)
        assert (out - soliton_exact).norm <= 1e-10 * soliton_exact.norm

    def test_generic_q_scaling(self, soliton_problem, soliton_exact):
        factor = tw.petviashvili_factor(1.2, soliton_problem)  # q = -2.4, p + q = 0.6
        t = 1.3
        out, _ = tw.stabilized_step(soliton_problem, factor, t * soliton_exact)
        expected = t ** (soliton_problem.degree + factor.degree)
        assert out.norm / soliton_exact.norm == pytest.approx(expected, rel=1e-9)


class TestSolve:
    def test_ground_state_convergence_profile(self, ground_state_problem, grid_1d):
        seed = tw.gaussian_seed(grid_1d, 1.0, 2.0)
        seed = seed.with_values(ground_state_problem.seed_phase * seed.values.astype(complex))
        factor = tw.petviashvili_factor("optimal", ground_state_problem)
        result = tw.solve(ground_state_problem, factor, seed,
                          tw.IterationConfig(max_iterations=60, residual_tolerance=1e-12))
        tr = result.trace
        assert tr.status == "converged"
        assert tr.iteration_count <= 40
        assert tr.final_residual <= 1.5e-12 * 3
        assert tr.final_factor_discrepancy <= 1e-12
        # monotone tail
        tail = tr.residuals[-10:]
        assert np.all(np.diff(tail) < 0)

    def test_soliton_gauge_seed_converges_tightly(self, soliton_converged):
        tr = soliton_converged.trace
        assert tr.status == "converged"
        assert tr.final_residual <= 1e-12
        assert tr.final_factor_discrepancy <= 1e-12

    def test_zero_seed_rejected(self, soliton_problem, grid_1d):
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        with pytest.raises(ValueError):
            tw.solve(soliton_problem, factor, Field(grid_1d, np.zeros(512, dtype=complex)),
                     tw.IterationConfig())

    def test_petviashvili_cannot_hold_antisymmetric_state(self, double_well_problem,
                                                          antisymmetric_state, grid_1d):
        # perturb the Newton state by 1e-3 and run the stabilized iteration
        bump = Field(grid_1d, np.exp(-(grid_1d.nodes - 0.7) ** 2 / 2.0).astype(complex))
        seed = antisymmetric_state + (1e-3 * antisymmetric_state.norm / bump.norm) * bump
        factor = tw.petviashvili_factor("optimal", double_well_problem)
        result = tw.solve(double_well_problem, factor, seed,
                          tw.IterationConfig(max_iterations=300, residual_tolerance=1e-12))
        escaped = np.max(np.abs(result.final.values - antisymmetric_state.values))
        assert result.status != "converged" or escaped > 1e-2

    def test_stop_rule_residual_and_factor(self, soliton_problem, soliton_exact):
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        seed = soliton_exact + 0.1 * soliton_exact.with_values(1j * soliton_exact.values)
        result = tw.solve(soliton_problem, factor, seed,
                          tw.IterationConfig(max_iterations=100, residual_tolerance=1e-11,
                                             factor_tolerance=1e-12,
                                             stop_rule="residual_and_factor"))
        tr = result.trace
        assert tr.status == "converged"
        assert tr.final_residual <= 1e-11
        assert tr.final_factor_discrepancy <= 1e-12

    def test_store_all_keeps_every_iterate(self, soliton_problem, soliton_exact):
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        seed = soliton_exact + 0.05 * soliton_exact.with_values(1j * soliton_exact.values)
        result = tw.solve(soliton_problem, factor, seed,
                          tw.IterationConfig(max_iterations=50, store_all=True))
        assert len(result.trace.all_iterates) == len(result.trace.residuals)

    def test_max_iterations_status(self, soliton_problem, soliton_exact):
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        seed = soliton_exact + 0.3 * soliton_exact.with_values(1j * soliton_exact.values)
        result = tw.solve(soliton_problem, factor, seed,
                          tw.IterationConfig(max_iterations=2, residual_tolerance=1e-15))
        assert result.status == "max_iterations"
        assert result.trace.iteration_count == 2


class TestRateLaw:
    def test_ground_state_generic_seed_contracts_at_second_eigenvalue(
            self, ground_state_problem, ground_state_converged, grid_1d):
        # off-center seed excites the full spectrum: tail ratio ~ |second eig of F'|
        spec = tw.iteration_matrix_spectrum(ground_state_problem,
                                            ground_state_converged.final, 2)
        lam2 = float(np.abs(spec.eigenvalues[1]))
        seed = Field(grid_1d, 1j * np.exp(-(grid_1d.nodes - 0.4) ** 2 / 4.0))
        factor = tw.petviashvili_factor("optimal", ground_state_problem)
        result = tw.solve(ground_state_problem, factor, seed,
                          tw.IterationConfig(max_iterations=300, residual_tolerance=1e-12))
        r = result.trace.residuals
        ratios = r[-7:-1] / r[-8:-2]
        assert result.status == "converged"
        assert np.median(ratios) == pytest.approx(lam2, abs=0.02)

    def test_soliton_contracts_at_half(self, soliton_problem, soliton_exact, grid_1d):
        seed = (soliton_exact
                + 0.1 * soliton_exact.with_values(1j * soliton_exact.values)
                + Field(grid_1d, 0.05 * np.exp(-grid_1d.nodes**2 / 9.0) * (1 + 0.5j)))
        factor = tw.petviashvili_factor("optimal", soliton_problem)
        result = tw.solve(soliton_problem, factor, seed,
                          tw.IterationConfig(max_iterations=100, residual_tolerance=1e-12))
        r = result.trace.residuals
        ratios = r[-7:-1] / r[-8:-2]
        assert np.median(ratios) == pytest.approx(0.5, abs=0.01)


class TestNewton:
    def test_from_converged_iterate_is_instant(self, soliton_problem, soliton_converged):
        result = tw.newton_solve(soliton_problem, soliton_converged.final,
                                 tw.IterationConfig(max_iterations=5, residual_tolerance=1e-12))
        assert result.status == "converged"
        assert result.trace.iteration_count <= 2

    def test_antisymmetric_double_well_state(self, double_well_problem, antisymmetric_state):
        v = antisymmetric_state.values.real
        mirrored = np.r_[v[0], v[:0:-1]]
        assert np.max(np.abs(v + mirrored)) <= 1e-8 * np.max(np.abs(v))
        # two-bump structure: one dominant extremum per half line
        m = len(v)
        right = v[m // 2:]
        sign_changes = np.count_nonzero(np.diff(np.sign(right[np.abs(right) > 1e-6])))
        assert sign_changes == 0  # single-signed on each side of the origin
        assert np.max(np.abs(v)) == pytest.approx(1.9785, abs=0.05)

    def test_soliton_newton_recovers_orbit_element(self, soliton_problem, soliton_exact):
        seed = soliton_exact + 0.2 * soliton_exact.with_values(1j * soliton_exact.values)
        result = tw.newton_solve(soliton_problem, seed,
                                 tw.IterationConfig(max_iterations=25, residual_tolerance=1e-12))
        assert result.status == "converged"
        gauge_only = np.abs(result.final.values) - np.abs(soliton_exact.values)
        assert np.max(np.abs(gauge_only)) <= 1e-8

    def test_quadratic_tail(self, double_well_problem, grid_1d):
        seed = tw.gaussian_seed(grid_1d, 2.0, 1.6, antisymmetric=True)
        result = tw.newton_solve(double_well_problem, seed,
                                 tw.IterationConfig(max_iterations=60, residual_tolerance=1e-12))
        r = result.trace.residuals
        quad = [r[i + 1] <= 10.0 * r[i] ** 1.8 for i in range(len(r) - 1)
                if 1e-10 < r[i] < 1e-1]
        assert quad and all(quad)

    def test_requires_jacobian(self, grid_1d):
        problem = tw.nls_soliton(tw.SolitonParameters(1.0, 1.0, 1.0), grid_1d)
        stripped = tw.ProblemModel(
            name="nojac", degree=problem.degree, grid=grid_1d, is_complex=True,
            apply_L=problem.apply_L, solve_L=problem.solve_L, apply_N=problem.apply_N,
        )
        with pytest.raises(ValueError):
            tw.newton_solve(stripped, problem.exact_solution(), tw.IterationConfig())


class TestResidual:
    def test_exact_profile_floor(self, soliton_problem, soliton_exact):
        assert tw.residual(soliton_problem, soliton_exact) <= 1e-8

    def test_zero_field_zero_residual(self, soliton_problem, grid_1d):
        assert tw.residual(soliton_problem, Field(grid_1d, np.zeros(512, dtype=complex))) == 0.0

    def test_iteration_config_validation(self):
        with pytest.raises(ValueError):
            tw.IterationConfig(max_iterations=0)
        with pytest.raises(ValueError):
            tw.IterationConfig(residual_tolerance=-1.0)
        with pytest.raises(ValueError):
            tw.IterationConfig(stop_rule="sometimes")
        with pytest.raises(ValueError):
            tw.IterationConfig(divergence_guard=0.5)
