import numpy as np
import pytest

import travwave as tw
from travwave.problems import SingularOperatorError
from travwave.spectral import Field, Grid1D, Grid2D


def lump_problem(l=8 * np.pi, m=64, gamma_cap=0.5, cs=1.0):
    grid = Grid2D(Grid1D(l, m), Grid1D(l, m))
    return tw.benjamin_lump(gamma_cap, cs, grid)


def random_field(problem, seed=0):
    rng = np.random.default_rng(seed)
    shape = problem.grid.shape
    vals = rng.normal(size=shape)
    if problem.is_complex:
        vals = vals + 1j * rng.normal(size=shape)
    return Field(problem.grid, vals)


def all_problems(grid):
    return [
        tw.nls_ground_state(tw.sech2_potential(grid), 1.3, grid),
        tw.nls_soliton(tw.SolitonParameters(1.0, 1.0, 1.0), grid),
        lump_problem(),
    ]


class TestModelContracts:
    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_solve_L_inverts_apply_L(self, grid_1d, idx):
        problem = all_problems(grid_1d)[idx]
        b = problem.project_pinned(random_field(problem, seed=idx))
        back = problem.apply_L(problem.solve_L(b))
        assert (back - b).norm <= 1e-10 * b.norm

    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_nonlinearity_homogeneity(self, grid_1d, idx):
        problem = all_problems(grid_1d)[idx]
        p = problem.degree
        u = random_field(problem, seed=10 + idx)
        for t in (0.17, 0.5, 2.0, 9.3):
            lhs = problem.apply_N(t * u)
            rhs = t**p * problem.apply_N(u)
            assert (lhs - rhs).norm <= 1e-12 * rhs.norm

    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_jacobian_euler_identity(self, grid_1d, idx):
        # N'(u) u = p N(u) for homogeneous N
        problem = all_problems(grid_1d)[idx]
        u = random_field(problem, seed=20 + idx)
        lhs = problem.jacN_action(u, u)
        rhs = problem.degree * problem.apply_N(u)
        assert (lhs - rhs).norm <= 1e-10 * rhs.norm

    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_jacobian_fd_consistency(self, grid_1d, idx):
        problem = all_problems(grid_1d)[idx]
        u = random_field(problem, seed=30 + idx)
        v = random_field(problem, seed=40 + idx)
        exact = problem.jacN_action(u, v)
        errs = []
        for eps in (1e-3, 1e-4):
            fd = (problem.apply_N(u + eps * v) - problem.apply_N(u + (-eps) * v)) * (0.5 / eps)
            errs.append((fd - exact).norm)
        if errs[1] <= 1e-11 * exact.norm:
            return  # quadratic N: the central difference is exact to roundoff
        order = np.log(errs[0] / errs[1]) / np.log(10.0)
        assert order >= 1.9

    def test_eigenrelation_at_converged_states(self, ground_state_converged, ground_state_problem,
                                               soliton_problem, soliton_exact):
        for problem, state in ((ground_state_problem, ground_state_converged.final),
                               (soliton_problem, soliton_exact)):
            Su = problem.solve_L(problem.jacN_action(state, state))
            assert (Su - problem.degree * state).norm <= 1e-6 * state.norm


class TestGroundState:
    def test_zero_potential_zero_field_trivial(self):
        g = Grid1D(20.0, 64)
        problem = tw.nls_ground_state(np.zeros(64), 1.0, g)
        zero = Field(g, np.zeros(64, dtype=complex))
        assert tw.residual(problem, zero) == 0.0

    def test_singular_mu_rejected(self):
        g = Grid1D(20.0, 64)
        V = tw.sech2_potential(g)
        L0 = tw.diff_matrix(g, 2) + np.diag(V)
        mu_star = np.max(np.linalg.eigvalsh(0.5 * (L0 + L0.T)))
        with pytest.raises(SingularOperatorError):
            tw.nls_ground_state(V, mu_star, g)

    def test_callable_potential_accepted(self, grid_1d):
        problem = tw.nls_ground_state(lambda x: 1 / np.cosh(x) ** 2, 1.3, grid_1d)
        u = random_field(problem, seed=3)
        ref = tw.nls_ground_state(tw.sech2_potential(grid_1d), 1.3, grid_1d)
        assert (problem.apply_L(u) - ref.apply_L(u)).norm <= 1e-14 * u.norm

    def test_localized_branch_lives_on_imaginary_axis(self, ground_state_converged):
        u = ground_state_converged.final
        assert np.max(np.abs(u.values.real)) == 0.0
        assert np.max(np.abs(u.values.imag)) > 0.1

    def test_converged_spectrum_leading_values(self, ground_state_problem, ground_state_converged):
        spec = tw.iteration_matrix_spectrum(ground_state_problem, ground_state_converged.final, 3)
        assert spec.eigenvalues[0].real == pytest.approx(2.9999, abs=1e-3)
        assert spec.eigenvalues[1].real == pytest.approx(0.70640, abs=5e-3)
        assert spec.eigenvalues[2].real == pytest.approx(0.32731, abs=5e-3)

    def test_antisymmetric_state_spectrum(self, double_well_problem, antisymmetric_state):
        spec = tw.iteration_matrix_spectrum(double_well_problem, antisymmetric_state, 6)
        vals = spec.eigenvalues.real
        assert vals[0] == pytest.approx(8.0032, abs=0.05)
        assert vals[1] == pytest.approx(-5.6760, abs=0.05)
        assert vals[2] == pytest.approx(3.0, abs=1e-3)


class TestSoliton:
    def test_parameter_error_when_a_nonpositive(self):
        with pytest.raises(ValueError):
            tw.SolitonParameters(sigma=1.0, lambda1=1.0, lambda2=2.0)  # a = 0
        with pytest.raises(ValueError):
            tw.SolitonParameters(sigma=1.0, lambda1=0.5, lambda2=2.0)  # a < 0

    def test_symbol_has_no_real_roots(self, grid_1d, soliton_problem):
        k = np.linspace(-100, 100, 10001)
        symbol = -(k**2) - 1.0 + k
        assert np.max(symbol) < 0  # discriminant -4a < 0

    def test_peak_modulus_value(self, soliton_exact):
        # |U(0)| = sqrt(a*(sigma+1)) = sqrt(1.5) at sigma=1, lambda1=lambda2=1
        assert np.max(np.abs(soliton_exact.values)) == pytest.approx(np.sqrt(1.5), abs=1e-12)

    def test_modulus_even_about_center(self, grid_1d):
        # center -x0 = 3.125 sits exactly on a node (16 h), so node mirroring is exact
        params = tw.SolitonParameters(1.0, 1.0, 1.0, x0=-3.125)
        prof = tw.exact_soliton_profile(params, grid_1d)
        mod = np.abs(prof.values)
        j = int(np.argmax(mod))
        assert grid_1d.nodes[j] == pytest.approx(3.125, abs=1e-12)
        i = np.arange(1, 41)
        assert np.max(np.abs(mod[j + i] - mod[j - i])) <= 1e-10

    def test_sampled_profile_satisfies_discrete_system(self, soliton_problem, soliton_exact):
        assert tw.residual(soliton_problem, soliton_exact) <= 1e-8

    def test_sampled_profile_sigma2_on_resolving_grid(self):
        g = Grid1D(50.0, 1024)
        problem = tw.nls_soliton(tw.SolitonParameters(2.0, 1.0, 1.0), g)
        assert tw.residual(problem, problem.exact_solution()) <= 1e-8

    def test_group_parameters_compose(self, grid_1d):
        base = tw.SolitonParameters(1.0, 1.0, 1.0)
        shifted = tw.SolitonParameters(1.0, 1.0, 1.0, x0=1.5, theta0=0.7)
        u0 = tw.exact_soliton_profile(base, grid_1d).values
        u1 = tw.exact_soliton_profile(shifted, grid_1d).values
        # e^{i theta0} u(x + x0) sampled directly
        xs = grid_1d.nodes + 1.5
        rho = np.sqrt(1.5) / np.cosh(np.sqrt(0.75) * xs)
        ref = rho * np.exp(1j * (0.5 * xs + 0.7))
        assert np.max(np.abs(u1 - ref)) < 1e-12
        assert np.max(np.abs(u0 - np.abs(u0) * np.exp(1j * 0.5 * grid_1d.nodes))) < 1e-12


class TestBenjaminLump:
    def test_symbol_value_via_mode(self):
        # at (kx, kz) = (1, 0), Gamma = 0.5, c_s = 1: 1*(1 + 2*0.5*1 + 1) = 3
        problem = lump_problem(l=4 * np.pi, m=16, gamma_cap=0.5, cs=1.0)
        X, _ = problem.grid.mesh
        mode = Field(problem.grid, np.cos(X))
        out = problem.apply_L(mode)
        ratio = out.values[4, 2] / mode.values[4, 2]
        assert ratio == pytest.approx(3.0, abs=1e-12)

    def test_apply_N_vanishes_on_zero_kx_modes(self):
        problem = lump_problem()
        u = random_field(problem, seed=9)
        Nu = problem.apply_N(u)
        nhat = np.fft.fft2(Nu.values)
        assert np.max(np.abs(nhat[0, :])) <= 1e-10 * np.max(np.abs(nhat))

    def test_step_output_has_zero_x_mean_lines(self):
        problem = lump_problem()
        u = random_field(problem, seed=2)
        stepped = tw.classical_step(problem, u)
        assert np.max(np.abs(stepped.values.sum(axis=0))) <= 1e-10 * np.max(np.abs(stepped.values))

    def test_gamma_zero_is_admissible_start(self):
        problem = lump_problem(gamma_cap=0.0)
        assert problem.params["Gamma"] == 0.0

    def test_invalid_parameters_rejected(self):
        grid = Grid2D(Grid1D(8.0, 16), Grid1D(8.0, 16))
        with pytest.raises(ValueError):
            tw.benjamin_lump(0.5, 0.0, grid)
        with pytest.raises(ValueError):
            tw.benjamin_lump(-0.1, 1.0, grid)


class TestGaussianSeed:
    def test_center_value(self):
        g = Grid1D(1.0, 2)  # nodes at -1, 0
        seed = tw.gaussian_seed(g, 1.0, 1.0)
        assert seed.values[1] == pytest.approx(1.0)

    def test_antisymmetric_seed_is_odd(self):
        g = Grid1D(10.0, 64)
        seed = tw.gaussian_seed(g, 2.0, 1.5, antisymmetric=True)
        v = seed.values
        mirrored = np.r_[v[0], v[:0:-1]]
        assert np.max(np.abs(v + mirrored)) < 1e-14

    def test_2d_seed_pinned_mode_zero_after_projection(self):
        problem = lump_problem()
        seed = tw.gaussian_seed(problem.grid, 2.0, 2.0)
        projected = problem.project_pinned(seed)
        assert abs(np.fft.fft2(projected.values)[0, 0]) <= 1e-12

    def test_invalid_arguments(self):
        g = Grid1D(1.0, 4)
        with pytest.raises(ValueError):
            tw.gaussian_seed(g, 0.0, 1.0)
        with pytest.raises(ValueError):
            tw.gaussian_seed(g, 1.0, -1.0)
