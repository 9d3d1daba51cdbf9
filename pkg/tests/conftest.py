"""Shared fixtures: converged states are expensive, so they are session-scoped."""

import numpy as np
import pytest

import travwave as tw
from travwave.spectral import Field, Grid1D, Grid2D


@pytest.fixture(scope="session")
def grid_1d():
    return Grid1D(50.0, 512)


@pytest.fixture(scope="session")
def soliton_params():
    return tw.SolitonParameters(sigma=1.0, lambda1=1.0, lambda2=1.0)


@pytest.fixture(scope="session")
def soliton_problem(grid_1d, soliton_params):
    return tw.nls_soliton(soliton_params, grid_1d)


@pytest.fixture(scope="session")
def soliton_exact(soliton_problem):
    return soliton_problem.exact_solution()


@pytest.fixture(scope="session")
def soliton_converged(soliton_problem, soliton_exact):
    """Orbital run A: seed = exact + 0.2i*exact, optimal gamma."""
    seed = soliton_exact + 0.2 * soliton_exact.with_values(1j * soliton_exact.values)
    factor = tw.petviashvili_factor("optimal", soliton_problem)
    result = tw.solve(soliton_problem, factor, seed,
                      tw.IterationConfig(max_iterations=100, residual_tolerance=1e-12))
    assert result.status == "converged"
    return result


@pytest.fixture(scope="session")
def ground_state_problem(grid_1d):
    return tw.nls_ground_state(tw.sech2_potential(grid_1d), 1.3, grid_1d)


@pytest.fixture(scope="session")
def ground_state_converged(ground_state_problem, grid_1d):
    seed = tw.gaussian_seed(grid_1d, 1.0, 2.0)
    seed = seed.with_values(ground_state_problem.seed_phase * seed.values.astype(complex))
    factor = tw.petviashvili_factor("optimal", ground_state_problem)
    result = tw.solve(ground_state_problem, factor, seed,
                      tw.IterationConfig(max_iterations=100, residual_tolerance=1e-12))
    assert result.status == "converged"
    return result


@pytest.fixture(scope="session")
def double_well_problem(grid_1d):
    return tw.nls_ground_state(tw.double_well_potential(grid_1d), 1.0, grid_1d)


@pytest.fixture(scope="session")
def antisymmetric_state(double_well_problem, grid_1d):
    """Two-bump antisymmetric double-well state, found by damped Newton.

    It lives on the real axis of the cubic model (the indefinite-L branch).
    """
    seed = tw.gaussian_seed(grid_1d, 2.0, 1.6, antisymmetric=True)
    result = tw.newton_solve(double_well_problem, seed,
                             tw.IterationConfig(max_iterations=60, residual_tolerance=1e-12))
    assert result.status == "converged"
    return result.final


@pytest.fixture(scope="session")
def lump_grid_fine():
    l = 10 * np.pi
    return Grid2D(Grid1D(l, 256), Grid1D(l, 256))


@pytest.fixture(scope="session")
def lump_converged_fine(lump_grid_fine):
    """KP-I lump (Gamma = 0) on a grid resolving the spectral tail, for
    generator eigenrelation checks."""
    problem = tw.benjamin_lump(0.0, 1.0, lump_grid_fine)
    seed = tw.gaussian_seed(lump_grid_fine, 2.0, 2.0)
    factor = tw.petviashvili_factor("optimal", problem)
    result = tw.solve(problem, factor, seed,
                      tw.IterationConfig(max_iterations=600, residual_tolerance=1e-10))
    assert result.status == "converged"
    return problem, result.final


def make_synthetic_diagonal(scale=(1.0, 2.0, 3.0, 4.0), couplings=(0.0, -2.0, 1.5, 1.2)):
    """Diagonal L with a bilinear degree-2 nonlinearity on a 4-point grid.

    N(u) = (u1^2, c2 u1 u2, c3 u1 u3, c4 u1 u4); the state u* = (l1, 0, 0, 0)
    solves L u = N(u) exactly and S = diag(2, c2 l1/l2, c3 l1/l3, c4 l1/l4).
    """
    lvec = np.asarray(scale, dtype=float)
    cvec = np.asarray(couplings, dtype=float)
    grid = Grid1D(1.0, 4)

    def apply_L(u):
        return u.with_values(lvec * u.values)

    def solve_L(b):
        return b.with_values(b.values / lvec)

    def apply_N(u):
        v = u.values
        out = np.array([v[0] ** 2, cvec[1] * v[0] * v[1],
                        cvec[2] * v[0] * v[2], cvec[3] * v[0] * v[3]])
        return u.with_values(out)

    def jacN(u, w):
        v, x = u.values, w.values
        out = np.array([
            2.0 * v[0] * x[0],
            cvec[1] * (v[1] * x[0] + v[0] * x[1]),
            cvec[2] * (v[2] * x[0] + v[0] * x[2]),
            cvec[3] * (v[3] * x[0] + v[0] * x[3]),
        ])
        return w.with_values(out)

    problem = tw.ProblemModel(
        name="synthetic_diagonal", degree=2.0, grid=grid, is_complex=False,
        apply_L=apply_L, solve_L=solve_L, apply_N=apply_N, jacN_action=jacN,
    )
    u_star = Field(grid, np.array([lvec[0], 0.0, 0.0, 0.0]))
    s_eigs = np.array([2.0, cvec[1] * lvec[0] / lvec[1],
                       cvec[2] * lvec[0] / lvec[2], cvec[3] * lvec[0] / lvec[3]])
    return problem, u_star, s_eigs


@pytest.fixture
def synthetic_diagonal():
    return make_synthetic_diagonal()
