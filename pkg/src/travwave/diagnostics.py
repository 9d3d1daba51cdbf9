"""Spectral diagnostics of the iteration maps.

Mechanizes the local convergence theory: spectra of the classical iteration
matrix S = L^{-1} N'(u*) and of the stabilized-map Jacobian
F'(u*) = S + u* (grad s(u*)), hypothesis reports for the convergence theorem,
symmetry generators and their eigenrelations, error decomposition along
{u*} + span(generators), and orbital-convergence identification (phase-line
fit, orbit-parameter estimation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .factors import StabilizingFactor
from .linops import VectorSpace, assemble_matrix, real_inner
from .problems import ProblemModel, SolitonParameters, exact_soliton_profile
from .spectral import Field, derivative

DENSE_EIG_LIMIT = 4096
UNIT_TOL = 1e-4


# ---------------------------------------------------------------------------
# operator actions


def iteration_matrix_action(problem: ProblemModel, u_star: Field, v: Field) -> Field:
    """S v = solve_L(N'(u*) v), pinned modes zeroed."""
    if problem.jacN_action is None:
        raise ValueError(f"problem {problem.name!r} does not provide jacN_action")
    return problem.solve_L(problem.jacN_action(u_star, v))


def jacobian_F_action(problem: ProblemModel, factor: StabilizingFactor,
                      u_star: Field, v: Field) -> Field:
    """F'(u*) v = S v + u* (grad s(u*) . v)."""
    grad = factor.gradient(u_star)
    return iteration_matrix_action(problem, u_star, v) + grad(v) * u_star


def s_operator(problem: ProblemModel, u_star: Field) -> tuple[Callable, VectorSpace]:
    """Vector-level oracle for S on the state's linearization space."""
    space = problem.linearization_space(at=u_star)
    return space.wrap(lambda f: iteration_matrix_action(problem, u_star, f)), space


def f_operator(problem: ProblemModel, factor: StabilizingFactor,
               u_star: Field) -> tuple[Callable, VectorSpace]:
    """Vector-level oracle for F'(u*); the factor gradient is frozen at u*."""
    space = problem.linearization_space(at=u_star)
    grad = factor.gradient(u_star)

    def action(f: Field) -> Field:
        return iteration_matrix_action(problem, u_star, f) + grad(f) * u_star

    return space.wrap(action), space


# ---------------------------------------------------------------------------
# spectra


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray          # complex, non-increasing modulus
    residuals: np.ndarray            # ||A v - lambda v|| / ||v|| per eigenpair
    near_unit: np.ndarray            # |.| within UNIT_TOL of 1
    dimension: int
    k: int
    solver: str                      # "dense" | "arnoldi"
    converged: bool = True
    hypothesis: dict | None = None
    eigenvectors: np.ndarray | None = None  # columns; not serialized
    matrix: np.ndarray | None = None        # dense path only; not serialized

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "moduli": [float(m) for m in self.moduli],
            "eigen_residuals": [float(r) for r in self.residuals],
            "near_unit_modulus": [bool(b) for b in self.near_unit],
            "dimension": self.dimension,
            "k": self.k,
            "solver": self.solver,
            "converged": self.converged,
            "hypothesis": self.hypothesis,
        }


def top_eigenvalues(action: Callable[[np.ndarray], np.ndarray], dimension: int, k: int,
                    p: float | None = None, seed_vector: np.ndarray | None = None,
                    unit_tol: float = UNIT_TOL,
                    dense_limit: int = DENSE_EIG_LIMIT) -> SpectrumReport:
    """k largest-modulus eigenvalues of a matrix-free linear operator.

    Dense Schur-based factorization when the dimension allows assembling the
    matrix; restarted Arnoldi (modulus ordering, deterministic start vector)
    above that.  Eigen-residuals are measured through the oracle itself.
    """
    k = min(k, dimension)
    solver = "dense" if dimension <= dense_limit else "arnoldi"
    converged = True
    A = None
    if solver == "dense":
        A = assemble_matrix(action, dimension)
        eigvals, eigvecs = scipy.linalg.eig(A)
    else:
        op = scipy.sparse.linalg.LinearOperator((dimension, dimension), matvec=action)
        v0 = np.full(dimension, 1.0 / np.sqrt(dimension))
        try:
            eigvals, eigvecs = scipy.sparse.linalg.eigs(op, k=k, which="LM", v0=v0)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            eigvals, eigvecs = exc.eigenvalues, exc.eigenvectors
            converged = False

    order = np.argsort(-np.abs(eigvals), kind="stable")[:k]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    residuals = np.empty(len(eigvals))
    for i, lam in enumerate(eigvals):
        v = eigvecs[:, i]
        if np.iscomplexobj(v):
            # the oracle acts on real vectors; split the complex eigenvector
            av = action(np.ascontiguousarray(v.real)) + 1j * action(np.ascontiguousarray(v.imag))
        else:
            av = action(v)
        residuals[i] = np.linalg.norm(av - lam * v) / np.linalg.norm(v)

    near_unit = np.abs(np.abs(eigvals) - 1.0) <= unit_tol
    report = SpectrumReport(
        eigenvalues=eigvals, residuals=residuals, near_unit=near_unit,
        dimension=dimension, k=k, solver=solver, converged=converged,
        eigenvectors=eigvecs, matrix=A,
    )
    if p is not None:
        report.hypothesis = hypothesis_verdicts(report, p, seed_vector=seed_vector,
                                                unit_tol=unit_tol)
    return report


def iteration_matrix_spectrum(problem: ProblemModel, u_star: Field, k: int,
                              seed: Field | None = None, **kwargs) -> SpectrumReport:
    action, space = s_operator(problem, u_star)
    seed_vec = space.to_vector(seed) if seed is not None else None
    return top_eigenvalues(action, space.dim, k, p=problem.degree,
                           seed_vector=seed_vec, **kwargs)


def jacobian_spectrum(problem: ProblemModel, factor: StabilizingFactor, u_star: Field,
                      k: int, **kwargs) -> SpectrumReport:
    action, space = f_operator(problem, factor, u_star)
    return top_eigenvalues(action, space.dim, k, **kwargs)


def hypothesis_verdicts(report: SpectrumReport, p: float,
                        seed_vector: np.ndarray | None = None,
                        unit_tol: float = UNIT_TOL) -> dict:
    """Verdicts for the local-convergence hypotheses at the reported spectrum.

    (i) the dominant eigenvalue equals the homogeneity degree p and is simple;
    (ii) every other eigenvalue has modulus at most 1 (+ tolerance);
    (iii) unit-modulus eigenvalues are numerically semisimple, and the seed
    component inside their eigenspace is quantified (a floating-point zero
    component is unattainable, so the report measures instead of asserting).
    """
    lam = report.eigenvalues
    dominant = lam[0]
    dominant_matches_p = bool(abs(dominant - p) <= 1e-3 * max(1.0, abs(p)))
    cluster = np.abs(lam - dominant) <= unit_tol * max(1.0, abs(dominant))
    dominant_simple = bool(np.count_nonzero(cluster) == 1)
    others = lam[1:]
    others_within_unit = bool(np.all(np.abs(others) <= 1.0 + unit_tol))

    unit_idx = [i for i in range(len(lam)) if report.near_unit[i]]
    unit_entries = []
    for i in unit_idx:
        entry = {
            "eigenvalue": [float(lam[i].real), float(lam[i].imag)],
            "eigen_residual": float(report.residuals[i]),
        }
        unit_entries.append(entry)
    semisimple_proxy = None
    if unit_idx and report.eigenvectors is not None:
        vecs = report.eigenvectors[:, unit_idx]
        svals = np.linalg.svd(vecs, compute_uv=False)
        rank = int(np.count_nonzero(svals > 1e-6 * svals[0]))
        semisimple_proxy = {"cluster_size": len(unit_idx), "eigenvector_rank": rank,
                            "independent": rank == len(unit_idx)}
    if seed_vector is not None and unit_idx and report.eigenvectors is not None:
        # group unit eigenvalues into clusters and measure the orthogonal
        # projection of the seed onto each cluster's invariant subspace; a
        # sorted Schur basis is reliable where clustered eigenvectors of a
        # non-normal matrix are not
        seed_norm = float(np.linalg.norm(seed_vector))
        assigned: dict[int, float] = {}
        remaining = list(range(len(unit_idx)))
        while remaining:
            head = remaining[0]
            lam_c = lam[unit_idx[head]]
            cluster = [j for j in remaining
                       if abs(lam[unit_idx[j]] - lam_c) <= 10 * unit_tol]
            remaining = [j for j in remaining if j not in cluster]
            q = _cluster_basis(report, [unit_idx[j] for j in cluster], lam_c, unit_tol)
            comp = float(np.linalg.norm(q.conj().T @ seed_vector.astype(q.dtype)))
            for j in cluster:
                assigned[j] = comp
        for pos, entry in enumerate(unit_entries):
            comp = assigned[pos]
            entry["seed_component"] = comp
            entry["seed_component_relative"] = comp / seed_norm if seed_norm else np.nan

    return {
        "dominant_eigenvalue": [float(dominant.real), float(dominant.imag)],
        "p": float(p),
        "i_dominant_is_p_and_simple": dominant_matches_p and dominant_simple,
        "i_dominant_matches_p": dominant_matches_p,
        "i_dominant_simple": dominant_simple,
        "ii_rest_within_unit_modulus": others_within_unit,
        "iii_unit_modulus_eigenvalues": unit_entries,
        "iii_semisimple_proxy": semisimple_proxy,
        "satisfied": dominant_matches_p and dominant_simple and others_within_unit,
    }


def _cluster_basis(report: SpectrumReport, indices: list[int], lam_c: complex,
                   unit_tol: float) -> np.ndarray:
    """Orthonormal basis of the invariant subspace for an eigenvalue cluster.

    Dense reports reorder a Schur factorization so the cluster leads; this is
    stable even when the individual eigenvectors of the non-normal matrix are
    nearly parallel.  Without the matrix (Arnoldi path) fall back to a QR of
    the available eigenvectors.
    """
    if report.matrix is not None:
        radius = 10 * unit_tol * max(1.0, abs(lam_c))
        T, Z, sdim = scipy.linalg.schur(
            report.matrix, output="complex",
            sort=lambda z: abs(z - lam_c) <= radius)
        if sdim > 0:
            return Z[:, :sdim]
    q, _ = np.linalg.qr(report.eigenvectors[:, indices])
    return q


@dataclass
class ShiftCheckReport:
    """Multiset comparison spec(F') vs (spec(S) \\ {p}) union {p+q}."""

    ok: bool
    max_deviation: float
    compared: int
    tolerance: float
    pairs: list  # (expected, actual, |diff|)

    def to_json_dict(self) -> dict:
        return {
            "ok": self.ok,
            "max_deviation": self.max_deviation,
            "compared": self.compared,
            "tolerance": self.tolerance,
            "pairs": [
                {"expected": [e.real, e.imag], "actual": [a.real, a.imag], "diff": d}
                for e, a, d in self.pairs
            ],
        }


def spectrum_shift_check(spec_S: SpectrumReport, spec_F: SpectrumReport,
                         p: float, q: float, tol: float = 1e-4) -> ShiftCheckReport:
    """Verify that stabilization replaces the eigenvalue p of S by p+q.

    On full spectra the comparison is the exact multiset identity.  On top-k
    reports only eigenvalues above the smallest reported S-modulus can be
    predicted, so the comparison truncates there (the block-triangular
    structure says nothing about eigenvalues below the reported window).
    """
    s_vals = list(spec_S.eigenvalues)
    idx_p = int(np.argmin([abs(z - p) for z in s_vals]))
    s_vals.pop(idx_p)
    expected = np.array(s_vals + [complex(p + q)])
    actual = np.array(list(spec_F.eigenvalues))

    full = spec_S.k == spec_S.dimension and spec_F.k == spec_F.dimension
    if not full:
        floor = float(np.min(spec_S.moduli)) + tol
        expected = expected[np.abs(expected) > floor]
        actual = actual[np.abs(actual) > floor]

    n = min(len(expected), len(actual))
    expected = expected[np.argsort(-np.abs(expected), kind="stable")][:n]
    actual = actual[np.argsort(-np.abs(actual), kind="stable")][:n]
    if n == 0:
        return ShiftCheckReport(True, 0.0, 0, tol, [])

    cost = np.abs(expected[:, None] - actual[None, :])
    rows, cols = linear_sum_assignment(cost)
    pairs = [(complex(expected[i]), complex(actual[j]), float(cost[i, j]))
             for i, j in zip(rows, cols)]
    max_dev = max(d for _, _, d in pairs)
    return ShiftCheckReport(max_dev <= tol, max_dev, n, tol, pairs)


# ---------------------------------------------------------------------------
# symmetries and error decomposition


def symmetry_generators(problem: ProblemModel, u: Field) -> list[Field]:
    """Infinitesimal generators of the declared symmetry group, evaluated at u."""
    gens = []
    for name in problem.symmetries:
        if name == "gauge":
            gens.append(u.with_values(1j * u.values))
        elif name == "translation_x":
            gens.append(derivative(u, 1, axis=0))
        elif name == "translation_z":
            gens.append(derivative(u, 1, axis=1))
        else:
            raise ValueError(f"unknown symmetry {name!r}")
    return gens


class ErrorDecomposition(NamedTuple):
    alpha: float
    betas: np.ndarray
    z: Field
    gram_condition: float


def decompose_error(e: Field, u_star: Field, generators: list[Field]) -> ErrorDecomposition:
    """Orthogonal projection of e onto span{u*, generators} plus remainder z.

    Coefficients come from a Gram solve under the real pairing Re<.,.>; this
    is an orthogonal approximation of the oblique invariant-subspace
    decomposition, accurate to second order near u*.
    """
    basis = [u_star, *generators]
    n = len(basis)
    gram = np.empty((n, n))
    rhs = np.empty(n)
    for i, bi in enumerate(basis):
        rhs[i] = real_inner(bi, e)
        for j, bj in enumerate(basis):
            gram[i, j] = real_inner(bi, bj)
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"ill-conditioned Gram matrix (cond = {cond:.3g}); "
                         "basis {u*, generators} is numerically dependent")
    coef = np.linalg.solve(gram, rhs)
    z = e
    for c, b in zip(coef, basis):
        z = z - float(c) * b
    return ErrorDecomposition(float(coef[0]), coef[1:], z, cond)


# ---------------------------------------------------------------------------
# orbital identification


@dataclass
class OrbitFit:
    slope: float | None = None
    intercept: float | None = None
    intercept_mod_2pi: float | None = None
    x0: float | None = None
    theta0: float | None = None
    sup_distance: float | None = None
    modulus_sup_distance: float | None = None
    window: tuple[int, int] | None = None

    def to_json_dict(self) -> dict:
        out = {}
        for key in ("slope", "intercept", "intercept_mod_2pi", "x0", "theta0",
                    "sup_distance", "modulus_sup_distance"):
            val = getattr(self, key)
            out[key] = float(val) if val is not None else None
        out["window"] = list(self.window) if self.window is not None else None
        return out


def _default_window(modulus: np.ndarray) -> np.ndarray:
    """Contiguous node range around the modulus peak where |U| >= 0.05 max."""
    peak = int(np.argmax(modulus))
    keep = modulus >= 0.05 * modulus[peak]
    lo = peak
    while lo > 0 and keep[lo - 1]:
        lo -= 1
    hi = peak
    while hi < len(modulus) - 1 and keep[hi + 1]:
        hi += 1
    return np.arange(lo, hi + 1)


def fit_phase_line(U_f: Field, window=None) -> OrbitFit:
    """Least-squares line through the unwrapped phase of a 1D complex field.

    The phase is unwrapped by cumulative 2-pi jump correction scanning
    outward from the modulus peak, then fit as y = slope*x + intercept on the
    window (default: nodes with |U| >= 0.05 max|U| around the peak).
    """
    if np.ndim(U_f.values) != 1:
        raise ValueError("phase-line fitting is defined for 1D fields")
    vals = U_f.values
    modulus = np.abs(vals)
    if window is None:
        idx = _default_window(modulus)
    else:
        idx = np.arange(window[0], window[1]) if isinstance(window, tuple) else np.asarray(window)
    if idx.size < 8:
        raise ValueError(f"phase-fit window has {idx.size} nodes; need at least 8")

    peak = idx[np.argmax(modulus[idx])]
    phase = np.angle(vals)
    unwrapped = np.empty_like(phase)
    unwrapped[peak:] = np.unwrap(phase[peak:])
    unwrapped[: peak + 1] = np.unwrap(phase[: peak + 1][::-1])[::-1]

    x = U_f.grid.nodes[idx]
    y = unwrapped[idx]
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return OrbitFit(
        slope=float(slope),
        intercept=float(intercept),
        intercept_mod_2pi=float(intercept % (2.0 * np.pi)),
        window=(int(idx[0]), int(idx[-1]) + 1),
    )


def orbit_match(U_f: Field, params: SolitonParameters) -> OrbitFit:
    """Estimate group parameters (x0, theta0) of the orbit element closest
    to U_f, in the group-action convention u(x) -> e^{i theta0} u(x + x0).

    x0 comes from modulus cross-correlation refined by a bounded scalar
    minimization of the modulus misfit; theta0 is the phase intercept of
    U_f against the x0-shifted profile.  Reports the sup-distance and
    modulus sup-distance to the matched element.
    """
    grid = U_f.grid
    modulus = np.abs(U_f.values)
    if modulus.max() == 0.0:
        raise ValueError("cannot match a zero field: no modulus peak")
    base = replace(params, x0=0.0, theta0=0.0)

    ref_mod = np.abs(exact_soliton_profile(base, grid).values)
    corr = np.real(np.fft.ifft(np.fft.fft(modulus) * np.conj(np.fft.fft(ref_mod))))
    lag = int(np.argmax(corr))
    m = grid.point_count
    if lag >= m // 2:
        lag -= m
    h = grid.spacing
    x0_guess = -lag * h

    def modulus_misfit(x0: float) -> float:
        prof = exact_soliton_profile(replace(base, x0=x0), grid)
        return float(np.linalg.norm(modulus - np.abs(prof.values)))

    res = minimize_scalar(modulus_misfit, bounds=(x0_guess - 2 * h, x0_guess + 2 * h),
                          method="bounded", options={"xatol": 1e-13})
    x0 = float(res.x)

    shifted = exact_soliton_profile(replace(base, x0=x0), grid)
    theta0 = float(np.angle(np.vdot(shifted.values, U_f.values)))
    matched = exact_soliton_profile(replace(base, x0=x0, theta0=theta0), grid)

    fit = fit_phase_line(U_f)
    fit.x0 = x0
    fit.theta0 = theta0
    fit.sup_distance = float(np.max(np.abs(U_f.values - matched.values)))
    fit.modulus_sup_distance = float(np.max(np.abs(modulus - np.abs(matched.values))))
    return fit
