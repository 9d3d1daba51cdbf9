"""Concrete discretizations: Schrodinger ground states with potentials,
Schrodinger soliton profiles with an exact-solution oracle, and 2D
Benjamin/KP-type lumps.

Every model is an instance of the homogeneous system L u = N(u) with N
positively homogeneous of degree p.  Models are immutable after construction;
dense factorizations happen once.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field, replace
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.linalg import lu_factor, lu_solve

from . import linops
from .spectral import Field, Grid, Grid1D, Grid2D, diff_matrix


class SingularOperatorError(ValueError):
    """The linear operator factorization is numerically singular."""


@dataclass(frozen=True)
class ProblemModel:
    """Homogeneous system L u = N(u) on a periodic grid.

    `jacN_action(u, v)` is the (real-linear) directional derivative N'(u)v.
    `jac_complex_linear` marks nonlinearities whose Jacobian is complex-linear
    (Hadamard powers); such problems carry invariant phase channels and their
    spectra are reported on the state's channel rather than on R^{2m}.
    `seed_phase` is the unit phase of the channel carrying the localized
    states (1 for real-valued problems).
    """

    name: str
    degree: float
    grid: Grid
    is_complex: bool
    apply_L: Callable[[Field], Field]
    solve_L: Callable[[Field], Field]
    apply_N: Callable[[Field], Field]
    jacN_action: Callable[[Field, Field], Field] | None = None
    pinned_modes: tuple = ()
    exact_solution: Callable[..., Field] | None = None
    symmetries: tuple[str, ...] = ()
    seed_phase: complex = 1.0
    jac_complex_linear: bool = False
    params: dict = dataclass_field(default_factory=dict)

    def project_pinned(self, u: Field) -> Field:
        """Zero the pinned Fourier modes (no-op when none are declared)."""
        if not self.pinned_modes:
            return u
        uh = np.fft.fftn(u.values)
        for idx in self.pinned_modes:
            uh[idx] = 0.0
        out = np.fft.ifftn(uh)
        if not u.is_complex:
            out = out.real
        return u.with_values(out)

    def linearization_space(self, at: Field | None = None) -> linops.VectorSpace:
        """Real vector space the linearization acts on at the given state.

        Complex-linear Jacobians restrict to the state's invariant phase
        channel; real-linear complex problems realify to R^{2m}.
        """
        if not self.is_complex:
            return linops.real_space(self.grid)
        if self.jac_complex_linear and at is not None:
            nrm = at.norm
            if nrm > 0:
                re = float(np.linalg.norm(at.values.real.ravel()))
                im = float(np.linalg.norm(at.values.imag.ravel()))
                if im <= 1e-12 * nrm:
                    return linops.phase_channel_space(self.grid, 1.0)
                if re <= 1e-12 * nrm:
                    return linops.phase_channel_space(self.grid, 1.0j)
        return linops.realified_space(self.grid)


@dataclass(frozen=True)
class SolitonParameters:
    """Parameters of the focusing-Schrodinger traveling profile.

    x0 and theta0 are group parameters in the group-action sense
    u(x) -> exp(i*theta0) * u(x + x0).
    """

    sigma: float
    lambda1: float
    lambda2: float
    x0: float = 0.0
    theta0: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.a <= 0:
            raise ValueError(
                f"profile requires lambda1 - lambda2^2/4 > 0, got a = {self.a}"
            )

    @property
    def a(self) -> float:
        return self.lambda1 - self.lambda2**2 / 4.0


def sech(z: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(z)


def sech2_potential(grid: Grid1D, amplitude: float = 1.0, center: float = 0.0) -> np.ndarray:
    return amplitude * sech(grid.nodes - center) ** 2


def double_well_potential(grid: Grid1D, depth: float = 6.0, separation: float = 1.0) -> np.ndarray:
    """Attractive double well: depth*(sech^2(x-sep) + sech^2(x+sep)).

    Positive orientation: with L = D^2 + diag(V) - mu*I this produces the
    indefinite operator whose odd branch carries the two-bump antisymmetric
    states (a nonnegative V with mu above its spectrum would make L negative
    definite and the mixed-sign linearization spectra unreachable).
    """
    x = grid.nodes
    return depth * (sech(x - separation) ** 2 + sech(x + separation) ** 2)


def _as_samples(potential, grid: Grid1D) -> np.ndarray:
    v = potential(grid.nodes) if callable(potential) else np.asarray(potential, dtype=float)
    if v.shape != grid.shape:
        raise ValueError(f"potential samples have shape {v.shape}, expected {grid.shape}")
    return v


def nls_ground_state(potential, mu: float, grid: Grid1D) -> ProblemModel:
    """Cubic ground-state system: L = D^2 + diag(V) - mu*I, N(U) = U^3, p = 3.

    The field is complex; since L is real and the cube preserves the real and
    imaginary axes, both are exactly invariant channels.  For potentials with
    mu above the spectrum of D^2 + diag(V) the operator L is negative definite
    and the localized branch lives on the imaginary axis (seed_phase = i);
    indefinite L additionally supports real-axis states.
    """
    V = _as_samples(potential, grid)
    m = grid.point_count
    L_dense = diff_matrix(grid, 2) + np.diag(V) - mu * np.eye(m)
    anorm = np.linalg.norm(L_dense, 1)
    factorization = lu_factor(L_dense)
    rcond, _ = scipy.linalg.lapack.dgecon(factorization[0], anorm, norm="1")
    if rcond < 1e-13:
        raise SingularOperatorError(
            f"L = D^2 + diag(V) - mu*I is numerically singular at mu = {mu} "
            f"(reciprocal condition {rcond:.2e}; mu coincides with a discrete eigenvalue)"
        )

    def apply_L(u: Field) -> Field:
        v = u.values
        if u.is_complex:
            return u.with_values(L_dense @ v.real + 1j * (L_dense @ v.imag))
        return u.with_values(L_dense @ v)

    def solve_L(b: Field) -> Field:
        v = b.values
        if b.is_complex:
            # split solves keep the phase channels exactly invariant
            return b.with_values(lu_solve(factorization, v.real) + 1j * lu_solve(factorization, v.imag))
        return b.with_values(lu_solve(factorization, v))

    def apply_N(u: Field) -> Field:
        v = u.values
        return u.with_values(v * v * v)

    def jacN(u: Field, w: Field) -> Field:
        return w.with_values(3.0 * u.values * u.values * w.values)

    return ProblemModel(
        name="nls_ground_state",
        degree=3.0,
        grid=grid,
        is_complex=True,
        apply_L=apply_L,
        solve_L=solve_L,
        apply_N=apply_N,
        jacN_action=jacN,
        seed_phase=1.0j,
        jac_complex_linear=True,
        params={"mu": mu},
    )


def exact_soliton_profile(params: SolitonParameters, grid: Grid1D) -> Field:
    """Closed-form profile e^{i*theta0} * rho(x + x0) * e^{i*theta(x + x0)}.

    rho(x) = (a(sigma+1))^{1/(2 sigma)} sech(sigma sqrt(a) x)^{1/sigma},
    theta(x) = (lambda2/2) x.
    """
    a, sig = params.a, params.sigma
    xi = grid.nodes + params.x0
    rho = (a * (sig + 1.0)) ** (1.0 / (2.0 * sig)) * sech(sig * np.sqrt(a) * xi) ** (1.0 / sig)
    phase = 0.5 * params.lambda2 * xi + params.theta0
    return Field(grid, rho * np.exp(1j * phase))


def nls_soliton(params: SolitonParameters, grid: Grid1D) -> ProblemModel:
    """Soliton profile system: L has symbol -k^2 - lambda1 + lambda2*k,
    N(U) = -|U|^{2 sigma} U, p = 2 sigma + 1.

    The symbol has no real roots when a > 0 (negative discriminant), so the
    mode-wise solve is defined everywhere.  The Jacobian of N is only
    real-linear (it involves conj), so spectra live on R^{2m}.
    """
    sig = params.sigma
    k = grid.wavenumbers
    symbol = -(k**2) - params.lambda1 + params.lambda2 * k

    def apply_L(u: Field) -> Field:
        return u.with_values(np.fft.ifft(symbol * np.fft.fft(u.values)))

    def solve_L(b: Field) -> Field:
        return b.with_values(np.fft.ifft(np.fft.fft(b.values) / symbol))

    def apply_N(u: Field) -> Field:
        v = u.values
        return u.with_values(-np.abs(v) ** (2 * sig) * v)

    def jacN(u: Field, w: Field) -> Field:
        uv, wv = u.values, w.values
        au = np.abs(uv)
        return w.with_values(
            -(sig + 1.0) * au ** (2 * sig) * wv
            - sig * au ** (2 * sig - 2) * uv * uv * np.conj(wv)
        )

    base = replace(params, x0=0.0, theta0=0.0)

    def exact(x0: float = 0.0, theta0: float = 0.0) -> Field:
        return exact_soliton_profile(replace(base, x0=x0, theta0=theta0), grid)

    return ProblemModel(
        name="nls_soliton",
        degree=2.0 * sig + 1.0,
        grid=grid,
        is_complex=True,
        apply_L=apply_L,
        solve_L=solve_L,
        apply_N=apply_N,
        jacN_action=jacN,
        exact_solution=exact,
        symmetries=("gauge", "translation_x"),
        params={"sigma": sig, "lambda1": params.lambda1, "lambda2": params.lambda2},
    )


def benjamin_lump(gamma_cap: float, sound_speed: float, grid: Grid2D) -> ProblemModel:
    """2D lump system in transform form:

        [kx^2 (c_s + 2 Gamma |kx| + kx^2) + kz^2] eta_hat = kx^2 (eta^2)_hat

    so apply_L is the left multiplier, apply_N multiplies the transform of
    eta*eta by kx^2, and p = 2.  Gamma = 0 is the KP-I case.  The only zero of
    the symbol is the (0,0) mode, pinned by the zero-total-mass constraint.
    """
    if sound_speed <= 0:
        raise ValueError(f"sound_speed must be positive, got {sound_speed}")
    if gamma_cap < 0:
        raise ValueError(f"Gamma must be nonnegative, got {gamma_cap}")
    kx, kz = grid.kx, grid.kz
    symbol = kx**2 * (sound_speed + 2.0 * gamma_cap * np.abs(kx) + kx**2) + kz**2
    nonzero = symbol != 0.0
    kx2 = kx**2

    def apply_L(u: Field) -> Field:
        return u.with_values(np.fft.ifft2(symbol * np.fft.fft2(u.values)).real)

    def solve_L(b: Field) -> Field:
        bh = np.fft.fft2(b.values)
        out = np.zeros_like(bh)
        out[nonzero] = bh[nonzero] / symbol[nonzero]
        return b.with_values(np.fft.ifft2(out).real)

    def apply_N(u: Field) -> Field:
        v = u.values
        return u.with_values(np.fft.ifft2(kx2 * np.fft.fft2(v * v)).real)

    def jacN(u: Field, w: Field) -> Field:
        return w.with_values(np.fft.ifft2(kx2 * np.fft.fft2(2.0 * u.values * w.values)).real)

    return ProblemModel(
        name="benjamin_lump",
        degree=2.0,
        grid=grid,
        is_complex=False,
        apply_L=apply_L,
        solve_L=solve_L,
        apply_N=apply_N,
        jacN_action=jacN,
        pinned_modes=((0, 0),),
        symmetries=("translation_x", "translation_z"),
        params={"Gamma": gamma_cap, "sound_speed": sound_speed},
    )


def gaussian_seed(grid: Grid, amplitude: float, width: float, antisymmetric: bool = False) -> Field:
    """Gaussian initial iterate A*exp(-x^2/w^2), times x when antisymmetric."""
    if amplitude == 0:
        raise ValueError("amplitude must be nonzero")
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    if isinstance(grid, Grid1D):
        x = grid.nodes
        v = amplitude * np.exp(-(x**2) / width**2)
        if antisymmetric:
            v = v * x
        return Field(grid, v)
    if antisymmetric:
        raise ValueError("antisymmetric seeds are 1D only")
    X, Z = grid.mesh
    return Field(grid, amplitude * np.exp(-(X**2 + Z**2) / width**2))
