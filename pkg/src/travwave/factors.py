"""Stabilizing factors s(u) for the stabilized fixed-point iteration.

Every factor is positively homogeneous of degree q = gamma*(1-p) and equals 1
at solutions of L u = N(u).  Valid pairings require |p + q| < 1; the optimal
contraction has q = -p, i.e. gamma = p/(p-1).

Inner products on complex fields are the real part of the Hermitian pairing
(the Euclidean pairing on realified vectors), so factors are always real and
the gamma-power is branch-free.  A negative inner-product ratio under a
non-integer gamma signals an iterate far outside any convergence basin and
raises instead of taking a complex branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linops import real_inner
from .problems import ProblemModel
from .spectral import Field


class FactorPropertyError(ValueError):
    """The degree pairing violates |p + q| < 1."""


class DegenerateDenominatorError(ArithmeticError):
    """The factor denominator vanishes relative to its natural scale."""


class FactorDomainError(ArithmeticError):
    """Negative ratio raised to a non-integer exponent."""


class HomogeneityValidationError(ValueError):
    """A user-supplied map failed the numerical homogeneity check."""


class DescriptorError(ValueError):
    """Unparseable factor descriptor string."""


@dataclass(frozen=True)
class FMap:
    """Homogeneous map used by the inner-product factor family."""

    name: str
    degree: float
    apply: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


F_MAPS = {
    "identity": FMap("identity", 1.0, lambda u: u, lambda u, v: v),
    "square": FMap("square", 2.0, lambda u: u * u, lambda u, v: 2.0 * u * v),
    "cube": FMap("cube", 3.0, lambda u: u * u * u, lambda u, v: 3.0 * u * u * v),
}


def optimal_gamma(p: float) -> float:
    """The exponent giving q = -p: gamma = p/(p-1)."""
    if p == 1:
        raise ValueError("optimal gamma is undefined for degree p = 1")
    return p / (p - 1.0)


def _check_degree(p: float, gamma: float, allow_marginal: bool) -> float:
    q = gamma * (1.0 - p)
    bound = 1.0 + 1e-12 if allow_marginal else 1.0 - 1e-12
    if abs(p + q) > bound:
        raise FactorPropertyError(
            f"|p + q| = {abs(p + q):.6g} >= 1 for gamma = {gamma}, p = {p}; "
            "the stabilized iteration cannot contract the scaling direction"
        )
    return q


def _power(ratio: float, gamma: float) -> float:
    if ratio <= 0.0:
        if float(gamma).is_integer():
            return ratio**gamma
        raise FactorDomainError(
            f"ratio {ratio:.6g} <= 0 under non-integer gamma = {gamma}"
        )
    return ratio**gamma


def _resolve_gamma(gamma, p: float) -> float:
    if isinstance(gamma, str):
        if gamma != "optimal":
            raise DescriptorError(f"gamma must be a number or 'optimal', got {gamma!r}")
        return optimal_gamma(p)
    return float(gamma)


@dataclass(frozen=True)
class StabilizingFactor:
    """Evaluation s(u), its homogeneity degree q, and gradient access."""

    descriptor: str
    kind: str
    gamma: float
    degree: float  # q
    problem: ProblemModel
    _ratio: Callable[[Field], float]
    _gradient: Callable[[Field], Callable[[Field], float]]

    def __call__(self, u: Field) -> float:
        return _power(self._ratio(u), self.gamma)

    evaluate = __call__

    def gradient(self, u: Field) -> Callable[[Field], float]:
        """Directional-derivative functional v -> grad s(u) . v."""
        return self._gradient(u)


def _format_gamma(gamma: float) -> str:
    return f"{gamma:g}"


def petviashvili_factor(gamma, problem: ProblemModel, allow_marginal: bool = False) -> StabilizingFactor:
    """s(u) = (<Lu, u> / <N(u), u>)^gamma, the f = identity inner factor."""
    return inner_factor(F_MAPS["identity"], gamma, problem, allow_marginal=allow_marginal,
                        descriptor_kind="petviashvili")


def inner_factor(f, gamma, problem: ProblemModel, allow_marginal: bool = False,
                 descriptor_kind: str = "inner") -> StabilizingFactor:
    """s(u) = (<Lu, f(u)> / <N(u), f(u)>)^gamma for a homogeneous map f."""
    fmap = f if isinstance(f, FMap) else _validated_fmap(f, problem)
    gamma = _resolve_gamma(gamma, problem.degree)
    q = _check_degree(problem.degree, gamma, allow_marginal)
    if descriptor_kind == "petviashvili":
        descriptor = f"petviashvili:{_format_gamma(gamma)}"
    else:
        descriptor = f"inner:f={fmap.name}:{_format_gamma(gamma)}"

    def parts(u: Field):
        Lu = problem.apply_L(u)
        Nu = problem.apply_N(u)
        fu = u.with_values(fmap.apply(u.values))
        num = real_inner(Lu, fu)
        den = real_inner(Nu, fu)
        if abs(den) <= 1e-14 * Nu.norm * fu.norm:
            raise DegenerateDenominatorError(
                f"|<N(u), f(u)>| = {abs(den):.3g} is degenerate for {descriptor}"
            )
        return Lu, Nu, fu, num, den

    def ratio(u: Field) -> float:
        _, _, _, num, den = parts(u)
        return num / den

    def gradient(u: Field) -> Callable[[Field], float]:
        Lu, Nu, fu, num, den = parts(u)
        R = num / den
        s_scale = _ratio_power_derivative(R, gamma)

        def directional(v: Field) -> float:
            Lv = problem.apply_L(v)
            if fmap.jac is not None:
                dfv = u.with_values(fmap.jac(u.values, v.values))
            else:
                dfv = _fd_map_directional(fmap.apply, u, v)
            jNv = problem.jacN_action(u, v)
            dnum = real_inner(Lv, fu) + real_inner(Lu, dfv)
            dden = real_inner(jNv, fu) + real_inner(Nu, dfv)
            return s_scale * (dnum * den - num * dden) / den**2

        return directional

    return StabilizingFactor(descriptor, descriptor_kind, gamma, q, problem, ratio, gradient)


def _ratio_power_derivative(R: float, gamma: float) -> float:
    """d(R^gamma)/dR = gamma * R^(gamma-1), guarding the branch."""
    if R <= 0.0 and not float(gamma - 1.0).is_integer():
        raise FactorDomainError(f"gradient of ratio^{gamma} undefined at ratio = {R:.3g}")
    return gamma * R ** (gamma - 1.0)


def _fd_map_directional(apply_f, u: Field, v: Field) -> Field:
    vn = v.norm
    if vn == 0.0:
        return v.with_values(np.zeros_like(v.values))
    eps = 1e-6 * max(u.norm, 1.0) / vn
    plus = apply_f(u.values + eps * v.values)
    minus = apply_f(u.values - eps * v.values)
    return v.with_values((plus - minus) / (2.0 * eps))


def _validated_fmap(f, problem: ProblemModel) -> FMap:
    """Wrap a raw callable, measuring and validating its homogeneity degree."""
    if isinstance(f, str):
        try:
            return F_MAPS[f]
        except KeyError:
            raise DescriptorError(f"unknown inner map {f!r}; known: {sorted(F_MAPS)}") from None
    probe = _probe_values(problem)
    base = np.asarray(f(probe))
    if np.linalg.norm(base.ravel()) == 0:
        raise HomogeneityValidationError("f vanishes on the probe field")
    degrees = []
    for t in (0.5, 2.0):
        scaled = np.asarray(f(t * probe))
        ratios = np.abs(scaled.ravel()) / np.maximum(np.abs(base.ravel()), 1e-300)
        good = np.abs(base.ravel()) > 1e-8 * np.abs(base).max()
        d = np.log(ratios[good]) / np.log(t)
        if d.size == 0 or np.ptp(d) > 1e-6:
            raise HomogeneityValidationError("f is not positively homogeneous")
        degrees.append(d[0])
    if abs(degrees[0] - degrees[1]) > 1e-6 or degrees[0] < 1.0 - 1e-9:
        raise HomogeneityValidationError(
            f"f has inadmissible homogeneity degree {degrees[0]:.4g} (needs degree >= 1)"
        )
    return FMap(getattr(f, "__name__", "custom"), float(degrees[0]), f, None)


def _probe_values(problem: ProblemModel) -> np.ndarray:
    """Deterministic structured probe for construction-time validation."""
    grid = problem.grid
    if hasattr(grid, "mesh"):
        X, Z = grid.mesh
        base = np.exp(-(X**2 + Z**2) / 9.0) * (1.0 + 0.3 * np.cos(X))
    else:
        x = grid.nodes
        base = np.exp(-(x**2) / 9.0) * (1.0 + 0.3 * np.cos(x))
    if problem.is_complex:
        return problem.seed_phase * base
    return base


def norm_factor(r, gamma, problem: ProblemModel, allow_marginal: bool = False) -> StabilizingFactor:
    """s(u) = (||Lu||_r / ||N(u)||_r)^gamma for 1 <= r <= inf."""
    r_val = np.inf if (isinstance(r, str) and r.lower() == "inf") else float(r)
    if not (r_val >= 1.0):
        raise ValueError(f"r must satisfy 1 <= r <= inf, got {r}")
    gamma = _resolve_gamma(gamma, problem.degree)
    q = _check_degree(problem.degree, gamma, allow_marginal)
    r_name = "inf" if np.isinf(r_val) else f"{r_val:g}"
    descriptor = f"norm:{r_name}:{_format_gamma(gamma)}"

    def vec_norm(field: Field) -> float:
        return float(np.linalg.norm(field.values.ravel(), ord=r_val))

    def ratio(u: Field) -> float:
        den = vec_norm(problem.apply_N(u))
        if den <= 1e-300:
            raise DegenerateDenominatorError(f"||N(u)||_{r_name} = 0 for {descriptor}")
        return vec_norm(problem.apply_L(u)) / den

    def evaluate(u: Field) -> float:
        return _power(ratio(u), gamma)

    def gradient(u: Field) -> Callable[[Field], float]:
        base = u
        if r_val in (1.0, np.inf):
            # nudge off the measure-zero kinks of the 1- and sup-norms
            pattern = np.cos(np.arange(u.values.size, dtype=float)).reshape(u.values.shape)
            base = u.with_values(u.values + 1e-12 * max(u.norm, 1.0) * pattern)

        def directional(v: Field) -> float:
            vn = v.norm
            if vn == 0.0:
                return 0.0
            eps = 1e-6 * max(base.norm, 1.0) / vn
            plus = evaluate(base + eps * v)
            minus = evaluate(base + (-eps) * v)
            return (plus - minus) / (2.0 * eps)

        return directional

    return StabilizingFactor(descriptor, "norm", gamma, q, problem, ratio, gradient)


def factor_gradient(factor: StabilizingFactor, u: Field) -> Callable[[Field], float]:
    """grad s(u) as a directional linear functional v -> grad s(u) . v."""
    return factor.gradient(u)


def from_descriptor(descriptor: str, problem: ProblemModel, allow_marginal: bool = False) -> StabilizingFactor:
    """Build a factor from its serialized form.

    Grammar: "petviashvili:<gamma>", "inner:f=<name>:<gamma>", "norm:<r>:<gamma>"
    where <gamma> is a number or "optimal" and <r> is a number or "inf".
    """
    parts = descriptor.split(":")
    try:
        if parts[0] == "petviashvili" and len(parts) == 2:
            return petviashvili_factor(_gamma_token(parts[1]), problem, allow_marginal)
        if parts[0] == "inner" and len(parts) == 3 and parts[1].startswith("f="):
            return inner_factor(parts[1][2:], _gamma_token(parts[2]), problem, allow_marginal)
        if parts[0] == "norm" and len(parts) == 3:
            return norm_factor(parts[1], _gamma_token(parts[2]), problem, allow_marginal)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, (DescriptorError, FactorPropertyError)):
            raise
        raise DescriptorError(f"bad factor descriptor {descriptor!r}: {exc}") from exc
    raise DescriptorError(
        f"bad factor descriptor {descriptor!r}; expected 'petviashvili:<gamma>', "
        "'inner:f=<name>:<gamma>' or 'norm:<r>:<gamma>'"
    )


def _gamma_token(token: str):
    if token == "optimal":
        return "optimal"
    try:
        return float(token)
    except ValueError:
        raise DescriptorError(f"gamma must be a number or 'optimal', got {token!r}") from None
