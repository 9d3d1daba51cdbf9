"""Fixed-point engines: the classical map L u_{n+1} = N(u_n), the stabilized
map L u_{n+1} = s(u_n) N(u_n), and a damped-Newton fallback for states the
stabilized family cannot reach.

The residual monitor RE_n = ||L u_n - N(u_n)|| (Euclidean over node values,
realified on complex fields) is recorded every iteration together with the
factor discrepancy |s(u_n) - 1| and ||u_n||.  Divergence is a reported
outcome, never an exception.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .factors import StabilizingFactor
from .linops import assemble_matrix
from .problems import ProblemModel
from .spectral import Field

CONVERGED = "converged"
DIVERGED = "diverged"
MAX_ITERATIONS = "max_iterations"

_DENSE_NEWTON_LIMIT = 2048


@dataclass(frozen=True)
class IterationConfig:
    max_iterations: int = 500
    residual_tolerance: float = 1e-12
    factor_tolerance: float = 1e-13
    divergence_guard: float = 1e8
    stop_rule: str = "residual"  # "residual" | "residual_and_factor"
    store_all: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.residual_tolerance <= 0 or self.factor_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.divergence_guard <= 1:
            raise ValueError("divergence_guard must exceed 1")
        if self.stop_rule not in ("residual", "residual_and_factor"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")


@dataclass
class IterationTrace:
    residuals: np.ndarray
    factor_discrepancies: np.ndarray
    norms: np.ndarray
    status: str
    first: Field
    last: Field
    all_iterates: list[Field] | None = None

    @property
    def iteration_count(self) -> int:
        """Number of steps taken (records minus one)."""
        return len(self.residuals) - 1

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    @property
    def final_factor_discrepancy(self) -> float:
        return float(self.factor_discrepancies[-1])

    def iterations_to(self, tolerance: float) -> float:
        """First iteration index with RE_n <= tolerance, inf if never reached."""
        hit = np.nonzero(self.residuals <= tolerance)[0]
        return float(hit[0]) if hit.size else np.inf


@dataclass
class SolveResult:
    final: Field
    trace: IterationTrace

    @property
    def status(self) -> str:
        return self.trace.status


def residual(problem: ProblemModel, u: Field) -> float:
    """RE = ||L u - N(u)||, Euclidean; pinned modes contribute exactly zero."""
    diff = problem.apply_L(u) - problem.apply_N(u)
    return diff.norm


def classical_step(problem: ProblemModel, u: Field) -> Field:
    """One unstabilized step: solve L u' = N(u), pinned modes zeroed."""
    return problem.solve_L(problem.apply_N(u))


def stabilized_step(problem: ProblemModel, factor: StabilizingFactor, u: Field) -> tuple[Field, float]:
    """One stabilized step: solve L u' = s(u) N(u); returns (u', s(u))."""
    s_val = factor(u)
    return problem.solve_L(s_val * problem.apply_N(u)), s_val


def solve(problem: ProblemModel, factor: StabilizingFactor | None, u0: Field,
          config: IterationConfig | None = None) -> SolveResult:
    """Iterate until the stop rule, the divergence guard, or max_iterations.

    With factor=None this runs the classical map (for divergence
    demonstrations); the factor-discrepancy channel records NaN.
    """
    cfg = config or IterationConfig()
    if u0.norm == 0.0 or not np.all(np.isfinite(u0.values)):
        raise ValueError("seed must be nonzero and finite")
    u = problem.project_pinned(u0)
    first = u

    res_hist: list[float] = []
    fac_hist: list[float] = []
    norm_hist: list[float] = []
    stored: list[Field] | None = [u] if cfg.store_all else None
    status = MAX_ITERATIONS

    for n in range(cfg.max_iterations + 1):
        re_n = residual(problem, u)
        factor_broke = False
        try:
            s_val = factor(u) if factor is not None else np.nan
        except ArithmeticError:
            # factor breakdown: the iterate left the factor's domain
            s_val = np.nan
            factor_broke = True
        disc = abs(s_val - 1.0)
        res_hist.append(re_n)
        fac_hist.append(disc)
        norm_hist.append(u.norm)

        if (not np.isfinite(re_n) or re_n > cfg.divergence_guard
                or norm_hist[-1] > cfg.divergence_guard or factor_broke):
            status = DIVERGED
            break
        done = re_n <= cfg.residual_tolerance
        if cfg.stop_rule == "residual_and_factor" and factor is not None:
            done = done and disc <= cfg.factor_tolerance
        if done:
            status = CONVERGED
            break
        if n == cfg.max_iterations:
            status = MAX_ITERATIONS
            break

        if factor is None:
            u_next = classical_step(problem, u)
        else:
            u_next = problem.solve_L(s_val * problem.apply_N(u))
        u = u_next
        if stored is not None:
            stored.append(u)
        if not np.all(np.isfinite(u.values)):
            res_hist.append(np.inf)
            fac_hist.append(np.nan)
            norm_hist.append(np.inf)
            status = DIVERGED
            break

    trace = IterationTrace(
        residuals=np.asarray(res_hist),
        factor_discrepancies=np.asarray(fac_hist),
        norms=np.asarray(norm_hist),
        status=status,
        first=first,
        last=u,
        all_iterates=stored,
    )
    return SolveResult(final=u, trace=trace)


def newton_solve(problem: ProblemModel, u0: Field, config: IterationConfig | None = None) -> SolveResult:
    """Damped Newton on G(u) = L u - N(u) with backtracking line search.

    Works on the state's linearization space (real, realified, or phase
    channel).  Dense solves up to dimension 2048 fall back to minimum-norm
    least squares when the Jacobian is symmetry-singular; larger systems use
    matrix-free GMRES.
    """
    cfg = config or IterationConfig()
    if problem.jacN_action is None:
        raise ValueError("newton_solve requires the problem to provide jacN_action")
    if u0.norm == 0.0 or not np.all(np.isfinite(u0.values)):
        raise ValueError("seed must be nonzero and finite")

    space = problem.linearization_space(at=u0)
    u = problem.project_pinned(u0)
    first = u
    w = space.to_vector(u)

    def G_of(vec: np.ndarray) -> np.ndarray:
        f = space.from_vector(vec)
        return space.to_vector(problem.apply_L(f) - problem.apply_N(f))

    res_hist: list[float] = []
    norm_hist: list[float] = []
    stored: list[Field] | None = [u] if cfg.store_all else None
    status = MAX_ITERATIONS

    g = G_of(w)
    for n in range(cfg.max_iterations + 1):
        r = float(np.linalg.norm(g))
        res_hist.append(r)
        norm_hist.append(float(np.linalg.norm(w)))
        if r <= cfg.residual_tolerance:
            status = CONVERGED
            break
        if not np.isfinite(r) or r > cfg.divergence_guard:
            status = DIVERGED
            break
        if n == cfg.max_iterations:
            status = MAX_ITERATIONS
            break

        u_field = space.from_vector(w)

        def jac_action(vec: np.ndarray) -> np.ndarray:
            f = space.from_vector(vec)
            out = problem.apply_L(f) - problem.jacN_action(u_field, f)
            return space.to_vector(problem.project_pinned(out))

        step = _newton_direction(jac_action, g, space.dim, cfg.residual_tolerance)
        if step is None:
            status = DIVERGED
            break

        alpha, accepted = 1.0, None
        for _ls in range(40):
            trial = w + alpha * step
            g_trial = G_of(trial)
            r_trial = float(np.linalg.norm(g_trial))
            if np.isfinite(r_trial) and r_trial < (1.0 - 1e-4 * alpha) * r:
                accepted = (trial, g_trial)
                break
            alpha *= 0.5
        if accepted is None:
            # line search stalled: no descent direction left
            status = MAX_ITERATIONS
            break
        w, g = accepted
        if stored is not None:
            stored.append(space.from_vector(w))

    final = space.from_vector(w)
    trace = IterationTrace(
        residuals=np.asarray(res_hist),
        factor_discrepancies=np.full(len(res_hist), np.nan),
        norms=np.asarray(norm_hist),
        status=status,
        first=first,
        last=final,
        all_iterates=stored,
    )
    return SolveResult(final=final, trace=trace)


def _newton_direction(jac_action, g: np.ndarray, dim: int, tol: float) -> np.ndarray | None:
    if dim <= _DENSE_NEWTON_LIMIT:
        J = assemble_matrix(jac_action, dim)
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)) \
                or np.linalg.norm(J @ step + g) > 1e-8 * max(np.linalg.norm(g), 1e-300):
            # symmetry-singular Jacobian: take the minimum-norm step
            step, *_ = np.linalg.lstsq(J, -g, rcond=1e-12)
        return step if np.all(np.isfinite(step)) else None
    op = LinearOperator((dim, dim), matvec=jac_action)
    step, info = gmres(op, -g, rtol=min(1e-6, tol / max(np.linalg.norm(g), 1e-300)),
                       atol=0.0, maxiter=400, restart=80)
    if info != 0 and np.linalg.norm(jac_action(step) + g) > 1e-3 * np.linalg.norm(g):
        return None
    return step
