"""Homotopy driver: step a model parameter along a monotone path, warm-starting
each stage from the previous converged profile; bisect the step on failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Callable

from . import factors as factors_mod
from .iterate import CONVERGED, IterationConfig, SolveResult, solve
from .problems import ProblemModel
from .spectral import Field


@dataclass(frozen=True)
class HomotopyPath:
    """Strictly monotone parameter values, visited in order."""

    values: tuple[float, ...]
    parameter_name: str = "Gamma"
    max_bisections: int = 4

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise ValueError("path needs at least one parameter value")
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ValueError(f"path values must be strictly monotone, got {vals}")
        if self.max_bisections < 0:
            raise ValueError("max_bisections must be nonnegative")
        object.__setattr__(self, "values", vals)


@dataclass
class StageResult:
    parameter_value: float
    result: SolveResult
    requested: bool  # False for bisection-inserted stages


@dataclass
class ContinuationResult:
    stages: list[StageResult] = dataclass_field(default_factory=list)
    completed: bool = True
    failed_at: float | None = None

    @property
    def requested_stages(self) -> list[StageResult]:
        return [s for s in self.stages if s.requested]

    @property
    def final(self) -> Field:
        return self.stages[-1].result.final


def _make_factor(factor_spec, problem: ProblemModel):
    if callable(factor_spec):
        return factor_spec(problem)
    return factors_mod.from_descriptor(str(factor_spec), problem)


def continue_solve(model_family: Callable[[float], ProblemModel], path: HomotopyPath,
                   seed: Field, factor_spec, config: IterationConfig | None = None) -> ContinuationResult:
    """Solve the family along the path, warm-starting each stage.

    `model_family` maps a parameter value to a ProblemModel; `factor_spec` is
    a factor descriptor string or a callable ProblemModel -> StabilizingFactor
    (rebuilt per stage since factors bind to their problem).  On a stage
    failure, the step from the last converged value is bisected up to
    `path.max_bisections` levels; if the target still fails, the partial
    results are returned flagged.
    """
    cfg = config or IterationConfig()
    out = ContinuationResult()

    def attempt(value: float, start: Field, requested: bool) -> SolveResult | None:
        problem = model_family(value)
        factor = _make_factor(factor_spec, problem)
        result = solve(problem, factor, start, cfg)
        if result.status != CONVERGED:
            return None
        out.stages.append(StageResult(value, result, requested))
        return result

    def advance(prev_value: float | None, value: float, start: Field,
                depth: int, requested: bool) -> Field | None:
        result = attempt(value, start, requested)
        if result is not None:
            return result.final
        if prev_value is None or depth >= path.max_bisections:
            return None
        mid = 0.5 * (prev_value + value)
        mid_state = advance(prev_value, mid, start, depth + 1, requested=False)
        if mid_state is None:
            return None
        return advance(mid, value, mid_state, depth + 1, requested=requested)

    state = seed
    prev: float | None = None
    for value in path.values:
        nxt = advance(prev, value, state, depth=0, requested=True)
        if nxt is None:
            out.completed = False
            out.failed_at = value
            return out
        state = nxt
        prev = value
    return out
