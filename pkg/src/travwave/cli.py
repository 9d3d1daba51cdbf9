"""Command-line front end.

Subcommands: solve | spectrum | continue | orbital.  Every run is driven by a
JSON config (from --config or a bundled --recipe) and writes CSV series plus
JSON reports into the output directory.  Identical configs produce
bit-identical outputs: there is no randomness anywhere in the pipeline.

Exit codes: 0 success (a reported divergence is a valid result), 2 config
error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import importlib.resources
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, factors, problems
from .continuation import ContinuationResult, HomotopyPath, continue_solve
from .iterate import IterationConfig, SolveResult, newton_solve, solve
from .spectral import Field, Grid1D, Grid2D, derivative

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# config loading and construction


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def load_recipe(name: str) -> dict:
    ref = importlib.resources.files("travwave") / "recipes" / f"{name}.json"
    if not ref.is_file():
        available = sorted(
            p.name.removesuffix(".json")
            for p in (importlib.resources.files("travwave") / "recipes").iterdir()
        )
        raise ConfigError(f"unknown recipe {name!r}; available: {available}")
    return json.loads(ref.read_text())


def _require(block: dict, key: str, context: str):
    if key not in block:
        raise ConfigError(f"missing field {context}.{key}")
    return block[key]


def build_grid(problem_block: dict):
    grid_block = _require(problem_block, "grid", "problem")
    if "points_x" in grid_block:
        try:
            gx = Grid1D(float(_require(grid_block, "half_length_x", "problem.grid")),
                        int(_require(grid_block, "points_x", "problem.grid")))
            gz = Grid1D(float(_require(grid_block, "half_length_z", "problem.grid")),
                        int(_require(grid_block, "points_z", "problem.grid")))
        except ValueError as exc:
            raise ConfigError(f"problem.grid: {exc}") from None
        return Grid2D(gx, gz)
    try:
        return Grid1D(float(_require(grid_block, "half_length", "problem.grid")),
                      int(_require(grid_block, "points", "problem.grid")))
    except ValueError as exc:
        raise ConfigError(f"problem.grid: {exc}") from None


def build_potential(pot_block: dict, grid: Grid1D) -> np.ndarray:
    kind = _require(pot_block, "kind", "problem.potential")
    if kind == "sech2":
        return problems.sech2_potential(grid, amplitude=float(pot_block.get("amplitude", 1.0)),
                                        center=float(pot_block.get("center", 0.0)))
    if kind == "double_well":
        return problems.double_well_potential(grid, depth=float(pot_block.get("depth", 6.0)),
                                              separation=float(pot_block.get("separation", 1.0)))
    if kind == "zero":
        return np.zeros(grid.point_count)
    raise ConfigError(f"problem.potential.kind: unknown kind {kind!r}")


def build_problem(cfg: dict):
    block = _require(cfg, "problem", "config")
    family = _require(block, "family", "problem")
    grid = build_grid(block)
    try:
        if family == "nls_ground_state":
            if not isinstance(grid, Grid1D):
                raise ConfigError("problem.grid: nls_ground_state needs a 1D grid")
            V = build_potential(_require(block, "potential", "problem"), grid)
            return problems.nls_ground_state(V, float(_require(block, "mu", "problem")), grid)
        if family == "nls_soliton":
            if not isinstance(grid, Grid1D):
                raise ConfigError("problem.grid: nls_soliton needs a 1D grid")
            params = problems.SolitonParameters(
                sigma=float(_require(block, "sigma", "problem")),
                lambda1=float(_require(block, "lambda1", "problem")),
                lambda2=float(_require(block, "lambda2", "problem")),
            )
            return problems.nls_soliton(params, grid)
        if family == "benjamin_lump":
            if not isinstance(grid, Grid2D):
                raise ConfigError("problem.grid: benjamin_lump needs a 2D grid")
            return problems.benjamin_lump(float(_require(block, "Gamma", "problem")),
                                          float(_require(block, "sound_speed", "problem")), grid)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None
    raise ConfigError(f"problem.family: unknown family {family!r}")


def build_iteration_config(cfg: dict) -> IterationConfig:
    block = cfg.get("iteration", {})
    kwargs = {}
    for key in ("max_iterations", "residual_tolerance", "factor_tolerance",
                "divergence_guard", "stop_rule", "store_all"):
        if key in block:
            kwargs[key] = block[key]
    try:
        return IterationConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"iteration: {exc}") from None


def build_factor(cfg: dict, problem):
    block = _require(cfg, "factor", "config")
    descriptor = _require(block, "descriptor", "factor")
    try:
        return factors.from_descriptor(descriptor, problem)
    except (factors.DescriptorError, factors.FactorPropertyError) as exc:
        raise ConfigError(f"factor.descriptor: {exc}") from None


def _seed_phase(seed_block: dict, problem) -> complex:
    phase = seed_block.get("phase")
    if phase is None:
        return problem.seed_phase if problem.is_complex else 1.0
    if phase == "real":
        return 1.0
    if phase == "imaginary":
        return 1.0j
    try:
        return complex(np.exp(1j * float(phase)))
    except (TypeError, ValueError):
        raise ConfigError(f"seed.phase: expected 'real', 'imaginary' or an angle, got {phase!r}") from None


def build_seed(cfg: dict, problem) -> Field:
    block = _require(cfg, "seed", "config")
    kind = _require(block, "kind", "seed")
    if kind == "gaussian":
        try:
            seed = problems.gaussian_seed(problem.grid,
                                          float(_require(block, "amplitude", "seed")),
                                          float(_require(block, "width", "seed")),
                                          antisymmetric=bool(block.get("antisymmetric", False)))
        except ValueError as exc:
            raise ConfigError(f"seed: {exc}") from None
        phase = _seed_phase(block, problem)
        if problem.is_complex:
            return seed.with_values(phase * seed.values.astype(complex))
        return seed
    if kind == "exact_perturbed":
        if problem.exact_solution is None:
            raise ConfigError("seed.kind: exact_perturbed requires a problem with an exact solution")
        eps1 = float(block.get("eps1", 0.0))
        eps2 = float(block.get("eps2", 0.0))
        exact = problem.exact_solution()
        return exact + eps1 * exact.with_values(1j * exact.values) + eps2 * derivative(exact, 1)
    if kind == "file":
        path = _require(block, "path", "seed")
        return read_profile_csv(path, problem)
    raise ConfigError(f"seed.kind: unknown kind {kind!r}")


def output_dir(cfg: dict, override: str | None) -> Path:
    if override:
        out = Path(override)
    else:
        out = Path(_require(_require(cfg, "output", "config"), "directory", "output"))
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# writers / readers


def write_trace_csv(path: Path, result: SolveResult) -> None:
    tr = result.trace
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "residual", "factor_discrepancy", "norm"])
        for n in range(len(tr.residuals)):
            w.writerow([n, FLOAT_FMT % tr.residuals[n],
                        FLOAT_FMT % tr.factor_discrepancies[n], FLOAT_FMT % tr.norms[n]])


def write_profile_csv(path: Path, field: Field) -> None:
    vals = np.asarray(field.values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if vals.ndim == 1:
            w.writerow(["x", "re", "im"])
            for xj, vj in zip(field.grid.nodes, vals):
                w.writerow([FLOAT_FMT % xj, FLOAT_FMT % vj.real, FLOAT_FMT % vj.imag])
        else:
            w.writerow(["x", "z", "re", "im"])
            X, Z = field.grid.mesh
            for xj, zj, vj in zip(X.ravel(), Z.ravel(), vals.ravel()):
                w.writerow([FLOAT_FMT % xj, FLOAT_FMT % zj,
                            FLOAT_FMT % vj.real, FLOAT_FMT % vj.imag])


def write_cross_sections(outdir: Path, field: Field) -> None:
    """X- and Z- cuts through the global modulus peak of a 2D profile."""
    vals = np.asarray(field.values)
    i, j = np.unravel_index(np.argmax(np.abs(vals)), vals.shape)
    gx, gz = field.grid.grid_x, field.grid.grid_z
    with open(outdir / "profile_xcut.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for xj, vj in zip(gx.nodes, vals[:, j]):
            w.writerow([FLOAT_FMT % xj, FLOAT_FMT % np.real(vj)])
    with open(outdir / "profile_zcut.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "value"])
        for zj, vj in zip(gz.nodes, vals[i, :]):
            w.writerow([FLOAT_FMT % zj, FLOAT_FMT % np.real(vj)])


def read_profile_csv(path: str | Path, problem) -> Field:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ConfigError(f"seed.path: profile file not found: {path}") from None
    header, data = rows[0], rows[1:]
    re_col, im_col = header.index("re"), header.index("im")
    values = np.array([float(r[re_col]) + 1j * float(r[im_col]) for r in data])
    expected = int(np.prod(problem.grid.shape))
    if values.size != expected:
        raise ConfigError(f"seed.path: profile has {values.size} nodes, grid needs {expected}")
    values = values.reshape(problem.grid.shape)
    if not problem.is_complex:
        if np.max(np.abs(values.imag)) > 1e-12 * max(np.max(np.abs(values)), 1.0):
            raise ConfigError("seed.path: complex profile supplied to a real-field problem")
        values = values.real
    return Field(problem.grid, values)


def _json_dump(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summary_payload(cfg: dict, problem, factor, result: SolveResult, engine: str) -> dict:
    tr = result.trace
    grid = problem.grid
    if isinstance(grid, Grid2D):
        grid_meta = {"half_length_x": grid.grid_x.half_length, "points_x": grid.grid_x.point_count,
                     "half_length_z": grid.grid_z.half_length, "points_z": grid.grid_z.point_count}
    else:
        grid_meta = {"half_length": grid.half_length, "points": grid.point_count}
    it_block = cfg.get("iteration", {})
    return {
        "status": tr.status,
        "iterations": tr.iteration_count,
        "final_residual": tr.final_residual,
        "final_factor_discrepancy": None if np.isnan(tr.final_factor_discrepancy)
        else tr.final_factor_discrepancy,
        "engine": engine,
        "p": problem.degree,
        "gamma": factor.gamma if factor is not None else None,
        "q": factor.degree if factor is not None else None,
        "factor": factor.descriptor if factor is not None else None,
        "problem": {"family": problem.name, **problem.params},
        "grid": grid_meta,
        "iteration_config": {
            "max_iterations": it_block.get("max_iterations", 500),
            "residual_tolerance": it_block.get("residual_tolerance", 1e-12),
            "factor_tolerance": it_block.get("factor_tolerance", 1e-13),
            "divergence_guard": it_block.get("divergence_guard", 1e8),
            "stop_rule": it_block.get("stop_rule", "residual"),
        },
        "seed": cfg.get("seed"),
    }


# ---------------------------------------------------------------------------
# commands


def _run_engine(cfg: dict, problem, factor, seed: Field, itconfig: IterationConfig):
    engine = cfg.get("iteration", {}).get("engine", "stabilized")
    if engine == "stabilized":
        return solve(problem, factor, seed, itconfig), engine
    if engine == "newton":
        return newton_solve(problem, seed, itconfig), engine
    raise ConfigError(f"iteration.engine: unknown engine {engine!r}")


def _solve_outputs(outdir: Path, cfg: dict, problem, factor, result: SolveResult, engine: str) -> None:
    write_trace_csv(outdir / "trace.csv", result)
    write_profile_csv(outdir / "profile.csv", result.final)
    if isinstance(problem.grid, Grid2D):
        write_cross_sections(outdir, result.final)
    _json_dump(outdir / "summary.json", summary_payload(cfg, problem, factor, result, engine))


def cmd_solve(cfg: dict, outdir: Path) -> int:
    problem = build_problem(cfg)
    factor = build_factor(cfg, problem)
    itconfig = build_iteration_config(cfg)
    seed = build_seed(cfg, problem)
    result, engine = _run_engine(cfg, problem, factor, seed, itconfig)
    _solve_outputs(outdir, cfg, problem, factor, result, engine)
    return 0


def _resolve_state(cfg: dict, problem, factor, itconfig) -> tuple[Field, SolveResult | None, str]:
    diag = cfg.get("diagnostics", {})
    state_kind = diag.get("state", "solve")
    if state_kind == "exact":
        if problem.exact_solution is None:
            raise ConfigError("diagnostics.state: problem has no exact solution oracle")
        return problem.exact_solution(), None, "exact"
    if state_kind == "file":
        path = diag.get("state_path")
        if not path:
            raise ConfigError("diagnostics.state_path: required when state is 'file'")
        if not Path(path).exists():
            raise FileNotFoundError(f"state file not found: {path}")
        return read_profile_csv(path, problem), None, "file"
    if state_kind == "solve":
        seed = build_seed(cfg, problem)
        result, engine = _run_engine(cfg, problem, factor, seed, itconfig)
        return result.final, result, engine
    raise ConfigError(f"diagnostics.state: unknown state {state_kind!r}")


def cmd_spectrum(cfg: dict, outdir: Path) -> int:
    problem = build_problem(cfg)
    factor = build_factor(cfg, problem)
    itconfig = build_iteration_config(cfg)
    diag = cfg.get("diagnostics", {})
    k = int(diag.get("spectrum_k", 6))

    state, result, engine = _resolve_state(cfg, problem, factor, itconfig)
    if result is not None:
        _solve_outputs(outdir, cfg, problem, factor, result, engine)

    seed = None
    if "seed" in cfg:
        try:
            seed = build_seed(cfg, problem)
        except ConfigError:
            seed = None
    spec_S = diagnostics.iteration_matrix_spectrum(problem, state, k, seed=seed)
    spec_F = diagnostics.jacobian_spectrum(problem, factor, state, k)
    _json_dump(outdir / "spectrum_S.json", spec_S.to_json_dict())
    _json_dump(outdir / "spectrum_F.json", spec_F.to_json_dict())

    hypothesis = dict(spec_S.hypothesis or {})
    hypothesis["verdict"] = (
        "hypotheses (i)-(ii) satisfied" if hypothesis.get("satisfied")
        else "hypothesis (ii) violated" if not hypothesis.get("ii_rest_within_unit_modulus", True)
        else "hypothesis (i) violated"
    )
    shift = diagnostics.spectrum_shift_check(spec_S, spec_F, problem.degree,
                                             factor.degree)
    hypothesis["spectrum_shift_check"] = shift.to_json_dict()
    _json_dump(outdir / "hypothesis_report.json", hypothesis)
    return 0


def cmd_continue(cfg: dict, outdir: Path) -> int:
    problem_block = _require(cfg, "problem", "config")
    if problem_block.get("family") != "benjamin_lump":
        raise ConfigError("continuation.family: only benjamin_lump supports Gamma continuation")
    cont = _require(cfg, "continuation", "config")
    values = tuple(float(v) for v in _require(cont, "values", "continuation"))
    try:
        path = HomotopyPath(values=values, max_bisections=int(cont.get("max_bisections", 4)))
    except ValueError as exc:
        raise ConfigError(f"continuation: {exc}") from None

    grid = build_grid(problem_block)
    if not isinstance(grid, Grid2D):
        raise ConfigError("problem.grid: benjamin_lump needs a 2D grid")
    sound_speed = float(_require(problem_block, "sound_speed", "problem"))
    family = lambda g: problems.benjamin_lump(g, sound_speed, grid)

    base_problem = family(values[0])
    descriptor = _require(_require(cfg, "factor", "config"), "descriptor", "factor")
    try:
        factors.from_descriptor(descriptor, base_problem)  # validate early
    except (factors.DescriptorError, factors.FactorPropertyError) as exc:
        raise ConfigError(f"factor.descriptor: {exc}") from None
    itconfig = build_iteration_config(cfg)
    seed = build_seed(cfg, base_problem)

    res: ContinuationResult = continue_solve(family, path, seed, descriptor, itconfig)
    stage_index = []
    for i, stage in enumerate(res.stages):
        sub = outdir / f"stage_{i:03d}_gamma_{stage.parameter_value:.6f}"
        sub.mkdir(parents=True, exist_ok=True)
        stage_problem = family(stage.parameter_value)
        stage_factor = factors.from_descriptor(descriptor, stage_problem)
        stage_cfg = dict(cfg)
        if i > 0:
            stage_cfg["seed"] = {"kind": "warm_start",
                                 "from_stage": res.stages[i - 1].parameter_value}
        _solve_outputs(sub, stage_cfg, stage_problem, stage_factor, stage.result, "stabilized")
        stage_index.append({
            "directory": sub.name,
            "Gamma": stage.parameter_value,
            "requested": stage.requested,
            "status": stage.result.status,
            "iterations": stage.result.trace.iteration_count,
            "final_residual": stage.result.trace.final_residual,
        })
    _json_dump(outdir / "continuation.json", {
        "completed": res.completed,
        "failed_at": res.failed_at,
        "stages": stage_index,
    })
    return 0


def cmd_orbital(cfg: dict, outdir: Path) -> int:
    problem = build_problem(cfg)
    if problem.name != "nls_soliton":
        raise ConfigError("orbital.family: orbital experiments require nls_soliton")
    factor = build_factor(cfg, problem)
    itconfig = build_iteration_config(cfg)
    block = cfg.get("orbital", {})
    experiments = block.get("experiments")
    if not experiments:
        seed_block = cfg.get("seed", {})
        experiments = [{"eps1": seed_block.get("eps1", 0.0), "eps2": seed_block.get("eps2", 0.0)}]

    pblock = cfg["problem"]
    params = problems.SolitonParameters(sigma=float(pblock["sigma"]),
                                        lambda1=float(pblock["lambda1"]),
                                        lambda2=float(pblock["lambda2"]))
    exact = problem.exact_solution()
    index = []
    for exp in experiments:
        eps1 = float(exp.get("eps1", 0.0))
        eps2 = float(exp.get("eps2", 0.0))
        sub = outdir / f"run_eps1_{eps1:g}_eps2_{eps2:g}"
        sub.mkdir(parents=True, exist_ok=True)
        seed = exact + eps1 * exact.with_values(1j * exact.values) + eps2 * derivative(exact, 1)
        result = solve(problem, factor, seed, itconfig)
        run_cfg = dict(cfg)
        run_cfg["seed"] = {"kind": "exact_perturbed", "eps1": eps1, "eps2": eps2}
        _solve_outputs(sub, run_cfg, problem, factor, result, "stabilized")
        fit = diagnostics.orbit_match(result.final, params)
        payload = fit.to_json_dict()
        payload["eps1"], payload["eps2"] = eps1, eps2
        payload["status"] = result.status
        _json_dump(sub / "orbitfit.json", payload)
        index.append({"directory": sub.name, "eps1": eps1, "eps2": eps2,
                      "status": result.status})
    _json_dump(outdir / "orbital.json", {"experiments": index})
    return 0


# ---------------------------------------------------------------------------
# entry point


COMMANDS = {
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "continue": cmd_continue,
    "orbital": cmd_orbital,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="travwave",
        description="Stabilized fixed-point traveling-wave computations and spectral diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--config", help="path to a JSON run configuration")
        group.add_argument("--recipe", help="name of a bundled recipe configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_recipe(args.recipe) if args.recipe else load_config(args.config)
        outdir = output_dir(cfg, args.out)
        return COMMANDS[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 3
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
