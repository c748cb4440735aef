"""Experiment harness: ground-truth construction, perturbation, end-to-end
runs and parameter sweeps.

An experiment solves for an exact twisted derivation on a configured
algebra, perturbs it (and the twist maps) by a controlled amount, then runs
the direct method and verifies that the originals are recovered within the
guaranteed bounds.  Everything is seeded; identical configs produce
byte-identical reports up to the timestamp field.
"""

from __future__ import annotations

import copy
import csv
import datetime
import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import (
    COMPLEX,
    TernaryAlgebra,
    l2_norm,
    odd_polynomial_algebra,
    trivial_matrix_algebra,
)
from .errors import (
    ConfigError,
    DivergentControlError,
    EmptyDerivationSpaceError,
    NonConvergenceError,
)
from .maps import LinearMap, SignConvention, solve_exact_derivations
from .module import self_module
from .serialize import (
    algebra_from_json,
    control_from_json,
    linear_map_from_json,
    linear_map_to_json,
    read_json,
    write_json,
    write_trace_csv,
)
from .stability import EvaluableMap, check_hypothesis, direct_method_stabilize

MAP_NAMES = ("f", "g", "h", "k")


def thread_count() -> int:
    """Parallelism cap from TERNSTAB_THREADS; 0 or unset means auto."""
    raw = os.environ.get("TERNSTAB_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"TERNSTAB_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ConfigError("TERNSTAB_THREADS must be >= 0")
    return value if value > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class PerturbationSpec:
    """Defect added around a linear map: ``|b(x)| = theta |x|**p`` exactly.

    ``direction`` is either ``fixed`` (one unit vector for every point,
    defaulting to normalized all-ones) or ``hash`` (a deterministic
    pseudo-random unit vector keyed on the seed and the quantized input
    coordinates, so evaluation stays pure).
    """

    theta: float
    p: float
    direction: str = "fixed"
    vector: object = None
    seed: int = 0

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        if self.direction not in ("fixed", "hash"):
            raise ValueError("direction must be 'fixed' or 'hash'")


def _hash_unit(seed: int, x: np.ndarray, out_dim: int, complex_out: bool, out_norm):
    """Counter-based unit direction keyed on (seed, quantized coordinates)."""
    flat = np.ascontiguousarray(x, dtype=np.complex128).view(np.float64)
    quantized = np.round(flat, 9)
    digest = hashlib.blake2b(
        quantized.tobytes(),
        key=(seed % 2**64).to_bytes(8, "little"),
        digest_size=16,
    ).digest()
    gen = np.random.Generator(np.random.Philox(key=np.frombuffer(digest, dtype=np.uint64)))
    v = gen.standard_normal(out_dim)
    if complex_out:
        v = v + 1j * gen.standard_normal(out_dim)
    nv = out_norm(v)
    if nv == 0.0:
        v = np.ones(out_dim, dtype=v.dtype)
        nv = out_norm(v)
    return v / nv


def perturb_map(
    base: LinearMap,
    spec: PerturbationSpec,
    in_norm=None,
    out_norm=None,
) -> EvaluableMap:
    """Evaluator ``x -> base(x) + theta |x|**p u(x)`` with unit ``u``.

    Maps zero to zero, is deterministic under a fixed seed, and realizes the
    perturbation magnitude exactly in the output norm.
    """
    in_norm = l2_norm if in_norm is None else in_norm
    out_norm = l2_norm if out_norm is None else out_norm
    complex_out = np.iscomplexobj(base.matrix)
    fixed_unit = None
    if spec.direction == "fixed":
        raw = (
            np.ones(base.out_dim, dtype=base.matrix.dtype)
            if spec.vector is None
            else np.asarray(spec.vector, dtype=base.matrix.dtype)
        )
        if raw.shape != (base.out_dim,):
            raise ConfigError(
                f"fixed direction has shape {raw.shape}, expected ({base.out_dim},)"
            )
        nv = out_norm(raw)
        if nv == 0.0:
            raise ConfigError("fixed direction must be a nonzero vector")
        fixed_unit = raw / nv

    def evaluate(x):
        x = np.asarray(x)
        out = base(x)
        size = in_norm(x)
        if spec.theta == 0.0 or size == 0.0:
            return out
        unit = (
            fixed_unit
            if fixed_unit is not None
            else _hash_unit(spec.seed, x, base.out_dim, complex_out, out_norm)
        )
        return out + (spec.theta * size**spec.p) * unit

    return EvaluableMap(base.in_dim, base.out_dim, evaluate, kind="linear-plus-perturbation")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    raw: dict
    algebra: TernaryAlgebra
    map_candidates: list
    signs: SignConvention
    mode: str
    control_spec: dict
    perturbations: dict
    tol: float
    max_iter: int
    seed: int
    lambda_grid: int
    samples: dict
    rank_tol: float
    pick: int
    on_empty: str
    out_dir: Path | None


def _build_algebra(spec: dict, base_dir: Path) -> TernaryAlgebra:
    if "file" in spec:
        path = base_dir / spec["file"]
        if not path.exists():
            raise ConfigError(f"algebra file {path} does not exist")
        return algebra_from_json(read_json(path))
    builder = spec.get("builder")
    field_tag = spec.get("field", "real")
    if builder == "trivial-matrix":
        return trivial_matrix_algebra(int(spec.get("m", 2)), field_tag)
    if builder == "odd-poly":
        return odd_polynomial_algebra(int(spec.get("cap", 3)), field_tag)
    raise ConfigError(f"unknown algebra builder {builder!r}")


def _build_map(spec, alg: TernaryAlgebra, base_dir: Path) -> LinearMap:
    if spec == "identity":
        return LinearMap.identity(alg.dim, alg.dtype)
    if isinstance(spec, dict):
        if "file" in spec:
            path = base_dir / spec["file"]
            if not path.exists():
                raise ConfigError(f"map file {path} does not exist")
            return linear_map_from_json(read_json(path))
        if "matrix" in spec:
            return linear_map_from_json(
                {"in_dim": alg.dim, "out_dim": alg.dim, "matrix": spec["matrix"]}
            )
        if "random_seed" in spec:
            rng = np.random.default_rng(int(spec["random_seed"]))
            m = rng.standard_normal((alg.dim, alg.dim))
            if alg.field == COMPLEX:
                m = m + 1j * rng.standard_normal((alg.dim, alg.dim))
            return LinearMap(m.astype(alg.dtype))
    raise ConfigError(f"cannot interpret map spec {spec!r}")


def _parse_perturbation(spec: dict) -> PerturbationSpec:
    return PerturbationSpec(
        theta=float(spec.get("theta", 0.0)),
        p=float(spec.get("p", 0.0)),
        direction=spec.get("direction", "fixed"),
        vector=spec.get("vector"),
        seed=int(spec.get("seed", 0)),
    )


DEFAULT_SAMPLES = {
    "bound_points": 100,
    "identity_triples": 100,
    "hypothesis_tuples": 40,
    "linearity_points": 5,
}


def load_config(source) -> ExperimentConfig:
    """Parse an experiment config from a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        raw = read_json(path)
        base_dir = path.parent
    else:
        raw = dict(source)
        base_dir = Path.cwd()

    try:
        algebra = _build_algebra(raw["algebra"], base_dir)
    except KeyError:
        raise ConfigError("config needs an 'algebra' section") from None
    mode = raw.get("mode", "lie")
    if mode not in ("lie", "jordan"):
        raise ConfigError(f"mode must be 'lie' or 'jordan', got {mode!r}")
    control_spec = raw.get("control", {"kind": "power", "theta": 0.0, "p": 0.0})
    expected_arity = 5 if mode == "lie" else 3
    if int(control_spec.get("arity", expected_arity)) != expected_arity:
        raise ConfigError(f"{mode} mode needs a control of arity {expected_arity}")
    control_spec = {**control_spec, "arity": expected_arity}

    tol = float(raw.get("tol", 1e-10))
    rank_tol = float(raw.get("derivation", {}).get("rank_tol", 1e-10))
    if tol <= 0 or rank_tol <= 0:
        raise ConfigError("tolerances must be positive")

    maps_spec = raw.get("maps", {"sigma": "identity", "tau": "identity", "xi": "identity"})
    candidates = [maps_spec] + list(raw.get("fallback_maps", []))
    map_candidates = []
    for cand in candidates:
        map_candidates.append(
            tuple(_build_map(cand.get(n, "identity"), algebra, base_dir) for n in ("sigma", "tau", "xi"))
        )

    pert_raw = raw.get("perturbation", {})
    perturbations = {
        name: _parse_perturbation(pert_raw.get(name, {})) for name in MAP_NAMES
    }

    samples = {**DEFAULT_SAMPLES, **raw.get("samples", {})}
    # input files resolve against the config's directory, output paths
    # against the working directory
    out_spec = raw.get("out", {})
    out_dir = Path(out_spec["dir"]) if "dir" in out_spec else None

    return ExperimentConfig(
        raw=raw,
        algebra=algebra,
        map_candidates=map_candidates,
        signs=SignConvention.from_sequence(raw.get("signs", [1, 1, 1])),
        mode=mode,
        control_spec=control_spec,
        perturbations=perturbations,
        tol=tol,
        max_iter=int(raw.get("max_iter", 1000)),
        seed=int(raw.get("seed", 0)),
        lambda_grid=int(raw.get("lambda_grid", 16)),
        samples=samples,
        rank_tol=rank_tol,
        pick=int(raw.get("derivation", {}).get("pick", 0)),
        on_empty=raw.get("derivation", {}).get("on_empty", "zero"),
        out_dir=out_dir,
    )


# ---------------------------------------------------------------------------
# experiment run


@dataclass
class RunResult:
    config: ExperimentConfig
    report: dict
    all_passed: bool
    report_path: Path | None
    trace_paths: dict
    stabilization: object = None


def _max_abs(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if a.size else 0.0


def run_experiment(config, out_dir=None, write_files: bool = True) -> RunResult:
    """Full pipeline: solve ground truth, perturb, stabilize, verify, emit.

    The report is written as JSON (plus one convergence CSV per map) when
    ``write_files`` is set and an output directory is known.  Fatal errors
    (empty derivation space with ``on_empty: error``, divergent control,
    nonconvergent iteration) are recorded in the report under their codes
    instead of propagating, and force ``all_passed`` to false.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    alg = config.algebra
    mod = self_module(alg)
    errors: list = []
    notes: list = []

    truth = None
    chosen = None
    for sigma, tau, xi in config.map_candidates:
        basis = solve_exact_derivations(mod, sigma, tau, xi, config.signs, config.rank_tol)
        chosen = (sigma, tau, xi)
        if basis:
            if config.pick >= len(basis):
                errors.append(
                    {
                        "code": "CONFIG_INVALID",
                        "message": f"derivation pick {config.pick} out of range "
                        f"(space dimension {len(basis)})",
                    }
                )
            else:
                truth = basis[config.pick]
            break
    if truth is None and not errors:
        if config.on_empty == "error":
            exc = EmptyDerivationSpaceError(
                "no nonzero exact derivation for the configured maps and signs"
            )
            errors.append({"code": exc.code, "message": str(exc)})
        else:
            notes.append(
                {
                    "code": EmptyDerivationSpaceError.code,
                    "message": "derivation space is trivial; using the zero map "
                    "as ground truth",
                }
            )
            truth = LinearMap.zero(mod.dim, alg.dim, alg.dtype)

    report: dict = {
        "config_echo": config.raw,
        "recovered": None,
        "bounds": None,
        "hypothesis": None,
        "identity_residuals": None,
        "errors": errors,
        "notes": notes,
        "all_passed": False,
    }

    stab = None
    hypo = None
    trace_paths: dict = {}
    if not errors:
        sigma, tau, xi = chosen
        control = control_from_json(config.control_spec, norm=alg.norm_of)
        evaluables = {}
        for name, base, out_norm in (
            ("f", truth, mod.norm_of),
            ("g", sigma, alg.norm_of),
            ("h", tau, alg.norm_of),
            ("k", xi, alg.norm_of),
        ):
            evaluables[name] = perturb_map(
                base, config.perturbations[name], in_norm=alg.norm_of, out_norm=out_norm
            )
        try:
            if config.samples["hypothesis_tuples"] > 0:
                hypo = check_hypothesis(
                    evaluables["f"],
                    evaluables["g"],
                    evaluables["h"],
                    evaluables["k"],
                    control,
                    mod,
                    config.signs,
                    lambda_grid=config.lambda_grid,
                    samples=config.samples["hypothesis_tuples"],
                    seed=config.seed,
                    mode=config.mode,
                )
            stab = direct_method_stabilize(
                evaluables["f"],
                evaluables["g"],
                evaluables["h"],
                evaluables["k"],
                control,
                mod,
                config.signs,
                tol=config.tol,
                mode=config.mode,
                max_iter=config.max_iter,
                seed=config.seed,
                bound_points=config.samples["bound_points"],
                identity_triples=config.samples["identity_triples"],
                linearity_points=config.samples["linearity_points"],
            )
        except (DivergentControlError, NonConvergenceError) as exc:
            errors.append({"code": exc.code, "message": str(exc)})

    if stab is not None:
        stab.hypothesis = hypo
        sigma, tau, xi = chosen
        truth_error = {
            "D": _max_abs(stab.derivation.matrix - truth.matrix),
            "sigma": _max_abs(stab.sigma.matrix - sigma.matrix),
            "tau": _max_abs(stab.tau.matrix - tau.matrix),
            "xi": _max_abs(stab.xi.matrix - xi.matrix),
        }
        report["recovered"] = {
            "D": linear_map_to_json(stab.derivation),
            "sigma": linear_map_to_json(stab.sigma),
            "tau": linear_map_to_json(stab.tau),
            "xi": linear_map_to_json(stab.xi),
            "iterations": stab.iterations,
            "convergence_rates": stab.convergence_rates,
            "linearity_max": stab.linearity_max,
            "truth_error": truth_error,
            "failures": stab.failures,
        }
        report["bounds"] = {
            "max_violation": stab.max_bound_violation,
            "points": stab.bound_points,
            "phi_tilde_values": stab.phi_tilde_values,
            "passed": stab.bounds_ok,
        }
        report["identity_residuals"] = {
            "mode": stab.mode,
            "max_normalized": stab.max_identity_residual,
            "threshold": stab.identity_tol,
            "triples": stab.identity_triples,
            "passed": stab.identity_ok,
        }
        report["hypothesis"] = hypo.to_dict() if hypo is not None else None
        report["all_passed"] = stab.all_passed and not errors

    target_dir = Path(out_dir) if out_dir is not None else config.out_dir
    report_path = None
    if write_files and target_dir is not None:
        report_with_stamp = dict(report)
        report_with_stamp["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc
        ).isoformat()
        report_path = write_json(target_dir / "report.json", report_with_stamp)
        if stab is not None:
            for name, rows in stab.traces.items():
                trace_paths[name] = write_trace_csv(
                    target_dir / f"trace_{name}.csv", rows
                )

    return RunResult(
        config=config,
        report=report,
        all_passed=bool(report["all_passed"]),
        report_path=report_path,
        trace_paths=trace_paths,
        stabilization=stab,
    )


# ---------------------------------------------------------------------------
# parameter sweep

SWEEP_HEADER = (
    "param",
    "value",
    "all_passed",
    "max_iterations",
    "max_bound_violation",
    "max_identity_residual",
)


def _sweep_config(raw: dict, param: str, value: float) -> dict:
    clone = copy.deepcopy(raw)
    if param == "p":
        clone.setdefault("control", {})["p"] = value
        for name in MAP_NAMES:
            clone.setdefault("perturbation", {}).setdefault(name, {})["p"] = value
    elif param == "theta":
        clone.setdefault("control", {})["theta"] = value
        for name in MAP_NAMES:
            clone.setdefault("perturbation", {}).setdefault(name, {})["theta"] = value
    elif param == "tol":
        clone["tol"] = value
    else:
        raise ConfigError(f"sweepable parameters are p, theta, tol; got {param!r}")
    clone.pop("out", None)
    return clone


def run_sweep(config, param: str, values, out_csv=None) -> list:
    """One experiment per parameter value; one result row per point.

    Points run in parallel up to :func:`thread_count` workers; rows are
    ordered by the input values regardless of completion order.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    values = [float(v) for v in values]
    point_configs = [_sweep_config(config.raw, param, v) for v in values]

    def run_point(raw):
        return run_experiment(load_config(raw), write_files=False)

    workers = min(thread_count(), max(1, len(point_configs)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_point, point_configs))
    else:
        results = [run_point(raw) for raw in point_configs]

    rows = []
    for value, result in zip(values, results):
        stab = result.stabilization
        iterations = (
            max(max(its) for its in stab.iterations.values()) if stab is not None else -1
        )
        rows.append(
            {
                "param": param,
                "value": value,
                "all_passed": result.all_passed,
                "max_iterations": iterations,
                "max_bound_violation": stab.max_bound_violation if stab else float("nan"),
                "max_identity_residual": stab.max_identity_residual if stab else float("nan"),
            }
        )

    if out_csv is not None:
        path = Path(out_csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_HEADER)
            for row in rows:
                writer.writerow([row[key] for key in SWEEP_HEADER])
    return rows


def parse_sweep_spec(spec: str):
    """Parse ``name=start:stop:step`` into a name and an inclusive value list."""
    try:
        name, rest = spec.split("=", 1)
        start, stop, step = (float(part) for part in rest.split(":"))
    except ValueError:
        raise ConfigError(
            f"sweep spec must look like p=0.1:0.9:0.1, got {spec!r}"
        ) from None
    if step <= 0:
        raise ConfigError("sweep step must be positive")
    values = []
    v = start
    while v <= stop + 1e-12:
        values.append(round(v, 12))
        v += step
    return name.strip(), values
