"""Command-line driver: one JSON config in, report.json / results.csv / manifest.json out.

Exit status: 0 success, 1 bad configuration, 2 numerical failure or non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, linalg, oracle, reservoir, swap
from .errors import ParseError, QPurifyError
from .states import DensityOperator, as_density, maximally_mixed, pure, random_density, validate
from .subsystems import split_dimensions

COMMANDS = ("bound", "purify", "cool", "reservoir", "verify")
TRACE_TOL = 1e-6
NEG_TOL = 1e-10

SWAP_COLUMNS = ["d_S", "d_E", "d_F", "d_R", "epsilon_tilde", "epsilon_R", "epsilon_zero",
                "achieved_distance", "purity_out", "final_energy"]
RESERVOIR_COLUMNS = ["N", "entropy", "typical_dim", "typical_weight", "half_space_ok",
                     "epsilon_tilde_sorted", "epsilon_typical_protocol"]
VERIFY_COLUMNS = ["d_S", "d_E", "d_F", "d_R", "epsilon_tilde", "epsilon_zero", "best_epsilon",
                  "swap_epsilon", "n_restarts", "converged"]


class ConfigError(Exception):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    parameters: dict
    output_dir: Path
    base_dir: Path = field(default_factory=Path.cwd)


def parse_state_file(path) -> DensityOperator:
    """Read a state from a JSON density matrix or a whitespace-separated eigenvalue list."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        for key in ("dim", "entries"):
            if key not in data:
                raise ParseError(f"{path}: missing field '{key}'")
        try:
            return DensityOperator.from_dict(data)
        except QPurifyError as exc:
            raise ParseError(f"{path}: field 'entries': {exc}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            try:
                values.append((float(tok), lineno))
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: not a number: {tok!r}") from None
    return _diagonal_from_values(values, str(path))


def _diagonal_from_values(values, where: str) -> DensityOperator:
    if not values:
        raise ParseError(f"{where}: no eigenvalues given")
    for i, (v, line) in enumerate(values):
        if not math.isfinite(v) or v < -NEG_TOL:
            raise ParseError(f"{where}: line {line}, value {i}: invalid eigenvalue {v!r}")
    lam = np.clip(np.array([v for v, _ in values]), 0.0, None)
    total = float(lam.sum())
    if abs(total - 1.0) > TRACE_TOL:
        raise ParseError(f"{where}: eigenvalues sum to {total!r}, not 1 (tolerance {TRACE_TOL})")
    return validate(np.diag(lam / total))


def _int_range(spec, name: str) -> list[int]:
    if isinstance(spec, list):
        return [_as_int(v, name) for v in spec]
    if isinstance(spec, dict) and {"start", "stop"} <= spec.keys():
        start, stop = _as_int(spec["start"], name + ".start"), _as_int(spec["stop"], name + ".stop")
        step = _as_int(spec.get("step", 1), name + ".step")
        if step < 1:
            raise ConfigError(name + ".step", "must be >= 1")
        return list(range(start, stop + 1, step))
    if isinstance(spec, int) and not isinstance(spec, bool):
        return [spec]
    raise ConfigError(name, "expected a list of integers or a {start, stop, step} record")


def _as_int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, f"expected an integer, got {v!r}")
    return v


def _as_float(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(name, f"expected a finite number, got {v!r}")
    return float(v)


def _derived_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def _state(spec, name: str, cfg: ExperimentConfig, case: int, slot: int) -> DensityOperator:
    try:
        if isinstance(spec, list):
            return _diagonal_from_values([(_as_float(v, name), 1) for v in spec], name)
        if not isinstance(spec, dict):
            raise ConfigError(name, "expected an eigenvalue list or an object")
        if "file" in spec:
            return parse_state_file(cfg.base_dir / spec["file"])
        if "entries" in spec:
            return DensityOperator.from_dict(spec)
        if "random" in spec:
            r = spec["random"]
            dim = _as_int(r.get("dim"), name + ".random.dim")
            rank = _as_int(r.get("rank", dim), name + ".random.rank")
            return random_density(dim, rank, _derived_seed(cfg.seed, case, slot))
        if "pure" in spec:
            amps = np.asarray(spec["pure"], dtype=float)
            vec = amps[:, 0] + 1j * amps[:, 1] if amps.ndim == 2 else amps
            return pure(vec)
        if "mixed" in spec:
            return maximally_mixed(_as_int(spec["mixed"], name + ".mixed"))
    except ConfigError:
        raise
    except (QPurifyError, ValueError, OSError, KeyError, TypeError) as exc:
        raise ConfigError(name, str(exc)) from None
    raise ConfigError(name, "unrecognised state specification")


def _matrix(spec, name: str) -> np.ndarray:
    try:
        if isinstance(spec, dict) and "diag" in spec:
            return np.diag(np.asarray(spec["diag"], dtype=float)).astype(np.complex128)
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 3 and arr.shape[2] == 2:
            arr = arr[..., 0] + 1j * arr[..., 1]
        return linalg.hermitize(arr)
    except (QPurifyError, ValueError, TypeError) as exc:
        raise ConfigError(name, str(exc)) from None


def _cases(params: dict) -> list[tuple[int, dict]]:
    if "cases" in params:
        if not isinstance(params["cases"], list) or not params["cases"]:
            raise ConfigError("parameters.cases", "expected a non-empty list")
        return [(i, c) for i, c in enumerate(params["cases"])]
    return [(0, params)]


def _d_S(case: dict, name: str) -> int:
    if "d_S" not in case:
        raise ConfigError(name + ".d_S", "missing")
    d = _as_int(case["d_S"], name + ".d_S")
    if d < 1:
        raise ConfigError(name + ".d_S", "must be >= 1")
    return d


def _check_dims(d_S: int, rho_E: DensityOperator, name: str) -> None:
    if d_S > rho_E.dim:
        raise ConfigError(name + ".d_S", f"d_S={d_S} exceeds environment dimension {rho_E.dim}")
    if d_S * rho_E.dim > swap.MAX_JOINT_DIM:
        raise ConfigError(name + ".rho_E", f"joint dimension {d_S * rho_E.dim} exceeds {swap.MAX_JOINT_DIM}")


def build_tasks(cfg: ExperimentConfig) -> list[tuple]:
    """Resolve and validate every case; each task is a picklable tuple for :func:`_execute`."""
    p = cfg.parameters
    if not isinstance(p, dict):
        raise ConfigError("parameters", "expected an object")
    tasks = []
    if cfg.command == "reservoir":
        if "q" not in p:
            raise ConfigError("parameters.q", "missing")
        q = _as_float(p["q"], "parameters.q")
        eps = _as_float(p.get("eps_typ", reservoir.DEFAULT_EPS_TYP), "parameters.eps_typ")
        ns = _int_range(p.get("N"), "parameters.N")
        for n in ns:
            try:
                reservoir.ReservoirConfig(q, n, eps)
            except QPurifyError as exc:
                raise ConfigError("parameters", str(exc)) from None
            if n > reservoir.SORTED_MAX_N:
                raise ConfigError("parameters.N", f"N={n} exceeds {reservoir.SORTED_MAX_N}")
        return [("reservoir", q, n, eps) for n in ns]

    for i, case in _cases(p):
        name = f"parameters.cases[{i}]" if "cases" in p else "parameters"
        if not isinstance(case, dict):
            raise ConfigError(name, "expected an object")
        if "rho_E" not in case:
            raise ConfigError(name + ".rho_E", "missing")
        rho_E = _state(case["rho_E"], name + ".rho_E", cfg, i, 1)
        if cfg.command == "cool":
            h = _matrix(case.get("H_S"), name + ".H_S")
            d_S = h.shape[0]
        else:
            d_S = _d_S(case, name)
        _check_dims(d_S, rho_E, name)
        if cfg.command == "bound":
            tasks.append(("bound", d_S, rho_E.matrix))
        elif cfg.command in ("purify", "cool"):
            rho_S = _state(case.get("rho_S", {"mixed": d_S}), name + ".rho_S", cfg, i, 0)
            if rho_S.dim != d_S:
                raise ConfigError(name + ".rho_S", f"dimension {rho_S.dim} does not match d_S={d_S}")
            if cfg.command == "purify":
                tasks.append(("purify", d_S, rho_S.matrix, rho_E.matrix))
            else:
                tasks.append(("cool", d_S, rho_S.matrix, rho_E.matrix, h))
        elif cfg.command == "verify":
            if d_S * rho_E.dim > oracle.MAX_ORACLE_DIM:
                raise ConfigError(name + ".rho_E", f"d_S*d_E must be <= {oracle.MAX_ORACLE_DIM}")
            b = dict(case.get("budget", {}))
            b.setdefault("seed", cfg.seed)
            try:
                budget = oracle.OptimizerBudget(**b)
            except TypeError as exc:
                raise ConfigError(name + ".budget", str(exc)) from None
            if budget.n_restarts < 1:
                raise ConfigError(name + ".budget.n_restarts", "must be >= 1")
            tasks.append(("verify", d_S, rho_E.matrix, budget))
    return tasks


def _split_row(d_S: int, d_E: int) -> dict:
    s = split_dimensions(d_S, d_E)
    return {"d_S": s.d_S, "d_E": s.d_E, "d_F": s.d_F, "d_R": s.d_R}


def _execute(task: tuple) -> tuple[dict, dict]:
    kind = task[0]
    if kind == "bound":
        _, d_S, rho_E = task
        eps_t, eps_r, eps_0 = swap.thresholds(rho_E, d_S)
        row = {**_split_row(d_S, rho_E.shape[0]), "epsilon_tilde": eps_t, "epsilon_R": eps_r,
               "epsilon_zero": eps_0}
        return row, dict(row)
    if kind == "purify":
        _, d_S, rho_S, rho_E = task
        out, rep = swap.purify(rho_S, rho_E, d_S)
        row = {**_split_row(d_S, rho_E.shape[0]), "epsilon_tilde": rep.epsilon_tilde,
               "epsilon_R": rep.epsilon_R, "epsilon_zero": rep.epsilon_zero,
               "achieved_distance": rep.achieved_distance, "purity_out": rep.purity_out}
        return row, {**rep.to_dict(), "rho_out": out.to_dict()}
    if kind == "cool":
        _, d_S, rho_S, rho_E, h = task
        out, rep = swap.cool(rho_S, rho_E, h)
        pr = rep.purification
        row = {**_split_row(d_S, rho_E.shape[0]), "epsilon_tilde": pr.epsilon_tilde,
               "epsilon_R": pr.epsilon_R, "epsilon_zero": pr.epsilon_zero,
               "achieved_distance": pr.achieved_distance, "purity_out": pr.purity_out,
               "final_energy": rep.final_energy}
        return row, {**rep.to_dict(), "rho_out": out.to_dict()}
    if kind == "reservoir":
        _, q, n, eps = task
        row = reservoir.curve_row(q, n, eps)
        return row, dict(row)
    if kind == "verify":
        _, d_S, rho_E, budget = task
        res = oracle.verify_necessity(rho_E, d_S, budget)
        row = {**_split_row(d_S, rho_E.shape[0]), "epsilon_tilde": res.epsilon_tilde,
               "epsilon_zero": res.epsilon_zero, "best_epsilon": res.best_epsilon,
               "swap_epsilon": res.swap_epsilon, "n_restarts": res.n_restarts, "converged": res.converged}
        return row, res.to_dict()
    raise ValueError(kind)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else f"{v:.17g}"


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def render_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def load_config(path, output=None, seed=None) -> tuple[ExperimentConfig, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    command = raw.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}, got {command!r}")
    cfg_seed = seed if seed is not None else _as_int(raw.get("seed", 0), "seed")
    out = output if output is not None else raw.get("output_dir")
    if out is None:
        raise ConfigError("output_dir", "missing (give it in the config or with --output)")
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    cfg = ExperimentConfig(command, cfg_seed, raw.get("parameters", {}), Path(out), path.parent)
    return cfg, canonical


def run(cfg: ExperimentConfig, config_text: str = "", jobs: int = 1) -> int:
    """Run one experiment and write its outputs. Returns the process exit status."""
    try:
        tasks = build_tasks(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_execute, tasks))
        else:
            results = [_execute(t) for t in tasks]
    except QPurifyError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    columns = {"reservoir": RESERVOIR_COLUMNS, "verify": VERIFY_COLUMNS}.get(cfg.command, SWAP_COLUMNS)
    rows = [r for r, _ in results]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "results.csv").write_text(render_csv(columns, rows))
    report = {"command": cfg.command, "seed": cfg.seed, "version": __version__,
              "cases": [_json_safe(r) for _, r in results]}
    (cfg.output_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest = {
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seed": cfg.seed,
        "version": __version__,
        "command": cfg.command,
    }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    if cfg.command == "verify" and not all(r["converged"] for r in rows):
        print("oracle did not converge: best_epsilon outside [eps_0 - tol, eps~ + tol]", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qpurify", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--output", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for grid points")
    args = parser.parse_args(argv)
    try:
        cfg, canonical = load_config(args.config, args.output, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(cfg, canonical, max(1, args.jobs))


if __name__ == "__main__":
    sys.exit(main())
