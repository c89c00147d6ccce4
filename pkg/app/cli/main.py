"""
qmc-tree command-line front-end.

    qmc-tree validate        --walk walk.json
    qmc-tree step            --walk walk.json --n 10
    qmc-tree pathdist        --walk walk.json --len 3
    qmc-tree sample          --walk walk.json --len 4 --count 1000000 --seed 7
    qmc-tree recurrence      --walk walk.json --projection '{"eps": 0.5, "xi": [1, 0], "complement": true}'
    qmc-tree accessibility   --walk walk.json --e '{...}' --f '{...}' --max-m 8
    qmc-tree paper-examples          (alias: worked-examples)

Every command prints a JSON summary on stdout and, with --out, writes its
report files there. Exit status: 0 on success, 1 on numerical, validation or
assertion failures, 2 on schema and usage errors.
"""

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app import __version__
from app.cli.config import ProjectionSpec, RaySpec, RunConfig, load_run_config, load_walk, read_json
from app.cli.worked_examples import run_worked_examples
from app.core.errors import AssertionMismatch, DegenerateProjection, QMCTreeError, UsageError, WalkValidationError
from app.core.logger import configure_logging, logger
from app.linalg.operators import decode_matrix
from app.models.walk import WalkSpec
from app.oracle.paths import enumerate_path_distribution
from app.qmc.state import homogeneous_root_state
from app.recurrence.decide import decide_E_accessibility, decide_E_recurrence, decide_phi_accessibility, decide_phi_recurrence
from app.tree.geometry import Ray
from app.walk.oqrw import evolve, total_variation, validate
from app.walk.sampler import sample_trajectories

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMANDS = ("validate", "step", "pathdist", "sample", "recurrence", "accessibility", "paper-examples", "worked-examples")
EXAMPLE_COMMANDS = ("paper-examples", "worked-examples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmc-tree", description="Quantum Markov chains on Cayley trees from open quantum random walks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="Run config (JSON)")
    parser.add_argument("--walk", help="Walk document (JSON); overrides the config's walk")
    parser.add_argument("--out", help="Directory for report files")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging")
    parser.add_argument("--k", type=int, help="Branching order")
    parser.add_argument("--tolerance", type=float, help="zero_tol override; wins over QMC_TREE_TOLERANCE and config tolerances")
    parser.add_argument("--n", type=int, dest="steps", help="Channel iterations (step)")
    parser.add_argument("--len", type=int, dest="length", help="Path length (pathdist, sample)")
    parser.add_argument("--count", type=int, help="Trajectories (sample)")
    parser.add_argument("--seed", type=int, help="Sampler seed (sample)")
    parser.add_argument("--projection", help="Projection as inline JSON or a path (recurrence)")
    parser.add_argument("--e", help="Starting projection as inline JSON or a path (accessibility)")
    parser.add_argument("--f", help="Target projection as inline JSON or a path (accessibility)")
    parser.add_argument("--max-m", type=int, dest="max_m", help="Largest m tried (accessibility)")
    parser.add_argument("--omega0", help="Root state: JSON matrix path, 'homogeneous' or 'maximally-mixed'")
    parser.add_argument("--ray", help="Ray as 'prefix;period', e.g. '2,1;1,2'")
    return parser


def _json_arg(text: str) -> Any:
    stripped = text.strip()
    if stripped.startswith("{") or stripped.startswith("["):
        return json.loads(stripped)
    return read_json(stripped)


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates: Dict[str, Any] = {}
    for name in ("k", "steps", "length", "count", "seed", "max_m"):
        value = getattr(args, name)
        if value is not None:
            updates[name] = value
    for name in ("projection", "e", "f"):
        value = getattr(args, name)
        if value is not None:
            updates[name] = ProjectionSpec.model_validate(_json_arg(value))
    if args.ray is not None:
        ray = Ray.parse(args.ray)
        updates["ray"] = RaySpec(prefix=list(ray.prefix), period=list(ray.period))
    return RunConfig.model_validate({**dict(config), **updates})


def resolve_omega0(spec: WalkSpec, choice: Optional[str]) -> Optional[np.ndarray]:
    if choice is None:
        return spec.omega0
    if choice == "homogeneous":
        return homogeneous_root_state(spec)
    if choice == "maximally-mixed":
        return np.eye(spec.site_dim, dtype=np.complex128) / spec.site_dim
    return decode_matrix(read_json(choice))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Output helpers
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _path_key(path: Sequence[str]) -> str:
    return "-".join(path)


def _write_csv(out: Optional[Path], name: str, header: List[str], rows: Iterable[Sequence[Any]]) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"CLI: wrote {out / name}")


def _write_json(out: Optional[Path], name: str, payload: Any) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    logger.info(f"CLI: wrote {out / name}")


def _emit(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Commands
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def cmd_validate(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    report = validate(spec)
    payload = report.model_dump(mode="json")
    _write_json(out, "validation.json", payload)
    if not report.passed:
        raise WalkValidationError("walk failed validation", failures=report.failures, report=payload)
    _emit(payload)
    return EXIT_OK


def cmd_step(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    history = evolve(spec, config.steps)
    rows = [
        (n, label, float(np.real(np.trace(blocks[j]))))
        for n, blocks in enumerate(history)
        for j, label in enumerate(spec.labels)
    ]
    _write_csv(out, "step.csv", ["step", "label", "trace"], rows)
    final = history[-1]
    _emit({
        "steps": config.steps,
        "final_traces": {label: float(np.real(np.trace(final[j]))) for j, label in enumerate(spec.labels)},
        "total_trace": float(np.real(np.einsum("iaa->", final))),
    })
    return EXIT_OK


def cmd_pathdist(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    table = enumerate_path_distribution(spec, config.length)
    _write_csv(out, "pathdist.csv", ["path", "probability"], ((_path_key(p), prob) for p, prob in sorted(table.items())))
    _emit({"length": config.length, "paths": len(table), "total": sum(table.values()),
           "probabilities": {_path_key(p): prob for p, prob in sorted(table.items())}})
    return EXIT_OK


def cmd_sample(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    result = sample_trajectories(spec, config.length, config.count, config.seed)
    empirical = result.distribution()
    exact = enumerate_path_distribution(spec, config.length)
    tv = total_variation(empirical, exact)
    rows = [(_path_key(p), empirical.get(p, 0.0), result.counts.get(p, 0)) for p in sorted(set(exact) | set(empirical))]
    _write_csv(out, "sample.csv", ["path", "probability", "count"], rows)
    _emit({"length": config.length, "count": config.count, "seed": config.seed, "tv_distance": tv})
    return EXIT_OK


def cmd_recurrence(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    if config.projection is None:
        raise UsageError("recurrence needs a projection (--projection or 'projection')")
    e = config.projection.build(spec)
    ray = config.ray.build() if config.ray else None
    payload: Dict[str, Any] = {"E": decide_E_recurrence(spec, e, ray=ray).model_dump(mode="json", by_alias=True)}
    omega0 = resolve_omega0(spec, args.omega0)
    if omega0 is not None:
        try:
            payload["phi"] = decide_phi_recurrence(spec, e, omega0, ray=ray).model_dump(mode="json", by_alias=True)
        except DegenerateProjection as err:
            logger.warning(f"CLI: phi-recurrence skipped: {err}")
            payload["phi"] = err.to_dict()
    _write_json(out, "recurrence.json", payload)
    _emit(payload)
    return EXIT_OK


def cmd_accessibility(spec: WalkSpec, config: RunConfig, args, out: Optional[Path]) -> int:
    if config.e is None or config.f is None:
        raise UsageError("accessibility needs both projections (--e/--f or 'e'/'f')")
    e, f = config.e.build(spec), config.f.build(spec)
    ray = config.ray.build() if config.ray else None
    payload: Dict[str, Any] = {"E": decide_E_accessibility(spec, e, f, config.max_m, ray=ray).model_dump(mode="json")}
    omega0 = resolve_omega0(spec, args.omega0)
    if omega0 is not None:
        payload["phi"] = decide_phi_accessibility(spec, e, f, omega0, config.max_m, ray=ray).model_dump(mode="json")
    _write_json(out, "accessibility.json", payload)
    _emit(payload)
    return EXIT_OK


def cmd_worked_examples(out: Optional[Path]) -> int:
    results = run_worked_examples()
    payload = [r.model_dump(mode="json") for r in results]
    _write_json(out, "worked_examples.json", payload)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise AssertionMismatch(f"worked examples failed: {', '.join(failed)}", failed=failed, results=payload)
    _emit(payload)
    logger.info(f"CLI: all {len(results)} worked examples passed")
    return EXIT_OK


HANDLERS = {
    "validate": cmd_validate,
    "step": cmd_step,
    "pathdist": cmd_pathdist,
    "sample": cmd_sample,
    "recurrence": cmd_recurrence,
    "accessibility": cmd_accessibility,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        configure_logging("DEBUG")
    out = Path(args.out) if args.out else None
    try:
        if args.command in EXAMPLE_COMMANDS:
            return cmd_worked_examples(out)
        config, base = load_run_config(args.config)
        config = apply_overrides(config, args)
        pinned = {"zero_tol": args.tolerance} if args.tolerance is not None else None
        spec = load_walk(config, base, args.walk, pinned=pinned)
        return HANDLERS[args.command](spec, config, args, out)
    except ValidationError as e:
        _emit({"error": "schema_error", "message": str(e), "details": {"errors": json.loads(e.json())}})
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as e:
        _emit({"error": "input_error", "message": str(e), "details": {}})
        return EXIT_USAGE
    except UsageError as e:
        _emit(e.to_dict())
        return EXIT_USAGE
    except QMCTreeError as e:
        logger.error(f"CLI: {e.code}: {e}")
        _emit(e.to_dict())
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
