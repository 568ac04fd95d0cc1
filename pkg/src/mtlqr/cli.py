"""Command-line front end.

Subcommands:
  gen       emit a tasks JSON array for a configured collection
  run       full experiment (descend, certify, validate, write output files)
  certify   pair certificates and heterogeneity profile for tasks + K
  validate  recompute the bound report from an existing run directory
  report    summary table (TSV) from an existing run directory

Exit codes: 0 success, 1 usage error, 2 numeric/instability failure,
3 validation failure. Stdout carries machine-parseable output only; human
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys

import jsonschema
import numpy as np

from . import bench
from .bisim import certify_all_pairs, hetero_profile
from .lqr import NonStabilizableError, Task, dare_solve
from .matops import (
    DomainError,
    DimensionError,
    InstabilityError,
    NumericError,
    SymmetryError,
    Tolerances,
)
from .policy_grad import PGConfig
from .serialize import dump_json, dumps_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we own the exit codes
        raise UsageError(message)


def _load_schema() -> dict:
    text = importlib.resources.files("mtlqr").joinpath("config.schema.json").read_text()
    return json.loads(text)


def load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, _load_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationFailure(f"config {path} failed schema validation: "
                                f"{exc.message} (at {'/'.join(map(str, exc.path))})") from exc
    return cfg


def _tolerances(cfg: dict) -> Tolerances:
    overrides = cfg.get("tolerances", {})
    return Tolerances(**overrides) if overrides else Tolerances()


def _tasks_from_config(cfg: dict) -> list[Task]:
    if "tasks" in cfg:
        return [Task.from_json(t) for t in cfg["tasks"]]
    missing = [k for k in ("family", "n_tasks", "seed") if k not in cfg]
    if missing:
        raise ValidationFailure(
            f"config must provide either an explicit task list or "
            f"family/n_tasks/seed (missing {missing})")
    return bench.generate_tasks(cfg["family"], cfg["seed"], cfg["n_tasks"])


def _pg_config(cfg: dict) -> PGConfig:
    return PGConfig(
        alpha=cfg.get("alpha", 0.01),
        max_iters=cfg.get("max_iters", PGConfig.max_iters),
        grad_tol=cfg.get("grad_tol", PGConfig.grad_tol),
        log_bisim_every=cfg.get("log_bisim_every", 0),
        beta=tuple(cfg["beta"]) if "beta" in cfg else None,
        log_every=cfg.get("log_every", 1),
    )


def _apply_overrides(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "alpha", None) is not None:
        cfg["alpha"] = args.alpha
    if getattr(args, "mode", None) is not None:
        cfg["mode"] = args.mode
    if getattr(args, "jobs", None) is not None:
        cfg["jobs"] = args.jobs
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _cmd_gen(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    tasks = _tasks_from_config(cfg)
    _emit(dumps_json([t.to_json() for t in tasks]), args.out_file)
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out_dir = args.out or cfg.get("output_dir")
    if not out_dir:
        raise UsageError("run requires an output directory (--out or output_dir)")
    tasks = _tasks_from_config(cfg)  # ensures family/n/seed or inline tasks
    exp = bench.ExperimentConfig(
        family=cfg.get("family", "inline"),
        n_tasks=len(tasks),
        seed=cfg.get("seed", 0),
        pg=_pg_config(cfg),
        collections=cfg.get("collections", 1),
        mode=cfg.get("mode", "best"),
        jobs=cfg.get("jobs", 1),
        tolerances=_tolerances(cfg),
    )
    summary = bench.run_experiment(exp, out_dir, tasks=tasks)
    if exp.collections > 1:
        stats = bench.collection_stats(exp)
        dump_json(stats, os.path.join(out_dir, "collections.json"))
        summary["files"] = summary["files"] + ["collections.json"]
    sys.stdout.write(dumps_json(summary))
    return EXIT_OK


def _cmd_certify(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    tasks = _tasks_from_config(cfg)
    tol = _tolerances(cfg)
    mode = cfg.get("mode", "best")
    if args.controller is not None:
        if not os.path.exists(args.controller):
            raise UsageError(f"controller file not found: {args.controller}")
        with open(args.controller, "r", encoding="utf-8") as fh:
            k = np.asarray(json.load(fh), dtype=np.float64)
    elif "K" in cfg:
        k = np.asarray(cfg["K"], dtype=np.float64)
    else:
        raise UsageError("certify requires a controller: config key 'K' or --controller")
    certs = certify_all_pairs(tasks, k, mode, tol, cfg.get("jobs", 1))
    b = hetero_profile(tasks, k, mode, tol, certificates=certs)
    payload = {
        "certificates": [c.to_json() for c in certs],
        "b": [{"task_id": t.id, "b": v} for t, v in zip(tasks, b)],
    }
    _emit(dumps_json(payload), args.out_file)
    return EXIT_OK


def _read_run_dir(run_dir: str) -> dict:
    manifest_path = os.path.join(run_dir, bench.MANIFEST_JSON)
    if not os.path.exists(manifest_path):
        raise UsageError(f"manifest not found: {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"manifest is not valid JSON: {exc}") from exc
    for key in ("tasks", "final_controller", "final_grad_norm", "converged", "config"):
        if key not in manifest:
            raise ValidationFailure(f"manifest missing key {key!r}")
    return manifest


def _cmd_validate(args) -> int:
    if args.out is None:
        raise UsageError("validate requires --out RUN_DIR")
    manifest = _read_run_dir(args.out)
    tasks = [Task.from_json(t) for t in manifest["tasks"]]
    if not manifest["converged"]:
        raise ValidationFailure(
            "run did not converge (final gradient norm "
            f"{manifest['final_grad_norm']}); bounds are not applicable")
    mode = args.mode or manifest["config"].get("mode", "best")
    k_f = np.asarray(manifest["final_controller"], dtype=np.float64)
    constants = [dare_solve(t) for t in tasks]
    report = bench.controller_bound_report(
        tasks, k_f, mode=mode, constants=constants,
        final_iter=int(manifest.get("final_iter", -1)),
        final_grad_norm=float(manifest["final_grad_norm"]))
    sys.stdout.write(dumps_json(report))
    return EXIT_OK


def _cmd_report(args) -> int:
    if args.out is None:
        raise UsageError("report requires --out RUN_DIR")
    bounds_path = os.path.join(args.out, bench.BOUNDS_JSON)
    if not os.path.exists(bounds_path):
        raise UsageError(f"bound report not found: {bounds_path}")
    with open(bounds_path, "r", encoding="utf-8") as fh:
        try:
            bounds = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"bounds.json is not valid JSON: {exc}") from exc
    if "tasks" not in bounds:
        raise ValidationFailure("bounds.json missing 'tasks'")
    cols = ["task_id", "gap", "b_i", "bound_asymptotic", "ratio_asymptotic", "passed"]
    lines = ["\t".join(cols)]
    for entry in bounds["tasks"]:
        missing = [c for c in cols if c not in entry]
        if missing:
            raise ValidationFailure(f"bound entry missing columns {missing}")
        lines.append("\t".join(str(entry[c]) for c in cols))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="mtlqr", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--mode", choices=["constructive", "optimized", "best"],
                       default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker cap")

    p_gen = sub.add_parser("gen", help="emit tasks JSON")
    common(p_gen)
    p_gen.add_argument("--out-file", default=None, help="write tasks here instead of stdout")
    p_gen.set_defaults(handler=_cmd_gen)

    p_run = sub.add_parser("run", help="full experiment")
    common(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_cert = sub.add_parser("certify", help="pair certificates for tasks + K")
    common(p_cert)
    p_cert.add_argument("--controller", default=None, help="JSON matrix file for K")
    p_cert.add_argument("--out-file", default=None, help="write JSON here instead of stdout")
    p_cert.set_defaults(handler=_cmd_certify)

    p_val = sub.add_parser("validate", help="bound report from an existing run")
    common(p_val, config_required=False)
    p_val.set_defaults(handler=_cmd_validate)

    p_rep = sub.add_parser("report", help="summary table from an existing run")
    common(p_rep, config_required=False)
    p_rep.set_defaults(handler=_cmd_report)
    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mtlqr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"mtlqr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailure as exc:
        print(f"mtlqr: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, DimensionError, SymmetryError) as exc:
        print(f"mtlqr: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InstabilityError, NumericError, NonStabilizableError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"mtlqr: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
