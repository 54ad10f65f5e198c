"""Command-line runner: ``fluxtube run|sweep|list-models|schema``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from .config import ExperimentConfig, config_schema, dump_config, load_config
from .gauge import GaugeError
from .lattice import GeometryError
from .models import DEFAULT_PARAMS, MODEL_NAMES, ModelError, model_orbitals
from .pipelines import (EXIT_CONFIG, EXIT_INDETERMINATE, EXIT_OK, EXIT_VIOLATION,
                        run_experiment, run_sweep)
from .spectral import SpectralError
from .symmetry import InconsistentSymmetryError, InvariantViolation

log = logging.getLogger("fluxtube")
SIG_DIGITS = 12


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


def to_jsonable(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return round_sig(x)
    if isinstance(obj, complex):
        return [round_sig(obj.real), round_sig(obj.imag)]
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([round_sig(v) if isinstance(v, float) else v for v in r])


def _setup_logging(out: Path, quiet: bool) -> None:
    log.handlers.clear()
    log.setLevel(logging.INFO)
    fmt = logging.Formatter("%(levelname)s %(message)s")
    fh = logging.FileHandler(out / "run.log", mode="w")
    fh.setFormatter(fmt)
    log.addHandler(fh)
    if not quiet:
        sh = logging.StreamHandler(sys.stderr)
        sh.setFormatter(fmt)
        log.addHandler(sh)


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seeds is not None:
        d = cfg.model_dump()
        d["disorder"]["seeds"] = list(range(args.seeds))
        cfg = ExperimentConfig.model_validate(d)
    return cfg


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    out = Path(args.out or cfg.output or "fluxtube_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _execute(args, action) -> int:
    try:
        cfg = _load(args)
    except (ValidationError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args, cfg)
    _setup_logging(out, args.quiet)
    log.info("fluxtube %s", _version())
    log.info("config:\n%s", dump_config(cfg))
    (out / "config.yaml").write_text(dump_config(cfg))
    try:
        return action(cfg, out)
    except (ValidationError, ModelError, GeometryError, GaugeError, InconsistentSymmetryError) as exc:
        log.error("invalid experiment: %s", exc)
        write_json(out / "result.json", {"error": str(exc), "exit_code": EXIT_CONFIG})
        return EXIT_CONFIG
    except SpectralError as exc:
        log.error("estimator indeterminate: %s", exc)
        payload = {"error": str(exc), "exit_code": EXIT_INDETERMINATE}
        sv = getattr(exc, "singular_values", None)
        if sv is not None:
            payload["singular_values"] = sv
        write_json(out / "result.json", payload)
        return EXIT_INDETERMINATE
    except InvariantViolation as exc:
        log.error("invariant violation: %s", exc)
        write_json(out / "result.json", {"error": str(exc), "exit_code": EXIT_VIOLATION})
        return EXIT_VIOLATION


def cmd_run(args) -> int:
    def action(cfg, out):
        res = run_experiment(cfg, args.workers)
        payload = dict(res.result)
        payload.update(exit_code=res.exit_code, version=_version(),
                       config=cfg.model_dump(mode="json"))
        write_json(out / "result.json", payload)
        if res.curves:
            write_csv(out / "curves.csv", ["seed", "alpha", "index", "energy", "localization_weight"],
                      res.curves)
        if res.current_map:
            write_csv(out / "current_map.csv", ["n1", "n2", "value"], res.current_map)
        log.info("exit code %d", res.exit_code)
        return res.exit_code

    return _execute(args, action)


def cmd_sweep(args) -> int:
    def action(cfg, out):
        if cfg.sweep is None:
            log.error("config has no sweep section")
            return EXIT_CONFIG
        rows = run_sweep(cfg, args.workers)
        keys = [cfg.sweep.parameter]
        for r in rows:
            keys += [k for k in r if k not in keys]
        write_csv(out / "sweep.csv", keys, [[r.get(k, "") for k in keys] for r in rows])
        write_json(out / "result.json", {"rows": rows, "config": cfg.model_dump(mode="json"),
                                         "version": _version()})
        log.info("%d sweep points", len(rows))
        return EXIT_OK

    return _execute(args, action)


def cmd_list_models(args) -> int:
    for name in MODEL_NAMES:
        params = json.dumps(to_jsonable(DEFAULT_PARAMS[name]), sort_keys=True)
        print(f"{name}\torbitals={model_orbitals(name)}\t{params}")
    return EXIT_OK


def cmd_schema(args) -> int:
    print(json.dumps(config_schema(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluxtube",
                                description="Flux-tube spectral flow and index experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("run", cmd_run, "run one experiment"),
                               ("sweep", cmd_sweep, "run a parameter sweep")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", type=str, help="YAML experiment config")
        s.add_argument("--out", type=str, help="output directory")
        s.add_argument("--seeds", type=int, help="use seeds 0..N-1 for disorder")
        s.add_argument("--workers", type=int, default=1, help="worker threads")
        s.add_argument("--quiet", action="store_true", help="log to file only")
        s.set_defaults(func=fn)
    s = sub.add_parser("list-models", help="list models and default parameters")
    s.set_defaults(func=cmd_list_models)
    s = sub.add_parser("schema", help="print the config JSON schema")
    s.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
