"""``sssa`` command-line interface.

Subcommands::

    sssa generate --out DIR [--config gen.json] [--seed S]
    sssa solve    --dict dict.csv --signals signals.csv --out DIR [--method M ...]
    sssa bench    --out DIR [--config grid.json] [--jobs N] [--emit csv,pgm]
    sssa report   --in DIR [--out DIR] [--emit csv,pgm]

Values resolve as flag > config file > built-in default. Exit status: 0 ok,
1 usage error, 2 data or dimension error, 3 solver failure. Diagnostics go
to stderr; ``SSSA_LOG`` (error, info, debug) sets their verbosity.
"""
from __future__ import annotations

import argparse
import ast
import json
import logging
import os
import sys
from dataclasses import asdict, fields

import numpy as np

from . import __version__
from .baselines import GreedyConfig, ProxConfig, fista_group_lasso, fista_lasso, omp_columns, somp
from .bench import GridSpec, emit_report, load_cells, run_grid, save_cells
from .errors import DataError, SolverError
from .model import ProblemInstance, normalize_dictionary, read_matrix, write_matrix
from .solver import SolverConfig, multi_sssa_solve
from .synthgen import GenConfig, generate_dataset, write_dataset_dir

log = logging.getLogger("multisssa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _setup_logging():
    level = os.environ.get("SSSA_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "error"
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(levels[level])
    log.propagate = False


def _emit_list(s):
    formats = [f for f in s.split(",") if f]
    bad = set(formats) - {"csv", "pgm"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(sorted(bad))}")
    return formats


def _u64(s):
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sssa", description="Multi-channel fused-LASSO sparse coding (Multi-SSSA).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{generate,solve,bench,report}")
    sub.required = True

    def common(sp, out_required=True):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (repeatable)")

    def solver_flags(sp):
        sp.add_argument("--mu1", type=float)
        sp.add_argument("--mu2", type=float)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--iter-max", type=int)
        sp.add_argument("--k-max", type=int)

    g = sub.add_parser("generate", help="write a synthetic train/test dataset")
    common(g)
    g.add_argument("--seed", type=_u64)

    s = sub.add_parser("solve", help="decompose one signal matrix")
    common(s)
    s.add_argument("--dict", required=True, help="C x N dictionary CSV")
    s.add_argument("--signals", required=True, help="C x T signal CSV")
    s.add_argument("--method", default="multi-sssa",
                   choices=["multi-sssa", "omp", "somp", "lasso", "group-lasso"])
    s.add_argument("--lambda1", type=float, help="l1 weight (lasso/group-lasso: the only weight)")
    s.add_argument("--lambda2", type=float, help="TV weight (multi-sssa)")
    s.add_argument("--max-atoms", type=int, help="support size for omp/somp")
    solver_flags(s)

    b = sub.add_parser("bench", help="run the competence-map grid")
    common(b)
    b.add_argument("--seed", type=_u64)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--emit", type=_emit_list, default=[])
    solver_flags(b)

    r = sub.add_parser("report", help="render maps from a bench directory")
    r.add_argument("--in", dest="indir", required=True)
    r.add_argument("--out", help="output directory (default: --in)")
    r.add_argument("--emit", type=_emit_list, default=["csv"])
    return p


def _load_config(path) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise DataError(f"{path}: top level must be an object")
    return cfg


def _apply_sets(cfg: dict, sets) -> dict:
    """Apply ``a.b=value`` overrides; values parse as Python/JSON literals."""
    for item in sets:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return cfg


def _solver_overrides(args) -> dict:
    names = {"mu1": "mu1", "mu2": "mu2", "eps": "eps", "iter_max": "iter_max", "k_max": "k_max"}
    return {k: getattr(args, a) for a, k in names.items() if getattr(args, a, None) is not None}


def _check_keys(d, cls, where):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise DataError(f"{where}: unknown field(s) {sorted(unknown)}")


def cmd_generate(args) -> int:
    cfg = _apply_sets(_load_config(args.config), args.set)
    if args.seed is not None:
        cfg["seed"] = args.seed
    _check_keys(cfg, GenConfig, "generate config")
    gen = GenConfig(**cfg)
    train = generate_dataset(gen, 0)
    test = generate_dataset(gen, 1, train.dictionary)
    write_dataset_dir(args.out, train, test)
    log.info("wrote %d train + %d test pairs to %s", gen.K, gen.K, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _apply_sets(_load_config(args.config), args.set)
    Phi = read_matrix(args.dict)
    Y = read_matrix(args.signals)
    if Phi.shape[0] != Y.shape[0]:
        raise DataError(
            f"dimension mismatch: dictionary {args.dict} has C={Phi.shape[0]} rows "
            f"but signals {args.signals} have C={Y.shape[0]} rows"
        )
    if Y.shape[1] < 2 and args.method == "multi-sssa":
        raise DataError(f"signals need T >= 2 columns, got T={Y.shape[1]}")
    D = normalize_dictionary(Phi)
    stats = {"method": args.method}
    if args.method == "multi-sssa":
        known = {f.name for f in fields(SolverConfig)}
        scfg = {k: v for k, v in cfg.items() if k in known}
        if args.lambda1 is not None:
            scfg["lam1"] = args.lambda1
        if args.lambda2 is not None:
            scfg["lam2"] = args.lambda2
        scfg.update(_solver_overrides(args))
        sc = SolverConfig(**scfg)
        sol = multi_sssa_solve(ProblemInstance.from_arrays(D, Y), sc)
        X = sol.X
        stats.update(
            config=asdict(sc),
            iterations=sol.iterations,
            converged=sol.converged,
            residual_A=sol.residual_A,
            residual_B=sol.residual_B,
            objective_trace=sol.objective_trace.tolist(),
        )
    elif args.method in ("omp", "somp"):
        k = args.max_atoms if args.max_atoms is not None else cfg.get("max_atoms", min(D.C, D.N))
        gc = GreedyConfig(max_atoms=int(k))
        X = omp_columns(Y, D, gc) if args.method == "omp" else somp(Y, D, gc)
        stats.update(config=asdict(gc))
    else:
        lam = args.lambda1 if args.lambda1 is not None else cfg.get("lam", 0.1)
        pc = ProxConfig(lam=lam, **{k: v for k, v in cfg.items() if k in ("max_iters", "rel_tol")})
        X = (fista_lasso if args.method == "lasso" else fista_group_lasso)(Y, D, pc)
        stats.update(config=asdict(pc))
    if not np.all(np.isfinite(X)):
        raise SolverError("solver returned non-finite coefficients")
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "coeffs.csv"), X)
    with open(os.path.join(args.out, "solve_stats.json"), "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _apply_sets(_load_config(args.config), args.set)
    if args.seed is not None:
        cfg.setdefault("gen", {})["seed"] = args.seed
    over = _solver_overrides(args)
    if over:
        cfg.setdefault("solver", {}).update(over)
    _check_keys(cfg, GridSpec, "bench config")
    try:
        spec = GridSpec.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bench config: {exc}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    results = run_grid(spec, jobs=args.jobs)
    save_cells(results, spec, args.out)
    emit_report(results, args.out, args.emit, spec.shape)
    return EXIT_OK


def cmd_report(args) -> int:
    if not os.path.isdir(args.indir):
        raise DataError(f"input directory not found: {args.indir}")
    spec, results = load_cells(args.indir)
    emit_report(results, args.out or args.indir, args.emit, spec.shape)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "report": cmd_report}


def dispatch(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"sssa: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"sssa: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
