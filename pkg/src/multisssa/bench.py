"""Relative-competence benchmark.

For every cell of an (n_a, duration) grid a train and a test dataset are
drawn over one fixed dictionary. Each method picks its hyperparameters on
the train set (lowest mean relative distance), is scored on the test set,
and every baseline is compared against Multi-SSSA with a paired t-test on
the per-signal distances.

Cell seeds are derived from the cell coordinates, so results do not depend
on the order or process in which cells are run.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .baselines import GreedyConfig, ProxConfig, fista_group_lasso, fista_lasso, omp_columns, somp
from .errors import DimensionMismatch, IncompleteGrid, SSSAError, ZeroReference
from .model import ProblemInstance
from .solver import SolverConfig, build_factors, multi_sssa_solve
from .stats import paired_t_test
from .synthgen import Dataset, GenConfig, derive_seed, generate_dataset, generate_dictionary

log = logging.getLogger(__name__)

SSSA = "multi-sssa"
METHODS = (SSSA, "omp", "somp", "lasso", "group-lasso")
ALPHA = 0.05
_DICT_KEY = 0xD1C7

_LAMBDAS = [1e-3, 1e-2, 1e-1, 1.0, 10.0]


def default_hyper_grids(N: int) -> dict:
    atoms = sorted({min(k, N) for k in (1, 2, 4, 8, 16, N)})
    return {
        SSSA: {"lam1": list(_LAMBDAS), "lam2": list(_LAMBDAS)},
        "omp": {"max_atoms": atoms},
        "somp": {"max_atoms": atoms},
        "lasso": {"lam": list(_LAMBDAS)},
        "group-lasso": {"lam": list(_LAMBDAS)},
    }


@dataclass(frozen=True)
class GridSpec:
    n_a_values: tuple = (5, 15, 25)
    duration_pairs: tuple = ((0.1, 0.15), (0.5, 0.55), (0.9, 0.95))
    gen: GenConfig = GenConfig(C=10, N=20, T=100, K=20)
    methods: tuple = METHODS
    hyper_grids: Optional[dict] = None
    solver: SolverConfig = SolverConfig()
    prox_max_iters: int = 5000
    prox_rel_tol: float = 1e-8

    def __post_init__(self):
        if not self.n_a_values or not self.duration_pairs or not self.methods:
            raise ValueError("grid lists must be non-empty")
        for lo, hi in self.duration_pairs:
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"bad duration pair ({lo}, {hi})")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if SSSA not in self.methods:
            raise ValueError(f"{SSSA} must be part of the method list")
        object.__setattr__(self, "n_a_values", tuple(int(v) for v in self.n_a_values))
        object.__setattr__(
            self, "duration_pairs",
            tuple((float(lo), float(hi)) for lo, hi in self.duration_pairs),
        )
        object.__setattr__(self, "methods", tuple(self.methods))
        grids = default_hyper_grids(self.gen.N)
        grids.update(self.hyper_grids or {})
        object.__setattr__(self, "hyper_grids", grids)

    @property
    def shape(self):
        return len(self.n_a_values), len(self.duration_pairs)

    def cells(self):
        return list(itertools.product(range(self.shape[0]), range(self.shape[1])))

    def grid_points(self, method) -> list:
        """Hyperparameter tuples for ``method``, in ascending lexicographic order."""
        g = self.hyper_grids[method]
        return sorted(itertools.product(*(g[k] for k in g)))

    def to_dict(self) -> dict:
        return {
            "n_a_values": list(self.n_a_values),
            "duration_pairs": [list(p) for p in self.duration_pairs],
            "gen": asdict(self.gen),
            "methods": list(self.methods),
            "hyper_grids": self.hyper_grids,
            "solver": asdict(self.solver),
            "prox_max_iters": self.prox_max_iters,
            "prox_rel_tol": self.prox_rel_tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        d = dict(d)
        if "gen" in d:
            d["gen"] = GenConfig(**d["gen"])
        if "solver" in d:
            d["solver"] = SolverConfig(**d["solver"])
        if "duration_pairs" in d:
            d["duration_pairs"] = tuple(tuple(p) for p in d["duration_pairs"])
        return cls(**d)


@dataclass
class MethodResult:
    hyper: tuple
    distances: list
    mean: float
    std: float


@dataclass
class Comparison:
    mean_diff: float  # multi-sssa mean - baseline mean
    t: float
    p: float
    significant: bool


@dataclass
class CellResult:
    na_index: int
    dur_index: int
    n_a: int
    d_min: float
    d_max: float
    valid: bool = True
    diagnostic: str = ""
    methods: dict = field(default_factory=dict)
    comparisons: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for m in d["methods"].values():
            m["hyper"] = list(m["hyper"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CellResult":
        d = dict(d)
        d["methods"] = {
            k: MethodResult(**{**v, "hyper": tuple(v["hyper"])}) for k, v in d["methods"].items()
        }
        d["comparisons"] = {k: Comparison(**v) for k, v in d["comparisons"].items()}
        return cls(**d)


def dist(X_true, X_est) -> float:
    """Relative Frobenius distance ``||X - X_est|| / ||X||``."""
    X_true = np.asarray(X_true, dtype=float)
    X_est = np.asarray(X_est, dtype=float)
    if X_true.shape != X_est.shape:
        raise DimensionMismatch(f"shapes differ: {X_true.shape} vs {X_est.shape}")
    ref = np.linalg.norm(X_true)
    if ref == 0.0:
        raise ZeroReference("reference coefficient matrix is zero")
    return float(np.linalg.norm(X_true - X_est) / ref)


class _Runner:
    """Applies one method with given hyperparameters to one signal matrix.

    Holds the per-cell Sylvester factors so a (lam1, lam2) sweep diagonalizes
    only once.
    """

    def __init__(self, spec: GridSpec, Phi: np.ndarray, T: int):
        self.spec = spec
        self.Phi = Phi
        self.T = T
        self._factors = None

    def factors(self):
        if self._factors is None:
            s = self.spec.solver
            self._factors = build_factors(self.Phi, self.T, s.mu1, s.mu2)
        return self._factors

    def __call__(self, method, hyper, Y):
        spec = self.spec
        if method == SSSA:
            lam1, lam2 = hyper
            cfg = replace(spec.solver, lam1=lam1, lam2=lam2)
            inst = ProblemInstance.from_arrays(self.Phi, Y)
            return multi_sssa_solve(inst, cfg, factors=self.factors()).X
        if method in ("omp", "somp"):
            cfg = GreedyConfig(max_atoms=int(hyper[0]))
            return omp_columns(Y, self.Phi, cfg) if method == "omp" else somp(Y, self.Phi, cfg)
        cfg = ProxConfig(lam=hyper[0], max_iters=spec.prox_max_iters, rel_tol=spec.prox_rel_tol)
        if method == "lasso":
            return fista_lasso(Y, self.Phi, cfg)
        return fista_group_lasso(Y, self.Phi, cfg)


def evaluate(runner, method, hyper, data: Dataset) -> list:
    return [dist(X, runner(method, hyper, Y)) for X, Y in zip(data.true_coeffs, data.signals)]


def hyper_search(method, train: Dataset, points, runner=None) -> tuple:
    """Grid point with the lowest mean train distance.

    ``points`` are tried in ascending lexicographic order and only a strictly
    better mean replaces the incumbent, so ties go to the smallest first
    hyperparameter, then the smallest second.
    """
    points = sorted(tuple(p) for p in points)
    if not points:
        raise ValueError("empty hyperparameter grid")
    if len(points) == 1:
        return points[0]
    if runner is None:
        runner = _Runner(GridSpec(gen=train.config), train.dictionary.atoms, train.config.T)
    best, best_mean = None, math.inf
    for p in points:
        m = float(np.mean(evaluate(runner, method, p, train)))
        log.debug("%s %s: train mean dist %.6g", method, p, m)
        if m < best_mean:
            best, best_mean = p, m
    return best


def cell_datasets(spec: GridSpec, na_index: int, dur_index: int):
    base = spec.gen
    D = generate_dictionary(base.C, base.N, derive_seed(base.seed, _DICT_KEY))
    d_min, d_max = spec.duration_pairs[dur_index]
    cfg = replace(
        base,
        n_a=spec.n_a_values[na_index],
        d_min=d_min,
        d_max=d_max,
        seed=derive_seed(base.seed, na_index, dur_index),
    )
    return generate_dataset(cfg, 0, D), generate_dataset(cfg, 1, D)


def run_cell(spec: GridSpec, coords) -> CellResult:
    i, j = coords
    if not (0 <= i < spec.shape[0] and 0 <= j < spec.shape[1]):
        raise IndexError(f"cell {coords} outside grid of shape {spec.shape}")
    d_min, d_max = spec.duration_pairs[j]
    res = CellResult(i, j, spec.n_a_values[i], d_min, d_max)
    train, test = cell_datasets(spec, i, j)
    if any(not np.any(X) for X in train.true_coeffs + test.true_coeffs):
        res.valid = False
        res.diagnostic = "ZeroReference: a reference coefficient matrix is zero"
        return res
    runner = _Runner(spec, train.dictionary.atoms, spec.gen.T)
    for method in spec.methods:
        try:
            hyper = hyper_search(method, train, spec.grid_points(method), runner)
            d = evaluate(runner, method, hyper, test)
        except SSSAError as exc:
            raise type(exc)(f"cell ({i + 1}, {j + 1}) method {method}: {exc}") from exc
        res.methods[method] = MethodResult(
            hyper=tuple(hyper),
            distances=d,
            mean=float(np.mean(d)),
            std=float(np.std(d, ddof=1)) if len(d) > 1 else 0.0,
        )
    ref = res.methods[SSSA]
    for method in spec.methods:
        if method == SSSA:
            continue
        other = res.methods[method]
        t, p = paired_t_test(ref.distances, other.distances)
        res.comparisons[method] = Comparison(
            mean_diff=ref.mean - other.mean, t=t, p=p, significant=bool(p < ALPHA)
        )
    log.info("cell (%d, %d) n_a=%d d=(%g, %g) done", i + 1, j + 1, res.n_a, d_min, d_max)
    return res


def _run_cell_job(args):
    spec_dict, coords = args
    return run_cell(GridSpec.from_dict(spec_dict), coords)


def run_grid(spec: GridSpec, jobs: int = 1) -> list:
    cells = spec.cells()
    if jobs <= 1:
        results = [run_cell(spec, c) for c in cells]
    else:
        payload = [(spec.to_dict(), c) for c in cells]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell_job, payload))
    return sorted(results, key=lambda r: (r.na_index, r.dur_index))


# -- reporting ----------------------------------------------------------------

def competence_map(results, shape=None) -> dict:
    """Competence-map matrices from per-cell results.

    Returns ``{"sssa": mean-distance matrix, "diff": {baseline: matrix},
    "significant": {baseline: bool matrix}}``. Rows follow n_a, columns the
    duration pairs. A difference is Multi-SSSA mean minus baseline mean, so a
    negative entry means Multi-SSSA has the lower distance. Invalid cells are
    NaN and not significant.
    """
    results = list(results)
    if shape is None:
        shape = (
            max(r.na_index for r in results) + 1,
            max(r.dur_index for r in results) + 1,
        )
    by_cell = {(r.na_index, r.dur_index): r for r in results}
    missing = [c for c in itertools.product(range(shape[0]), range(shape[1])) if c not in by_cell]
    if missing:
        raise IncompleteGrid(f"missing cells {[(a + 1, b + 1) for a, b in missing]}")
    baselines = []
    for r in results:
        for b in r.comparisons:
            if b not in baselines:
                baselines.append(b)
    baselines = [m for m in METHODS if m in baselines]
    sssa = np.full(shape, np.nan)
    diff = {b: np.full(shape, np.nan) for b in baselines}
    sig = {b: np.zeros(shape, dtype=bool) for b in baselines}
    for (i, j), r in by_cell.items():
        if not r.valid:
            continue
        sssa[i, j] = r.methods[SSSA].mean
        for b, c in r.comparisons.items():
            diff[b][i, j] = c.mean_diff
            sig[b][i, j] = c.significant
    return {"sssa": sssa, "diff": diff, "significant": sig}


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


RESULTS_HEADER = [
    "na_index", "dur_index", "na", "dmin", "dmax", "method", "hp1", "hp2",
    "mean_dist", "std_dist", "t_vs_sssa", "p_vs_sssa", "significant",
]


def results_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    for r in sorted(results, key=lambda r: (r.na_index, r.dur_index)):
        head = [r.na_index + 1, r.dur_index + 1, r.n_a, _num(r.d_min), _num(r.d_max)]
        if not r.valid:
            w.writerow(head + ["invalid"] + [""] * 7)
            continue
        for method in [m for m in METHODS if m in r.methods]:
            m = r.methods[method]
            hp = list(m.hyper) + [None] * (2 - len(m.hyper))
            c = r.comparisons.get(method)
            row = head + [method, _num(hp[0]), _num(hp[1]), _num(m.mean), _num(m.std)]
            if c is None:
                row += ["", "", ""]
            else:
                row += [_num(c.t), _num(c.p), _num(c.significant)]
            w.writerow(row)
    return buf.getvalue()


def matrix_csv(M) -> str:
    return "".join(",".join(_num(v) for v in row) + "\n" for row in np.asarray(M))


def pgm_bytes(M) -> tuple:
    """Plain P2 rendering of ``M`` and its ``{min, max}`` metadata.

    Finite values map linearly from [min, max] to [0, 255]; a constant
    matrix maps to 0, and NaN cells are written as 0 and listed as invalid.
    """
    M = np.asarray(M, dtype=float)
    ok = np.isfinite(M)
    lo = float(M[ok].min()) if ok.any() else 0.0
    hi = float(M[ok].max()) if ok.any() else 0.0
    if hi > lo:
        px = np.where(ok, np.rint(255.0 * (np.where(ok, M, lo) - lo) / (hi - lo)), 0)
    else:
        px = np.zeros(M.shape)
    px = px.astype(int)
    rows, cols = M.shape
    lines = ["P2", f"{cols} {rows}", "255"]
    lines += [" ".join(str(v) for v in row) for row in px]
    meta = {
        "min": lo,
        "max": hi,
        "mapping": "pixel = round(255 * (value - min) / (max - min)); 0 if max == min",
        "invalid_cells": [[int(a) + 1, int(b) + 1] for a, b in zip(*np.nonzero(~ok))],
    }
    return ("\n".join(lines) + "\n").encode("ascii"), meta


def read_pgm(path) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM")
    cols, rows, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array([int(t) for t in tokens[4:]]).reshape(rows, cols)


def _write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
        fh.write(data)


def emit_report(results, out_dir, formats=(), shape=None) -> list:
    """Write ``results.csv`` plus maps in the requested formats ("csv", "pgm").

    Returns the written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name, data):
        path = os.path.join(out_dir, name)
        _write(path, data)
        written.append(path)

    put("results.csv", results_csv(results))
    formats = set(formats)
    if not formats:
        return written
    cmap = competence_map(results, shape)
    mats = [("map_sssa", cmap["sssa"])] + [(f"map_{b}", m) for b, m in cmap["diff"].items()]
    for name, M in mats:
        if "csv" in formats:
            put(f"{name}.csv", matrix_csv(M))
        if "pgm" in formats:
            px, meta = pgm_bytes(M)
            put(f"{name}.pgm", px)
            put(f"{name}.meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if "csv" in formats:
        for b, mask in cmap["significant"].items():
            put(f"mask_{b}.csv", matrix_csv(mask.astype(int)))
    return written


CELLS_FILE = "cells.json"


def save_cells(results, spec: GridSpec, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, CELLS_FILE)
    doc = {"grid": spec.to_dict(), "cells": [r.to_dict() for r in results]}
    _write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_cells(in_dir):
    with open(os.path.join(in_dir, CELLS_FILE)) as fh:
        doc = json.load(fh)
    spec = GridSpec.from_dict(doc["grid"])
    return spec, [CellResult.from_dict(c) for c in doc["cells"]]
