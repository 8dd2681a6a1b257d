"""Synthetic piecewise-constant decompositions and the signals they generate.

Each coefficient matrix is a weighted sum of box-shaped activities: an
activity switches one atom on for a window of ``d * T`` samples centred at
``m``. Sample positions are ``0 .. T-1`` and the window is half-open,
``m - d*T/2 <= p < m + d*T/2``, clipped to the signal range.

Randomness
----------
All draws come from numpy ``Generator(PCG64(seed))``. Sub-seeds are derived
with :func:`derive_seed`, a splitmix64 chain over the integer keys, so every
(dataset, split, signal) gets an independent stream that does not depend on
generation order.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataError, DimensionMismatch, IndexOutOfRange
from .model import Dictionary, normalize_dictionary, read_matrix, write_matrix

PRNG_NAME = "numpy.PCG64"
SEED_DERIVATION = "splitmix64-chain/v1"
FORMAT_VERSION = 1

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix ``seed`` and ``keys`` into a 64-bit seed.

    ``h = splitmix64(seed)``, then ``h = splitmix64(h ^ key)`` per key.
    """
    h = splitmix64(int(seed) & _MASK64)
    for k in keys:
        h = splitmix64(h ^ (int(k) & _MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


@dataclass(frozen=True)
class Activity:
    """One box activity. ``ind`` is a 0-based atom index."""

    ind: int
    m: float
    d: float
    a: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.d <= 1.0:
            raise DataError(f"duration fraction must lie in [0, 1], got {self.d!r}")


@dataclass(frozen=True)
class GenConfig:
    C: int = 20
    N: int = 40
    T: int = 300
    K: int = 100
    n_a: int = 20
    d_min: float = 0.1
    d_max: float = 0.15
    weight_std: float = float(np.sqrt(2.0))
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("C", "N", "T", "K"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if self.T < 2:
            raise DataError("T must be >= 2")
        if self.n_a < 0:
            raise DataError("n_a must be >= 0")
        if not 0.0 <= self.d_min <= self.d_max <= 1.0:
            raise DataError(
                f"need 0 <= d_min <= d_max <= 1, got ({self.d_min}, {self.d_max})"
            )
        if self.weight_std <= 0 or self.noise_std < 0:
            raise DataError("weight_std must be > 0 and noise_std >= 0")


@dataclass(frozen=True, eq=False)
class Dataset:
    dictionary: Dictionary
    true_coeffs: list = field(repr=False)
    signals: list = field(repr=False)
    config: GenConfig

    def __post_init__(self):
        if not len(self.true_coeffs) == len(self.signals) == self.config.K:
            raise DimensionMismatch("dataset lists must all have length K")

    def __len__(self):
        return len(self.signals)


def generate_dictionary(C: int, N: int, seed: int) -> Dictionary:
    """Gaussian random dictionary with normalized columns."""
    return normalize_dictionary(make_rng(seed).standard_normal((C, N)))


def activity_matrix(act: Activity, N: int, T: int) -> np.ndarray:
    if not 0 <= act.ind < N:
        raise IndexOutOfRange(f"atom index {act.ind} outside 0..{N - 1}")
    out = np.zeros((N, T))
    half = 0.5 * act.d * T
    # 0-based time stamps: the only offset under which a centred full-length
    # window covers every column
    p = np.arange(T)
    out[act.ind] = (p >= act.m - half) & (p < act.m + half)
    return out


def draw_activities(cfg: GenConfig, rng: np.random.Generator) -> list:
    acts = []
    for _ in range(cfg.n_a):
        ind = int(rng.integers(0, cfg.N))
        m = float(rng.uniform(0.0, cfg.T))
        d = float(rng.uniform(cfg.d_min, cfg.d_max))
        a = float(rng.normal(0.0, cfg.weight_std))
        acts.append(Activity(ind=ind, m=m, d=d, a=a))
    return acts


def generate_decomposition(cfg: GenConfig, seed: int) -> np.ndarray:
    X = np.zeros((cfg.N, cfg.T))
    for act in draw_activities(cfg, make_rng(seed)):
        X += act.a * activity_matrix(act, cfg.N, cfg.T)
    return X


def synthesize(Phi, X, noise_std: float = 0.0, seed: int = 0) -> np.ndarray:
    """``Y = Phi X + E`` with i.i.d. ``N(0, noise_std^2)`` noise."""
    Phi = Phi.atoms if isinstance(Phi, Dictionary) else np.asarray(Phi, dtype=float)
    X = np.asarray(X, dtype=float)
    if Phi.shape[1] != X.shape[0]:
        raise DimensionMismatch(
            f"dictionary has N={Phi.shape[1]} atoms, coefficients have {X.shape[0]} rows"
        )
    Y = Phi @ X
    if noise_std > 0:
        Y = Y + make_rng(seed).normal(0.0, noise_std, size=Y.shape)
    return Y


def generate_dataset(
    cfg: GenConfig,
    stream: int = 0,
    dictionary: Optional[Dictionary] = None,
) -> Dataset:
    """K independent (X, Y) pairs over one dictionary.

    The dictionary depends on ``cfg.seed`` only; pair ``k`` is drawn from
    ``derive_seed(cfg.seed, stream, k)``. Use distinct ``stream`` values
    (0 = train, 1 = test) for disjoint sets over the same dictionary.
    """
    if dictionary is None:
        dictionary = generate_dictionary(cfg.C, cfg.N, derive_seed(cfg.seed, 0xD1C7))
    elif (dictionary.C, dictionary.N) != (cfg.C, cfg.N):
        raise DimensionMismatch(
            f"dictionary is {dictionary.C}x{dictionary.N}, config wants {cfg.C}x{cfg.N}"
        )
    coeffs, signals = [], []
    for k in range(cfg.K):
        s = derive_seed(cfg.seed, stream, k)
        X = generate_decomposition(cfg, derive_seed(s, 1))
        coeffs.append(X)
        signals.append(synthesize(dictionary, X, cfg.noise_std, derive_seed(s, 2)))
    return Dataset(dictionary=dictionary, true_coeffs=coeffs, signals=signals, config=cfg)


# -- on-disk layout -----------------------------------------------------------

SPLITS = ("train", "test")


def manifest(cfg: GenConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "prng": PRNG_NAME,
        "numpy_version": np.__version__,
        "seed_derivation": SEED_DERIVATION,
        "config": asdict(cfg),
    }


def write_dataset_dir(out_dir, train: Dataset, test: Dataset) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest(train.config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_matrix(os.path.join(out_dir, "dict.csv"), train.dictionary.atoms)
    for name, ds in zip(SPLITS, (train, test)):
        sub = os.path.join(out_dir, name)
        os.makedirs(sub, exist_ok=True)
        for k, (X, Y) in enumerate(zip(ds.true_coeffs, ds.signals), start=1):
            write_matrix(os.path.join(sub, f"coeffs_{k}.csv"), X)
            write_matrix(os.path.join(sub, f"signals_{k}.csv"), Y)


def read_dataset_dir(path) -> tuple:
    """Inverse of :func:`write_dataset_dir`; returns ``(train, test)``."""
    with open(os.path.join(path, "manifest.json")) as fh:
        meta = json.load(fh)
    cfg = GenConfig(**meta["config"])
    D = Dictionary(read_matrix(os.path.join(path, "dict.csv")))
    out = []
    for name in SPLITS:
        sub = os.path.join(path, name)
        X = [read_matrix(os.path.join(sub, f"coeffs_{k}.csv")) for k in range(1, cfg.K + 1)]
        Y = [read_matrix(os.path.join(sub, f"signals_{k}.csv")) for k in range(1, cfg.K + 1)]
        out.append(Dataset(dictionary=D, true_coeffs=X, signals=Y, config=cfg))
    return tuple(out)


def with_cell(cfg: GenConfig, n_a: int, d_min: float, d_max: float, seed: int) -> GenConfig:
    return replace(cfg, n_a=n_a, d_min=d_min, d_max=d_max, seed=seed)
