"""Problem representation: dictionaries, signals, the temporal difference
operator and the fused-LASSO objective.

Coefficient matrices (``X``, ``A``, ``B`` and the duals) are plain
``numpy`` arrays of shape ``(N, T)`` or ``(N, T - 1)``; only objects that
carry invariants get their own type.

Objective convention (no 1/2 on the fit term)::

    f(X) = ||Y - Phi X||_F^2 + lam1 * ||X||_1 + lam2 * ||X P||_1
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatch, InvalidT, NonFinite, ZeroAtom

_ZERO_NORM = 1e-300


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains non-finite entries")
    return a


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dictionary:
    """C x N dictionary with unit-norm columns (atoms)."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = _frozen(_as_matrix(self.atoms, "dictionary"))
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise DataError(
                f"dictionary column {worst} has norm {norms[worst]!r}; "
                "use normalize_dictionary() on raw matrices"
            )
        object.__setattr__(self, "atoms", atoms)

    @property
    def C(self) -> int:
        return self.atoms.shape[0]

    @property
    def N(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True, eq=False)
class SignalSet:
    """C x T matrix of T samples of a C-channel signal."""

    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(_as_matrix(self.samples, "signals")))

    @property
    def C(self) -> int:
        return self.samples.shape[0]

    @property
    def T(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class DifferenceOperator:
    """T x (T-1) matrix P such that column k of X @ P is X[:, k+1] - X[:, k]."""

    matrix: np.ndarray

    @property
    def T(self) -> int:
        return self.matrix.shape[0]

    def apply(self, X):
        """Return ``X @ P`` without forming the product."""
        return np.diff(X, axis=1)

    def apply_transpose(self, V):
        """Return ``V @ P.T`` for a matrix V with T-1 columns."""
        V = np.asarray(V, dtype=float)
        out = np.zeros((V.shape[0], V.shape[1] + 1))
        out[:, 1:] += V
        out[:, :-1] -= V
        return out


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    dictionary: Dictionary
    signals: SignalSet
    structure: DifferenceOperator

    def __post_init__(self):
        if self.dictionary.C != self.signals.C:
            raise DimensionMismatch(
                f"dictionary has C={self.dictionary.C} channels but signals have "
                f"C={self.signals.C}"
            )
        if self.structure.T != self.signals.T:
            raise DimensionMismatch(
                f"difference operator built for T={self.structure.T} but signals "
                f"have T={self.signals.T}"
            )

    @classmethod
    def from_arrays(cls, Phi, Y) -> "ProblemInstance":
        """Build an instance from a unit-norm dictionary and a signal matrix."""
        Y = SignalSet(Y)
        D = Phi if isinstance(Phi, Dictionary) else Dictionary(Phi)
        return cls(D, Y, build_difference_operator(Y.T))

    @property
    def Phi(self):
        return self.dictionary.atoms

    @property
    def Y(self):
        return self.signals.samples

    @property
    def shape(self):
        """``(N, T)``, the shape of coefficient matrices for this instance."""
        return self.dictionary.N, self.signals.T


def normalize_dictionary(raw) -> Dictionary:
    """Scale every column of ``raw`` to unit l2 norm.

    Raises
    ------
    ZeroAtom
        If a column is (numerically) the zero vector.
    """
    raw = _as_matrix(raw, "dictionary")
    norms = np.linalg.norm(raw, axis=0)
    bad = np.flatnonzero(norms < _ZERO_NORM)
    if bad.size:
        raise ZeroAtom(f"dictionary column(s) {bad.tolist()} have zero norm")
    return Dictionary(raw / norms)


def build_difference_operator(T: int) -> DifferenceOperator:
    if int(T) != T or T < 2:
        raise InvalidT(f"need T >= 2 time steps, got {T!r}")
    T = int(T)
    P = np.zeros((T, T - 1))
    k = np.arange(T - 1)
    P[k, k] = -1.0
    P[k + 1, k] = 1.0
    return DifferenceOperator(_frozen(P))


def _check_coeffs(inst: ProblemInstance, X):
    X = np.asarray(X, dtype=float)
    if X.shape != inst.shape:
        raise DimensionMismatch(
            f"coefficient matrix has shape {X.shape}, expected {inst.shape}"
        )
    return X


def objective_value(inst: ProblemInstance, X, lam1: float, lam2: float) -> float:
    X = _check_coeffs(inst, X)
    R = inst.Y - inst.Phi @ X
    return float(
        np.sum(R * R)
        + lam1 * np.sum(np.abs(X))
        + lam2 * np.sum(np.abs(np.diff(X, axis=1)))
    )


def relative_change(X_new, X_old) -> float:
    """Frobenius ``||X_new - X_old|| / ||X_new||``.

    Returns ``inf`` when ``X_new`` is zero but ``X_old`` is not, and 0 when
    both are zero.
    """
    X_new = np.asarray(X_new, dtype=float)
    X_old = np.asarray(X_old, dtype=float)
    if X_new.shape != X_old.shape:
        raise DimensionMismatch(f"shapes differ: {X_new.shape} vs {X_old.shape}")
    num = np.linalg.norm(X_new - X_old)
    den = np.linalg.norm(X_new)
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / den)


# -- matrix CSV files ---------------------------------------------------------

def write_matrix(path, M) -> None:
    """Write a 2-D array as header-less CSV with round-trip precision."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in M:
            fh.write(",".join("%.17g" % v for v in row))
            fh.write("\n")


def read_matrix(path) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionMismatch(f"{path}: ragged rows (widths {sorted(widths)})")
    try:
        M = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return _as_matrix(M, os.path.basename(path))
