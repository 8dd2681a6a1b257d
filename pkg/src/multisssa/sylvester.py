"""Sylvester equations ``W X + X Z = M`` with symmetric ``W`` and ``Z``.

Both matrices are diagonalized once (``W = F diag(d_w) F^T``,
``Z = G diag(d_z) G^T``); each solve then costs two pairs of matrix products
and an entrywise scaling by ``1 / (d_w[n] + d_z[t])``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFinite, NotPositiveDefinite, NotSquare

#: eigenvalues of Z down to this are absorbed as rounding noise
Z_CLAMP = 1e-10


@dataclass(frozen=True, eq=False)
class SymEig:
    Q: np.ndarray
    d: np.ndarray


@dataclass(frozen=True, eq=False)
class SylvesterFactors:
    F: np.ndarray
    d_w: np.ndarray
    G: np.ndarray
    d_z: np.ndarray
    inv_diag: np.ndarray
    FT: np.ndarray = field(init=False, repr=False)
    GT: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # contiguous transposes for the per-iteration products
        object.__setattr__(self, "FT", np.ascontiguousarray(self.F.T))
        object.__setattr__(self, "GT", np.ascontiguousarray(self.G.T))

    @property
    def shape(self):
        return self.inv_diag.shape


def sym_eig(S) -> SymEig:
    """Eigendecomposition of a real symmetric matrix, eigenvalues ascending.

    The input is symmetrized as ``(S + S.T) / 2`` before decomposition.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NonFinite("matrix contains non-finite entries")
    d, Q = np.linalg.eigh(0.5 * (S + S.T))
    return SymEig(Q=Q, d=d)


def precompute_factors(W, Z) -> SylvesterFactors:
    """Diagonalize ``W`` (positive definite) and ``Z`` (positive semidefinite)
    and tabulate the reciprocal denominators."""
    ew = sym_eig(W)
    ez = sym_eig(Z)
    wmax = np.max(np.abs(ew.d)) if ew.d.size else 0.0
    if ew.d[0] <= 1e-12 * wmax or wmax == 0.0:
        raise NotPositiveDefinite(
            f"W has minimum eigenvalue {ew.d[0]!r} (max {wmax!r}); "
            "increase mu1"
        )
    d_z = ez.d.copy()
    if d_z.size and d_z[0] < -Z_CLAMP:
        raise NotPositiveDefinite(f"Z has negative eigenvalue {d_z[0]!r}")
    np.maximum(d_z, 0.0, out=d_z)
    inv_diag = 1.0 / (ew.d[:, None] + d_z[None, :])
    return SylvesterFactors(F=ew.Q, d_w=ew.d, G=ez.Q, d_z=d_z, inv_diag=inv_diag)


def solve_sylvester(f: SylvesterFactors, M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != f.shape:
        raise DimensionMismatch(
            f"right-hand side has shape {M.shape}, factors expect {f.shape}"
        )
    return f.F @ ((f.FT @ M @ f.G) * f.inv_diag) @ f.GT
