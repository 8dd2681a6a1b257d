"""Comparison solvers: OMP, SOMP, LASSO and group LASSO.

The two convex baselines share one FISTA engine and use the same fit-term
convention as Multi-SSSA (``||Y - Phi X||_F^2``, no 1/2), so objective values
are directly comparable across solvers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DataError, DimensionMismatch
from .model import Dictionary
from .solver import soft_threshold


@dataclass(frozen=True)
class GreedyConfig:
    max_atoms: int
    residual_tol: float = 1e-10

    def __post_init__(self):
        if self.max_atoms < 1:
            raise DataError("max_atoms must be >= 1")
        if self.residual_tol < 0:
            raise DataError("residual_tol must be >= 0")


@dataclass(frozen=True)
class ProxConfig:
    lam: float
    max_iters: int = 5000
    rel_tol: float = 1e-8
    step: Union[float, str] = "auto"

    def __post_init__(self):
        if self.lam < 0:
            raise DataError("lam must be >= 0")
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise DataError("rel_tol must be > 0")
        if self.step != "auto" and not float(self.step) > 0:
            raise DataError("step must be positive or 'auto'")


def _atoms(Phi):
    return Phi.atoms if isinstance(Phi, Dictionary) else np.asarray(Phi, dtype=float)


def _check(Y, Phi):
    Phi = _atoms(Phi)
    Y = getattr(Y, "samples", Y)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != Phi.shape[0]:
        raise DimensionMismatch(
            f"signals have C={Y.shape[0]} channels, dictionary has C={Phi.shape[0]}"
        )
    return Y, Phi


def spectral_norm(Phi, tol: float = 1e-8, max_iter: int = 1000) -> float:
    """Largest singular value of ``Phi`` by power iteration on ``Phi^T Phi``.

    The start vector is fixed so results are reproducible.
    """
    Phi = _atoms(Phi)
    v = np.ones(Phi.shape[1]) / np.sqrt(Phi.shape[1])
    sigma2 = 0.0
    for _ in range(max_iter):
        w = Phi.T @ (Phi @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; fall back to a dense estimate
            return float(np.linalg.norm(Phi, 2))
        v = w / nw
        if abs(nw - sigma2) <= tol * nw:
            sigma2 = nw
            break
        sigma2 = nw
    return float(np.sqrt(sigma2))


# -- greedy pursuits ----------------------------------------------------------

def _pursuit(Y, Phi, cfg: GreedyConfig, score: Callable):
    """Shared greedy loop; ``score`` maps the correlation matrix Phi^T R to a
    per-atom selection score."""
    N = Phi.shape[1]
    X = np.zeros((N, Y.shape[1]))
    R = Y.copy()
    support: list[int] = []
    available = np.ones(N, dtype=bool)
    for _ in range(min(cfg.max_atoms, N)):
        if np.linalg.norm(R) <= cfg.residual_tol:
            break
        s = score(Phi.T @ R)
        s[~available] = -np.inf
        n = int(np.argmax(s))
        support.append(n)
        available[n] = False
        coef, *_ = np.linalg.lstsq(Phi[:, support], Y, rcond=None)
        R = Y - Phi[:, support] @ coef
    if support:
        X[support] = coef
    return X


def omp(y, Phi, cfg: GreedyConfig) -> np.ndarray:
    """Orthogonal matching pursuit for a single C-vector ``y``."""
    y = np.asarray(getattr(y, "samples", y), dtype=float)
    if y.ndim != 1:
        raise DimensionMismatch(f"omp expects a vector, got shape {y.shape}")
    Y, Phi = _check(y, Phi)
    return _pursuit(Y, Phi, cfg, lambda G: np.abs(G[:, 0]))[:, 0]


def omp_columns(Y, Phi, cfg: GreedyConfig) -> np.ndarray:
    """OMP applied independently to every column of ``Y``."""
    Y, Phi = _check(Y, Phi)
    return np.column_stack([omp(Y[:, t], Phi, cfg) for t in range(Y.shape[1])])


def somp(Y, Phi, cfg: GreedyConfig) -> np.ndarray:
    """Simultaneous OMP: one support shared by all columns of ``Y``, atoms
    ranked by the l2 norm of their correlations with the residual matrix."""
    Y, Phi = _check(Y, Phi)
    return _pursuit(Y, Phi, cfg, lambda G: np.linalg.norm(G, axis=1))


# -- proximal gradient --------------------------------------------------------

def _group_shrink(V, kappa):
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > 0, np.maximum(0.0, 1.0 - kappa / norms), 0.0)
    return V * scale


def lasso_objective(Y, Phi, X, lam):
    R = Y - Phi @ X
    return float(np.sum(R * R) + lam * np.sum(np.abs(X)))


def group_lasso_objective(Y, Phi, X, lam):
    R = Y - Phi @ X
    return float(np.sum(R * R) + lam * np.sum(np.linalg.norm(X, axis=1)))


def fista(Y, Phi, cfg: ProxConfig, prox, penalty):
    """FISTA on ``||Y - Phi X||_F^2 + penalty(X)``.

    Returns the iterate with the lowest objective seen. Stops after
    ``cfg.max_iters`` iterations or once the relative objective change
    between consecutive iterates falls to ``cfg.rel_tol``.
    """
    Y, Phi = _check(Y, Phi)
    if cfg.step == "auto":
        step = 1.0 / (2.0 * spectral_norm(Phi) ** 2)
    else:
        step = float(cfg.step)
    PtP = Phi.T @ Phi
    PtY = Phi.T @ Y

    def objective(X):
        R = Y - Phi @ X
        return float(np.sum(R * R)) + penalty(X)

    X = np.zeros((Phi.shape[1], Y.shape[1]))
    Z = X
    t = 1.0
    f_prev = objective(X)
    best, f_best = X, f_prev
    for _ in range(cfg.max_iters):
        grad = 2.0 * (PtP @ Z - PtY)
        X_new = prox(Z - step * grad, step * cfg.lam)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = X_new + ((t - 1.0) / t_new) * (X_new - X)
        X, t = X_new, t_new
        f = objective(X)
        if f < f_best:
            best, f_best = X, f
        if abs(f_prev - f) <= cfg.rel_tol * max(abs(f), np.finfo(float).tiny):
            break
        f_prev = f
    return best


def fista_lasso(Y, Phi, cfg: ProxConfig) -> np.ndarray:
    """Column-separable LASSO ``||Y - Phi X||_F^2 + lam ||X||_1``."""
    return fista(Y, Phi, cfg, soft_threshold, lambda X: cfg.lam * np.sum(np.abs(X)))


def fista_group_lasso(Y, Phi, cfg: ProxConfig) -> np.ndarray:
    """Group LASSO with one group per atom (row of X), shared over time."""
    return fista(
        Y, Phi, cfg, _group_shrink,
        lambda X: cfg.lam * np.sum(np.linalg.norm(X, axis=1)),
    )
