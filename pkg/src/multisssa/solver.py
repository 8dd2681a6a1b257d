"""Multi-SSSA: split Bregman iterations for the multi-channel fused LASSO

    min_X ||Y - Phi X||_F^2 + lam1 ||X||_1 + lam2 ||X P||_1

Auxiliary variables ``A = X`` and ``B = X P`` decouple the two penalties.
Each outer iteration runs ``k_max`` sweeps of

    X <- solution of (2 Phi^T Phi + mu1 I) X + X (mu2 P P^T) = M
    A <- shrink(X + D_A, lam1 / mu1)
    B <- shrink(X P + D_B, lam2 / mu2)

with the Bregman variables ``D_A``, ``D_B`` frozen, then adds the constraint
residuals to ``D_A`` and ``D_B``. The Sylvester operator does not depend on
the iteration, so it is diagonalized once per solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, DimensionMismatch, NegativeThreshold, SolverNonFinite
from .model import ProblemInstance, relative_change
from .sylvester import SylvesterFactors, precompute_factors, solve_sylvester

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    lam1: float = 0.1
    lam2: float = 0.1
    mu1: float = 1.0
    mu2: float = 1.0
    eps: float = 1e-5
    iter_max: int = 500
    k_max: int = 1

    def __post_init__(self):
        if self.lam1 < 0 or self.lam2 < 0:
            raise DataError("regularization weights must be nonnegative")
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise DataError("penalty parameters mu1, mu2 must be positive")
        if not self.eps > 0:
            raise DataError("eps must be positive")
        if self.iter_max < 1 or self.k_max < 1:
            raise DataError("iter_max and k_max must be >= 1")


@dataclass(frozen=True, eq=False)
class SolverState:
    X: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D_A: np.ndarray
    D_B: np.ndarray
    iteration: int = 0
    last_change: float = float("inf")


@dataclass(frozen=True, eq=False)
class Solution:
    X: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray = field(repr=False)
    residual_A: float
    residual_B: float


@dataclass(frozen=True, eq=False)
class SolverCache:
    """Per-(instance, mu1, mu2) quantities reused by every iteration."""

    factors: SylvesterFactors
    PhiTY2: np.ndarray  # 2 Phi^T Y


def soft_threshold(V, kappa: float):
    """Entrywise ``sign(v) * max(|v| - kappa, 0)``."""
    if kappa < 0:
        raise NegativeThreshold(f"threshold must be >= 0, got {kappa!r}")
    return _shrink(np.asarray(V, dtype=float), kappa)


def build_factors(Phi, T: int, mu1: float, mu2: float) -> SylvesterFactors:
    """Factor ``W = 2 Phi^T Phi + mu1 I`` and ``Z = mu2 P P^T`` for a chain of
    length T."""
    Phi = np.asarray(Phi, dtype=float)
    N = Phi.shape[1]
    W = 2.0 * Phi.T @ Phi + mu1 * np.eye(N)
    # P P^T for the chain is the path-graph Laplacian
    L = np.diag(np.r_[1.0, np.full(T - 2, 2.0), 1.0])
    i = np.arange(T - 1)
    L[i, i + 1] = -1.0
    L[i + 1, i] = -1.0
    return precompute_factors(W, mu2 * L)


def make_cache(inst: ProblemInstance, cfg: SolverConfig, factors=None) -> SolverCache:
    N, T = inst.shape
    if factors is None:
        factors = build_factors(inst.Phi, T, cfg.mu1, cfg.mu2)
    elif factors.shape != (N, T):
        raise DimensionMismatch(f"factors built for {factors.shape}, need {(N, T)}")
    return SolverCache(factors=factors, PhiTY2=2.0 * inst.Phi.T @ inst.Y)


def _rhs(PhiTY2, A, B, D_A, D_B, mu1, mu2):
    # 2 Phi^T Y - mu1 (D_A - A) - mu2 (D_B - B) P^T
    V = mu2 * (D_B - B)
    M = PhiTY2 - mu1 * (D_A - A)
    M[:, 1:] -= V
    M[:, :-1] += V
    return M


def _shrink(V, kappa):
    return np.sign(V) * np.maximum(np.abs(V) - kappa, 0.0)


def _sweeps(X, A, B, D_A, D_B, cache, cfg):
    f = cache.factors
    kA = cfg.lam1 / cfg.mu1
    kB = cfg.lam2 / cfg.mu2
    for _ in range(cfg.k_max):
        M = _rhs(cache.PhiTY2, A, B, D_A, D_B, cfg.mu1, cfg.mu2)
        X = f.F @ ((f.FT @ M @ f.G) * f.inv_diag) @ f.GT
        A = _shrink(X + D_A, kA)
        B = _shrink(X[:, 1:] - X[:, :-1] + D_B, kB)
    return X, A, B


def x_update(state: SolverState, cache: SolverCache, cfg: SolverConfig):
    """Exact minimizer in X of the augmented objective, other variables fixed."""
    if state.A.shape != cache.factors.shape:
        raise DimensionMismatch(
            f"state has shape {state.A.shape}, factors expect {cache.factors.shape}"
        )
    M = _rhs(cache.PhiTY2, state.A, state.B, state.D_A, state.D_B, cfg.mu1, cfg.mu2)
    return solve_sylvester(cache.factors, M)


def inner_sweep(state: SolverState, cache: SolverCache, cfg: SolverConfig) -> SolverState:
    """``cfg.k_max`` rounds of X-, A- and B-updates with the duals held fixed."""
    if state.A.shape != cache.factors.shape:
        raise DimensionMismatch(
            f"state has shape {state.A.shape}, factors expect {cache.factors.shape}"
        )
    X, A, B = _sweeps(state.X, state.A, state.B, state.D_A, state.D_B, cache, cfg)
    return replace(state, X=X, A=A, B=B)


def dual_update(state: SolverState) -> SolverState:
    X = state.X
    return replace(
        state,
        D_A=state.D_A + (X - state.A),
        D_B=state.D_B + (X[:, 1:] - X[:, :-1] - state.B),
    )


def initial_state(inst: ProblemInstance, X0=None) -> SolverState:
    N, T = inst.shape
    if X0 is None:
        X0 = np.zeros((N, T))
    else:
        X0 = np.array(X0, dtype=float)
        if X0.shape != (N, T):
            raise DimensionMismatch(f"X0 has shape {X0.shape}, expected {(N, T)}")
    return SolverState(
        X=X0,
        A=X0.copy(),
        B=np.diff(X0, axis=1),
        D_A=np.zeros((N, T)),
        D_B=np.zeros((N, T - 1)),
    )


def multi_sssa_solve(
    inst: ProblemInstance,
    cfg: SolverConfig = SolverConfig(),
    X0=None,
    factors: SylvesterFactors | None = None,
) -> Solution:
    """Run Multi-SSSA on ``inst``.

    Parameters
    ----------
    inst : ProblemInstance
    cfg : SolverConfig
    X0 : array_like, optional
        Starting coefficients, zeros by default.
    factors : SylvesterFactors, optional
        Output of :func:`build_factors` for the same dictionary, T, mu1 and
        mu2. Lets a hyperparameter sweep over (lam1, lam2) share one
        diagonalization.

    Returns
    -------
    Solution
        ``converged`` is True when the relative change of X dropped below
        ``cfg.eps`` before ``cfg.iter_max`` outer iterations.
    """
    # overflow surfaces as SolverNonFinite below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _solve(inst, cfg, X0, factors)


def _solve(inst, cfg, X0, factors):
    cache = make_cache(inst, cfg, factors)
    s0 = initial_state(inst, X0)
    X, A, B, D_A, D_B = s0.X, s0.A, s0.B, s0.D_A, s0.D_B
    Phi, Y = inst.Phi, inst.Y
    trace = []
    converged = False
    change = float("inf")
    it = 0
    for it in range(1, cfg.iter_max + 1):
        X_old = X
        X, A, B = _sweeps(X, A, B, D_A, D_B, cache, cfg)
        XP = X[:, 1:] - X[:, :-1]
        D_A = D_A + (X - A)
        D_B = D_B + (XP - B)
        if not (np.isfinite(D_A).all() and np.isfinite(D_B).all()):
            raise SolverNonFinite(
                f"non-finite iterate at outer iteration {it}; "
                "mu1/mu2 may be too small for the data scale"
            )
        change = relative_change(X, X_old)
        R = Y - Phi @ X
        trace.append(float(
            np.vdot(R, R) + cfg.lam1 * np.abs(X).sum() + cfg.lam2 * np.abs(XP).sum()
        ))
        if change < cfg.eps:
            converged = True
            break
    log.debug("multi-sssa: %d iterations, converged=%s, change=%.3g",
              it, converged, change)
    return Solution(
        X=X,
        iterations=it,
        converged=converged,
        objective_trace=np.asarray(trace),
        residual_A=float(np.linalg.norm(X - A)),
        residual_B=float(np.linalg.norm(X[:, 1:] - X[:, :-1] - B)),
    )
