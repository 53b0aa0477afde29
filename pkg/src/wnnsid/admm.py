"""ADMM for nuclear norm approximation with a quadratic regularizer.

Solves::

    minimize  ||A(x) - B||_* + 1/2 (x - x0)' C (x - x0)

by splitting ``X = A(x) - B``. The x-step is a linear solve with
``C + t M`` (``M = A_adj A``), the X-step is singular value thresholding,
and the penalty ``t`` adapts to the primal/dual residual balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.linalg

from .errors import ShapeError


def nuclear_norm(M) -> float:
    return float(np.sum(np.linalg.svd(np.atleast_2d(M), compute_uv=False)))


def svt(M, theta: float) -> np.ndarray:
    """Singular value thresholding, the prox of ``theta * ||.||_*``."""
    if theta < 0:
        raise ValueError("threshold must be nonnegative")
    U, s, Vt = np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=float)), full_matrices=False)
    s = np.maximum(s - theta, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


class DenseLinearMap:
    """General linear map ``x -> sum_i x_i * A_i`` from a stack of matrices ``(n, p, q)``."""

    def __init__(self, mats):
        mats = np.asarray(mats, dtype=float)
        if mats.ndim != 3:
            raise ShapeError(f"expected (n, p, q) stack, got {mats.shape}")
        self.mats = mats
        self._flat = mats.reshape(mats.shape[0], -1)

    @property
    def var_dim(self) -> int:
        return self.mats.shape[0]

    @property
    def out_shape(self) -> tuple[int, int]:
        return self.mats.shape[1], self.mats.shape[2]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.var_dim,):
            raise ShapeError(f"expected vector of length {self.var_dim}, got shape {x.shape}")
        return (x @ self._flat).reshape(self.out_shape)

    def adjoint(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.shape != self.out_shape:
            raise ShapeError(f"expected matrix of shape {self.out_shape}, got {Z.shape}")
        return self._flat @ Z.reshape(-1)

    @cached_property
    def gram(self) -> np.ndarray:
        return self._flat @ self._flat.T


def _gram_eigh(linmap):
    # cached on the map so a lambda sweep over one map decomposes M once
    cache = linmap.__dict__.setdefault("_admm_cache", {})
    if "eigh" not in cache:
        lam, V = np.linalg.eigh(linmap.gram)
        cache["eigh"] = (np.maximum(lam, 0.0), V)
    return cache["eigh"]


@dataclass(eq=False)
class NucNormProblem:
    """``minimize ||map(x) - offset||_* + 1/2 (x - anchor)' quad (x - anchor)``.

    ``quad`` is either an ``(n, n)`` PSD matrix or a scalar ``c`` meaning ``c * I``.
    """

    map: Any
    offset: np.ndarray | None = None
    quad: Any = 1.0
    anchor: np.ndarray | None = None

    def __post_init__(self):
        n = self.map.var_dim
        shape = self.map.out_shape
        self.offset = np.zeros(shape) if self.offset is None else np.asarray(self.offset, dtype=float)
        if self.offset.shape != shape:
            raise ShapeError(f"offset must be {shape}, got {self.offset.shape}")
        self.anchor = np.zeros(n) if self.anchor is None else np.asarray(self.anchor, dtype=float)
        if self.anchor.shape != (n,):
            raise ShapeError(f"anchor must have length {n}, got {self.anchor.shape}")
        if np.ndim(self.quad) == 0:
            self.quad = float(self.quad)
            if self.quad < 0:
                raise ValueError("scalar quadratic weight must be nonnegative")
        else:
            self.quad = np.asarray(self.quad, dtype=float)
            if self.quad.shape != (n, n):
                raise ShapeError(f"quad must be {(n, n)}, got {self.quad.shape}")

    @property
    def scalar_quad(self) -> bool:
        return isinstance(self.quad, float)

    def quad_apply(self, v) -> np.ndarray:
        return self.quad * v if self.scalar_quad else self.quad @ v

    def regularizer(self, x) -> float:
        d = np.asarray(x) - self.anchor
        return 0.5 * float(d @ self.quad_apply(d))

    def objective(self, x) -> float:
        return nuclear_norm(self.map.apply(x) - self.offset) + self.regularizer(x)


@dataclass
class AdmmSettings:
    t0: float = 1.0
    mu: float = 10.0
    tau: float = 2.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-3
    max_iter: int = 5000
    max_penalty_changes: int = 100

    def __post_init__(self):
        if not (self.t0 > 0 and self.mu > 1 and self.tau > 1):
            raise ValueError("need t0 > 0, mu > 1, tau > 1")
        if not (self.eps_abs > 0 and self.eps_rel > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(eq=False)
class AdmmState:
    """Iterates and per-iteration history.

    Each history row is ``(rp, rd, eps_p, eps_d, t, objective)`` where the
    objective is evaluated at the split point, ``||X||_* + regularizer(x)``.
    """

    x: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    t: float
    iter: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    def history_array(self) -> np.ndarray:
        return np.array(self.history, dtype=float).reshape(-1, 6)


class Factorization:
    """Solver for ``(C + t M) v = rhs`` at a given penalty ``t``.

    When ``C`` is a multiple of the identity the eigendecomposition of ``M``
    serves every ``t``; otherwise ``C + t M`` is Cholesky factored.
    """

    def __init__(self, prob: NucNormProblem, t: float):
        self.t = t
        if prob.scalar_quad:
            self._lam, self._V = _gram_eigh(prob.map)
            denom = prob.quad + t * self._lam
            if np.any(denom <= 0):
                raise np.linalg.LinAlgError("C + t M is singular")
            self._inv = 1.0 / denom
            self._cho = None
        else:
            self._cho = scipy.linalg.cho_factor(prob.quad + t * prob.map.gram)

    def solve(self, rhs) -> np.ndarray:
        if self._cho is not None:
            return scipy.linalg.cho_solve(self._cho, rhs)
        return self._V @ (self._inv * (self._V.T @ rhs))


def x_update(prob: NucNormProblem, X, Z, t: float, factor: Factorization | None = None) -> np.ndarray:
    """Minimize the augmented Lagrangian over ``x``."""
    if factor is None or factor.t != t:
        factor = Factorization(prob, t)
    rhs = prob.map.adjoint(t * X + t * prob.offset - Z) + prob.quad_apply(prob.anchor)
    return factor.solve(rhs)


def update_penalty(t: float, rp_norm: float, rd_norm: float, s: AdmmSettings) -> float:
    if rp_norm > s.mu * rd_norm:
        return s.tau * t
    if rd_norm > s.mu * rp_norm:
        return t / s.tau
    return t


def solve(prob: NucNormProblem, settings: AdmmSettings | None = None, trace=None) -> AdmmState:
    """Run ADMM from ``x = 0, X = -B, Z = 0, t = t0`` until both residuals are small.

    ``trace``, if given, is a writable text sink receiving one
    ``iter,rp,rd,eps_p,eps_d,t,objective`` line per iteration. Hitting
    ``max_iter`` returns the last iterate with ``converged=False``.
    """
    s = settings or AdmmSettings()
    n = prob.map.var_dim
    p, q = prob.map.out_shape
    B = prob.offset
    normB = np.linalg.norm(B)
    state = AdmmState(x=np.zeros(n), X=-B.copy(), Z=np.zeros((p, q)), t=float(s.t0))
    factor = Factorization(prob, state.t)
    changes = 0
    sqrt_pq = math.sqrt(p * q)
    sqrt_n = math.sqrt(n)

    for it in range(1, s.max_iter + 1):
        t = state.t
        x = x_update(prob, state.X, state.Z, t, factor)
        Ax = prob.map.apply(x)
        X_prev = state.X

        U, sig, Vt = np.linalg.svd(Ax - B + state.Z / t, full_matrices=False)
        sig = np.maximum(sig - 1.0 / t, 0.0)
        keep = sig > 0
        X = (U[:, keep] * sig[keep]) @ Vt[keep]

        rp = Ax - X - B
        Z = state.Z + t * rp
        rp_norm = float(np.linalg.norm(rp))
        rd_norm = float(np.linalg.norm(t * prob.map.adjoint(X_prev - X)))
        eps_p = sqrt_pq * s.eps_abs + s.eps_rel * float(max(np.linalg.norm(Ax), np.linalg.norm(X), normB))
        eps_d = sqrt_n * s.eps_abs + s.eps_rel * float(np.linalg.norm(prob.map.adjoint(Z)))
        objective = float(np.sum(sig)) + prob.regularizer(x)

        state.x, state.X, state.Z, state.iter = x, X, Z, it
        state.history.append((rp_norm, rd_norm, eps_p, eps_d, t, objective))
        if trace is not None:
            trace.write(f"{it},{rp_norm!r},{rd_norm!r},{eps_p!r},{eps_d!r},{t!r},{objective!r}\n")

        if rp_norm <= eps_p and rd_norm <= eps_d:
            state.converged = True
            break
        if changes < s.max_penalty_changes:
            t_new = update_penalty(t, rp_norm, rd_norm, s)
            if t_new != t:
                changes += 1
                state.t = t_new
                factor = Factorization(prob, t_new)
    return state
