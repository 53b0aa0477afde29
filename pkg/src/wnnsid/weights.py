"""Input projections, instrument variables and the weighting schemes.

Every scheme is reduced to a pair ``(W1, R)`` so that the weighted matrix is
``W1 @ Y_f(y) @ R`` with ``Y_f`` the future output Hankel matrix. ``R`` folds
together the input projection, the instrument and the right weight.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, SingularInputError, SingularWeightError
from .hankel_ops import HankelMap, HankelParams, TimeSeries, build_hankel, window_vector

EIG_FLOOR = 1e-10


class WeightingScheme(str, enum.Enum):
    MOESP = "moesp"
    N4SID = "n4sid"
    IVM = "ivm"
    CVA = "cva"
    NONE = "none"
    NOINSTR = "noinstr"

    @property
    def uses_instrument(self) -> bool:
        return self is not WeightingScheme.NOINSTR

    @classmethod
    def parse(cls, value) -> WeightingScheme:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown weighting scheme {value!r} (expected one of {names})") from None


def _row_basis(U: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis (``N x k``) of the row space of ``U``; raises if rank deficient."""
    k, N = U.shape
    if k == 0:
        return np.zeros((N, 0))
    if k > N:
        raise SingularInputError(f"U has {k} rows but only {N} columns; rank at most {N}")
    Q, R = np.linalg.qr(U.T)
    diag = np.abs(np.diag(R))
    scale = diag.max() if diag.size else 0.0
    rank = int(np.sum(diag > rtol * max(scale, np.finfo(float).tiny)))
    if rank < k:
        raise SingularInputError(f"U must have full row rank {k}; numerical rank is {rank}")
    return Q


def _project_with(M: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return M - (M @ Q) @ Q.T


def project_complement(M, U) -> np.ndarray:
    """Return ``M @ Pi`` where ``Pi`` projects onto the nullspace of ``U``.

    Uses a QR factorization of ``U.T``; the ``N x N`` projector is never formed.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if M.shape[1] != U.shape[1]:
        raise ShapeError(f"column mismatch: M is {M.shape}, U is {U.shape}")
    if U.shape[0] == U.shape[1]:
        _row_basis(U)
        return np.zeros_like(M)
    return _project_with(M, _row_basis(U))


def _check_symmetric(S: np.ndarray, name: str = "matrix") -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"{name} must be square, got {S.shape}")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise ShapeError(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


def _floored_eigh(S, name, floor):
    S = _check_symmetric(S, name)
    if not np.all(np.isfinite(S)):
        raise SingularWeightError(f"{name} has non-finite entries")
    lam, V = np.linalg.eigh(S)
    lam_max = lam[-1] if lam.size else 0.0
    if not lam_max > 0:
        raise SingularWeightError(f"{name} has no positive eigenvalue (largest is {lam_max:g})")
    return np.maximum(lam, floor * lam_max), V, bool(lam[0] >= floor * lam_max)


def _refine_inv_sqrt(W, S, V, lam, steps=2):
    # Sylvester correction in the eigenbasis, residual in extended precision;
    # a plain eigh leaves errors of order eps * cond(S).
    ld = np.longdouble
    S_l, V_l = S.astype(ld), V.astype(ld)
    root = np.sqrt(lam.astype(ld))
    denom = root[:, None] + root[None, :]
    eye = np.eye(S.shape[0], dtype=ld)
    for _ in range(steps):
        W_l = W.astype(ld)
        E = V_l.T @ (W_l @ S_l @ W_l - eye) @ V_l
        W = (W_l - V_l @ (E / denom) @ V_l.T).astype(float)
        W = 0.5 * (W + W.T)
    return W


def inv_sqrt(S, floor: float = EIG_FLOOR, name: str = "matrix") -> np.ndarray:
    """Symmetric inverse square root with eigenvalues floored at ``floor * lam_max``.

    When no eigenvalue hits the floor the result is refined so that
    ``W @ S @ W`` matches the identity well beyond ``eps * cond(S)``.

    >>> inv_sqrt(np.diag([4.0, 9.0]))
    array([[0.5       , 0.        ],
           [0.        , 0.33333333]])
    """
    S = _check_symmetric(S, name)
    lam, V, exact = _floored_eigh(S, name, floor)
    W = (V / np.sqrt(lam)) @ V.T
    if exact:
        W = _refine_inv_sqrt(W, S, V, lam)
    return W


def _factor_gram(F, name, floor=EIG_FLOOR):
    """Eigenpairs of ``F @ F.T`` from an SVD of ``F``, eigenvalues floored at ``floor * lam_max``.

    Working from ``F`` keeps null-direction residuals at rounding level,
    where an eigendecomposition of the formed Gram matrix would leave them
    near ``sqrt(eps)``.
    """
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise SingularWeightError(f"{name} has non-finite entries")
    full = F.shape[0] > F.shape[1]
    U, sv, _ = np.linalg.svd(F, full_matrices=full)
    lam = np.zeros(F.shape[0])
    lam[:sv.size] = sv**2
    if not lam[0] > 0:
        raise SingularWeightError(f"{name} is zero")
    return np.maximum(lam, floor * lam[0]), U


def _gram_inv_sqrt(F, name):
    lam, U = _factor_gram(F, name)
    return (U / np.sqrt(lam)) @ U.T


def _gram_inv(F, name):
    lam, U = _factor_gram(F, name)
    return (U / lam) @ U.T


def build_instrument(u_meas: TimeSeries, y_meas: TimeSeries, p: HankelParams) -> np.ndarray:
    """Past inputs stacked over past outputs, ``s`` block rows each, first sample 0."""
    if u_meas.length != y_meas.length:
        raise ShapeError("input and output records differ in length")
    need = p.s + p.r + p.N - 1
    if u_meas.length < need:
        raise ShapeError(f"record of {u_meas.length} samples shorter than s + r + N - 1 = {need}")
    past = HankelParams(r=p.s, s=0, N=p.N, start=0)
    return np.vstack([build_hankel(u_meas, past), build_hankel(y_meas, past)])


@dataclass(frozen=True, eq=False)
class WeightFactors:
    """Fixed factors of the weighted matrix ``Ghat(y) = w1 @ Y_f(y) @ right_factor``."""

    w1: np.ndarray
    right_factor: np.ndarray
    q: int
    scheme: WeightingScheme
    params: HankelParams
    n_outputs: int

    def hankel_map(self) -> HankelMap:
        return HankelMap(self.w1, self.right_factor, self.params, self.n_outputs)


def compute_weights(scheme, u_meas: TimeSeries, y_meas: TimeSeries, r: int, s: int) -> WeightFactors:
    """Weights of ``scheme`` from measured data, using every sample of the record.

    The future window starts at sample ``s`` (``N = T - r - s + 1``) except for
    NOINSTR, which has no instrument and starts at 0 (``N = T - r + 1``).
    """
    scheme = WeightingScheme.parse(scheme)
    if u_meas.length != y_meas.length:
        raise ShapeError("input and output records differ in length")
    T = y_meas.length
    n_p = y_meas.channels
    p = HankelParams.for_record(T, r, s, instrument=scheme.uses_instrument)
    N = p.N
    Qu = _row_basis(build_hankel(u_meas, p))

    if scheme is WeightingScheme.NOINSTR:
        R = (np.eye(N) - Qu @ Qu.T) / N
        return WeightFactors(np.eye(r * n_p), R, N, scheme, p, n_p)

    Phi = build_instrument(u_meas, y_meas, p)
    Phi_p = _project_with(Phi, Qu)
    root_n = np.sqrt(N)

    w1 = np.eye(r * n_p)
    if scheme in (WeightingScheme.IVM, WeightingScheme.CVA):
        Yf_p = _project_with(build_hankel(y_meas, p), Qu)
        w1 = _gram_inv_sqrt(Yf_p / root_n, "projected future output covariance")

    if scheme is WeightingScheme.NONE:
        w2 = np.eye(Phi.shape[0])
    elif scheme is WeightingScheme.MOESP:
        w2 = _gram_inv(Phi_p / root_n, "projected instrument covariance") @ Phi_p
    elif scheme is WeightingScheme.N4SID:
        w2 = _gram_inv(Phi_p / root_n, "projected instrument covariance") @ Phi
    elif scheme is WeightingScheme.IVM:
        w2 = _gram_inv_sqrt(Phi / root_n, "instrument covariance")
    else:
        w2 = _gram_inv_sqrt(Phi_p / root_n, "projected instrument covariance")
    R = (Phi_p.T / N) @ w2
    # re-project after weighting: w2 amplifies rounding left along the input row space
    R -= Qu @ (Qu.T @ R)
    return WeightFactors(w1, R, R.shape[1], scheme, p, n_p)


def assemble_ghat(factors: WeightFactors, y) -> np.ndarray:
    """Weighted matrix for outputs ``y``: a window vector or a full output record."""
    if isinstance(y, TimeSeries):
        y = window_vector(y, factors.params)
    return factors.hankel_map().apply(y)
