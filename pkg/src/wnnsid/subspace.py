"""State-space estimation from the weighted Hankel matrix.

The column space of ``Ghat`` (after undoing the left weight) estimates the
extended observability matrix. ``C`` is its first block row and ``A``
follows from shift invariance. Given ``(A, C)`` the output is linear in
``(B, D, x0)``, which are fitted by least squares over the whole record.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import ConditioningError, DegenerateSpectrumError, ShapeError
from .hankel_ops import TimeSeries

MAX_SHIFT_CONDITION = 1e12


def _matrix(M, name, rows=None, cols=None):
    M = np.array(M, dtype=float, ndmin=2)
    if M.ndim != 2 or (rows is not None and M.shape[0] != rows) or (cols is not None and M.shape[1] != cols):
        want = f"({rows if rows is not None else '*'}, {cols if cols is not None else '*'})"
        raise ShapeError(f"{name} must have shape {want}, got {M.shape}")
    return M


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """``x(k+1) = A x(k) + B u(k) + K e(k)``, ``y(k) = C x(k) + D u(k) + e(k)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    K: np.ndarray | None = None
    stabilized: bool = False

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ShapeError(f"A must be square, got {A.shape}")
        n = A.shape[0]
        B = _matrix(self.B, "B", rows=n)
        C = _matrix(self.C, "C", cols=n)
        n_m, n_p = B.shape[1], C.shape[0]
        D = _matrix(self.D, "D", rows=n_p, cols=n_m)
        K = np.zeros((n, n_p)) if self.K is None else _matrix(self.K, "K", rows=n, cols=n_p)
        for name, M in zip("ABCDK", (A, B, C, D, K)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A)))) if self.order else 0.0

    def markov_parameters(self, count: int) -> np.ndarray:
        """``[D, CB, CAB, ..., CA^(count-2) B]`` stacked as ``(count, n_p, n_m)``."""
        out = [self.D]
        AkB = self.B
        for _ in range(count - 1):
            out.append(self.C @ AkB)
            AkB = self.A @ AkB
        return np.array(out)

    def transformed(self, T) -> StateSpaceModel:
        """Equivalent model in state coordinates ``z = T x``."""
        Ti = np.linalg.inv(T)
        return replace(self, A=T @ self.A @ Ti, B=T @ self.B, C=self.C @ Ti, K=T @ self.K)


@dataclass(frozen=True)
class OrderSelection:
    singular_values: np.ndarray = field(repr=False)
    threshold: float
    chosen: int


def select_order(sv) -> OrderSelection:
    """Count singular values strictly above the log-scale midpoint of the spectrum.

    The midpoint is the geometric mean of the largest and smallest values,
    the smallest floored at ``eps * largest``. The count is clamped to
    ``[1, len(sv) - 1]``.
    """
    sv = np.sort(np.abs(np.asarray(sv, dtype=float)))[::-1]
    if sv.size == 0 or not sv[0] > 0:
        raise DegenerateSpectrumError("singular value spectrum is identically zero")
    top = sv[0]
    bottom = max(sv[-1], np.finfo(float).eps * top)
    threshold = float(np.sqrt(top * bottom))
    chosen = int(np.sum(sv > threshold))
    chosen = min(max(chosen, 1), max(sv.size - 1, 1))
    return OrderSelection(sv, threshold, chosen)


def observability_from_ghat(ghat, w1, n_x: int) -> np.ndarray:
    """``w1^-1 U_1 S_1^(1/2)`` from the leading ``n_x`` singular triplets of ``ghat``."""
    U, sv, _ = np.linalg.svd(ghat, full_matrices=False)
    return np.linalg.solve(w1, U[:, :n_x] * np.sqrt(sv[:n_x]))


def _lstsq_checked(M, rhs, what):
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[-1] <= sv[0] / MAX_SHIFT_CONDITION:
        cond = np.inf if sv.size == 0 or sv[-1] == 0 else sv[0] / sv[-1]
        raise ConditioningError(f"{what} is ill-conditioned (condition number {cond:.3g})")
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


def response_regressors(A, C, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Output sensitivities to the initial state and to ``B``.

    Returns ``(Ox, Ob)`` with ``Ox[k] = C A^k`` (``(T, n_p, n)``) and
    ``Ob[k, :, m*n:(m+1)*n] = C sum_{j<k} A^(k-1-j) u_m(j)`` so that the
    zero-``D`` response is ``Ox[k] @ x0 + Ob[k] @ vec(B)`` with ``B``
    stacked column by column.
    """
    T, n_m = u.shape
    n = A.shape[0]
    b = n * (1 + n_m)
    drive = np.zeros((T, n, b))
    eye = np.eye(n)
    for m in range(n_m):
        drive[:, :, n * (m + 1):n * (m + 2)] = u[:, m, None, None] * eye
    x0 = np.zeros((n, b))
    x0[:, :n] = eye
    X = kernels.state_recursion(A, drive, x0)
    Y = np.einsum("pn,tnb->tpb", C, X)
    return Y[:, :, :n], Y[:, :, n:]


def fit_input_matrices(A, C, u: TimeSeries, y: TimeSeries, direct_term: bool = True):
    """Least-squares ``(B, D, x0)`` for fixed ``(A, C)`` over the whole record."""
    if u.length != y.length:
        raise ShapeError("input and output records differ in length")
    n = A.shape[0]
    T, n_m = u.data.shape
    n_p = y.channels
    Ox, Ob = response_regressors(A, C, u.data)
    blocks = [Ox.reshape(T * n_p, n), Ob.reshape(T * n_p, n * n_m)]
    if direct_term:
        # y[k, p] depends on D[p, :] through u[k, :]
        Dreg = np.einsum("tm,pq->tpqm", u.data, np.eye(n_p)).reshape(T * n_p, n_p * n_m)
        blocks.append(Dreg)
    design = np.hstack(blocks)
    # columns scale like A^k, which spans many decades for slow or unstable poles
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    theta = np.linalg.lstsq(design / scale, y.data.reshape(-1), rcond=None)[0] / scale
    if not np.all(np.isfinite(theta)):
        raise ConditioningError("input regression produced non-finite coefficients")
    x0 = theta[:n]
    B = theta[n:n + n * n_m].reshape(n_m, n).T
    D = theta[n + n * n_m:].reshape(n_p, n_m) if direct_term else np.zeros((n_p, n_m))
    return B, D, x0


def extract_model(ghat, w1, u: TimeSeries, y: TimeSeries, n_x: int, direct_term: bool = True) -> StateSpaceModel:
    """Estimate ``(A, B, C, D)`` of order ``n_x``; ``K`` is left at zero."""
    ghat = np.asarray(ghat, dtype=float)
    n_p = y.channels
    if ghat.shape[0] % n_p:
        raise ShapeError(f"Ghat has {ghat.shape[0]} rows, not a multiple of {n_p} outputs")
    if not 1 <= n_x <= min(ghat.shape[0] - n_p, ghat.shape[1]):
        raise ValueError(f"order {n_x} incompatible with Ghat of shape {ghat.shape}")
    gamma = observability_from_ghat(ghat, w1, n_x)
    C = gamma[:n_p]
    A = _lstsq_checked(gamma[:-n_p], gamma[n_p:], "shift-invariance system")
    B, D, _ = fit_input_matrices(A, C, u, y, direct_term)
    return StateSpaceModel(A, B, C, D, np.zeros((n_x, n_p)))


def stabilize(model: StateSpaceModel, margin: float = 0.99) -> StateSpaceModel:
    """Scale ``A`` to spectral radius ``margin`` if it is not already below one."""
    rho = model.spectral_radius
    A = model.A * (margin / rho) if rho >= 1 else model.A
    return replace(model, A=A, stabilized=True)
