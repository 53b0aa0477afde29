"""Time series containers, block Hankel matrices and the weighted Hankel map.

The map ``x -> W1 @ H(x) @ R`` is the affine operator of the nuclear norm
program: ``x`` stacks the samples that populate a block Hankel matrix,
``W1`` acts on block rows and ``R`` on columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .errors import ShapeError, WindowError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples of a vector signal, stored as a read-only ``(T, c)`` array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"time series needs shape (T>=1, c>=1), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.length

    def __getitem__(self, idx) -> TimeSeries:
        if not isinstance(idx, slice):
            raise TypeError("TimeSeries only supports slicing")
        return TimeSeries(self.data[idx])

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True)
class HankelParams:
    """Window of a block Hankel matrix: ``r`` block rows, ``N`` columns, first sample ``start``.

    ``s`` is the instrument depth (past block rows); it does not enter the
    Hankel matrix itself.
    """

    r: int
    s: int
    N: int
    start: int = 0

    def __post_init__(self):
        if self.r < 1 or self.N < 1 or self.s < 0 or self.start < 0:
            raise WindowError(f"invalid Hankel window {self}")

    @property
    def n_samples(self) -> int:
        """Number of samples the window spans, ``N + r - 1``."""
        return self.N + self.r - 1

    @property
    def stop(self) -> int:
        return self.start + self.n_samples

    def check(self, length: int):
        if self.start + self.r + self.N - 1 > length:
            raise WindowError(
                f"start + r + N - 1 = {self.start} + {self.r} + {self.N} - 1 "
                f"= {self.stop} exceeds record length {length}"
            )

    @classmethod
    def for_record(cls, length: int, r: int, s: int, instrument: bool = True) -> HankelParams:
        """Window that uses every sample of a record of ``length`` samples.

        With instruments the future window starts at ``s`` and
        ``N = length - r - s + 1``; without, it starts at 0 and
        ``N = length - r + 1``.
        """
        if instrument:
            if s < 1:
                raise WindowError("instrument variables need s >= 1")
            N = length - r - s + 1
            start = s
        else:
            N = length - r + 1
            start = 0
        if N < 1:
            raise WindowError(
                f"record of {length} samples is too short for r={r}, s={s}"
                + ("" if instrument else " (no instruments)")
            )
        return cls(r=r, s=s, N=N, start=start)


def build_hankel(series: TimeSeries, p: HankelParams) -> np.ndarray:
    """Block Hankel matrix of shape ``(r * c, N)``.

    Block ``(j, k)`` holds sample ``start + j + k`` with its channels stacked.

    >>> build_hankel(TimeSeries([1., 2., 3., 4.]), HankelParams(r=2, s=0, N=3))
    array([[1., 2., 3.],
           [2., 3., 4.]])
    """
    p.check(series.length)
    return _hankel_of(series.data[p.start:p.stop], p.r, p.N)


def _hankel_of(samples: np.ndarray, r: int, N: int) -> np.ndarray:
    c = samples.shape[1]
    # windows[k, ch, j] = samples[k + j, ch]
    windows = sliding_window_view(samples, r, axis=0)
    return np.ascontiguousarray(windows.transpose(2, 1, 0).reshape(r * c, N))


def window_vector(series: TimeSeries, p: HankelParams) -> np.ndarray:
    """Samples covered by window ``p``, flattened sample-major."""
    p.check(series.length)
    return series.data[p.start:p.stop].reshape(-1).copy()


def replace_window(series: TimeSeries, p: HankelParams, x: np.ndarray) -> TimeSeries:
    """Copy of ``series`` with the samples of window ``p`` taken from ``x``."""
    p.check(series.length)
    data = series.data.copy()
    data[p.start:p.stop] = np.asarray(x, dtype=float).reshape(p.n_samples, series.channels)
    return TimeSeries(data)


@dataclass(frozen=True, eq=False)
class HankelMap:
    """Linear map ``x -> weight_left @ H(x) @ right_factor``.

    ``x`` holds ``N + r - 1`` samples of ``n_channels`` channels laid out
    sample-major, exactly as :func:`window_vector` produces them.
    """

    weight_left: np.ndarray
    right_factor: np.ndarray
    params: HankelParams
    n_channels: int = 1

    def __post_init__(self):
        rc = self.params.r * self.n_channels
        w1 = np.asarray(self.weight_left, dtype=float)
        R = np.asarray(self.right_factor, dtype=float)
        if w1.shape != (rc, rc):
            raise ShapeError(f"weight_left must be {(rc, rc)}, got {w1.shape}")
        if R.ndim != 2 or R.shape[0] != self.params.N:
            raise ShapeError(f"right_factor must have {self.params.N} rows, got {R.shape}")
        object.__setattr__(self, "weight_left", w1)
        object.__setattr__(self, "right_factor", R)

    @property
    def var_dim(self) -> int:
        return self.n_channels * self.params.n_samples

    @property
    def out_shape(self) -> tuple[int, int]:
        return self.params.r * self.n_channels, self.right_factor.shape[1]

    def hankel(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.var_dim,):
            raise ShapeError(f"expected vector of length {self.var_dim}, got shape {x.shape}")
        return _hankel_of(x.reshape(self.params.n_samples, self.n_channels), self.params.r, self.params.N)

    def apply(self, x) -> np.ndarray:
        return self.weight_left @ (self.hankel(x) @ self.right_factor)

    def adjoint(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.shape != self.out_shape:
            raise ShapeError(f"expected matrix of shape {self.out_shape}, got {Z.shape}")
        B = (self.weight_left.T @ Z) @ self.right_factor.T
        return kernels.hankel_adjoint(B, self.params.r, self.n_channels, self.params.n_samples)

    @cached_property
    def gram(self) -> np.ndarray:
        P = self.weight_left.T @ self.weight_left
        Q = self.right_factor @ self.right_factor.T
        M = kernels.gram_assemble(P, Q, self.params.r, self.n_channels, self.params.N)
        return 0.5 * (M + M.T)


def apply_map(m: HankelMap, x) -> np.ndarray:
    return m.apply(x)


def apply_adjoint(m: HankelMap, Z) -> np.ndarray:
    return m.adjoint(Z)


def gram_matrix(m: HankelMap) -> np.ndarray:
    """Dense ``M`` with ``M @ x == apply_adjoint(m, apply_map(m, x))``."""
    return m.gram
