"""Simulation, random test systems and the validation fit score."""

from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ShapeError
from .hankel_ops import TimeSeries
from .subspace import StateSpaceModel, response_regressors


class DivergentSimulationError(FloatingPointError):
    """A simulated trajectory overflowed; the model is badly unstable."""


class InitialStateWarning(UserWarning):
    """Initial-state regression was singular; the simulation starts from zero."""


def rng_stream(seed, name: str) -> np.random.Generator:
    """Counter-based generator for substream ``name`` of ``seed``.

    ``seed`` may be an int or a sequence of ints; each (seed, name) pair
    yields an independent, reproducible Philox stream.
    """
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    ss = np.random.SeedSequence(entropy, spawn_key=(zlib.crc32(name.encode()),))
    return np.random.Generator(np.random.Philox(ss))


def simulate(model: StateSpaceModel, u: TimeSeries, e: TimeSeries | None = None, x0=None) -> TimeSeries:
    if u.channels != model.n_inputs:
        raise ShapeError(f"model has {model.n_inputs} inputs, series has {u.channels} channels")
    n = model.order
    drive = u.data @ model.B.T
    ydirect = u.data @ model.D.T
    if e is not None:
        if e.channels != model.n_outputs or e.length != u.length:
            raise ShapeError("noise series must have n_p channels and the input's length")
        drive = drive + e.data @ model.K.T
        ydirect = ydirect + e.data
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    with np.errstate(over="ignore", invalid="ignore"):
        X = kernels.state_recursion(model.A, drive[:, :, None], x0[:, None])[:, :, 0]
        y = X @ model.C.T + ydirect
    if not np.all(np.isfinite(y)):
        raise DivergentSimulationError(f"simulation diverged (spectral radius {model.spectral_radius:.4g})")
    return TimeSeries(y)


def random_model(n_x: int, seed, n_inputs: int = 1, n_outputs: int = 1) -> StateSpaceModel:
    """Random stable model with ``D = 0`` and Gaussian ``B``, ``C``, ``K``.

    ``A`` is a Gaussian matrix rescaled so that its spectral radius is drawn
    uniformly from ``[0.4, 0.95]``.
    """
    if not 1 <= n_x <= 20:
        raise ValueError("order must be between 1 and 20")
    rng = rng_stream(seed, "model")
    A = rng.standard_normal((n_x, n_x))
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    A *= rng.uniform(0.4, 0.95) / rho
    B = rng.standard_normal((n_x, n_inputs))
    C = rng.standard_normal((n_outputs, n_x))
    K = rng.standard_normal((n_x, n_outputs))
    return StateSpaceModel(A, B, C, np.zeros((n_outputs, n_inputs)), K)


class FitScore(NamedTuple):
    per_channel: np.ndarray
    average: float


def fit_score(y_val: TimeSeries, y_pred: TimeSeries) -> FitScore:
    """``100 (1 - ||y_pred - y|| / ||y - mean(y)||)`` per channel, and their mean."""
    if y_val.data.shape != y_pred.data.shape:
        raise ShapeError(f"shape mismatch {y_val.data.shape} vs {y_pred.data.shape}")
    y = y_val.data
    denom = np.linalg.norm(y - y.mean(axis=0), axis=0)
    if np.any(denom == 0):
        raise ValueError("validation output channel is constant; fit is undefined")
    with np.errstate(over="ignore"):
        # an exploding prediction scores -inf rather than warning
        per = 100.0 * (1.0 - np.linalg.norm(y_pred.data - y, axis=0) / denom)
    return FitScore(per, float(np.mean(per)))


def estimate_initial_state(model: StateSpaceModel, u: TimeSeries, y: TimeSeries, horizon: int | None = None):
    """Least-squares initial state from the first ``min(5 n_x, T)`` samples.

    Returns ``None`` when the regression is rank deficient.
    """
    n = model.order
    k = min(horizon or 5 * n, u.length)
    free = simulate(model, u[:k]).data
    Ox, _ = response_regressors(model.A, model.C, np.zeros((k, 0)))
    O = Ox.reshape(k * model.n_outputs, n)
    x0, _, rank, _ = np.linalg.lstsq(O, (y.data[:k] - free).reshape(-1), rcond=None)
    return x0 if rank == n else None


def predict_for_validation(model: StateSpaceModel, u_val: TimeSeries, y_val: TimeSeries) -> TimeSeries:
    """Noise-free simulation from an initial state fitted to the start of ``y_val``."""
    if u_val.length != y_val.length or y_val.channels != model.n_outputs:
        raise ShapeError("validation records do not match the model")
    x0 = estimate_initial_state(model, u_val, y_val)
    if x0 is None:
        warnings.warn("initial-state regression is singular; using x0 = 0", InitialStateWarning, stacklevel=2)
        x0 = np.zeros(model.order)
    return simulate(model, u_val, x0=x0)


@dataclass(frozen=True)
class ExperimentConfig:
    n_id: int = 300
    n_val: int = 1500
    order_range: tuple[int, int] = (4, 20)
    input_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.order_range
        if not 1 <= lo <= hi <= 20:
            raise ValueError("order range must lie within [1, 20]")
        if self.input_scale <= 0:
            raise ValueError("input scale must be positive")


@dataclass(frozen=True, eq=False)
class Record:
    u: TimeSeries
    y: TimeSeries
    e: TimeSeries


def generate_record(model: StateSpaceModel, length: int, sigma: float, seed, tag: str = "") -> Record:
    """Simulate ``length`` samples with Gaussian input (scaled by ``sigma``) and unit Gaussian noise."""
    u = sigma * rng_stream(seed, f"input{tag}").standard_normal((length, model.n_inputs))
    e = rng_stream(seed, f"noise{tag}").standard_normal((length, model.n_outputs))
    u, e = TimeSeries(u), TimeSeries(e)
    return Record(u, simulate(model, u, e), e)


@dataclass(frozen=True, eq=False)
class ExperimentData:
    model: StateSpaceModel
    ident: Record
    valid: Record


def experiment_data(order: int, sigma: float, seed, n_id: int = 300, n_val: int = 1500, noise: bool = True) -> ExperimentData:
    """A random system with independent identification and validation records."""
    model = random_model(order, seed)
    ident = generate_record(model, n_id, sigma, seed, "-id")
    valid = generate_record(model, n_val, sigma, seed, "-val")
    if not noise:
        ident = Record(ident.u, simulate(model, ident.u), TimeSeries(np.zeros_like(ident.e.data)))
        valid = Record(valid.u, simulate(model, valid.u), TimeSeries(np.zeros_like(valid.e.data)))
    return ExperimentData(model, ident, valid)
