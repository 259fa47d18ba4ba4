"""Exact Gaussian-process regression with an ARD squared-exponential kernel.

Inputs live in the unit cube; targets are standardized before fitting and
predictions are mapped back to the original scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from swarmopt.errors import AllCandidatesFailed, NotPositiveDefinite

STD_FLOOR = 1e-12
JITTER_START = 1e-10
JITTER_MAX = 1e-4

SIGNAL_GRID = (0.25, 1.0, 4.0)
LENGTH_GRID = (0.05, 0.1, 0.2, 0.4, 0.8, 1.6)
NOISE_GRID = (1e-8, 1e-4, 1e-2)


@dataclass(frozen=True)
class KernelHyper:
    signal_variance: float
    length_scales: tuple
    noise_variance: float

    def __post_init__(self):
        ls = tuple(float(v) for v in self.length_scales)
        object.__setattr__(self, "length_scales", ls)
        if not (math.isfinite(self.signal_variance) and self.signal_variance > 0):
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if not ls or not all(math.isfinite(v) and v > 0 for v in ls):
            raise ValueError(f"length_scales must be positive, got {ls}")
        if not (math.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")

    @classmethod
    def isotropic(cls, signal_variance: float, length_scale: float, noise_variance: float, d: int):
        return cls(signal_variance, (length_scale,) * d, noise_variance)


def kernel_eval(x1, x2, hyper: KernelHyper) -> float:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = (x1 - x2) / np.asarray(hyper.length_scales)
    return float(hyper.signal_variance * math.exp(-0.5 * float(r @ r)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, hyper: KernelHyper) -> np.ndarray:
    ls = np.asarray(hyper.length_scales)
    diff = (np.atleast_2d(A)[:, None, :] - np.atleast_2d(B)[None, :, :]) / ls
    return hyper.signal_variance * np.exp(-0.5 * np.einsum("ijk,ijk->ij", diff, diff))


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    if y.size == 0:
        return y, 0.0, 1.0
    mean = float(y.mean())
    std = float(y.std())
    if std < STD_FLOOR:
        std = 1.0
    return (y - mean) / std, mean, std


def _cholesky_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky of ``K + jitter*I``, escalating jitter tenfold up to the cap."""
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.mean(np.diag(K)))
    rel = JITTER_START
    while rel <= JITTER_MAX * (1 + 1e-9):
        jitter = rel * scale
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            L = None
        if L is not None and np.all(np.isfinite(L)):
            return L, jitter
        rel *= 10.0
    raise NotPositiveDefinite(f"Cholesky failed for {n}x{n} Gram matrix even with jitter {JITTER_MAX:g}")


@dataclass(frozen=True, eq=False)
class GpModel:
    train_inputs: np.ndarray
    train_targets: np.ndarray  # standardized
    target_mean: float
    target_std: float
    hyper: KernelHyper
    chol_factor: np.ndarray
    dual_weights: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def raw_targets(self) -> np.ndarray:
        return self.train_targets * self.target_std + self.target_mean

    def predict(self, x) -> tuple[float, float]:
        mean, var = self.predict_many(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(mean[0]), float(var[0])

    def predict_many(self, Xq: np.ndarray, clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        prior = np.full(Xq.shape[0], self.hyper.signal_variance)
        if self.n == 0:
            return np.zeros(Xq.shape[0]), prior
        Ks = kernel_matrix(self.train_inputs, Xq, self.hyper)  # n x m
        mean = Ks.T @ self.dual_weights
        V = solve_triangular(self.chol_factor, Ks, lower=True)
        var = prior - np.einsum("ij,ij->j", V, V)
        if clamp:
            var = np.maximum(var, 0.0)
        return mean * self.target_std + self.target_mean, var * self.target_std**2

    def fingerprint(self) -> int:
        parts = (self.train_inputs, self.train_targets, self.chol_factor, self.dual_weights)
        return hash((b"".join(np.ascontiguousarray(a).tobytes() for a in parts),
                     self.target_mean, self.target_std, self.hyper))


def fit(X, y, hyper: KernelHyper) -> GpModel:
    X = np.array(X, dtype=float).reshape(-1, len(hyper.length_scales))
    y = np.array(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    ys, mean, std = _standardize(y)
    K = kernel_matrix(X, X, hyper) + hyper.noise_variance * np.eye(len(y))
    L, jitter = _cholesky_with_jitter(K)
    if len(y):
        alpha = solve_triangular(L.T, solve_triangular(L, ys, lower=True), lower=False)
    else:
        alpha = np.zeros(0)
    for a in (X, ys, L, alpha):
        a.setflags(write=False)
    return GpModel(X, ys, mean, std, hyper, L, alpha, jitter)


def predict(model: GpModel, x) -> tuple[float, float]:
    return model.predict(x)


def log_marginal_likelihood(X, y, hyper: KernelHyper) -> float:
    model = fit(X, y, hyper)
    return _lml(model)


def _lml(model: GpModel) -> float:
    n = model.n
    return float(
        -0.5 * model.train_targets @ model.dual_weights
        - np.log(np.diag(model.chol_factor)).sum()
        - 0.5 * n * math.log(2.0 * math.pi)
    )


def candidate_hypers(d: int):
    for s, ell, noise in itertools.product(SIGNAL_GRID, LENGTH_GRID, NOISE_GRID):
        yield KernelHyper.isotropic(s, ell, noise, d)


def select_hyperparameters(X, y, space_dim: int) -> KernelHyper:
    """Exhaustive log-likelihood search over the fixed 54-point grid."""
    y = np.asarray(y, dtype=float).reshape(-1)
    candidates = list(candidate_hypers(space_dim))
    if y.size and float(y.std()) < STD_FLOOR:
        # flat data carries no information about the kernel
        return candidates[0]
    best, best_value = None, -math.inf
    for hyper in candidates:
        try:
            value = log_marginal_likelihood(X, y, hyper)
        except NotPositiveDefinite:
            continue
        if value > best_value:
            best, best_value = hyper, value
    if best is None:
        raise AllCandidatesFailed(f"no kernel candidate produced a positive-definite Gram matrix (n={y.size})")
    return best
