"""Linear measurement model and the coupled Gaussian posterior.

The signal prior couples each coefficient's precision to the precisions of
its immediate neighbours: the effective prior precision of coefficient i is
``alpha[i] + beta * (alpha[i-1] + alpha[i+1])`` with out-of-range neighbours
treated as zero. ``beta = 0`` recovers the classic independent
sparse-Bayesian prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import SingularSystemError

# Solver-side variance used when the caller declares exact (noise-free)
# measurements; keeps the posterior well defined.
NOISE_FLOOR = 1.5e-5

# Ridge scale for the one-shot retry after a failed factorization.
_RIDGE_SCALE = 1e-12


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Problem:
    """An instance of ``y = A x + w``.

    Parameters
    ----------
    A : ndarray, shape (m, n)
        Measurement matrix.
    y : ndarray, shape (m,)
        Observation vector.
    noise_variance : float, optional
        True noise variance sigma^2. ``0.0`` declares exact measurements
        (noise-free mode: solvers substitute `NOISE_FLOOR`). ``None`` means
        unknown.
    truth : ndarray, shape (n,), optional
        Ground-truth signal, kept for evaluation only.
    """

    A: np.ndarray
    y: np.ndarray
    noise_variance: Optional[float] = None
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"A must be a non-empty 2-D matrix, got shape {A.shape}")
        if y.shape[0] != A.shape[0]:
            raise ValueError(f"y has length {y.shape[0]}, expected {A.shape[0]} (rows of A)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise ValueError("A and y must be finite")
        if self.noise_variance is not None:
            if not np.isfinite(self.noise_variance) or self.noise_variance < 0:
                raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")
        object.__setattr__(self, "A", _as_readonly(A))
        object.__setattr__(self, "y", _as_readonly(y))
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=float).ravel()
            if truth.shape[0] != A.shape[1]:
                raise ValueError(f"truth has length {truth.shape[0]}, expected {A.shape[1]}")
            object.__setattr__(self, "truth", _as_readonly(truth))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PriorConfig:
    """Hyperprior and coupling parameters.

    ``beta`` weights the neighbour coupling (0 = independent prior).
    ``a``/``b`` are the Gamma shape/rate over the signal precisions,
    ``kappa`` the numerator of the closed-form hyperparameter update
    (defaults to ``a + 0.2``, inside the optimality bracket
    ``[a, a + c0]``), and ``c``/``d`` the Gamma shape/rate over the noise
    precision.
    """

    beta: float = 1.0
    a: float = 0.5
    b: float = 1e-6
    kappa: Optional[float] = None
    c: float = 1e-6
    d: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.b < 0:
            raise ValueError(f"b must be non-negative, got {self.b}")
        if self.c <= 0 or self.d <= 0:
            raise ValueError("c and d must be positive")
        if self.kappa is None:
            object.__setattr__(self, "kappa", self.a + 0.2)
        if not self.a <= self.kappa <= self.a + 1.5:
            raise ValueError(f"kappa must lie in [a, a + 1.5] = [{self.a}, {self.a + 1.5}], got {self.kappa}")


@dataclass(frozen=True)
class Posterior:
    """Gaussian posterior over the signal given hyperparameters.

    ``phi`` is the full covariance and may be None when only the diagonal
    was requested; ``d_diag`` is the coupled prior precision diagonal that
    produced it, ``nu`` its reciprocal, and ``asymmetry`` the max-norm
    asymmetry of the covariance before symmetrization.
    """

    mu: np.ndarray
    phi: Optional[np.ndarray]
    phi_diag: np.ndarray
    d_diag: np.ndarray
    nu: np.ndarray
    asymmetry: float = 0.0


def coupled_precision(alpha: np.ndarray, beta: float) -> np.ndarray:
    """Diagonal of the coupled prior precision.

    Returns ``d`` with ``d[i] = alpha[i] + beta * (alpha[i-1] + alpha[i+1])``,
    out-of-range neighbours treated as zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1:
        raise ValueError("alpha must be a non-empty 1-D vector")
    if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
        raise ValueError("alpha entries must be finite and non-negative")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return _couple(alpha, beta)


def _couple(v: np.ndarray, beta: float) -> np.ndarray:
    """Apply the three-point neighbour stencil with zero boundaries."""
    out = v.astype(float, copy=True)
    if beta != 0.0 and v.size > 1:
        out[:-1] += beta * v[1:]
        out[1:] += beta * v[:-1]
    return out


def compute_posterior(
    problem: Problem,
    alpha: np.ndarray,
    beta: float,
    noise_variance: float,
    method: str = "auto",
    with_covariance: bool = True,
) -> Posterior:
    """Posterior mean and covariance of the signal.

    Solves ``phi = (A^T A / sigma2 + D)^-1`` and ``mu = phi A^T y / sigma2``
    where ``D = diag(coupled_precision(alpha, beta))``.

    Parameters
    ----------
    problem : Problem
        Measurement instance.
    alpha : ndarray, shape (n,)
        Non-negative precision hyperparameters.
    beta : float
        Neighbour coupling weight in [0, 1].
    noise_variance : float
        Strictly positive observation noise variance used for the solve.
    method : {"auto", "direct", "woodbury"}
        "direct" factors the n-by-n system; "woodbury" solves the
        equivalent m-by-m system (requires every coupled precision to be
        strictly positive). "auto" picks direct when n <= m, else woodbury.
    with_covariance : bool
        When False, skip materializing the full covariance (``phi`` is
        None); the diagonal is always computed.

    Raises
    ------
    SingularSystemError
        If the system cannot be factorized even after a one-shot ridge
        retry.
    """
    if noise_variance is None or not noise_variance > 0:
        raise ValueError(f"noise_variance must be strictly positive, got {noise_variance}")
    d = coupled_precision(alpha, beta)
    if d.shape[0] != problem.n:
        raise ValueError(f"alpha has length {d.shape[0]}, expected {problem.n}")
    mu, phi, phi_diag, asym = _gaussian_posterior(
        problem.A, problem.y, d, noise_variance, method=method, with_covariance=with_covariance
    )
    with np.errstate(divide="ignore"):
        nu = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), np.inf)
    return Posterior(mu=mu, phi=phi, phi_diag=phi_diag, d_diag=d, nu=nu, asymmetry=asym)


def map_estimate(posterior: Posterior) -> np.ndarray:
    """MAP signal estimate: the mean of the Gaussian posterior."""
    return posterior.mu.copy()


def _cho_with_retry(H: np.ndarray, what: str):
    """Cholesky-factor ``H``, retrying once with a small ridge."""
    try:
        return scipy.linalg.cho_factor(H, lower=True)
    except scipy.linalg.LinAlgError:
        pass
    floor = _RIDGE_SCALE * np.trace(H) / H.shape[0]
    Hr = H + floor * np.eye(H.shape[0])
    try:
        return scipy.linalg.cho_factor(Hr, lower=True)
    except scipy.linalg.LinAlgError:
        raise SingularSystemError(f"{what} is not positive definite", floor) from None


def _gaussian_posterior(A, y, d, noise_variance, method="auto", with_covariance=True):
    """Core posterior solve shared by the direct and m-by-m paths."""
    m, n = A.shape
    if method == "auto":
        method = "direct" if n <= m or np.any(d <= 0) else "woodbury"
    if method == "direct":
        return _posterior_direct(A, y, d, noise_variance, with_covariance)
    if method == "woodbury":
        if np.any(d <= 0):
            raise ValueError("the m-by-m path requires strictly positive coupled precisions")
        return _posterior_woodbury(A, y, d, noise_variance, with_covariance)
    raise ValueError(f"unknown method {method!r}")


def _posterior_direct(A, y, d, noise_variance, with_covariance):
    gamma = 1.0 / noise_variance
    H = gamma * (A.T @ A)
    H[np.diag_indices_from(H)] += d
    cho = _cho_with_retry(H, "posterior precision")
    mu = scipy.linalg.cho_solve(cho, gamma * (A.T @ y))
    phi = scipy.linalg.cho_solve(cho, np.eye(len(d)))
    asym = float(np.max(np.abs(phi - phi.T))) if phi.size else 0.0
    phi = 0.5 * (phi + phi.T)
    phi_diag = np.diag(phi).copy()
    return mu, (phi if with_covariance else None), phi_diag, asym


def _posterior_woodbury(A, y, d, noise_variance, with_covariance):
    # phi = D^-1 - D^-1 A^T (sigma2 I + A D^-1 A^T)^-1 A D^-1
    # mu  = D^-1 A^T (sigma2 I + A D^-1 A^T)^-1 y
    dinv = 1.0 / d
    ADi = A * dinv[None, :]
    B = ADi @ A.T
    B[np.diag_indices_from(B)] += noise_variance
    cho = _cho_with_retry(B, "measurement-space system")
    W = scipy.linalg.cho_solve(cho, ADi)
    mu = W.T @ y
    phi_diag = dinv - np.einsum("ij,ij->j", ADi, W)
    asym = 0.0
    phi = None
    if with_covariance:
        phi = -(ADi.T @ W)
        phi[np.diag_indices_from(phi)] += dinv
        asym = float(np.max(np.abs(phi - phi.T)))
        phi = 0.5 * (phi + phi.T)
        phi_diag = np.diag(phi).copy()
    return mu, phi, phi_diag, asym
