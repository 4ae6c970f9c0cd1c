"""EM solver with pattern-coupled precision hyperparameters.

Each iteration alternates an E-step (Gaussian posterior of the signal
given the current hyperparameters) with a closed-form M-step that
updates every precision from the neighbour-weighted posterior second
moments. With ``learn_noise`` the noise precision is re-estimated from
the expected residual power in the same M-step. Iteration stops when
consecutive MAP estimates move less than ``tol_epsilon`` in l2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .errors import ConsistencyError
from .model import (
    NOISE_FLOOR,
    Posterior,
    PriorConfig,
    Problem,
    _couple,
    _gaussian_posterior,
    coupled_precision,
)

# Hyperparameters above this are treated as infinite: the coefficient is
# clamped to zero and removed from the active system for the rest of the
# solve.
PRUNE_THRESHOLD = 1e10

# Tolerance on the shrinkage-factor range check; values outside
# [-_RHO_TOL, 1 + _RHO_TOL] signal a posterior/precision mismatch.
_RHO_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the EM iteration."""

    prior: PriorConfig = field(default_factory=PriorConfig)
    tol_epsilon: float = 1e-6
    max_iters: int = 500
    learn_noise: bool = False
    init_alpha: float = 1.0
    init_gamma: Union[float, str] = "auto"
    prune_threshold: float = PRUNE_THRESHOLD

    def __post_init__(self):
        if self.tol_epsilon <= 0:
            raise ValueError(f"tol_epsilon must be positive, got {self.tol_epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init_alpha <= 0:
            raise ValueError(f"init_alpha must be positive, got {self.init_alpha}")
        if isinstance(self.init_gamma, str):
            if self.init_gamma != "auto":
                raise ValueError(f"init_gamma must be a positive float or 'auto', got {self.init_gamma!r}")
        elif self.init_gamma <= 0:
            raise ValueError(f"init_gamma must be positive, got {self.init_gamma}")


@dataclass(frozen=True)
class IterationStats:
    """Per-iteration diagnostics recorded by the solver."""

    dx_norm: float
    dx_norm_active: float
    sigma2_est: float
    q_value: float
    rho_min: float
    rho_max: float


@dataclass(frozen=True)
class SolverResult:
    """Outcome of one EM solve."""

    x_hat: np.ndarray
    alpha_final: np.ndarray
    gamma_final: float
    iterations: int
    converged: bool
    trace: List[IterationStats]


def coupled_second_moments(posterior: Posterior, beta: float) -> np.ndarray:
    """Neighbour-weighted posterior second moments.

    Entry i is ``s[i] + beta * (s[i-1] + s[i+1])`` where
    ``s = mu**2 + phi_diag``; out-of-range neighbours contribute zero.
    """
    s = posterior.mu**2 + posterior.phi_diag
    return _couple(s, beta)


def update_hyperparams(omega: np.ndarray, config: PriorConfig) -> np.ndarray:
    """Closed-form precision update ``kappa / (omega / 2 + b)``.

    Strictly decreasing in ``omega``: coefficients with small posterior
    energy get large precisions, shrinking them further.
    """
    omega = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(omega)):
        raise ValueError("omega entries must be finite")
    if np.any(omega < 0):
        raise ValueError("omega entries must be non-negative")
    if not config.b > 0:
        raise ValueError("the hyperparameter update requires b > 0")
    return config.kappa / (0.5 * omega + config.b)


def q_function(alpha: np.ndarray, posterior: Posterior, config: PriorConfig) -> float:
    """Expected complete-data log-posterior of the precisions (diagnostic).

    Evaluated at ``alpha`` against the moments of ``posterior``; the
    closed-form M-step is deliberately sub-optimal, so no monotonicity is
    implied.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("q_function requires strictly positive alpha")
    d = coupled_precision(alpha, config.beta)
    s = posterior.mu**2 + posterior.phi_diag
    return _q_value(alpha, d, s, config)


def _q_value(alpha, d, s, config: PriorConfig) -> float:
    return float(np.sum(config.a * np.log(alpha) - config.b * alpha + 0.5 * np.log(d) - 0.5 * d * s))


def shrinkage_factors(posterior: Posterior, alpha: np.ndarray, beta: float) -> np.ndarray:
    """Per-coefficient data shrinkage ``1 - phi_diag * d``.

    0 means the posterior variance equals the prior variance (no data
    influence); 1 means the data fully determine the coefficient.
    """
    d = coupled_precision(alpha, beta)
    if d.shape != posterior.phi_diag.shape:
        raise ValueError("alpha and posterior have mismatched lengths")
    rho = 1.0 - posterior.phi_diag * d
    _check_rho(rho)
    return rho


def _check_rho(rho: np.ndarray) -> None:
    if rho.size and (rho.min() < -_RHO_TOL or rho.max() > 1.0 + _RHO_TOL):
        raise ConsistencyError(
            f"shrinkage factors outside [0, 1]: min={rho.min():.3e}, max={rho.max():.3e}; "
            "posterior does not match the supplied precisions"
        )


def expected_residual_power(
    problem: Problem, posterior: Posterior, rho: np.ndarray, gamma_current: float
) -> float:
    """Posterior expectation of the squared residual ``||y - A x||^2``.

    Equals the residual at the posterior mean plus the trace term
    ``sum(rho) / gamma_current``.
    """
    if gamma_current <= 0:
        raise ValueError(f"gamma_current must be positive, got {gamma_current}")
    resid = problem.y - problem.A @ posterior.mu
    return float(resid @ resid + np.sum(rho) / gamma_current)


def update_noise_precision(chi: float, m: int, config: PriorConfig) -> float:
    """M-step noise-precision update ``(m + 2c) / (chi + 2d)``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return (m + 2.0 * config.c) / (chi + 2.0 * config.d)


def _effective_sigma2(noise_variance: Optional[float]) -> float:
    """Map a declared noise variance to the one used in the solve."""
    if noise_variance is None:
        raise ValueError("problem.noise_variance is required when learn_noise is off")
    if noise_variance == 0.0:
        return NOISE_FLOOR
    return float(noise_variance)


def _initial_gamma(config: SolverConfig, y: np.ndarray, m: int) -> float:
    if config.init_gamma == "auto":
        power = float(y @ y)
        if power <= 0.0:
            return 1.0 / NOISE_FLOOR
        return 100.0 * m / power
    return float(config.init_gamma)


def solve_pcsbl(problem: Problem, config: SolverConfig = SolverConfig()) -> SolverResult:
    """Run the pattern-coupled EM iteration on one problem instance.

    The posterior is computed over the currently active coefficients only;
    coefficients whose precision exceeds ``prune_threshold`` are clamped to
    zero and permanently removed from the system. Pruned (and out-of-range)
    neighbours contribute zero to the coupling stencil. Deterministic for
    fixed inputs.

    Returns a `SolverResult`; hitting ``max_iters`` without meeting the
    tolerance is reported via ``converged=False``, not an error.
    """
    A, y = problem.A, problem.y
    m, n = A.shape
    prior = config.prior
    beta = prior.beta

    learn = config.learn_noise
    if learn:
        gamma = _initial_gamma(config, y, m)
    else:
        gamma = 1.0 / _effective_sigma2(problem.noise_variance)

    alpha = np.full(n, float(config.init_alpha))
    active = np.ones(n, dtype=bool)
    x_prev = np.zeros(n)
    x_hat = x_prev
    trace: List[IterationStats] = []
    converged = False
    iterations = 0

    for _ in range(config.max_iters):
        iterations += 1
        alpha_eff = np.where(active, alpha, 0.0)
        d_full = _couple(alpha_eff, beta)
        d_act = d_full[active]
        A_act = A[:, active]

        mu_act, _, phi_diag_act, _ = _gaussian_posterior(A_act, y, d_act, 1.0 / gamma, with_covariance=False)

        x_hat = np.zeros(n)
        x_hat[active] = mu_act
        dx = float(np.linalg.norm(x_hat - x_prev))
        dx_active = float(np.linalg.norm((x_hat - x_prev)[active]))

        rho_act = 1.0 - phi_diag_act * d_act
        _check_rho(rho_act)

        s_full = np.zeros(n)
        s_full[active] = mu_act**2 + phi_diag_act
        omega_full = _couple(s_full, beta)
        alpha_new_act = prior.kappa / (0.5 * omega_full[active] + prior.b)

        alpha_next = alpha.copy()
        alpha_next[active] = alpha_new_act
        d_new_act = _couple(np.where(active, alpha_next, 0.0), beta)[active]
        q = _q_value(alpha_new_act, d_new_act, s_full[active], prior)

        if learn:
            chi = float(np.sum((y - A_act @ mu_act) ** 2) + np.sum(rho_act) / gamma)
            gamma = update_noise_precision(chi, m, prior)

        trace.append(
            IterationStats(
                dx_norm=dx,
                dx_norm_active=dx_active,
                sigma2_est=1.0 / gamma,
                q_value=q,
                rho_min=float(rho_act.min()) if rho_act.size else 0.0,
                rho_max=float(rho_act.max()) if rho_act.size else 0.0,
            )
        )

        alpha = alpha_next
        newly_pruned = active & (alpha > config.prune_threshold)
        if newly_pruned.any():
            active &= ~newly_pruned

        if dx <= config.tol_epsilon:
            converged = True
            break
        x_prev = x_hat

    return SolverResult(
        x_hat=x_hat,
        alpha_final=alpha,
        gamma_final=gamma,
        iterations=iterations,
        converged=converged,
        trace=trace,
    )
