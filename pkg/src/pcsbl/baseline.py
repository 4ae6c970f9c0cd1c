"""Conventional sparse Bayesian learning baseline.

A self-contained textbook SBL-EM loop with one independent precision per
coefficient (no neighbour coupling). Written deliberately without reusing
the coupled solver's linear algebra: the posterior moments are obtained
through the measurement-space covariance ``sigma2 I + A diag(1/alpha) A^T``
so the two implementations share only their inputs. Serves both as the
``sbl`` benchmark algorithm and as the reduction oracle for the coupled
solver at ``beta = 0``.
"""

from __future__ import annotations

from typing import List

import numpy as np

from .em import IterationStats, SolverConfig, SolverResult, _effective_sigma2, _initial_gamma
from .model import Problem


def solve_sbl(problem: Problem, config: SolverConfig = SolverConfig()) -> SolverResult:
    """Run conventional SBL-EM on one problem instance.

    Uses the same stopping rule, initialization, and hyperprior constants
    as the coupled solver but ignores ``config.prior.beta``.
    """
    A, y = problem.A, problem.y
    m, n = A.shape
    prior = config.prior

    if config.learn_noise:
        gamma = _initial_gamma(config, y, m)
    else:
        gamma = 1.0 / _effective_sigma2(problem.noise_variance)

    alpha = np.full(n, float(config.init_alpha))
    x_prev = np.zeros(n)
    x_hat = x_prev
    trace: List[IterationStats] = []
    converged = False
    iterations = 0

    eye_m = np.eye(m)
    for _ in range(config.max_iters):
        iterations += 1
        dinv = 1.0 / alpha
        cov_y = (A * dinv[None, :]) @ A.T + (1.0 / gamma) * eye_m
        M = np.linalg.solve(cov_y, A)
        x_hat = dinv * (M.T @ y)
        phi_diag = dinv - dinv**2 * np.einsum("ij,ij->j", A, M)

        dx = float(np.linalg.norm(x_hat - x_prev))

        s = x_hat**2 + phi_diag
        rho = 1.0 - phi_diag * alpha
        alpha_new = prior.kappa / (0.5 * s + prior.b)
        q = float(np.sum(prior.a * np.log(alpha_new) - prior.b * alpha_new + 0.5 * np.log(alpha_new) - 0.5 * alpha_new * s))

        if config.learn_noise:
            resid = y - A @ x_hat
            chi = float(resid @ resid + np.sum(rho) / gamma)
            gamma = (m + 2.0 * prior.c) / (chi + 2.0 * prior.d)

        trace.append(
            IterationStats(
                dx_norm=dx,
                dx_norm_active=dx,
                sigma2_est=1.0 / gamma,
                q_value=q,
                rho_min=float(rho.min()),
                rho_max=float(rho.max()),
            )
        )

        alpha = alpha_new
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
