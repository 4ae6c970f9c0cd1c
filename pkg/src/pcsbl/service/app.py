"""HTTP service exposing generation, recovery, and benchmark sweeps.

All endpoints are pure: matrices and results travel in the request and
response bodies, and any file handling is left to the client (the bundled
CLI writes the CSV artifacts).
"""

from __future__ import annotations

from dataclasses import asdict
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import baseline, bench, em, rwl1
from ..errors import GenerationError, InfeasibleProblemError, InnerSolverError, SingularSystemError
from ..model import PriorConfig, Problem
from ..synthgen import EnsembleSpec, generate
from . import schemas

try:
    _VERSION = version("pcsbl")
except PackageNotFoundError:
    _VERSION = "unknown"

app = FastAPI(title="pcsbl", description="Block-sparse signal recovery service", version=_VERSION)


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=_VERSION)


@app.post("/generate", response_model=schemas.GenerateResponse)
def generate_instance(req: schemas.GenerateRequest):
    try:
        spec = EnsembleSpec(n=req.n, m=req.m, k=req.k, l=req.l, snr_db=req.snr_db, seed=req.seed)
        instance = generate(spec)
    except (ValueError, GenerationError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    problem = instance.problem
    return schemas.GenerateResponse(
        A=problem.A.tolist(),
        y=problem.y.tolist(),
        x_true=problem.truth.tolist(),
        noise_variance=problem.noise_variance,
        layout=schemas.LayoutInfo(
            n=spec.n,
            m=spec.m,
            k=spec.k,
            l=spec.l,
            snr_db=spec.snr_db,
            seed=spec.seed,
            blocks=[schemas.BlockSpan(start=s, len=ln) for s, ln in instance.block_layout],
        ),
    )


@app.post("/recover", response_model=schemas.RecoverResponse)
def recover(req: schemas.RecoverRequest):
    try:
        problem = Problem(A=np.asarray(req.A), y=np.asarray(req.y), noise_variance=req.sigma2)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None

    try:
        if req.algo in ("pcsbl", "sbl"):
            if not req.learn_noise and req.sigma2 is None:
                raise HTTPException(
                    status_code=422, detail="sigma2 is required unless learn_noise is set"
                )
            prior = PriorConfig(beta=req.beta if req.algo == "pcsbl" else 0.0)
            config = em.SolverConfig(
                prior=prior, tol_epsilon=req.tol, max_iters=req.max_iters, learn_noise=req.learn_noise
            )
            solver = em.solve_pcsbl if req.algo == "pcsbl" else baseline.solve_sbl
            res = solver(problem, config)
            return schemas.RecoverResponse(
                x_hat=res.x_hat.tolist(),
                iterations=res.iterations,
                converged=res.converged,
                sigma2_est=1.0 / res.gamma_final if req.learn_noise else None,
            )

        budget = req.noise_budget
        if budget is None and req.sigma2 is not None and req.sigma2 > 0:
            budget = float(np.sqrt(problem.m * req.sigma2))
        config = rwl1.RwConfig(beta=req.beta, outer_iters=8, noise_budget=budget)
        solver = {"mrl1": rwl1.solve_mrl1, "rl1": rwl1.solve_rl1, "l1": rwl1.solve_l1}[req.algo]
        res = solver(problem, config)
        return schemas.RecoverResponse(x_hat=res.x_hat.tolist(), iterations=res.iterations, converged=True)
    except InnerSolverError as exc:
        return schemas.RecoverResponse(
            x_hat=exc.last_iterate.tolist(), iterations=exc.iterations, converged=False
        )
    except (ValueError, InfeasibleProblemError, SingularSystemError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


@app.post("/bench", response_model=schemas.BenchResponse)
def run_bench(req: schemas.BenchRequest):
    if req.axis == "k" and req.m is None:
        raise HTTPException(status_code=422, detail="m is required when sweeping the k axis")
    template = EnsembleSpec(
        n=req.n,
        m=req.m if req.m is not None else req.n,  # placeholder; m_over_n points set m
        k=req.k,
        l=req.l,
        snr_db=req.snr_db,
        seed=0,
    )
    try:
        result = bench.run_sweep(
            axis=req.axis,
            points=req.points,
            template=template,
            algorithms=req.algos,
            trials=req.trials,
            master_seed=req.seed,
            beta=req.beta,
        )
    except (ValueError, GenerationError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    return schemas.BenchResponse(
        axis=result.axis,
        points=result.points,
        records=[schemas.TrialRecordModel(**asdict(r)) for r in result.records],
        summary=[
            schemas.SummaryRow(
                algorithm=a.algorithm,
                axis_value=a.axis_value,
                success_rate=a.success_rate,
                mean_nmse=a.mean_nmse,
                trials=a.trials,
            )
            for a in result.aggregates
        ],
        config=result.config,
    )
