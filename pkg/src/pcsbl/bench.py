"""Monte-Carlo benchmark sweeps and result persistence.

A sweep varies either the undersampling ratio m/n or the sparsity level K,
runs every requested algorithm on the *same* generated instance at each
(point, trial) pair, and aggregates success rates and mean NMSE per point.
Trials run in parallel across a process pool capped by the
``PCSBL_THREADS`` environment variable; every trial is pure given its
derived seed, so results are deterministic regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import baseline, em, rwl1
from .model import PriorConfig, Problem
from .synthgen import EnsembleSpec, Instance, generate

# A trial succeeds when the normalized squared error is at most this.
SUCCESS_NMSE = 1e-4

ALGORITHMS = ("pcsbl", "sbl", "mrl1", "rl1", "l1")

_THREADS_ENV = "PCSBL_THREADS"


@dataclass(frozen=True)
class TrialRecord:
    """One algorithm's result on one generated instance."""

    algorithm: str
    axis_value: float
    trial: int
    n: int
    m: int
    k: int
    l: int
    snr_db: Optional[float]
    seed: int
    nmse: float
    success: bool
    iterations: int
    wall_ms: float
    failed: bool
    instance_hash: str


@dataclass(frozen=True)
class PointAggregate:
    algorithm: str
    axis_value: float
    success_rate: float
    mean_nmse: float
    trials: int


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: List[float]
    records: List[TrialRecord]
    aggregates: List[PointAggregate]
    config: Dict


def nmse(x_true: np.ndarray, x_hat: np.ndarray) -> float:
    """Normalized squared error ``||x_true - x_hat||^2 / ||x_true||^2``."""
    x_true = np.asarray(x_true, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x_true.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x_true.shape} vs {x_hat.shape}")
    denom = float(x_true @ x_true)
    if denom <= 0.0:
        raise ValueError("nmse is undefined for a zero true signal")
    diff = x_true - x_hat
    return float(diff @ diff) / denom


def success_rate(records: Sequence[TrialRecord]) -> float:
    """Fraction of successful trials."""
    if not records:
        raise ValueError("success_rate of an empty record list is undefined")
    return sum(r.success for r in records) / len(records)


def derive_seed(master_seed: int, point_idx: int, trial: int) -> int:
    """Stable 64-bit instance seed for a (point, trial) cell."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(point_idx, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def instance_hash(instance: Instance) -> str:
    h = hashlib.sha256()
    h.update(instance.problem.A.tobytes())
    h.update(instance.problem.y.tobytes())
    h.update(instance.problem.truth.tobytes())
    return h.hexdigest()[:16]


def run_algorithm(algo: str, problem: Problem, beta: float = 1.0):
    """Dispatch one solver run; returns (x_hat, iterations, converged).

    Bayesian solvers get the instance's declared noise variance (noise-free
    mode when it is zero) and learn it when the instance is noisy; the
    weighted-l1 family gets the matching residual budget in noisy mode.
    """
    noisy = problem.noise_variance is not None and problem.noise_variance > 0
    if algo in ("pcsbl", "sbl"):
        prior = PriorConfig(beta=beta if algo == "pcsbl" else 0.0)
        config = em.SolverConfig(prior=prior, learn_noise=noisy)
        solver = em.solve_pcsbl if algo == "pcsbl" else baseline.solve_sbl
        res = solver(problem, config)
        return res.x_hat, res.iterations, res.converged
    if algo in ("mrl1", "rl1", "l1"):
        budget = float(np.sqrt(problem.m * problem.noise_variance)) if noisy else None
        config = rwl1.RwConfig(beta=beta, noise_budget=budget)
        if algo == "mrl1":
            res = rwl1.solve_mrl1(problem, config)
        elif algo == "rl1":
            res = rwl1.solve_rl1(problem, config)
        else:
            res = rwl1.solve_l1(problem, config)
        return res.x_hat, res.iterations, res.converged
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")


def _spec_for_point(axis: str, point: float, template: EnsembleSpec, seed: int) -> EnsembleSpec:
    if axis == "m_over_n":
        m = point * template.n
        if abs(m - round(m)) > 1e-9:
            raise ValueError(f"m/n point {point} does not give an integer m for n={template.n}")
        return EnsembleSpec(n=template.n, m=int(round(m)), k=template.k, l=template.l, snr_db=template.snr_db, seed=seed)
    if axis == "k":
        if abs(point - round(point)) > 1e-9:
            raise ValueError(f"K point {point} is not an integer")
        return EnsembleSpec(n=template.n, m=template.m, k=int(round(point)), l=template.l, snr_db=template.snr_db, seed=seed)
    raise ValueError(f"unknown axis {axis!r}; expected 'm_over_n' or 'k'")


def _run_cell(task) -> List[TrialRecord]:
    """Run all algorithms on the instance of one (point, trial) cell."""
    axis, point_idx, point, trial, template, algos, beta, master_seed = task
    seed = derive_seed(master_seed, point_idx, trial)
    spec = _spec_for_point(axis, point, template, seed)
    instance = generate(spec)
    problem = instance.problem
    ihash = instance_hash(instance)
    records = []
    for algo in algos:
        t0 = time.perf_counter()
        try:
            x_hat, iterations, _ = run_algorithm(algo, problem, beta=beta)
            err = nmse(problem.truth, x_hat)
            failed = False
        except Exception:
            err = 1.0
            iterations = 0
            failed = True
        wall_ms = (time.perf_counter() - t0) * 1e3
        records.append(
            TrialRecord(
                algorithm=algo,
                axis_value=float(point),
                trial=trial,
                n=spec.n,
                m=spec.m,
                k=spec.k,
                l=spec.l,
                snr_db=spec.snr_db,
                seed=seed,
                nmse=err,
                success=(not failed) and err <= SUCCESS_NMSE,
                iterations=iterations,
                wall_ms=wall_ms,
                failed=failed,
                instance_hash=ihash,
            )
        )
    return records


def _worker_init():
    # one BLAS thread per worker: avoids oversubscription and keeps
    # reductions deterministic
    try:
        import threadpoolctl

        global _limiter
        _limiter = threadpoolctl.threadpool_limits(limits=1)
    except ImportError:
        pass


def _max_workers() -> int:
    env = os.environ.get(_THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{_THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_sweep(
    axis: str,
    points: Sequence[float],
    template: EnsembleSpec,
    algorithms: Sequence[str],
    trials: int,
    master_seed: int,
    beta: float = 1.0,
) -> SweepResult:
    """Run a paired Monte-Carlo sweep.

    Every algorithm sees the identical instance at each (point, trial)
    pair. Per-trial solver failures are recorded (``failed=True``,
    ``nmse=1.0``) rather than aborting the sweep. Deterministic given
    ``master_seed``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithms {unknown}; expected a subset of {ALGORITHMS}")
    points = [float(p) for p in points]
    for idx, point in enumerate(points):
        _spec_for_point(axis, point, template, seed=0)  # validate early

    tasks = [
        (axis, point_idx, point, trial, template, tuple(algorithms), beta, master_seed)
        for point_idx, point in enumerate(points)
        for trial in range(trials)
    ]

    workers = min(_max_workers(), len(tasks))
    if workers <= 1:
        cell_results = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init) as pool:
            cell_results = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

    records = [rec for cell in cell_results for rec in cell]

    aggregates = []
    for point in points:
        for algo in algorithms:
            got = [r for r in records if r.algorithm == algo and r.axis_value == point]
            aggregates.append(
                PointAggregate(
                    algorithm=algo,
                    axis_value=point,
                    success_rate=success_rate(got),
                    mean_nmse=float(np.mean([r.nmse for r in got])),
                    trials=len(got),
                )
            )

    config = {
        "axis": axis,
        "points": points,
        "template": asdict(template),
        "algorithms": list(algorithms),
        "trials": trials,
        "master_seed": master_seed,
        "beta": beta,
    }
    return SweepResult(axis=axis, points=points, records=records, aggregates=aggregates, config=config)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_results(result: SweepResult, out_dir: str) -> List[str]:
    """Write results.csv, summary.csv, plotdata.csv, and timings.csv.

    All files are headered, comma-separated, dot-decimal, LF-terminated,
    and locale independent. Wall-clock timings live in their own file so
    that reruns with the same seed reproduce results.csv byte-for-byte.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    path = os.path.join(out_dir, "results.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("algorithm,axis_value,trial,seed,nmse,success,iterations,failed\n")
        for r in result.records:
            fh.write(
                f"{r.algorithm},{_fmt(r.axis_value)},{r.trial},{r.seed},"
                f"{_fmt(r.nmse)},{_fmt(r.success)},{r.iterations},{_fmt(r.failed)}\n"
            )
    paths.append(path)

    path = os.path.join(out_dir, "timings.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("algorithm,axis_value,trial,wall_ms\n")
        for r in result.records:
            fh.write(f"{r.algorithm},{_fmt(r.axis_value)},{r.trial},{_fmt(r.wall_ms)}\n")
    paths.append(path)

    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("algorithm,axis_value,success_rate,mean_nmse,trials\n")
        for agg in result.aggregates:
            fh.write(
                f"{agg.algorithm},{_fmt(agg.axis_value)},{_fmt(agg.success_rate)},"
                f"{_fmt(agg.mean_nmse)},{agg.trials}\n"
            )
    paths.append(path)

    algos = list(result.config["algorithms"])
    path = os.path.join(out_dir, "plotdata.csv")
    with open(path, "w", newline="\n") as fh:
        cols = ["axis_value"]
        cols += [f"{a}_success_rate" for a in algos]
        cols += [f"{a}_mean_nmse" for a in algos]
        fh.write(",".join(cols) + "\n")
        by_key = {(a.algorithm, a.axis_value): a for a in result.aggregates}
        for point in result.points:
            row = [_fmt(point)]
            row += [_fmt(by_key[(a, point)].success_rate) for a in algos]
            row += [_fmt(by_key[(a, point)].mean_nmse) for a in algos]
            fh.write(",".join(row) + "\n")
    paths.append(path)

    return paths


def sweep_result_from_payload(payload: Dict) -> SweepResult:
    """Rebuild a SweepResult from its JSON (service response) form."""
    records = [TrialRecord(**r) for r in payload["records"]]
    aggregates = [PointAggregate(**r) for r in payload["summary"]]
    return SweepResult(
        axis=payload["axis"],
        points=[float(p) for p in payload["points"]],
        records=records,
        aggregates=aggregates,
        config=payload["config"],
    )


def read_summary(out_dir: str) -> List[Dict]:
    """Load summary.csv rows as dicts (strings parsed to numbers)."""
    path = os.path.join(out_dir, "summary.csv")
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            row = dict(zip(header, parts))
            row["axis_value"] = float(row["axis_value"])
            row["success_rate"] = float(row["success_rate"])
            row["mean_nmse"] = float(row["mean_nmse"])
            row["trials"] = int(row["trials"])
            rows.append(row)
    return rows


def format_summary_table(rows: List[Dict]) -> str:
    """Plain-text table of summary rows, grouped by axis value."""
    if not rows:
        return "(no summary rows)"
    lines = [f"{'algorithm':<10} {'axis_value':>10} {'success_rate':>13} {'mean_nmse':>12} {'trials':>7}"]
    for row in rows:
        lines.append(
            f"{row['algorithm']:<10} {row['axis_value']:>10.4g} "
            f"{row['success_rate']:>13.4f} {row['mean_nmse']:>12.4e} {row['trials']:>7d}"
        )
    return "\n".join(lines)
