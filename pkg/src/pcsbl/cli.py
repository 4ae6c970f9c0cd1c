"""Command-line client for the recovery service.

Every data command talks to the HTTP API: against a remote server when
``--server`` (or ``PCSBL_SERVER``) is set, otherwise against an embedded
in-process instance of the same app. File I/O always happens client-side.

Flags may also be supplied as a JSON object via ``--config`` (keys match
the flag names with underscores); explicit flags take precedence.
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx

from . import bench, io_csv

_LAYOUT_FIELDS = ("n", "m", "k", "l", "snr_db", "seed", "blocks")


def _request(server: str | None, path: str, payload: dict) -> dict:
    async def go():
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                return await client.post(path, json=payload)
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://pcsbl.local", timeout=None) as client:
            return await client.post(path, json=payload)

    resp = asyncio.run(go())
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _merge_config(ctx: click.Context, config_path: str | None, values: dict) -> dict:
    """Overlay JSON config values onto parameters left at their defaults."""
    if not config_path:
        return values
    with open(config_path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise click.ClickException(f"{config_path}: config must be a JSON object")
    out = dict(values)
    for key, val in cfg.items():
        if key not in values:
            raise click.ClickException(f"{config_path}: unknown config key {key!r}")
        if ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            out[key] = val
    return out


@click.group()
@click.option("--server", envvar="PCSBL_SERVER", default=None, metavar="URL",
              help="Base URL of a running service; default is an embedded in-process instance.")
@click.pass_context
def main(ctx, server):
    """Block-sparse recovery: generation, solving, and benchmarks."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--n", type=int, required=True, help="Signal dimension.")
@click.option("--m", type=int, required=True, help="Number of measurements.")
@click.option("--k", type=int, required=True, help="Total nonzeros.")
@click.option("--l", type=int, required=True, help="Number of blocks.")
@click.option("--snr-db", "snr_db", type=float, default=None, help="SNR in dB; omit for noise-free.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def gen(ctx, n, m, k, l, snr_db, seed, out_dir, config_path):
    """Generate an instance; writes A.csv, y.csv, x_true.csv, layout.json."""
    vals = _merge_config(ctx, config_path, dict(n=n, m=m, k=k, l=l, snr_db=snr_db, seed=seed))
    data = _request(ctx.obj["server"], "/generate", vals)

    import os

    os.makedirs(out_dir, exist_ok=True)
    io_csv.save_matrix(os.path.join(out_dir, "A.csv"), data["A"])
    io_csv.save_vector(os.path.join(out_dir, "y.csv"), data["y"])
    io_csv.save_vector(os.path.join(out_dir, "x_true.csv"), data["x_true"])
    layout = {key: data["layout"][key] for key in _LAYOUT_FIELDS}
    layout["noise_variance"] = data["noise_variance"]
    with open(os.path.join(out_dir, "layout.json"), "w") as fh:
        json.dump(layout, fh, indent=2)
        fh.write("\n")
    click.echo(f"wrote instance (n={layout['n']}, m={layout['m']}, k={layout['k']}) to {out_dir}")


@main.command()
@click.option("--algo", type=click.Choice(["pcsbl", "sbl", "mrl1", "rl1", "l1"]), required=True)
@click.option("--A", "a_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--y", "y_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sigma2", type=float, default=None, help="Known noise variance (0 = noise-free).")
@click.option("--learn-noise", is_flag=True, default=False, help="Estimate the noise variance.")
@click.option("--beta", type=float, default=1.0, show_default=True, help="Neighbour coupling in [0, 1].")
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--max-iters", "max_iters", type=int, default=500, show_default=True)
@click.option("--noise-budget", "noise_budget", type=float, default=None,
              help="Residual ball radius for the weighted-l1 solvers (noisy mode).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def recover(ctx, algo, a_path, y_path, sigma2, learn_noise, beta, tol, max_iters, noise_budget,
            out_path, config_path):
    """Recover a signal from A and y; writes x_hat.csv.

    Exit code 0 when the solver converged, 2 when it did not.
    """
    vals = _merge_config(
        ctx, config_path,
        dict(algo=algo, sigma2=sigma2, learn_noise=learn_noise, beta=beta, tol=tol,
             max_iters=max_iters, noise_budget=noise_budget),
    )
    A = io_csv.load_matrix(a_path)
    y = io_csv.load_vector(y_path)
    payload = dict(A=A.tolist(), y=y.tolist(), **vals)
    data = _request(ctx.obj["server"], "/recover", payload)

    io_csv.save_vector(out_path, data["x_hat"])
    status = "converged" if data["converged"] else "did not converge"
    msg = f"{algo} {status} after {data['iterations']} iterations; wrote {out_path}"
    if data.get("sigma2_est") is not None:
        msg += f" (estimated sigma2 {data['sigma2_est']:.4e})"
    click.echo(msg)
    if not data["converged"]:
        sys.exit(2)


@main.command(name="bench")
@click.option("--axis", type=click.Choice(["m_over_n", "k"]), required=True)
@click.option("--points", type=str, required=True, help="Comma-separated axis values.")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, default=None, help="Measurements (required for the k axis).")
@click.option("--k", type=int, required=True)
@click.option("--l", type=int, required=True)
@click.option("--snr-db", "snr_db", type=float, default=None)
@click.option("--algos", type=str, required=True, help="Comma-separated algorithm ids.")
@click.option("--trials", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def bench_cmd(ctx, axis, points, n, m, k, l, snr_db, algos, trials, seed, beta, out_dir, config_path):
    """Run a Monte-Carlo sweep; writes results/summary/plotdata CSVs."""
    vals = _merge_config(
        ctx, config_path,
        dict(axis=axis, points=points, n=n, m=m, k=k, l=l, snr_db=snr_db, algos=algos,
             trials=trials, seed=seed, beta=beta),
    )
    if isinstance(vals["points"], str):
        vals["points"] = [float(p) for p in vals["points"].split(",") if p.strip()]
    if isinstance(vals["algos"], str):
        vals["algos"] = [a.strip() for a in vals["algos"].split(",") if a.strip()]
    data = _request(ctx.obj["server"], "/bench", vals)

    result = bench.sweep_result_from_payload(data)
    bench.emit_results(result, out_dir)
    rows = bench.read_summary(out_dir)
    click.echo(bench.format_summary_table(rows))
    click.echo(f"wrote sweep results to {out_dir}")


@main.command()
@click.option("--dir", "out_dir", type=click.Path(exists=True, file_okay=False), required=True)
def compare(out_dir):
    """Print the summary table of a finished sweep directory."""
    rows = bench.read_summary(out_dir)
    click.echo(bench.format_summary_table(rows))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("pcsbl.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
