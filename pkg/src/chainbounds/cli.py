"""Thin command-line client for the service.

Every subcommand posts one request and writes the returned payload.  By
default the service runs in-process over an ASGI transport (no server
needed); point --url at a running instance to go over the network.

The shared flags --seed, --threads, --out, and --format are accepted both
before the subcommand and after it; the subcommand position wins.

Exit codes: 0 success, 2 invalid configuration, 3 enumeration budget
exceeded, 1 anything else.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from .gaussian_chain import sidecar_path

EXIT_INVALID_CONFIG = 2
EXIT_BUDGET_EXCEEDED = 3

_SHARED = {
    "seed": click.option("--seed", type=int, default=None, help="Seed for stochastic subcommands."),
    "threads": click.option("--threads", type=int, default=None, help="Worker threads."),
    "out": click.option("--out", "out_path", default=None, help="Output file; stdout when omitted."),
    "format": click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Payload format."
    ),
}


def _shared_options(*names):
    def wrap(func):
        for name in reversed(names):
            func = _SHARED[name](func)
        return func

    return wrap


def _post(url: str | None, path: str, payload: dict) -> httpx.Response:
    if url:
        with httpx.Client(base_url=url, timeout=None) as client:
            return client.post(path, json=payload)

    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://chainbounds.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _fail(message: str, code: int):
    click.echo(message, err=True)
    sys.exit(code)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read config {path}: {exc}", EXIT_INVALID_CONFIG)
    if not isinstance(data, dict):
        _fail(f"config {path} must hold a JSON object", EXIT_INVALID_CONFIG)
    return data


def _merge_payload(ctx: click.Context, **options) -> dict:
    """Config-file values, then group flags, then subcommand flags."""
    shared = ctx.obj
    payload = dict(shared["config"])
    for key in ("seed", "threads", "format"):
        if shared[key] is not None:
            payload[key] = shared[key]
    for key, value in options.items():
        if value is not None:
            payload[key] = value
    return payload


def _resolve_out(ctx: click.Context, out_path: str | None) -> str | None:
    return out_path if out_path is not None else ctx.obj["out"]


def _call(ctx: click.Context, endpoint: str, payload: dict) -> dict:
    try:
        response = _post(ctx.obj["url"], endpoint, payload)
    except httpx.HTTPError as exc:
        _fail(f"service request failed: {exc}", 1)
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
        detail = body.get("detail", response.text)
        code = body.get("code", "")
    except ValueError:
        detail, code = response.text, ""
    if response.status_code == 422:
        _fail(f"invalid config: {detail}", EXIT_INVALID_CONFIG)
    if response.status_code == 409 or code == "budget-exceeded":
        _fail(f"budget exceeded: {detail}", EXIT_BUDGET_EXCEEDED)
    _fail(f"service error {response.status_code}: {detail}", 1)


def _write_content(content: str, out: str | None):
    if out:
        Path(out).write_text(content)
    else:
        click.echo(content, nl=False)


@click.group()
@click.option("--url", default=None, help="Base URL of a running service; in-process when omitted.")
@click.option("--seed", type=int, default=None, help="Seed for stochastic subcommands.")
@click.option("--threads", type=int, default=None, help="Worker threads for sampling and trials.")
@click.option("--config", "config_path", default=None, help="JSON file with request fields.")
@click.option("--out", "out_path", default=None, help="Output file; stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Payload format.")
@click.pass_context
def main(ctx, url, seed, threads, config_path, out_path, fmt):
    """Enumerate, sample, and bound layered sign-network recovery problems."""
    ctx.obj = {
        "url": url,
        "seed": seed,
        "threads": threads,
        "config": _load_config(config_path),
        "out": out_path,
        "format": fmt,
    }


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--c", "c", type=float, default=None, help="Override the default contraction.")
@_shared_options("out", "format")
@click.pass_context
def enumerate(ctx, p, d, r, c, out_path, fmt):
    """List every class member with its canonical index."""
    payload = _merge_payload(ctx, p=p, d=d, r=r, c=c, format=fmt)
    payload.pop("seed", None)
    payload.pop("threads", None)
    result = _call(ctx, "/enumerate", payload)
    _write_content(result["content"], _resolve_out(ctx, out_path))


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--c", "c", type=float, default=None)
@click.option("--sigma2", type=float, default=None)
@click.option("-n", type=int, default=None, help="Number of draws.")
@click.option("--index", type=int, default=None, help="Canonical index of the generating member.")
@_shared_options("seed", "threads", "out", "format")
@click.pass_context
def sample(ctx, p, d, r, c, sigma2, n, index, seed, threads, out_path, fmt):
    """Draw a labeled dataset; writes a sidecar JSON next to --out."""
    payload = _merge_payload(
        ctx, p=p, d=d, r=r, c=c, sigma2=sigma2, n=n, index=index,
        seed=seed, threads=threads, format=fmt,
    )
    result = _call(ctx, "/sample", payload)
    out = _resolve_out(ctx, out_path)
    _write_content(result["content"], out)
    if out and payload.get("format", "csv") == "csv":
        sidecar = sidecar_path(Path(out))
        sidecar.write_text(json.dumps(result["sidecar"], indent=2) + "\n")


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--c", "c", type=float, default=None)
@click.option("--sigma2", type=float, default=None)
@click.option("--index-a", type=int, default=None)
@click.option("--index-b", type=int, default=None)
@click.option("--mc-samples", type=int, default=None, help="Optional Monte Carlo check size.")
@_shared_options("seed", "out", "format")
@click.pass_context
def kl(ctx, p, d, r, c, sigma2, index_a, index_b, mc_samples, seed, out_path, fmt):
    """Exact pair divergence with its cap, optionally corroborated by MC."""
    payload = _merge_payload(
        ctx, p=p, d=d, r=r, c=c, sigma2=sigma2,
        index_a=index_a, index_b=index_b, mc_samples=mc_samples,
        seed=seed, format=fmt,
    )
    payload.pop("threads", None)
    result = _call(ctx, "/kl", payload)
    _write_content(result["content"], _resolve_out(ctx, out_path))


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--sigma2", type=float, default=None)
@click.option("-n", type=int, default=None, help="Sample size the bound is evaluated at.")
@click.option("--kind", type=click.Choice(["exact-recovery", "excess-risk"]), default=None)
@_shared_options("out", "format")
@click.pass_context
def fano(ctx, p, d, r, sigma2, n, kind, out_path, fmt):
    """Failure lower bound and threshold for either recovery notion."""
    payload = _merge_payload(ctx, p=p, d=d, r=r, sigma2=sigma2, n=n, kind=kind, format=fmt)
    payload.pop("seed", None)
    payload.pop("threads", None)
    result = _call(ctx, "/fano", payload)
    _write_content(result["content"], _resolve_out(ctx, out_path))


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--sigma2", type=float, default=None)
@click.option("--star-index", type=int, default=None, help="Canonical index of the truth.")
@_shared_options("out", "format")
@click.pass_context
def risk(ctx, p, d, r, sigma2, star_index, out_path, fmt):
    """Gap constants plus per-member excess risk against a fixed truth."""
    payload = _merge_payload(ctx, p=p, d=d, r=r, sigma2=sigma2, star_index=star_index, format=fmt)
    payload.pop("seed", None)
    payload.pop("threads", None)
    result = _call(ctx, "/risk", payload)
    out = _resolve_out(ctx, out_path)
    _write_content(result["content"], out)
    if out and payload.get("format", "csv") == "csv":
        click.echo(json.dumps(result["constants"], indent=2))


@main.command()
@click.option("-p", type=int, default=None)
@click.option("-d", type=int, default=None)
@click.option("-r", type=int, default=None)
@click.option("--sigma2", type=float, default=None)
@click.option("--n-grid", default=None, help="Comma-separated sample sizes, e.g. 10,20,40.")
@click.option("--trials", type=int, default=None)
@_shared_options("seed", "threads", "out", "format")
@click.pass_context
def simulate(ctx, p, d, r, sigma2, n_grid, trials, seed, threads, out_path, fmt):
    """Run MAP-decoder trials over a sample-size grid and report frequencies."""
    grid = None
    if n_grid is not None:
        try:
            grid = [int(v) for v in n_grid.split(",") if v.strip()]
        except ValueError:
            _fail(f"bad n-grid {n_grid!r}: expected comma-separated integers", EXIT_INVALID_CONFIG)
    payload = _merge_payload(
        ctx, p=p, d=d, r=r, sigma2=sigma2, n_grid=grid, trials=trials,
        seed=seed, threads=threads, format=fmt,
    )
    config_out = payload.pop("output_path", None)
    result = _call(ctx, "/simulate", payload)
    _write_content(result["content"], _resolve_out(ctx, out_path) or config_out)


if __name__ == "__main__":
    main()
