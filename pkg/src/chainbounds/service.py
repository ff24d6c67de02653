"""HTTP service exposing the package: one endpoint per CLI subcommand.

Responses carry fully rendered file payloads in `content` so a thin
client writes bytes without re-serializing, keeping output files
identical no matter where the service runs.  Domain errors map to HTTP
codes: invalid configuration 422, enumeration budget exceeded 409.
"""

from __future__ import annotations

import json
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .errors import BudgetExceededError, InvalidConfigError
from .experiment_cli import ExperimentConfig, render_report, run_recovery_experiment
from .fano_bounds import KIND_EXACT, KIND_EXCESS, bound_report
from .gaussian_chain import (
    ChainParams,
    dataset_sidecar,
    render_dataset_csv,
    sample_dataset,
)
from .hypothesis_space import enumerate_class, hypothesis_at
from .info_metrics import kl_pair_in_class
from .risk_analysis import risk_table

app = FastAPI(title="chainbounds", version="0.1.0")


@app.exception_handler(InvalidConfigError)
async def _invalid_config(request: Request, exc: InvalidConfigError):
    return JSONResponse(
        status_code=422, content={"code": "invalid-config", "detail": str(exc)}
    )


@app.exception_handler(BudgetExceededError)
async def _budget_exceeded(request: Request, exc: BudgetExceededError):
    return JSONResponse(
        status_code=409, content={"code": "budget-exceeded", "detail": str(exc)}
    )


class EnumerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    c: float | None = None
    format: Literal["csv", "json"] = "csv"


class SampleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    c: float | None = None
    index: int = 0
    sigma2: float
    n: int
    seed: int
    threads: int = 1
    format: Literal["csv", "json"] = "csv"


class KlRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    c: float | None = None
    sigma2: float
    index_a: int
    index_b: int
    mc_samples: int | None = None
    seed: int | None = None
    format: Literal["csv", "json"] = "json"


class FanoRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    sigma2: float
    n: int
    kind: Literal["exact-recovery", "excess-risk"] = "exact-recovery"
    format: Literal["csv", "json"] = "json"


class RiskRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    sigma2: float
    star_index: int = 0
    format: Literal["csv", "json"] = "csv"


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    d: int
    r: int
    sigma2: float
    n_grid: list[int]
    trials: int
    seed: int
    threads: int = 1
    format: Literal["csv", "json"] = "csv"


class ContentResponse(BaseModel):
    content: str


class EnumerateResponse(ContentResponse):
    cardinality: int


class SampleResponse(ContentResponse):
    sidecar: dict


class KlResponse(ContentResponse):
    report: dict


class FanoResponse(ContentResponse):
    report: dict


class RiskResponse(ContentResponse):
    constants: dict


class SimulateResponse(ContentResponse):
    rows: list[dict]


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/enumerate")
def enumerate_endpoint(req: EnumerateRequest) -> EnumerateResponse:
    members = list(enumerate_class(req.p, req.d, req.r, c=req.c))
    if req.format == "csv":
        lines = ["idx,signs,perms"]
        for idx, h in enumerate(members):
            signs = "".join("+" if s > 0 else "-" for s in h.w0.signs)
            perms = "|".join("".join(str(q) for q in layer.perm) for layer in h.layers)
            lines.append(f"{idx},{signs},{perms}")
        content = "\n".join(lines) + "\n"
    else:
        content = (
            json.dumps(
                [dict(index=i, **h.to_dict()) for i, h in enumerate(members)],
                indent=2,
            )
            + "\n"
        )
    return EnumerateResponse(content=content, cardinality=len(members))


@app.post("/sample")
def sample_endpoint(req: SampleRequest) -> SampleResponse:
    h = hypothesis_at(req.p, req.d, req.r, req.index, c=req.c)
    params = ChainParams(h, req.sigma2)
    data = sample_dataset(params, req.n, req.seed, threads=req.threads)
    sidecar = dataset_sidecar(data, req.sigma2)
    if req.format == "csv":
        content = render_dataset_csv(data)
    else:
        content = (
            json.dumps(
                {
                    "meta": sidecar,
                    "y": [int(v) for v in data.ys],
                    "x": [[float(v) for v in row] for row in data.xs],
                },
                indent=2,
            )
            + "\n"
        )
    return SampleResponse(content=content, sidecar=sidecar)


@app.post("/kl")
def kl_endpoint(req: KlRequest) -> KlResponse:
    h_a = hypothesis_at(req.p, req.d, req.r, req.index_a, c=req.c)
    h_b = hypothesis_at(req.p, req.d, req.r, req.index_b, c=req.c)
    report = kl_pair_in_class(
        h_a, h_b, req.sigma2, mc_samples=req.mc_samples, seed=req.seed
    )
    payload = report.to_json_dict()
    if req.format == "csv":
        header = "exact,bound,mc_estimate,mc_stderr,n_samples,seed"
        row = ",".join(
            "" if payload[key] is None
            else (format(payload[key], ".17g") if isinstance(payload[key], float) else str(payload[key]))
            for key in header.split(",")
        )
        content = header + "\n" + row + "\n"
    else:
        content = json.dumps(payload, indent=2) + "\n"
    return KlResponse(content=content, report=payload)


@app.post("/fano")
def fano_endpoint(req: FanoRequest) -> FanoResponse:
    if req.n < 1:
        raise InvalidConfigError(f"n must be at least 1, got {req.n}")
    kind = KIND_EXACT if req.kind == "exact-recovery" else KIND_EXCESS
    report = bound_report(req.p, req.d, req.r, req.sigma2, req.n, kind=kind)
    payload = report.to_json_dict()
    if req.format == "csv":
        header = "kind,mi_upper,log_cardinality,failure_lower_bound,raw_lower_bound,threshold_n"
        row = ",".join(
            payload[key] if isinstance(payload[key], str) else format(payload[key], ".17g")
            for key in header.split(",")
        )
        content = header + "\n" + row + "\n"
    else:
        content = json.dumps(payload, indent=2) + "\n"
    return FanoResponse(content=content, report=payload)


@app.post("/risk")
def risk_endpoint(req: RiskRequest) -> RiskResponse:
    constants, rows = risk_table(req.p, req.d, req.r, req.sigma2, req.star_index)
    constants_dict = constants.to_json_dict()
    if req.format == "csv":
        lines = ["idx,case,excess_risk,at_or_above_gap"]
        for idx, case, excess, above in rows:
            lines.append(f"{idx},{case},{format(excess, '.17g')},{1 if above else 0}")
        content = "\n".join(lines) + "\n"
    else:
        content = (
            json.dumps(
                {
                    "constants": constants_dict,
                    "rows": [
                        {
                            "idx": idx,
                            "case": case,
                            "excess_risk": excess,
                            "at_or_above_gap": above,
                        }
                        for idx, case, excess, above in rows
                    ],
                },
                indent=2,
            )
            + "\n"
        )
    return RiskResponse(content=content, constants=constants_dict)


@app.post("/simulate")
def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
    cfg = ExperimentConfig(
        p=req.p,
        d=req.d,
        r=req.r,
        sigma2=req.sigma2,
        n_grid=tuple(req.n_grid),
        trials=req.trials,
        seed=req.seed,
        threads=req.threads,
    )
    rows = run_recovery_experiment(cfg)
    return SimulateResponse(
        content=render_report(rows, req.format),
        rows=[row.to_json_dict() for row in rows],
    )


def main():  # pragma: no cover - convenience launcher
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)
