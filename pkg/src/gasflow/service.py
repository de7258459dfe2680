from __future__ import annotations

import asyncio
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import AppSettings, load_settings
from .errors import GasFlowError
from .models import EosKind, InstanceDocument, InstanceReport, SolutionDocument, ValidationReportDocument
from .network import network_from_document, validate
from .pipeline import SolveOptions, instance_report, solution_document, solve_network


class SolveRequest(BaseModel):
    instance: InstanceDocument = Field(..., description="Network instance in SI units")
    eos: Optional[EosKind] = Field(default=None, description="Override the instance equation of state")
    seed: int = 0
    tolerance: Optional[float] = Field(default=None, gt=0)
    max_iterations: Optional[int] = Field(default=None, ge=1)
    dimensional: bool = False


class SolveResponse(BaseModel):
    report: InstanceReport
    solution: Optional[SolutionDocument] = None


def create_app(*, settings: Optional[AppSettings] = None) -> FastAPI:
    app = FastAPI(title="gasflow")

    settings = settings or load_settings()

    def run_solve(req: SolveRequest) -> SolveResponse:
        options = SolveOptions(
            eos=req.eos,
            tolerance=req.tolerance or settings.solver.tolerance,
            max_iterations=req.max_iterations or settings.solver.max_iterations,
            seed=req.seed,
            dimensional=req.dimensional,
        )
        result = solve_network(network_from_document(req.instance), options, "request")
        return SolveResponse(report=instance_report(result), solution=solution_document(result))

    @app.post("/solve", response_model=SolveResponse)
    async def solve_endpoint(req: SolveRequest) -> SolveResponse:
        try:
            loop = asyncio.get_running_loop()
            return await loop.run_in_executor(None, run_solve, req)
        except GasFlowError as exc:
            raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}") from exc
        except Exception as exc:  # noqa: BLE001
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.post("/validate", response_model=ValidationReportDocument)
    async def validate_endpoint(doc: InstanceDocument) -> ValidationReportDocument:
        try:
            return validate(network_from_document(doc)).to_document()
        except GasFlowError as exc:
            raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}") from exc
        except Exception as exc:  # noqa: BLE001
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    return app


app = create_app()
