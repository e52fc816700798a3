import logging
from typing import Annotated, List

from fastapi import APIRouter, HTTPException
from pydantic import Field, model_validator

from app.core.config import settings
from app.core.exceptions import SpinBathError
from app.models.base import BaseResponse
from app.models.run import CommandType, DynamicsRequest
from app.services.runner import frame_records, sweep_frame
from app.services.verification import all_passed, run_verification

logger = logging.getLogger(__name__)

router = APIRouter()


class SweepRequest(DynamicsRequest):
    """Sweep cells run sequentially in the request worker"""
    sweep_alpha: List[float] = Field(default_factory=list)
    sweep_n: List[Annotated[int, Field(ge=1, le=settings.MAX_N_BATH)]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _cell_count(self) -> "SweepRequest":
        cells = len(set(self.sweep_alpha) or {self.alpha}) * len(set(self.sweep_n) or {self.N})
        if cells > settings.MAX_SWEEP_CELLS:
            raise ValueError(f"sweep of {cells} cells exceeds MAX_SWEEP_CELLS={settings.MAX_SWEEP_CELLS}")
        return self


@router.post("/verify", response_model=BaseResponse)
def verify(request: DynamicsRequest):
    """Run every verification suite; success mirrors the overall verdict"""
    try:
        config = request.to_config(CommandType.VERIFY)
        report = run_verification(config.params, config.t_max, config.dt, config.seed)
        passed = all_passed(report)
        return BaseResponse(
            success=passed,
            message="All verification suites passed" if passed else "Verification failed",
            data={"passed": passed, "seed": config.seed, "suites": report},
        )
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Verification failed to run: {e}")
        raise HTTPException(status_code=500, detail=f"Verification failed to run: {str(e)}")


@router.post("/sweep", response_model=BaseResponse)
def sweep(request: SweepRequest):
    """One summary row per (alpha, N) cell, sorted by N then alpha"""
    try:
        config = request.to_config(CommandType.SWEEP, sweep_alpha=request.sweep_alpha, sweep_n=request.sweep_n)
        return BaseResponse(data={"rows": frame_records(sweep_frame(config))})
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Sweep failed: {e}")
        raise HTTPException(status_code=500, detail=f"Sweep failed: {str(e)}")
