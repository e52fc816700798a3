import logging

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.exceptions import NotCompletelyPositive, SpinBathError
from app.models.base import BaseResponse
from app.models.bath import BathParams
from app.models.run import CommandType, DynamicsRequest, parse_state
from app.services.channel import choi_state, evolve_with, kraus_set
from app.services.runner import frame_records, rates_frame, trace_frame
from app.services.spin_bath import map_coefficients, time_grid

logger = logging.getLogger(__name__)

router = APIRouter()


class ChannelRequest(BaseModel):
    """Channel representations at a single time"""
    N: int = Field(..., ge=1, le=settings.MAX_N_BATH)
    alpha: float
    omega0: float = Field(default=1.0, gt=0.0)
    t: float = Field(..., ge=0.0)
    initial_state: str = "+"


def _complex_matrix(m: np.ndarray) -> dict:
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


@router.post("/trace", response_model=BaseResponse)
def coefficient_rows(request: DynamicsRequest):
    """A(t), B(t), C(t) and derivatives over [0, t_max]"""
    try:
        config = request.to_config(CommandType.TRACE)
        frame = trace_frame(config.params, time_grid(config.t_max, config.dt))
        return BaseResponse(data={"rows": frame_records(frame)})
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Coefficient trace failed: {e}")
        raise HTTPException(status_code=500, detail=f"Coefficient trace failed: {str(e)}")


@router.post("/rates", response_model=BaseResponse)
def rate_rows(request: DynamicsRequest):
    """Canonical rates and U(t); singular samples are null with flag singular_map"""
    try:
        config = request.to_config(CommandType.RATES)
        frame = rates_frame(config.params, time_grid(config.t_max, config.dt))
        return BaseResponse(data={"rows": frame_records(frame)})
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Rate trace failed: {e}")
        raise HTTPException(status_code=500, detail=f"Rate trace failed: {str(e)}")


@router.post("/channel", response_model=BaseResponse)
def channel_at(request: ChannelRequest):
    """Coefficients, Choi matrix, Kraus operators and the evolved initial state at t"""
    try:
        params = BathParams.build(N=request.N, alpha=request.alpha, omega0=request.omega0)
        coeffs = map_coefficients(params, request.t)
        rho = evolve_with(coeffs, parse_state(request.initial_state))
        data = {
            "coefficients": coeffs.model_dump(),
            "choi": _complex_matrix(choi_state(coeffs).matrix),
            "state": {"rho11": rho.rho11, "rho12_re": rho.rho12.real, "rho12_im": rho.rho12.imag},
        }
        try:
            data["kraus"] = [_complex_matrix(k) for k in kraus_set(coeffs).operators]
        except NotCompletelyPositive as e:
            data["kraus"] = None
            data["kraus_error"] = e.to_detail()
        return BaseResponse(data=data)
    except (SpinBathError, ValueError) as e:
        detail = e.to_detail() if isinstance(e, SpinBathError) else {"error": "InvalidParameters", "message": str(e)}
        raise HTTPException(status_code=422, detail=detail)
    except Exception as e:
        logger.error(f"Channel evaluation failed: {e}")
        raise HTTPException(status_code=500, detail=f"Channel evaluation failed: {str(e)}")
