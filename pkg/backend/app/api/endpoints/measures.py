import logging

from fastapi import APIRouter, HTTPException

from app.core.exceptions import SpinBathError
from app.models.base import BaseResponse
from app.models.run import CommandType, DynamicsRequest
from app.services.runner import frame_records, nonmarkov_frame, thermo_frame
from app.services.spin_bath import time_grid

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/nonmarkov", response_model=BaseResponse)
def nonmarkovianity(request: DynamicsRequest):
    """q(t) columns with eta and G, plus D(t), p(t) of the best pair and the trace-distance lower bound"""
    try:
        config = request.to_config(CommandType.NONMARKOV)
        frame, summary = nonmarkov_frame(config.params, time_grid(config.t_max, config.dt), config.pair)
        return BaseResponse(data={"rows": frame_records(frame), "summary": summary})
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Non-Markovianity measures failed: {e}")
        raise HTTPException(status_code=500, detail=f"Non-Markovianity measures failed: {str(e)}")


@router.post("/thermo", response_model=BaseResponse)
def thermodynamics(request: DynamicsRequest):
    """Entropy, entropy production and purity rate for the requested initial state"""
    try:
        config = request.to_config(CommandType.THERMO)
        frame, summary = thermo_frame(config.params, time_grid(config.t_max, config.dt), config.rho0)
        return BaseResponse(data={"rows": frame_records(frame), "summary": summary})
    except SpinBathError as e:
        raise HTTPException(status_code=422, detail=e.to_detail())
    except Exception as e:
        logger.error(f"Thermodynamic trace failed: {e}")
        raise HTTPException(status_code=500, detail=f"Thermodynamic trace failed: {str(e)}")
