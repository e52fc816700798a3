from fastapi import APIRouter
from app.api.endpoints import dynamics, measures, runs

# Main API router
api_router = APIRouter()

# Include all endpoint modules
api_router.include_router(dynamics.router, prefix="/dynamics", tags=["Reduced Dynamics"])
api_router.include_router(measures.router, prefix="/measures", tags=["Non-Markovianity and Thermodynamics"])
api_router.include_router(runs.router, prefix="/runs", tags=["Verification and Sweeps"])
