from typing import List
from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Application settings and numerical defaults"""

    # Application
    APP_NAME: str = "spinbath"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = Field(default=False, env="DEBUG")
    LOG_LEVEL: str = Field(default="INFO", env="LOG_LEVEL")

    # CORS
    ALLOWED_HOSTS: List[str] = Field(
        default=["http://localhost:3000", "http://127.0.0.1:3000"],
        env="ALLOWED_HOSTS"
    )

    # Physical defaults (alpha and t in units of omega0)
    DEFAULT_N_BATH: int = Field(default=20, env="DEFAULT_N_BATH")
    DEFAULT_ALPHA: float = Field(default=0.03, env="DEFAULT_ALPHA")
    DEFAULT_OMEGA0: float = Field(default=1.0, env="DEFAULT_OMEGA0")

    # Time grid
    DEFAULT_T_MAX: float = Field(default=200.0, env="DEFAULT_T_MAX")
    DEFAULT_DT: float = Field(default=0.01, env="DEFAULT_DT")
    MAX_GRID_POINTS: int = Field(default=200001, env="MAX_GRID_POINTS")
    MAX_N_BATH: int = Field(default=1000, env="MAX_N_BATH")
    MAX_SWEEP_CELLS: int = Field(default=64, env="MAX_SWEEP_CELLS")

    # Numerical policy
    EPS_DEGENERACY: float = Field(default=1e-12, env="EPS_DEGENERACY")
    UNDEFINED_FRACTION_LIMIT: float = Field(default=0.01, env="UNDEFINED_FRACTION_LIMIT")
    NORM_EPSILON: float = Field(default=1e-6, env="NORM_EPSILON")

    # Oracle
    ORACLE_MAX_SPINS: int = Field(default=10, env="ORACLE_MAX_SPINS")
    RK4_TOLERANCE: float = Field(default=1e-9, env="RK4_TOLERANCE")
    RK4_MAX_HALVINGS: int = Field(default=12, env="RK4_MAX_HALVINGS")

    # Runs
    DEFAULT_WORKERS: int = Field(default=1, env="DEFAULT_WORKERS")
    OUTPUT_DIR: str = Field(default="outputs", env="OUTPUT_DIR")

    class Config:
        env_file = ".env"
        case_sensitive = True


# Global settings instance
settings = Settings()
