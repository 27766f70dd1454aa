from typing import Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    app_name: str = "Broadcast Tracking Control"
    debug: bool = False
    api_prefix: str = "/api/v1"
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Simulation defaults
    fault_freezes_phase: bool = False
    allow_non_spr: bool = False

    # Verification tolerances
    kyp_tol: float = 1e-8
    passivity_tol: float = 1e-6

    # Output
    output_dir: str = "./runs"
    csv_significant_digits: int = 17
    max_jobs: int = 4

    cors_origins: str = "http://localhost:5173"

    model_config = {"env_file": ".env"}


settings = Settings()
