from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Type
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class ArithmeticMode(str, Enum):
    DOUBLE = "double"
    EXACT = "exact"


class Settings(BaseSettings):
    # Reproducibility
    SEED: int = 20240917
    ARITHMETIC_MODE: ArithmeticMode = ArithmeticMode.DOUBLE

    # Measures
    NORMALIZATION_TOL: float = 1e-12

    # Enumeration budgets
    ENUMERATION_CAP: int = 10**7
    TABLE_CAP: int = 10**8

    # Iterative proportional fitting
    IPF_TOL: float = 1e-12
    IPF_MAX_ITER: int = 100_000

    # Verification tolerances
    KERNEL_TOL: float = 1e-10
    PRCP_TOL: float = 1e-12
    SANDWICH_SLACK: float = 1e-9
    ENVELOPE_SLACK: float = 0.02

    # Set infima on #R >= 3
    GRID_RESOLUTION: float = 0.05

    # Harness
    PROXY_WINDOW: int = 3
    WORKERS: int = 1
    RECORD_TIMINGS: bool = False

    # Logging
    LOG_LEVEL: str = "info"
    LOG_FILE: Optional[Path] = None

    @field_validator("LOG_LEVEL", mode="before")
    def normalize_log_level(cls, v):
        if isinstance(v, str):
            return v.strip().lower()
        return v

    @field_validator("ARITHMETIC_MODE", mode="before")
    def normalize_mode(cls, v):
        if isinstance(v, str):
            return v.strip().lower()
        return v

    model_config = SettingsConfigDict(case_sensitive=True)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # All configuration is explicit: flags and config files only.
        return (init_settings,)


settings = Settings()


class CliConfig(BaseModel):
    """Validated bundle of one command-line invocation."""
    subcommand: str
    inputs: List[Path] = Field(default_factory=list)
    out: Optional[Path] = None
    arithmetic_mode: ArithmeticMode = settings.ARITHMETIC_MODE
    seed: int = settings.SEED
    cap_enum: int = Field(settings.ENUMERATION_CAP, ge=1)
    cap_tables: int = Field(settings.TABLE_CAP, ge=1)

    @field_validator("inputs")
    @classmethod
    def inputs_exist(cls, v: List[Path]):
        missing = [str(p) for p in v if not p.is_file()]
        if missing:
            raise ValueError(f"Input file(s) not found: {', '.join(missing)}")
        return v
