import logging
from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class LoggingSettings(BaseSettings):
    log_level: str = Field(default="INFO")
    log_dir: Path = Path(__file__).parent.parent.parent / "logs"

    @field_validator("log_dir", mode="before")
    @classmethod
    def ensure_log_dir_exists(cls, v: Path) -> Path:
        v = Path(v)
        v.mkdir(parents=True, exist_ok=True)
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        if not hasattr(logging, v.upper()):
            return "INFO"
        return v.upper()

    @property
    def log_file(self) -> Path:
        return self.log_dir / "rtlforge.log"

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore")


class VhdlSettings(BaseSettings):
    clock_name: str = Field(default="clk", min_length=1)
    reset_n_name: str = Field(default="reset_n", min_length=1)
    sreset_name: str = Field(default="sreset", min_length=1)
    support_package: str = Field(default="rtlforge_support", min_length=1)
    entity_suffix: str = Field(default="_c")
    types_package_suffix: str = Field(default="_pkg", min_length=1)

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="VHDL_", case_sensitive=False, extra="ignore",
    )


class SimulationSettings(BaseSettings):
    max_settle_passes: int = Field(default=64, gt=0)
    shuffle_seed: int | None = Field(default=None)

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="SIM_", case_sensitive=False, extra="ignore",
    )


class OutputSettings(BaseSettings):
    output_dir: Path = Path("out")
    structured_diagnostics: bool = Field(default=False)

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore")


class Settings(BaseSettings):
    app_name: str = Field(default="rtlforge")

    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    vhdl: VhdlSettings = Field(default_factory=VhdlSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()
