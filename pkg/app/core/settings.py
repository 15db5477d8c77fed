from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.domain.errors import ConfigError

Transport = Literal["inprocess", "socket"]
ControllerMode = Literal["encrypted", "fixed_point", "float"]


class Settings(BaseSettings):
    """Engine settings loaded from environment variables.

    Args:
        environment: Deployment environment, e.g. 'dev', 'ci', 'lab'.
        n: Lattice dimension of the scheme.
        m: Public-key sample count.
        ell: Word width in bits.
        m_q: Integer bits of the Q format.
        n_q: Fraction bits of the Q format.
        noise_bound: Largest magnitude of fresh noise.
        seed: Seed for every random draw of a run.
        duration_s: Simulated time of a closed-loop run.
        sample_rate_hz: Controller sample rate.
        substeps: Integrator steps per sample period.
        transport: Frame transport between adapter and controller.
        controller: Which controller drives the plant.
        verify: Whether the adapter runs the plaintext twin in lockstep.
        feedback_sign: Sign applied to the published feedback gain.
        observer_poles: Target observer eigenvalues.
        log_json: Whether to emit JSON-formatted logs.
        sentry_dsn: Optional Sentry DSN for error reporting.
    """

    model_config = SettingsConfigDict(
        env_prefix="RCE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    environment: str = Field(default="dev")

    n: int = Field(default=7)
    m: int = Field(default=7)
    ell: int = Field(default=64)
    m_q: int = Field(default=10)
    n_q: int = Field(default=22)
    noise_bound: int = Field(default=15)

    seed: int = Field(default=0)
    duration_s: float = Field(default=10.0, gt=0)
    sample_rate_hz: float = Field(default=100.0, gt=0)
    substeps: int = Field(default=100, ge=1)
    transport: Transport = Field(default="inprocess")
    controller: ControllerMode = Field(default="encrypted")
    verify: bool = Field(default=False)

    # The published gain assumes u = -K x; see DESIGN.md.
    feedback_sign: Literal[-1, 1] = Field(default=-1)
    observer_poles: list[float] = Field(default=[0.7, 0.5, 0.8, 0.6, 0.85])

    # Initial plant state [theta1, dtheta1, theta2, dtheta2, T]
    initial_state: list[float] = Field(default=[0.0289, 0.0669, 0.1156, 0.0049, 0.0])
    measurement_noise: float = Field(default=0.0, ge=0)
    process_noise: float = Field(default=0.0, ge=0)

    socket_host: str = Field(default="127.0.0.1")
    socket_port: int = Field(default=0, ge=0, le=65535)

    log_json: bool = Field(default=False)
    sentry_dsn: str | None = None

    @field_validator("observer_poles")
    @classmethod
    def _five_poles(cls, poles: list[float]) -> list[float]:
        if len(poles) != 5:
            raise ValueError("observer_poles needs exactly 5 values")
        return poles

    @field_validator("initial_state")
    @classmethod
    def _five_states(cls, state: list[float]) -> list[float]:
        if len(state) != 5:
            raise ValueError("initial_state needs exactly 5 values")
        return state

    def simulation(self) -> SimulationConfig:
        return SimulationConfig.model_validate(self.model_dump(exclude={"environment", "log_json", "sentry_dsn"}))


class SimulationConfig(BaseModel):
    """Validated, immutable view of a closed-loop run."""

    model_config = ConfigDict(frozen=True)

    n: int
    m: int
    ell: int
    m_q: int
    n_q: int
    noise_bound: int
    seed: int
    duration_s: float
    sample_rate_hz: float
    substeps: int
    transport: Transport
    controller: ControllerMode
    verify: bool
    feedback_sign: Literal[-1, 1]
    observer_poles: tuple[float, ...]
    initial_state: tuple[float, ...]
    measurement_noise: float
    process_noise: float
    socket_host: str
    socket_port: int

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def steps(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def parse_config_file(path: Path) -> dict[str, str]:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", path=str(path)) from exc

    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'", path=str(path), line=lineno)
        values[key.strip()] = value.strip()

    unknown = sorted(set(values) - set(Settings.model_fields))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}", path=str(path), keys=unknown)
    return values


def _coerce_list(value: str) -> list[float]:
    return [float(part) for part in value.replace("[", "").replace("]", "").split(",") if part.strip()]


def load_settings(config_path: Path | str | None = None, **overrides: Any) -> Settings:
    """Merge defaults < environment < config file < explicit overrides.

    Args:
        config_path: Optional flat config file.
        overrides: Values from the command line; ``None`` means "not given".
    """

    base = Settings()  # type: ignore[call-arg]
    merged: dict[str, Any] = base.model_dump()

    if config_path is not None:
        for key, value in parse_config_file(Path(config_path)).items():
            merged[key] = _coerce_list(value) if key in {"observer_poles", "initial_state"} else value

    merged.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

