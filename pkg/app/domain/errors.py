from __future__ import annotations

from typing import Any


class EngineError(Exception):
    """Base error for the encrypted control engine.

    Args:
        message: Human-readable description.
        code: Stable machine-readable identifier of the failure class.
        context: Structured details for logging (never secret material).
    """

    code = "engine_error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.context = context


class InvalidParams(EngineError):
    code = "invalid_params"

    def __init__(self, constraint: str, message: str) -> None:
        super().__init__(f"{constraint}: {message}", constraint=constraint)
        self.constraint = constraint


class ConfigError(EngineError):
    code = "config_error"


class DimensionMismatch(EngineError):
    code = "dimension_mismatch"


class OutOfRange(EngineError):
    code = "out_of_range"


class SingularMass(EngineError):
    code = "singular_mass"


class NotObservable(EngineError):
    code = "not_observable"


class PlacementFailed(EngineError):
    code = "placement_failed"


class MalformedFrame(EngineError):
    code = "malformed_frame"


class NoiseBudgetExceeded(EngineError):
    """Raised in verification mode when a decryption disagrees with the plaintext twin."""

    code = "noise_budget_exceeded"


class ChannelClosed(EngineError):
    code = "channel_closed"
