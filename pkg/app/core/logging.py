from __future__ import annotations

import json as jsonlib
import logging
import sys
from typing import Any

_SECRET_KEYS = frozenset({"secret", "secret_key", "sk", "s", "t", "plaintext", "words"})
_REDACTED = "[REDACTED]"


def redact_secrets(data: dict[str, Any]) -> dict[str, Any]:
    """Mask key material and plaintext words in a structured log payload."""

    redacted = data.copy()
    for key, value in redacted.items():
        if key.lower() in _SECRET_KEYS:
            redacted[key] = _REDACTED
        elif isinstance(value, dict):
            redacted[key] = redact_secrets(value)
    return redacted


def _extra_payload(record: logging.LogRecord) -> dict[str, Any]:
    raw = getattr(record, "rce_extra", "{}")
    try:
        payload = jsonlib.loads(raw) if isinstance(raw, str) else dict(raw)
    except (TypeError, ValueError):
        return {"unparsed_extra": str(raw)}
    return redact_secrets(payload) if isinstance(payload, dict) else {"value": payload}


class _ExtraDefaultFilter(logging.Filter):
    """Normalize ``rce_extra`` on every record to a redacted JSON object."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.rce_extra = jsonlib.dumps(_extra_payload(record), sort_keys=True)
        return True


class _JsonFormatter(logging.Formatter):
    """One JSON object per line; the message is escaped, the extra blob nested."""

    def format(self, record: logging.LogRecord) -> str:
        entry: dict[str, Any] = {
            "level": record.levelname,
            "time": self.formatTime(record),
            "name": record.name,
            "message": record.getMessage(),
            "extra": jsonlib.loads(getattr(record, "rce_extra", "{}")),
        }
        if record.exc_info:
            entry["exc_info"] = self.formatException(record.exc_info)
        return jsonlib.dumps(entry)


def configure_logging(json: bool, level: int = logging.INFO) -> None:
    """Configure application-wide logging.

    Args:
        json: Whether to emit JSON-formatted logs.
        level: Root log level.
    """

    root = logging.getLogger()
    root.setLevel(level)

    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stdout)
    if json:
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter(fmt="[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s %(rce_extra)s"))
    handler.addFilter(_ExtraDefaultFilter())
    root.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """Return a logger that also offers ``log_with_extra(level, msg, **context)``."""

    logger = logging.getLogger(name)

    def _log_with_extra(level: int, msg: str, *args: Any, **context: Any) -> None:
        logger.log(level, msg, *args, extra={"rce_extra": jsonlib.dumps(context, default=repr)})

    logger.log_with_extra = _log_with_extra  # type: ignore[attr-defined]
    return logger
