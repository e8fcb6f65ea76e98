"""Settings factory for nisqkit."""

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

DEFAULT_SEED = 20210521

log = logging.getLogger(__name__)


class ConfigError(RuntimeError):
    """Raised when environment configuration is invalid."""


@dataclass(frozen=True)
class Settings:
    seed: int = DEFAULT_SEED
    log_level: str = "WARNING"
    max_qubits: int = 20
    max_diag_qubits: int = 14
    bootstrap: int = 200


def _int_env(key: str, default: int) -> int:
    raw = os.environ.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def create_settings(env_file: str | Path | None = None) -> Settings:
    """Read configuration from the environment (and .env), configure logging."""
    # Real environment variables win over .env
    load_dotenv(env_file or Path.cwd() / ".env", override=False)

    log_level = os.environ.get("NISQKIT_LOG_LEVEL", "WARNING").upper()
    if log_level not in logging.getLevelNamesMapping():
        raise ConfigError(f"NISQKIT_LOG_LEVEL {log_level!r} is not a logging level")

    settings = Settings(
        seed=_int_env("NISQKIT_SEED", DEFAULT_SEED),
        log_level=log_level,
        max_qubits=_int_env("NISQKIT_MAX_QUBITS", 20),
        max_diag_qubits=_int_env("NISQKIT_MAX_DIAG_QUBITS", 14),
        bootstrap=_int_env("NISQKIT_BOOTSTRAP", 200),
    )
    if settings.bootstrap < 2:
        raise ConfigError("NISQKIT_BOOTSTRAP must be at least 2")

    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Sentry error monitoring (set SENTRY_DSN env var to enable)
    sentry_dsn = os.environ.get("SENTRY_DSN")
    if sentry_dsn:
        try:
            import sentry_sdk
            sentry_sdk.init(dsn=sentry_dsn, traces_sample_rate=0.0)
        except ImportError:
            log.warning("SENTRY_DSN set but sentry-sdk not installed")

    return settings
