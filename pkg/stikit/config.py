import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, TypeVar

from loguru import logger

from stikit.core import ConfigError

DEFAULT_CONFIG_FILE_LOCATION = Path.home() / ".config" / "stikit" / "config.py"
ENV_PREFIX = "STIKIT_"
UNSET: Any = object()
T = TypeVar("T")


@dataclass
class Config:
    _logging_path: str = UNSET
    _coefficients_path: str = UNSET
    _annex_c_path: str = UNSET
    _sample_rate: int = 48000
    _rms_target_dbfs: float = -20.0

    @property
    def logging_path(self) -> Path | None:
        if self._logging_path is UNSET:
            return None
        return self._validate_path("logging_path", self._logging_path)

    @property
    def coefficients_path(self) -> Path | None:
        if self._coefficients_path is UNSET:
            return None
        return self._validate_path("coefficients_path", self._coefficients_path)

    @property
    def annex_c_path(self) -> Path | None:
        # may point to a directory that does not exist yet, verification then skips
        if self._annex_c_path is UNSET:
            return None
        return Path(self._annex_c_path)

    @property
    def sample_rate(self) -> int:
        return int(self._sample_rate)

    @property
    def rms_target_dbfs(self) -> float:
        return float(self._rms_target_dbfs)

    def _validate(self, key: str, value: T) -> T:
        if value is UNSET:
            logger.warning(f"Missing config value: {key}")
            raise ConfigError(f"Missing config value: {key}")
        return value

    def _validate_path(self, key: str, value: str) -> Path:
        self._validate(key, value)
        path = Path(value)
        if not path.exists():
            raise ConfigError(f"Path for '{key}' does not exist: '{value}'.")
        return path

    def read_config_file(self, code: str, path: str):
        logger.debug(f'Reading config file: "{path}"')
        namespace = {}
        exec(code, None, namespace)
        for name, _ in asdict(self).items():
            if (value := namespace.get(name[1:])) not in (None, ""):
                logger.debug(f'Setting "{name[1:]}" from config file: "{path}"')
                setattr(self, name, value)

    def read_env(self, environ: dict[str, str] | None = None):
        environ = os.environ if environ is None else environ
        for name, default in asdict(self).items():
            if value := environ.get(ENV_PREFIX + name[1:].upper()):
                logger.debug(f'Setting "{name[1:]}" from env variable.')
                setattr(self, name, type(default)(value) if isinstance(default, (int, float)) else value)


config = Config()

for path in [DEFAULT_CONFIG_FILE_LOCATION, Path(".") / "config.py"]:
    if path.is_file():
        config.read_config_file(path.read_text(), path=str(path))
config.read_env()
