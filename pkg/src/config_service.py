"""
Servicio de configuración: lee el archivo JSON de ejecución, lo valida con
los modelos pydantic y expone los ajustes del entorno (token de la API,
nivel de log, ruta de configuración por defecto).
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from .cavity_model import ConfigError, RunConfig

logger = logging.getLogger(__name__)

load_dotenv()


def format_validation_error(exc: ValidationError) -> List[str]:
    """Una línea por error: 'cavity.a_m: Input should be greater than 0'."""
    lines = []
    for err in exc.errors():
        path = ".".join(str(part) for part in err.get("loc", ())) or "<raíz>"
        lines.append(f"{path}: {err.get('msg', 'inválido')}")
    return lines


class ConfigService:
    """Carga y valida configuraciones de ejecución."""

    def __init__(self):
        self.default_path = os.getenv("CAVITY_CONFIG", "")
        self.log_level = os.getenv("CAVITY_LOG_LEVEL", "WARNING").upper()
        self.token = os.getenv("API_TOKEN", "")
        self.host = os.getenv("API_HOST", "0.0.0.0")
        self.port = int(os.getenv("PORT", "1401"))

    @property
    def auth_enabled(self) -> bool:
        return bool(self.token)

    def validate_token(self, token: str) -> bool:
        """Sin API_TOKEN configurado la API es abierta."""
        return not self.auth_enabled or token == self.token

    def from_dict(self, data: Dict[str, Any]) -> RunConfig:
        try:
            return RunConfig.model_validate(data)
        except ValidationError as exc:
            diagnostics = format_validation_error(exc)
            raise ConfigError(f"configuración inválida ({len(diagnostics)} errores)", diagnostics) from exc

    def load(self, path: Optional[str] = None) -> RunConfig:
        """Lee `path` (o CAVITY_CONFIG); sin ninguno devuelve la configuración por defecto."""
        path = path or self.default_path
        if not path:
            logger.info("sin archivo de configuración: valores por defecto")
            return RunConfig()
        file = Path(path)
        if not file.is_file():
            raise ConfigError(f"no existe el archivo de configuración {path}", [f"<archivo>: {path}"])
        try:
            data = json.loads(file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON inválido en {path}", [f"<archivo>: línea {exc.lineno}: {exc.msg}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError("la configuración debe ser un objeto JSON", ["<raíz>: se esperaba un objeto"])
        config = self.from_dict(data)
        logger.debug("configuración cargada de %s", path)
        return config


# Instancia global del servicio de configuración
config_service = ConfigService()
