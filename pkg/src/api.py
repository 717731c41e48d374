"""
API REST de la librería de cavidades con autenticación opcional por token.
Expone el cálculo de figuras y del experimento del haz.
"""

import logging
from typing import Optional

import uvicorn
from fastapi import Depends, FastAPI, HTTPException, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.security import HTTPAuthorizationCredentials, HTTPBearer

from . import __version__
from .cavity_model import APIResponse, CavityError, ConfigError, DomainError, IntegrationError, MaterialKind, RunConfig
from .config_service import config_service
from .figures import FIGURES, build_figure, config_hash, run_beam

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Cavity Thermal Radiation API",
    description="Densidades de energía, presión de Casimir y tasas hiperfinas en cavidades metálicas",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

security = HTTPBearer(auto_error=False)


def validate_token(credentials: Optional[HTTPAuthorizationCredentials] = Depends(security)) -> str:
    """Exige `Authorization: Bearer <API_TOKEN>` sólo si API_TOKEN está configurado."""
    token = credentials.credentials if credentials else ""
    if not config_service.validate_token(token):
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Token de autenticación inválido",
            headers={"WWW-Authenticate": "Bearer"},
        )
    return token


@app.exception_handler(CavityError)
async def cavity_error_handler(_, exc: CavityError):
    if isinstance(exc, IntegrationError):
        code = status.HTTP_500_INTERNAL_SERVER_ERROR
    elif isinstance(exc, (DomainError, ConfigError)):
        code = status.HTTP_422_UNPROCESSABLE_ENTITY
    else:
        code = status.HTTP_500_INTERNAL_SERVER_ERROR
    data = {"diagnostics": exc.diagnostics} if isinstance(exc, ConfigError) else None
    logger.error("error de cálculo: %s", exc)
    return JSONResponse(status_code=code, content=APIResponse(success=False, data=data, error=str(exc)).model_dump())


@app.get("/", response_model=APIResponse)
async def root():
    """Endpoint raíz con información de la API."""
    return APIResponse(
        success=True,
        data={"message": "Cavity Thermal Radiation API", "version": __version__, "figures": list(FIGURES)},
    )


@app.get("/health", response_model=APIResponse)
async def health_check():
    return APIResponse(success=True, data={"status": "healthy", "auth_enabled": config_service.auth_enabled})


@app.get("/figures", response_model=APIResponse)
async def list_figures(_: str = Depends(validate_token)):
    return APIResponse(success=True, data={"figures": list(FIGURES)})


@app.post("/figures/{name}", response_model=APIResponse)
def compute_figure(name: str, config: RunConfig, points: Optional[int] = None,
                   model: Optional[MaterialKind] = None, _: str = Depends(validate_token)):
    """Calcula la tabla de una figura para la configuración enviada."""
    if name not in FIGURES:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"figura desconocida: {name}")
    table = build_figure(name, config, points, model)
    data = table.model_dump()
    data.update(columns=table.columns, config_sha256=config_hash(config), version=__version__)
    return APIResponse(success=True, data=data)


@app.post("/run-beam", response_model=APIResponse)
def compute_beam(config: RunConfig, model: Optional[MaterialKind] = None, _: str = Depends(validate_token)):
    """Ejecuta el experimento del haz y devuelve el informe."""
    report = run_beam(config, model)
    data = report.to_json()
    data.update(config_sha256=config_hash(config), version=__version__)
    return APIResponse(success=True, data=data)


def run_api(host: Optional[str] = None, port: Optional[int] = None):
    """Inicia el servidor uvicorn."""
    host = host or config_service.host
    port = port or config_service.port
    print(f"🚀 Iniciando API en http://{host}:{port}")
    print(f"📚 Documentación disponible en http://{host}:{port}/docs")
    print(f"🔐 Autenticación: {'token Bearer' if config_service.auth_enabled else 'desactivada'}")
    uvicorn.run(app, host=host, port=port)
