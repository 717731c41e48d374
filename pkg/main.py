#!/usr/bin/env python3
"""
Radiación térmica en cavidades - CLI y Servidor API

Modo CLI: python main.py figure energy-vs-z --config run.json
Modo API: python main.py --api
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

# Cargar variables de entorno desde .env
load_dotenv()

from src import __version__
from src.api import run_api
from src.cavity_model import ConfigError, DomainError, IntegrationError, MaterialKind, OutputFormat, RunConfig
from src.config_service import config_service
from src.figures import FIGURES, build_figure, config_hash, render_figure, render_report, run_beam

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Radiación térmica no planckiana en cavidades metálicas")
    parser.add_argument("--api", action="store_true", help="Iniciar servidor API")
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="Archivo JSON de configuración (por defecto CAVITY_CONFIG)")
    common.add_argument("--output", metavar="PATH", help="Archivo de salida (por defecto stdout)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], help="csv o json")
    common.add_argument("--model", choices=[k.value for k in MaterialKind], help="Forzar modelo de los espejos")

    sub = parser.add_subparsers(dest="command")
    fig = sub.add_parser("figure", parents=[common], help="Datos de una figura")
    fig.add_argument("name", help=f"Una de: {', '.join(FIGURES)}")
    fig.add_argument("--points", type=int, help="Número de puntos de la abscisa")
    sub.add_parser("run-beam", parents=[common], help="Experimento del haz de deuterio")
    sub.add_parser("validate-config", parents=[common], help="Validar la configuración y salir")
    return parser


def emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
        print(f"✅ Resultado escrito en {output}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def output_format(args, config: RunConfig, default: OutputFormat) -> OutputFormat:
    if args.format:
        return OutputFormat(args.format)
    return config.output.format if "format" in config.output.model_fields_set else default


def cmd_figure(args, config: RunConfig) -> int:
    model = MaterialKind(args.model) if args.model else None
    print(f"📊 Calculando figura {args.name}...", file=sys.stderr)
    table = build_figure(args.name, config, args.points, model)
    fmt = output_format(args, config, OutputFormat.CSV)
    emit(render_figure(table, config, fmt, model), args.output or config.output.path)
    return EXIT_OK


def cmd_run_beam(args, config: RunConfig) -> int:
    model = MaterialKind(args.model) if args.model else None
    print("🔬 Ejecutando experimento del haz...", file=sys.stderr)
    report = run_beam(config, model)
    if report.no_measurable_transitions:
        print("⚠️  Sin transiciones medibles", file=sys.stderr)
    fmt = output_format(args, config, OutputFormat.JSON)
    emit(render_report(report, config, fmt, model), args.output or config.output.path)
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    print("✅ Configuración válida", file=sys.stderr)
    print(f"🔑 config_sha256: {config_hash(config)}", file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal con soporte para múltiples modos."""
    logging.basicConfig(level=config_service.log_level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv if argv is not None else sys.argv[1:])

    if args.api:
        run_api()
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        print("🔧 Cargando configuración...", file=sys.stderr)
        config = config_service.load(args.config)
        if args.command == "figure":
            return cmd_figure(args, config)
        if args.command == "run-beam":
            return cmd_run_beam(args, config)
        return cmd_validate(config)
    except ConfigError as e:
        print(f"❌ Error de configuración: {e}", file=sys.stderr)
        for line in e.diagnostics:
            print(f"   {line}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as e:
        print(f"❌ Parámetro fuera de dominio: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as e:
        print(f"❌ Sin convergencia numérica: {e} (error {e.error}, {e.panels} paneles)", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    try:
        exit_code = main()
        sys.exit(exit_code)
    except KeyboardInterrupt:
        print("\n👋 Ejecución interrumpida", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        print(f"❌ Error inesperado: {e}", file=sys.stderr)
        sys.exit(1)
