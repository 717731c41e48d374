import json

import numpy as np
import pytest

import main
from src import __version__
from src.cavity_model import ConfigError, MaterialKind, OutputFormat, RunConfig
from src.config_service import config_service
from src.figures import FIGURES, FigureTable, build_figure, column_label, config_hash, render_figure


@pytest.fixture(autouse=True)
def no_default_config(monkeypatch):
    monkeypatch.setattr(config_service, "default_path", "")


@pytest.fixture
def small_table():
    return FigureTable(name="demo", abscissa="z", abscissa_unit="um", curves=["drude", "plasma"], unit="u_BB",
                       rows=[[0.5, 1.25, 1e-9, 0.5, 2e-10], [1.0, 1.5, 1e-9, 0.25, 2e-10]], notes=["prueba"])


@pytest.mark.parametrize("label,expected", [
    ("(3/2,-1/2)", "F3/2_m-1/2"),
    ("(1/2,1/2)", "F1/2_m1/2"),
])
def test_column_label(label, expected):
    assert column_label(label) == expected


def test_config_hash_is_stable():
    assert config_hash(RunConfig()) == config_hash(RunConfig())
    other = RunConfig.model_validate({"cavity": {"a_m": 3e-6}})
    assert config_hash(other) != config_hash(RunConfig())
    assert len(config_hash(RunConfig())) == 64


def test_table_columns(small_table):
    assert small_table.columns == ["z", "drude", "drude_err", "plasma", "plasma_err"]
    np.testing.assert_array_equal(small_table.column("plasma"), [0.5, 0.25])


def test_csv_rendering_is_deterministic(small_table):
    config = RunConfig()
    first = render_figure(small_table, config)
    assert first == render_figure(small_table, config)
    lines = first.splitlines()
    assert lines[0] == "# output: demo"
    assert f"# version: {__version__}" in lines
    assert f"# config_sha256: {config_hash(config)}" in lines
    assert "# note: prueba" in lines
    assert "z,drude,drude_err,plasma,plasma_err" in lines
    assert lines[-1] == "1.0000000000e+00,1.5000000000e+00,1.0000000000e-09,2.5000000000e-01,2.0000000000e-10"


def test_json_rendering(small_table):
    document = json.loads(render_figure(small_table, RunConfig(), OutputFormat.JSON))
    assert document["columns"] == small_table.columns
    assert document["units"]["z"] == "um"
    assert document["units"]["plasma_err"] == "u_BB"
    assert document["rows"] == small_table.rows
    assert document["metadata"]["model"] == "config"


def test_figure_registry():
    assert set(FIGURES) == {
        "energy-vs-z", "energy-vs-T", "te-spectrum", "casimir-spectrum",
        "levels", "rate-vs-z", "rates-vs-B", "rates-vs-theta",
    }


def test_unknown_figure():
    with pytest.raises(ConfigError):
        build_figure("nope", RunConfig())


def test_levels_figure_matches_breit_rabi():
    table = build_figure("levels", RunConfig(), points=5)
    assert len(table.rows) == 5
    assert len(table.curves) == 6
    np.testing.assert_allclose(table.column("x"), np.linspace(0.0, 4.0, 5))
    for curve in table.curves:
        assert np.all(table.column(f"{curve}_err") < 1e-10)
    upper = table.column("F3/2_m3/2")
    lower = table.column("F1/2_m1/2")
    assert upper[0] - lower[0] == pytest.approx(1.0, rel=1e-10)


def test_too_few_points():
    with pytest.raises(ConfigError):
        build_figure("levels", RunConfig(), points=1)


def test_cli_levels_to_stdout(capsys):
    assert main.main(["figure", "levels", "--points", "3"]) == main.EXIT_OK
    out = capsys.readouterr().out
    data = [line for line in out.splitlines() if line and not line.startswith("#")]
    assert data[0].startswith("x,F1/2_m-1/2,")
    assert len(data) == 4


def test_cli_writes_json_file(tmp_path, capsys):
    target = tmp_path / "levels.json"
    code = main.main(["figure", "levels", "--points", "2", "--format", "json", "--output", str(target)])
    assert code == main.EXIT_OK
    document = json.loads(target.read_text(encoding="utf-8"))
    assert len(document["rows"]) == 2
    assert capsys.readouterr().out == ""


def test_cli_unknown_figure_exit_code(capsys):
    assert main.main(["figure", "nope"]) == main.EXIT_CONFIG
    assert "figura desconocida" in capsys.readouterr().err


def test_cli_validate_config(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"cavity": {"a_m": 1e-6}}), encoding="utf-8")
    assert main.main(["validate-config", "--config", str(good)]) == main.EXIT_OK
    assert "config_sha256" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cavity": {"a_m": -1.0, "color": "azul"}}), encoding="utf-8")
    assert main.main(["validate-config", "--config", str(bad)]) == main.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "cavity.a_m" in err
    assert "cavity.color" in err


def test_cli_missing_config_file(tmp_path):
    assert main.main(["validate-config", "--config", str(tmp_path / "nada.json")]) == main.EXIT_CONFIG


def test_cli_without_command_prints_help(capsys):
    assert main.main([]) == main.EXIT_OK
    assert "figure" in capsys.readouterr().out


@pytest.mark.slow
def test_cli_run_beam_plasma(capsys):
    assert main.main(["run-beam", "--model", "plasma"]) == main.EXIT_OK
    captured = capsys.readouterr()
    document = json.loads(captured.out)
    assert document["report"]["no_measurable_transitions"] is True
    assert document["metadata"]["model"] == "plasma"
    assert "Sin transiciones medibles" in captured.err


@pytest.mark.slow
def test_energy_vs_z_at_cavity_center():
    table = build_figure("energy-vs-z", RunConfig(), points=3)
    center = table.rows[1]
    assert center[0] == pytest.approx(1.0)
    drude, plasma, universal, blackbody = (center[1 + 2 * k] for k in range(4))
    assert universal == pytest.approx(28.2, rel=2e-2)
    assert plasma == pytest.approx(2.0, rel=0.5)
    assert drude > 10.0
    assert drude > 5.0 * plasma
    assert blackbody == 1.0


@pytest.mark.slow
def test_plasma_rates_vs_field_are_negligible():
    table = build_figure("rates-vs-B", RunConfig(), points=3, model=MaterialKind.PLASMA)
    assert len(table.rows) == 3
    for curve in table.curves:
        values = table.column(curve)
        assert np.all(values >= 0)
        assert np.all(values < 1e-12)
