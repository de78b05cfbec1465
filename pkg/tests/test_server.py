"""
Tests for configuration parsing, output helpers and the ibc-sim command line.
"""
import json

import numpy as np
import pytest
from click.testing import CliRunner

from ibcsim.components.assembly import assemble_radial_creation
from ibcsim.components.evolution import EvolutionConfig, MultiSectorState
from ibcsim.components.types import ConfigError
from ibcsim.server.cli import cli
from ibcsim.server.types import RunConfig
from ibcsim.server.util import (
    OUTPUT_DIR_ENV,
    dump_config,
    load_config,
    output_directory,
    parse_config,
    snapshot_records,
    write_csv,
)

RADIAL = {
    "scenario": "radial_creation",
    "physics": {"g": 1.0, "m_y": 1.0, "rho": 1.0, "E0": 1.0},
    "grid": {"h": 0.05, "R": 5.0},
    "evolution": {"dt": 0.01, "steps": 10},
}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_config_defaults():
    config = parse_config('{"scenario": "point_halfline"}')
    assert config.physics.masses == [1.0]
    assert config.grid.h == 0.05
    assert config.evolution.flux_rule == "trapezoid"
    assert isinstance(config.evolution, EvolutionConfig)
    assert config.evolution.dt == 0.01 and config.evolution.steps == 1000
    assert config.outputs.csv == "timeseries.csv"


def test_config_round_trip():
    config = RunConfig.model_validate(
        {
            **RADIAL,
            "coefficients": {"kind": "creation", "epsilon": 1e-3},
            "outputs": {"snapshots": "snap.ndjson", "snapshot_stride": 5},
        }
    )
    assert parse_config(dump_config(config)) == config


def test_custom_config_round_trip():
    config = RunConfig.model_validate(
        {
            "scenario": "custom",
            "sectors": [
                {"sector": {"id": 0, "kind": "interval", "lower": [-1.0], "upper": [2.0]}},
                {
                    "sector": {
                        "id": 1,
                        "kind": "box",
                        "lower": [-1.0, 0.0],
                        "upper": [1.0, 1.0],
                        "physical_faces": ["1-"],
                        "mass_factors": [1.0, 2.0],
                    },
                    "spacing": [0.25, 0.125],
                    "potential": "harmonic",
                    "omega": 0.3,
                },
            ],
            "links": [
                {
                    "source": 1,
                    "face": "1-",
                    "target": 0,
                    "map": {"kind": "affine", "J": [[1.0]], "offset": [0.5]},
                    "coefficients": {
                        "kind": "explicit",
                        "alpha": [[[1.0, 0.5]]],
                        "beta": [[[0.0, 1.0]]],
                        "gamma": [[[0.25, -0.75]]],
                        "delta": [[[-1.0, 2.0]]],
                        "coupling_constant": 4.0,
                    },
                }
            ],
            "initial": {"center": [0.0, 0.5], "momentum": [0.0, -1.0]},
        }
    )
    again = parse_config(dump_config(config))
    assert again == config
    assert again.sectors[1].sector.mass_factors == [1.0, 2.0]
    assert again.links[0].map.offset == [0.5]
    assert again.links[0].coefficients.delta == [[(-1.0, 2.0)]]


def test_invalid_json_reports_position():
    with pytest.raises(ConfigError) as info:
        parse_config('{"scenario": "point_halfline",\n "grid": {"h": }}')
    assert info.value.diagnostics[0].startswith("line 2")


def test_schema_errors_name_the_key():
    with pytest.raises(ConfigError) as info:
        parse_config('{"scenario": "lattice", "grid": {"h": -1}}')
    joined = "\n".join(info.value.diagnostics)
    assert "scenario" in joined
    assert "grid.h" in joined


@pytest.mark.parametrize(
    "section,values,key",
    [
        ("grid", {"extents": [-1.0]}, "grid.extents"),
        ("grid", {"extents": []}, "grid.extents"),
        ("physics", {"masses": []}, "physics.masses"),
        ("physics", {"masses": [1.0, 0.0]}, "physics.masses"),
        ("physics", {"masses": [1.0, 1.0, 1.0]}, "physics.masses"),
    ],
)
def test_grid_and_mass_bounds(section, values, key):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps({"scenario": "line_halfplane", section: values}))
    assert key in "\n".join(info.value.diagnostics)


def test_point_halfline_takes_one_mass():
    with pytest.raises(ConfigError) as info:
        parse_config('{"scenario": "point_halfline", "physics": {"masses": [1.0, 2.0]}}')
    assert "physics.masses" in "\n".join(info.value.diagnostics)


def test_custom_needs_sectors():
    with pytest.raises(ConfigError):
        parse_config('{"scenario": "custom"}')
    with pytest.raises(ConfigError):
        parse_config('{"scenario": "point_halfline", "links": [{"source": 1, "face": "0-", "target": 0}]}')


def test_robin_needs_beta():
    with pytest.raises(ConfigError):
        parse_config('{"scenario": "point_halfline", "coefficients": {"kind": "robin", "alpha": [[[1, 0]]]}}')


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))


def test_output_directory_precedence(tmp_path, monkeypatch):
    config = RunConfig.model_validate({**RADIAL, "outputs": {"directory": str(tmp_path / "cfg")}})
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert output_directory(config) == tmp_path / "cfg"

    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert output_directory(config) == tmp_path / "env"
    assert output_directory(config, str(tmp_path / "flag")) == tmp_path / "flag"
    assert (tmp_path / "flag").is_dir()


def test_write_csv_keeps_full_precision(tmp_path):
    path = tmp_path / "table.csv"
    rows = [[0.0, 1.0 / 3.0, float("nan")], [0.1, -2.5e-17, 1e300]]
    write_csv(path, ["t", "x", "y"], rows)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,x,y"
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert table[0, 1] == 1.0 / 3.0
    assert np.isnan(table[0, 2])
    assert table[1, 0] == 0.1
    assert table[1, 1] == -2.5e-17
    assert table[1, 2] == 1e300


def test_snapshot_records_divide_radial_values():
    dh = assemble_radial_creation(1.0, 1.0, 1.0, E0=1.0, R=3.0, h=0.25)
    amplitudes = np.zeros(dh.size, dtype=complex)
    amplitudes[dh.sector_slices[1]] = 2.0 * dh.coordinates(1)[:, 0]
    amplitudes[0] = 0.5j
    records = snapshot_records(dh, MultiSectorState(amplitudes))

    assert len(records) == dh.size
    assert records[0]["sector"] == 0 and records[0]["im"] == 0.5
    for record in records[1:]:
        assert record["re"] == pytest.approx(2.0)
        assert record["im"] == 0.0


def test_cli_scenarios():
    result = CliRunner().invoke(cli, ["scenarios"])
    assert result.exit_code == 0
    for name in ("point_halfline", "line_halfplane", "radial_creation", "custom"):
        assert name in result.output


def test_cli_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"scenario": ', encoding="utf-8")
    result = CliRunner().invoke(cli, ["run", "--config", str(path)])
    assert result.exit_code == 3
    assert "line 1" in result.output


def test_cli_unknown_key_value(tmp_path):
    result = CliRunner().invoke(
        cli, ["run", "--config", write_config(tmp_path, {**RADIAL, "grid": {"h": "fine"}})]
    )
    assert result.exit_code == 3
    assert "grid.h" in result.output


@pytest.mark.parametrize(
    "data,key",
    [
        ({"scenario": "point_halfline", "grid": {"extents": [-1.0]}}, "grid.extents"),
        ({"scenario": "point_halfline", "physics": {"masses": []}}, "physics.masses"),
    ],
)
def test_cli_bad_extents_and_masses(tmp_path, data, key):
    result = CliRunner().invoke(cli, ["run", "--config", write_config(tmp_path, data), "--check-only"])
    assert result.exit_code == 3
    assert key in result.output


def test_cli_check_only(tmp_path):
    result = CliRunner().invoke(
        cli, ["run", "--config", write_config(tmp_path, RADIAL), "--check-only"]
    )
    assert result.exit_code == 0
    assert "conditions: PASS" in result.output


def test_cli_check_only_perturbed(tmp_path):
    data = {**RADIAL, "coefficients": {"kind": "creation", "epsilon": 1e-3}}
    result = CliRunner().invoke(cli, ["run", "--config", write_config(tmp_path, data), "--check-only"])
    assert result.exit_code == 2
    assert "conditions: FAIL" in result.output


def test_cli_run_writes_csv(tmp_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(
        cli, ["run", "--config", write_config(tmp_path, RADIAL), "--out", str(out)]
    )
    assert result.exit_code == 0
    lines = (out / "timeseries.csv").read_text().splitlines()
    assert lines[0].startswith("t,total_norm,P_sector_0,P_sector_1,flux_link_0")
    assert len(lines) == 1 + 11


def test_cli_dump_matrix(tmp_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(
        cli, ["dump-matrix", "--config", write_config(tmp_path, RADIAL), "--out", str(out)]
    )
    assert result.exit_code == 0
    header = (out / "matrix.txt").read_text().splitlines()[0]
    assert header.startswith("# ")


def test_cli_refine_levels(tmp_path):
    result = CliRunner().invoke(
        cli,
        ["refine", "--config", write_config(tmp_path, RADIAL), "--levels", "2", "--out", str(tmp_path)],
    )
    assert result.exit_code == 3
