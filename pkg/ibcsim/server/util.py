import json
import os
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError
from wasabi import msg  # type: ignore[import]

from ibcsim.components.types import ConfigError
from ibcsim.server.types import RunConfig

OUTPUT_DIR_ENV = "IBC_SIM_OUTPUT_DIR"


def parse_config(text: str) -> RunConfig:
    """Parse a JSON run configuration, collecting line/key diagnostics on failure."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(
            "Configuration is not valid JSON",
            [f"line {error.lineno}, column {error.colno}: {error.msg}"],
        )
    try:
        return RunConfig.model_validate(data)
    except ValidationError as error:
        diagnostics = [
            f"{'.'.join(str(part) for part in e['loc']) or '<root>'}: {e['msg']}"
            for e in error.errors()
        ]
        raise ConfigError("Configuration does not match the run schema", diagnostics)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as error:
        raise ConfigError(f"Cannot read configuration {path}", [str(error)])
    return parse_config(text)


def dump_config(config: RunConfig) -> str:
    return config.model_dump_json(indent=2)


def output_directory(config: RunConfig, out: Optional[str] = None) -> Path:
    """--out wins, then IBC_SIM_OUTPUT_DIR, then outputs.directory of the configuration."""
    directory = out or os.environ.get(OUTPUT_DIR_ENV) or config.outputs.directory
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, columns: list[str], rows: list[list[float]]):
    """Full double precision, header line without a comment marker."""
    table = np.asarray(rows, dtype=float).reshape(len(rows), len(columns))
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
    msg.good(f"Wrote {len(rows)} rows to {path}")


def snapshot_records(dh, state) -> list[dict]:
    """One record per dof: t, sector, node coordinates, fiber component, re, im of psi."""
    records = []
    for sector_id, block in dh.sector_slices.items():
        grid = dh.model.grid(sector_id)
        coords = dh.coordinates(sector_id)
        values = state.amplitudes[block].reshape(-1, grid.fiber_dim)
        if grid.sector.kind == "radial":
            values = values / coords[:, :1]
        for node, row in zip(coords, values):
            for component, value in enumerate(row):
                records.append(
                    {
                        "t": state.time,
                        "sector": sector_id,
                        "node": node.tolist(),
                        "component": component,
                        "re": float(np.real(value)),
                        "im": float(np.imag(value)),
                    }
                )
    return records


class SnapshotWriter:
    def __init__(self, path: Path):
        self.path = path
        self.count = 0
        self._file = open(path, "w", encoding="utf-8")

    def write(self, dh, state):
        for record in snapshot_records(dh, state):
            self._file.write(json.dumps(record) + "\n")
        self.count += 1

    def close(self):
        self._file.close()
        msg.good(f"Wrote {self.count} snapshots to {self.path}")
