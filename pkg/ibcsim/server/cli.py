import sys

import click
from dotenv import load_dotenv
from wasabi import msg

from ibcsim.components.types import ConfigError
from ibcsim.server.util import load_config
from ibcsim.simulation_manager import SimulationManager

load_dotenv()


def _load(path: str):
    try:
        return load_config(path)
    except ConfigError as error:
        msg.fail(str(error))
        for line in error.diagnostics:
            msg.text(f"  {line}")
        sys.exit(3)


@click.group()
def cli():
    """Main command group for ibc-sim."""
    pass


@cli.command()
@click.option("--config", "config_path", required=True, help="Run configuration (JSON)")
@click.option("--out", default=None, help="Output directory")
@click.option("--check-only", is_flag=True, default=False, help="Assemble and check conditions, do not evolve.")
@click.option(
    "--force-nonhermitian",
    is_flag=True,
    default=False,
    help="Evolve even if conditions fail or W H is not Hermitian.",
)
def run(config_path, out, check_only, force_nonhermitian):
    """
    Assemble, check and evolve one configuration; write the time-series CSV.
    """
    config = _load(config_path)
    sys.exit(SimulationManager().run(config, out, check_only, force_nonhermitian))


@cli.command()
@click.option("--config", "config_path", required=True, help="Run configuration (JSON)")
@click.option("--levels", default=None, type=int, help="Number of refinement levels (>= 3)")
@click.option("--out", default=None, help="Output directory")
def refine(config_path, levels, out):
    """
    Rerun with (h, dt) halved per level and report observed orders.
    """
    config = _load(config_path)
    levels = levels if levels is not None else config.outputs.refine_levels
    sys.exit(SimulationManager().refine(config, levels, out))


@cli.command("dump-matrix")
@click.option("--config", "config_path", required=True, help="Run configuration (JSON)")
@click.option("--out", default=None, help="Output directory")
def dump_matrix(config_path, out):
    """
    Write the assembled H in coordinate (row col re im) format.
    """
    config = _load(config_path)
    sys.exit(SimulationManager().dump(config, out))


@cli.command()
def scenarios():
    """
    List the registered scenarios.
    """
    meta = SimulationManager().get_scenarios()
    for name, component in meta["components"].items():
        msg.divider(name)
        msg.text(component["description"])
        rows = [
            (key, value["value"], value["description"])
            for key, value in component["config"].items()
        ]
        if rows:
            msg.table(rows, header=("key", "default", "description"))


if __name__ == "__main__":
    cli()
