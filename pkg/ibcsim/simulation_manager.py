from pathlib import Path
from typing import Optional

import numpy as np
from dotenv import load_dotenv
from wasabi import msg

from ibcsim.components.assembly import DiscreteHamiltonian, assemble, dump_matrix
from ibcsim.components.coefficients import (
    HERMITICITY_TOL,
    ConditionReport,
    check_conditions,
    creation_coefficients,
    creation_prefactor,
)
from ibcsim.components.diagnostics import (
    BalanceReport,
    balance_residual,
    csv_columns,
    initial_report,
    max_balance_residual,
    norm_drift_rate,
)
from ibcsim.components.evolution import (
    CrankNicolsonPropagator,
    MultiSectorState,
    ground_state,
)
from ibcsim.components.managers import ScenarioManager, SchemeManager
from ibcsim.components.types import (
    ConditionError,
    ConfigError,
    IBCError,
    NonHermitianError,
)
from ibcsim.server.types import RunConfig
from ibcsim.server.util import SnapshotWriter, output_directory, write_csv

load_dotenv()

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONDITIONS = 2
EXIT_CONFIG = 3


def exit_code(error: Exception) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (ConditionError, NonHermitianError)):
        return EXIT_CONDITIONS
    return EXIT_NUMERICAL


def report_error(error: Exception):
    msg.fail(str(error))
    for line in getattr(error, "diagnostics", []):
        msg.text(f"  {line}")


def _format_complex(value: complex) -> str:
    if value.imag == 0:
        return f"{value.real:.10g}"
    return f"{value.real:.10g}{value.imag:+.10g}j"


class SimulationManager:
    """
    Facade over scenarios, assembly, evolution and diagnostics.

    Library errors surface as IBCError subclasses; the run/refine/dump entry points
    turn them into exit codes (0 ok, 1 numerical failure, 2 failed conditions, 3 bad config).
    """

    def __init__(self) -> None:
        self.scenario_manager = ScenarioManager()
        self.scheme_manager = SchemeManager()

    def build(self, config: RunConfig) -> DiscreteHamiltonian:
        model = self.scenario_manager.build(config)
        return assemble(model, self.scheme_manager)

    def condition_reports(self, dh: DiscreteHamiltonian) -> list[tuple[int, list, ConditionReport]]:
        """check_conditions at every boundary node of every link."""
        reports = []
        for k, link in enumerate(dh.links):
            for b, cs in enumerate(link.coefficients):
                coords = link.source.nodes[link.boundary_nodes[b]].tolist()
                tol = HERMITICITY_TOL * max(1.0, cs.scale)
                reports.append((k, coords, check_conditions(cs, tol)))
        return reports

    def print_coefficient_table(self, config: RunConfig, dh: DiscreteHamiltonian):
        if config.scenario == "radial_creation" and config.physics.g != 0:
            physics = config.physics
            rows = []
            for n in range(6):
                cs = creation_coefficients(n, physics.g, physics.m_y, physics.rho, physics.hbar)
                alpha, delta = cs.alpha[0, 0].real, cs.delta[0, 0].real
                rows.append(
                    (
                        n,
                        f"{alpha:.10g}",
                        "0",
                        "0",
                        f"{delta:.10g}",
                        f"{cs.coupling_constant / alpha:.10g}",
                        f"{creation_prefactor(n, physics.g, physics.m_y, physics.rho, physics.hbar):.10g}",
                        f"{alpha * delta:.10g}",
                        "PASS" if check_conditions(cs).passes else "FAIL",
                    )
                )
            msg.table(
                rows,
                header=("n", "alpha", "beta", "gamma", "delta", "K/alpha", "prefactor", "alpha*delta", "conditions"),
                divider=True,
            )
            return
        rows = []
        for k, link in enumerate(dh.links):
            cs = link.coefficients[0]
            rows.append(
                (
                    k,
                    f"{link.source_id}{link.face} -> {link.target_id}",
                    len(link),
                    _format_complex(cs.alpha[0, 0]),
                    _format_complex(cs.beta[0, 0]),
                    _format_complex(cs.gamma[0, 0]),
                    _format_complex(cs.delta[0, 0]),
                    f"{cs.coupling_constant:.10g}",
                )
            )
        if rows:
            msg.table(
                rows,
                header=("link", "face", "nodes", "alpha[0,0]", "beta[0,0]", "gamma[0,0]", "delta[0,0]", "K"),
                divider=True,
            )

    def check(self, config: RunConfig, dh: DiscreteHamiltonian) -> bool:
        """Print the coefficient table and condition verdict; True when every node passes."""
        self.print_coefficient_table(config, dh)
        reports = self.condition_reports(dh)
        failing = [(k, coords, r) for k, coords, r in reports if not r.passes]
        for k, coords, report in failing[:5]:
            msg.warn(
                f"link {k} node {coords}: defects a={report.defect_a:.3e} b={report.defect_b:.3e} "
                f"c={report.defect_c:.3e}, rank_full={report.rank_full}"
            )
        if failing:
            msg.fail(f"conditions: FAIL ({len(failing)} of {len(reports)} boundary nodes)")
            return False
        msg.good("conditions: PASS")
        return True

    def initial_state(self, config: RunConfig, dh: DiscreteHamiltonian) -> MultiSectorState:
        initial = config.initial
        sector = initial.sector
        if sector is None:
            sector = self.scenario_manager.selected().source_sector(config)
        if initial.kind == "zero":
            return MultiSectorState.zeros(dh)
        if initial.kind == "sector":
            return MultiSectorState.indicator(dh, sector)
        if initial.kind == "ground_state":
            value, state = ground_state(dh, shift=initial.shift, seed=config.seed)
            msg.info(f"Ground state energy {value:.12g}")
            return state
        return MultiSectorState.gaussian(
            dh, sector, initial.center, initial.width, initial.momentum
        )

    def simulate(
        self,
        config: RunConfig,
        dh: DiscreteHamiltonian,
        state: MultiSectorState,
        force_nonhermitian: bool = False,
        snapshots: Optional[SnapshotWriter] = None,
    ) -> tuple[list[BalanceReport], MultiSectorState]:
        """Evolve with Crank-Nicolson and return one BalanceReport per time (t0 first)."""
        evolution = config.evolution
        propagator = CrankNicolsonPropagator.from_config(dh, evolution, force_nonhermitian)
        stride = config.outputs.snapshot_stride
        reports = [initial_report(dh, state)]
        if snapshots is not None:
            snapshots.write(dh, state)
        previous = state
        for step, current in enumerate(propagator.run(state, evolution.steps), start=1):
            reports.append(
                balance_residual(dh, previous, current, evolution.dt, evolution.flux_rule)
            )
            if snapshots is not None and stride and step % stride == 0:
                snapshots.write(dh, current)
            previous = current
        return reports, previous

    def run(
        self,
        config: RunConfig,
        out: Optional[str] = None,
        check_only: bool = False,
        force_nonhermitian: bool = False,
    ) -> int:
        """
        Assemble, check conditions, evolve and write the time series.

        @returns int - Exit code
        """
        force = force_nonhermitian or config.evolution.force_nonhermitian
        try:
            msg.divider(f"Scenario {config.scenario}")
            dh = self.build(config)
            passes = self.check(config, dh)
            if not dh.hermitian:
                msg.warn(
                    f"Weighted Hermiticity defect {dh.hermiticity_defect:.3e} "
                    f"(relative {dh.relative_hermiticity_defect:.3e})"
                )
            if (not passes or not dh.hermitian) and not force:
                msg.fail("Refusing to evolve; pass --force-nonhermitian for a negative control")
                return EXIT_CONDITIONS
            if check_only:
                return EXIT_OK

            directory = output_directory(config, out)
            snapshots = None
            if config.outputs.snapshots and config.outputs.snapshot_stride:
                snapshots = SnapshotWriter(directory / config.outputs.snapshots)
            state = self.initial_state(config, dh)
            try:
                reports, final = self.simulate(config, dh, state, force, snapshots)
            finally:
                if snapshots is not None:
                    snapshots.close()

            write_csv(
                directory / config.outputs.csv,
                csv_columns(dh),
                [report.csv_row() for report in reports],
            )
            self.summarize(reports)
            return EXIT_OK
        except IBCError as error:
            report_error(error)
            return exit_code(error)

    def summarize(self, reports: list[BalanceReport]):
        first, last = reports[0], reports[-1]
        rows = [
            (sid, f"{p0:.6f}", f"{p1:.6f}")
            for sid, p0, p1 in zip(first.sector_ids, first.sector_probs, last.sector_probs)
        ]
        msg.table(rows, header=("sector", "P(t0)", "P(t_end)"), divider=True)
        msg.info(f"Total norm change {last.total_norm - first.total_norm:.3e}")
        msg.info(f"Max balance residual {max_balance_residual(reports):.3e}")
        msg.info(f"Norm drift rate {norm_drift_rate(reports):.3e}")

    def refine_study(self, config: RunConfig, levels: int) -> list[dict]:
        """
        Rerun config with (h, dt) halved per level.

        @returns list[dict] - Per level: h, dt, max balance residual, probe (second moment of
            the initial sector about the initial center at the final time) and observed orders.
        """
        if levels < 3:
            raise ConfigError("A refinement study needs at least 3 levels", [f"levels: got {levels}"])
        rows = []
        for level in range(levels):
            factor = 2**level
            refined = config.model_copy(deep=True)
            refined.grid.h = config.grid.h / factor
            refined.evolution.dt = config.evolution.dt / factor
            refined.evolution.steps = config.evolution.steps * factor
            for entry in refined.sectors:
                if entry.spacing is not None:
                    entry.spacing = [s / factor for s in entry.spacing]

            msg.divider(f"Level {level}: h = {refined.grid.h:.6g}, dt = {refined.evolution.dt:.6g}")
            dh = self.build(refined)
            state = self.initial_state(refined, dh)
            reports, final = self.simulate(refined, dh, state)
            rows.append(
                {
                    "level": level,
                    "h": refined.grid.h,
                    "dt": refined.evolution.dt,
                    "max_residual": max_balance_residual(reports),
                    "probe": self.probe(refined, dh, final),
                }
            )

        for i, row in enumerate(rows):
            row["residual_order"] = np.nan
            row["probe_order"] = np.nan
            if i >= 1:
                row["residual_order"] = _observed_order(rows[i - 1]["max_residual"], row["max_residual"])
            if i >= 2:
                row["probe_order"] = _observed_order(
                    abs(rows[i - 1]["probe"] - rows[i - 2]["probe"]),
                    abs(row["probe"] - rows[i - 1]["probe"]),
                )
        return rows

    def probe(self, config: RunConfig, dh: DiscreteHamiltonian, state: MultiSectorState) -> float:
        sector = config.initial.sector
        if sector is None:
            sector = self.scenario_manager.selected().source_sector(config)
        block = dh.sector_slices[sector]
        grid = dh.model.grid(sector)
        coords = np.repeat(dh.coordinates(sector), grid.fiber_dim, axis=0)
        center = np.zeros(grid.dim)
        if len(config.initial.center) == grid.dim:
            center = np.asarray(config.initial.center)
        distance = np.sum((coords - center) ** 2, axis=1)
        density = dh.W[block] * np.abs(state.amplitudes[block]) ** 2
        return float(np.sum(density * distance))

    def refine(self, config: RunConfig, levels: int, out: Optional[str] = None) -> int:
        try:
            rows = self.refine_study(config, levels)
        except IBCError as error:
            report_error(error)
            return exit_code(error)
        columns = ["level", "h", "dt", "max_residual", "residual_order", "probe", "probe_order"]
        msg.table(
            [tuple(f"{row[c]:.6g}" for c in columns) for row in rows],
            header=tuple(columns),
            divider=True,
        )
        directory = output_directory(config, out)
        write_csv(directory / "refine.csv", columns, [[row[c] for c in columns] for row in rows])
        return EXIT_OK

    def dump(self, config: RunConfig, out: Optional[str] = None) -> int:
        try:
            dh = self.build(config)
        except IBCError as error:
            report_error(error)
            return exit_code(error)
        path = output_directory(config, out) / "matrix.txt"
        dump_matrix(dh, str(path))
        msg.good(f"Wrote {dh.H.nnz} entries of the {dh.size}x{dh.size} matrix to {path}")
        return EXIT_OK

    def get_scenarios(self) -> dict:
        scenarios = self.scenario_manager.get_scenarios()
        return {
            "components": {name: scenarios[name].get_meta() for name in scenarios},
            "selected": self.scenario_manager.selected_scenario,
        }


def _observed_order(coarse: float, fine: float) -> float:
    if coarse > 0 and fine > 0:
        return float(np.log2(coarse / fine))
    return np.nan
