"""
sweep: analytic and simulated average slots over a grid of contention loads.
"""
import logging

import click

import config
from commands.common import control, output_options, tol_option, write
from splitting import montecarlo

logger = logging.getLogger(__name__)


class NodeCount(click.ParamType):
    """A node count, or "inf" for the asymptotic (analytic-only) rows."""
    name = "count"

    def convert(self, value, param, ctx):
        if value is None or isinstance(value, int):
            return value
        if str(value).strip().lower() in ("inf", "infinity"):
            return None
        try:
            return int(value)
        except ValueError:
            self.fail(f"expected a node count or 'inf', got {value!r}", param, ctx)


def _sweep_record(row: montecarlo.SweepRow) -> dict:
    record = {
        "pe": row.point.p_e,
        "n": row.point.n,
        "q": row.point.Q,
        "analytic": row.analytic,
        "bound_upper": row.bound_upper,
        "lower_eq2": row.lower_eq2,
        "lower_eq3": row.lower_eq3,
    }
    if row.stats is not None:
        record["simulated"] = row.stats.mean_slots
        record["ci95"] = row.stats.ci95_half_width
    return record


@click.command(name="sweep")
@click.option("--pe-from", "pe_from", type=float, default=0.6, show_default=True, help="First p_e")
@click.option("--pe-to", "pe_to", type=float, default=2.0, show_default=True, help="Last p_e")
@click.option("--pe-step", "pe_step", type=float, default=0.1, show_default=True, help="Step in p_e")
@click.option("--q", "Q", type=int, default=1, show_default=True, help="Number of nodes to select")
@click.option("--n", "n_list", type=NodeCount(), multiple=True,
              help="Node counts to simulate (repeatable); 'inf' adds the asymptotic rows, omit for those only")
@click.option("--trials", type=int, default=config.DEFAULT_TRIALS, show_default=True, help="Runs per point")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True, help="Base seed")
@click.option("--bounds", "k0", type=float, default=None, metavar="K0",
              help="Add the upper bound at tangent point K0 and the four-term lower bounds (Q = 1)")
@click.option("--workers", type=int, default=config.MC_WORKERS, show_default=True, help="Simulation processes")
@tol_option
@output_options
def sweep_command(pe_from, pe_to, pe_step, Q, n_list, trials, seed, k0, workers, tol, fmt, out):
    """One row per (p_e, n), ready to plot against p_e."""
    loads = montecarlo.pe_grid(pe_from, pe_to, pe_step)
    points = montecarlo.grid_points(loads, Q, list(n_list) or [None])
    logger.info(f"Sweeping {len(points)} points")
    rows = montecarlo.sweep(points, trials, seed, k0=k0, ctl=control(tol), workers=workers)
    write("sweep", [_sweep_record(row) for row in rows], fmt, out)
