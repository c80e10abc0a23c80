"""
table and optimize: optimal contention loads.
"""
import logging

import click

import config
from commands.common import control, output_options, tol_option, write
from splitting import optimize

logger = logging.getLogger(__name__)


def bracket_option(func):
    return click.option("--bracket", type=(float, float), default=config.DEFAULT_BRACKET, show_default=True,
                        metavar="LOW HIGH", help="Search interval for p_e")(func)


def xtol_option(func):
    return click.option("--xtol", type=float, default=config.DEFAULT_XTOL, show_default=True,
                        help="Absolute tolerance on p_e*")(func)


def _optimum_record(row: optimize.OptimumRow) -> dict:
    return {
        "q": row.Q,
        "pe_star": row.p_e_star,
        "m_star": row.m_star,
        "improvement_pct": 100.0 * row.improvement,
    }


@click.command(name="table")
@click.option("--qmax", "q_max", type=int, default=6, show_default=True, help="Largest Q")
@bracket_option
@xtol_option
@tol_option
@output_options
def table_command(q_max, bracket, xtol, tol, fmt, out):
    """Optimal p_e, the minimum average slots and the improvement for Q = 1..qmax."""
    rows = optimize.table1(q_max, bracket, xtol, control(tol))
    write("table", [_optimum_record(row) for row in rows], fmt, out)


@click.command(name="optimize")
@click.option("--q", "Q", type=int, default=1, show_default=True, help="Number of nodes to select")
@bracket_option
@xtol_option
@tol_option
@output_options
def optimize_command(Q, bracket, xtol, tol, fmt, out):
    """Optimal p_e for one Q, with the relative penalty of the greedy choice p_e = 1."""
    ctl = control(tol)
    row = optimize.optimal_pe(Q, bracket, xtol, ctl)
    record = _optimum_record(row)
    record["greedy_gap_pct"] = 100.0 * optimize.greedy_gap(Q, bracket, xtol, ctl)
    write("optimize", [record], fmt, out)


@click.command(name="throughput")
@click.option("--q", "Q_values", type=int, multiple=True, default=(1, 2, 5, 10, 20, 50), show_default=True,
              help="Values of Q (repeatable)")
@click.option("--pe", type=float, default=optimize.FCFS_LOAD, show_default=True, help="Contention load p_e")
@tol_option
@output_options
def throughput_command(Q_values, pe, tol, fmt, out):
    """Selected nodes per slot, Q / m^Q(p_e), approaching the FCFS limit as Q grows."""
    rows = optimize.fcfs_trend(Q_values, pe, control(tol))
    records = [{"q": row.Q, "pe": row.p_e, "m": row.m, "throughput": row.throughput} for row in rows]
    write("throughput", records, fmt, out)
