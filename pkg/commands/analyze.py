"""
analyze: exact average slots for one parameter set.
"""
import logging

import click

from commands.common import control, output_options, tol_option, write
from splitting import analysis
from splitting.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)


@click.command(name="analyze")
@click.option("--pe", type=float, required=True, help="Contention load p_e")
@click.option("--q", "Q", type=int, default=1, show_default=True, help="Number of nodes to select")
@click.option("--n", type=int, default=None, help="Number of nodes (omit for n -> infinity)")
@tol_option
@output_options
def analyze_command(pe, Q, n, tol, fmt, out):
    """
    Print the analytic average number of slots.

    With --n the exact finite-n value is reported (single node only); without
    it, the asymptotic value. For Q <= 2 the Markov-chain form and its
    distance from the recursive form are reported as well.
    """
    ctl = control(tol)
    record = {"pe": pe, "n": n, "q": Q}
    if n is not None:
        if Q != 1:
            raise InvalidArgumentError("n", "the finite-n expression covers Q = 1 only; omit --n for Q >= 2")
        record["analytic"] = analysis.avg_slots_finite(n, pe)
    else:
        record["analytic"] = analysis.avg_slots_q(Q, pe, ctl)
        if Q <= 2:
            record["markov"] = analysis.avg_slots_q(Q, pe, ctl, form="markov")
            record["difference"] = abs(record["analytic"] - record["markov"])
    logger.info(f"analyze p_e={pe} Q={Q} n={n}: {record['analytic']:.6g}")
    write("analyze", [record], fmt, out)
