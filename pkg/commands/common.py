"""
Options shared by several subcommands.
"""
import click

import config
from splitting.analysis import SeriesControl
from utils.output import FORMATS, emit, render


def output_options(func):
    """--format and --out."""
    func = click.option("--out", type=click.Path(dir_okay=False), default=None,
                        help="Write output to FILE instead of stdout")(func)
    func = click.option("--format", "fmt", type=click.Choice(FORMATS), default="csv", show_default=True,
                        help="Output format")(func)
    return func


def tol_option(func):
    return click.option("--tol", type=float, default=config.SERIES_TOL, show_default=True,
                        help="Series truncation tolerance")(func)


def control(tol: float) -> SeriesControl:
    return SeriesControl(tol=tol)


def write(command: str, records, fmt: str, out: str):
    emit(render(command, records, fmt), out)
