"""
Command-line group: global options, command registration and error handling.
"""
import logging

import click

import config
from commands.analyze import analyze_command
from commands.simulate import simulate_command
from commands.sweep import sweep_command
from commands.table import optimize_command, table_command, throughput_command
from splitting.exceptions import InvalidArgumentError, SelectionError
from utils.logger import setup_logger

logger = logging.getLogger(__name__)

# Parameter names used by the library, mapped to the flag that sets them
FLAG_NAMES = {
    "p_e": "--pe",
    "Q": "--q",
    "Q_max": "--qmax",
    "n": "--n",
    "trials": "--trials",
    "seed": "--seed",
    "tol": "--tol",
    "k_max": "--tol",
    "pmf": "--pmf",
    "model": "--model",
    "bracket": "--bracket",
    "xtol": "--xtol",
    "k0": "--bounds",
    "pe_step": "--pe-step",
    "pe_to": "--pe-to",
    "param_grid": "--pe-from/--pe-to",
}


class SelectionGroup(click.Group):
    """Click group with one error handler for every subcommand."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except InvalidArgumentError as e:
            flag = FLAG_NAMES.get(e.param, e.param)
            logger.debug(f"Invalid argument {e.param}: {e}")
            raise click.BadParameter(str(e), param_hint=f"'{flag}'")
        except SelectionError as e:
            logger.error(f"Command failed: {e}")
            raise click.ClickException(str(e))
        except Exception as e:
            logger.error(f"Command error: {e}", exc_info=True)
            raise click.ClickException(f"An error occurred: {e}")


@click.group(cls=SelectionGroup)
@click.option("--log-level", default=config.LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Console and file log level")
@click.option("--log-file", default=config.LOG_FILE, help="Also log to this rotating file")
def cli(log_level, log_file):
    """
    Distributed best-node selection: exact analysis, optimization and simulation.

    Examples:

        python main.py analyze --pe 1.088 --q 1

        python main.py table --qmax 6

        python main.py simulate --n 20 --q 2 --pe 1.221 --trials 100000 --seed 7

        python main.py sweep --q 1 --n 10 --bounds 2.0
    """
    setup_logger(log_level, log_file)


def register_commands(group: click.Group):
    """Attach every subcommand to the group"""
    for command in (
        analyze_command,
        table_command,
        optimize_command,
        sweep_command,
        simulate_command,
        throughput_command,
    ):
        group.add_command(command)
    logger.debug("All commands registered")


register_commands(cli)
