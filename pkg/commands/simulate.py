"""
simulate: Monte Carlo estimate of the average slots, or one traced run.
"""
import logging

import click

import config
from commands.common import output_options, write
from splitting import montecarlo
from splitting.metrics import (
    MODEL_REGISTRY,
    get_model,
    parse_pmf,
    sample_expanded,
    sample_metrics,
    sample_normalized,
)
from splitting.exceptions import InvalidArgumentError
from splitting.protocol import run_qselect, run_single_metrics

logger = logging.getLogger(__name__)


def _trace(n, Q, pe, seed, pmf, model_name):
    """Run one instance drawn from the seed's first block and collect its transcript."""
    rng = montecarlo.block_rng(seed, 0)
    transcript = []
    if model_name is not None:
        if Q != 1:
            raise InvalidArgumentError("model", "raw-metric traces run the single-node machine; use --q 1")
        if pmf is not None:
            raise InvalidArgumentError("model", "--model and --pmf are mutually exclusive")
        model = get_model(model_name)
        result = run_single_metrics(sample_metrics(n, model, rng), model, pe, transcript)
        logger.info(f"Node {result.winner} selected after {result.slots} slots")
    else:
        if pmf is None:
            y = sample_normalized(n, rng)
        else:
            _, y = sample_expanded(n, pmf, rng)
        result = run_qselect(y, pe, Q, transcript)
        logger.info(f"Nodes {list(result.selected)} selected after {result.slots} slots")
    return [record._asdict() for record in transcript]


@click.command(name="simulate")
@click.option("--n", type=int, required=True, help="Number of nodes")
@click.option("--q", "Q", type=int, default=1, show_default=True, help="Number of nodes to select")
@click.option("--pe", type=float, required=True, help="Contention load p_e")
@click.option("--trials", type=int, default=config.DEFAULT_TRIALS, show_default=True, help="Number of runs")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True, help="Random seed")
@click.option("--pmf", "pmf_text", default=None, metavar="P1,P2,...",
              help="Discrete metric levels with these probabilities (Proportional Expansion)")
@click.option("--trace", is_flag=True, help="Run one instance and print its slot-by-slot transcript")
@click.option("--model", "model_name", type=click.Choice(sorted(MODEL_REGISTRY)), default=None,
              help="With --trace: draw raw metrics from this model and run the metric-domain machine")
@click.option("--workers", type=int, default=config.MC_WORKERS, show_default=True, help="Simulation processes")
@output_options
def simulate_command(n, Q, pe, trials, seed, pmf_text, trace, model_name, workers, fmt, out):
    """Estimate the average slots to select the best Q of n nodes."""
    pmf = parse_pmf(pmf_text) if pmf_text else None
    if trace:
        write("trace", _trace(n, Q, pe, seed, pmf, model_name), fmt, out)
        return
    if model_name is not None:
        raise InvalidArgumentError("model", "only used together with --trace")

    if pmf is None:
        stats = montecarlo.estimate(n, Q, pe, trials, seed, workers)
    else:
        stats = montecarlo.estimate_discrete(pmf, n, Q, pe, trials, seed, workers)
    record = {
        "n": n,
        "q": Q,
        "pe": pe,
        "mean": stats.mean_slots,
        "stderr": stats.std_error,
        "ci95": stats.ci95_half_width,
        "trials": stats.trials,
        "seed": stats.seed,
    }
    write("simulate", [record], fmt, out)
