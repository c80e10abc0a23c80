"""
Monte Carlo estimation of the average number of selection slots.

Trials are grouped in fixed-size blocks. Block b draws from a Philox stream
keyed by the seed with its counter starting at b * 2^128, so the metrics of a
trial depend only on (seed, trial index, block size). Blocks may run in a
process pool; results are gathered in block order and the slot counts are
aggregated with exact integer sums.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

import config
from splitting import analysis
from splitting.exceptions import InvalidArgumentError
from splitting.metrics import (
    DiscreteMetricModel,
    sample_expanded,
    sample_normalized,
)
from splitting.protocol import selection_slots

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class SummaryStats:
    """Sample statistics of the per-trial slot counts."""
    mean_slots: float
    std_error: float
    ci95_half_width: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SweepPoint:
    """One grid point; n = None stands for the asymptotic (n -> infinity) case."""
    n: Optional[int]
    Q: int
    p_e: float


@dataclass(frozen=True)
class SweepRow:
    point: SweepPoint
    stats: Optional[SummaryStats]
    analytic: float
    bound_upper: Optional[float] = None
    lower_eq2: Optional[float] = None
    lower_eq3: Optional[float] = None


def _check_estimate(n: int, Q: int, p_e: float, trials: int, seed: int):
    if n < 1:
        raise InvalidArgumentError("n", f"must be at least 1, got {n}")
    if not 1 <= Q <= n:
        raise InvalidArgumentError("Q", f"must lie in 1..n={n}, got {Q}")
    if not (math.isfinite(p_e) and p_e > 0):
        raise InvalidArgumentError("p_e", f"must be positive, got {p_e}")
    if trials < 1:
        raise InvalidArgumentError("trials", f"must be at least 1, got {trials}")
    if not 0 <= seed < 2 ** 64:
        raise InvalidArgumentError("seed", f"must be a 64-bit unsigned integer, got {seed}")


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based random stream of one trial block."""
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 128))


def _block_slots(task: Tuple) -> np.ndarray:
    n, Q, p_e, seed, block, size, pmf = task
    rng = block_rng(seed, block)
    if pmf is None:
        y = sample_normalized(n, rng, trials=size)
    else:
        _, y = sample_expanded(n, DiscreteMetricModel(pmf), rng, trials=size)
    y.sort(axis=1)

    slots = np.empty(size, dtype=np.int64)
    for t, row in enumerate(y.tolist()):
        slots[t] = selection_slots(row, p_e, Q)
    return slots


def trial_slots(n: int, Q: int, p_e: float, trials: int, seed: int,
                pmf: Optional[DiscreteMetricModel] = None,
                workers: int = None, block_size: int = None) -> np.ndarray:
    """
    Slot counts of independent selection runs.

    Args:
        n: Number of nodes
        Q: Number of nodes to select
        p_e: Contention load
        trials: Number of runs
        seed: 64-bit seed
        pmf: Discrete metric model; metrics are continuous when None
        workers: Process count (config.MC_WORKERS by default)
        block_size: Trials per random-stream block (config.MC_BLOCK_SIZE by default)

    Returns:
        Integer array of length trials, in trial order
    """
    _check_estimate(n, Q, p_e, trials, seed)
    workers = workers or config.MC_WORKERS
    block_size = block_size or config.MC_BLOCK_SIZE
    levels = None if pmf is None else tuple(pmf.pmf)
    tasks = [
        (n, Q, float(p_e), seed, block, min(block_size, trials - start), levels)
        for block, start in enumerate(range(0, trials, block_size))
    ]

    if workers > 1 and len(tasks) > 1:
        logger.debug(f"Dispatching {len(tasks)} blocks to {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_slots, tasks))
    else:
        parts = [_block_slots(task) for task in tasks]
    return np.concatenate(parts)


def summarize(slots: np.ndarray, seed: int) -> SummaryStats:
    """
    Mean, standard error and 95% normal-approximation half-width.

    Sums are taken over Python integers, so the result does not depend on the
    order the trials were produced in.
    """
    trials = int(slots.size)
    if trials < 1:
        raise InvalidArgumentError("trials", "no slot counts to summarize")
    total = int(np.sum(slots, dtype=np.int64))
    squares = int(np.sum(slots.astype(np.int64) ** 2))
    mean = total / trials
    if trials > 1:
        variance = (squares * trials - total * total) / (trials * (trials - 1))
        std_error = math.sqrt(variance / trials)
    else:
        std_error = 0.0
    return SummaryStats(
        mean_slots=mean,
        std_error=std_error,
        ci95_half_width=Z_95 * std_error,
        trials=trials,
        seed=seed,
    )


def estimate(n: int, Q: int, p_e: float, trials: int = None, seed: int = None,
             workers: int = None) -> SummaryStats:
    """
    Estimate the average slots to select the best Q of n nodes.

    Args:
        n: Number of nodes
        Q: Number of nodes to select, Q <= n
        p_e: Contention load
        trials: Number of runs (config.DEFAULT_TRIALS by default)
        seed: 64-bit seed (config.DEFAULT_SEED by default)
        workers: Process count

    Returns:
        SummaryStats of the slot counts

    Raises:
        InvalidArgumentError: If Q > n or a count is out of range
    """
    trials = config.DEFAULT_TRIALS if trials is None else trials
    seed = config.DEFAULT_SEED if seed is None else seed
    stats = summarize(trial_slots(n, Q, p_e, trials, seed, workers=workers), seed)
    logger.info(f"Estimated n={n} Q={Q} p_e={p_e}: {stats.mean_slots:.6g} +/- {stats.ci95_half_width:.3g} "
                f"({trials} trials)")
    return stats


def estimate_discrete(pmf: DiscreteMetricModel, n: int, Q: int, p_e: float, trials: int = None,
                      seed: int = None, workers: int = None) -> SummaryStats:
    """
    Estimate the average slots when metrics are discrete.

    Levels are drawn from the pmf, made continuous by Proportional Expansion
    and normalized before each run.
    """
    trials = config.DEFAULT_TRIALS if trials is None else trials
    seed = config.DEFAULT_SEED if seed is None else seed
    stats = summarize(trial_slots(n, Q, p_e, trials, seed, pmf=pmf, workers=workers), seed)
    logger.info(f"Estimated pmf={pmf.pmf} n={n} Q={Q} p_e={p_e}: {stats.mean_slots:.6g} "
                f"+/- {stats.ci95_half_width:.3g} ({trials} trials)")
    return stats


def point_seed(seed: int, index: int) -> int:
    """Independent seed of the index-th grid point."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def analytic_value(point: SweepPoint, ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> float:
    """Finite-n value for a single node with finite n, the asymptotic value otherwise."""
    if point.Q == 1 and point.n is not None:
        return analysis.avg_slots_finite(point.n, point.p_e)
    return analysis.avg_slots_q_recursive(point.Q, point.p_e, ctl)


def sweep(param_grid: Iterable, trials: int = None, seed: int = None, k0: float = None,
          ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL, workers: int = None) -> List[SweepRow]:
    """
    Estimate and evaluate every point of a parameter grid.

    Args:
        param_grid: (n, Q, p_e) triples or SweepPoints; n = None skips simulation
        trials: Runs per simulated point
        seed: Base seed; each point gets its own derived seed
        k0: When given, single-node rows also carry the upper bound and the
            four-term truncations of both asymptotic series
        ctl: Series truncation settings
        workers: Process count

    Returns:
        One SweepRow per grid point, in grid order
    """
    points = [p if isinstance(p, SweepPoint) else SweepPoint(*p) for p in param_grid]
    if not points:
        raise InvalidArgumentError("param_grid", "must contain at least one point")
    seed = config.DEFAULT_SEED if seed is None else seed

    rows = []
    for index, point in enumerate(points):
        stats = None
        if point.n is not None:
            stats = estimate(point.n, point.Q, point.p_e, trials, point_seed(seed, index), workers)
        row = SweepRow(point=point, stats=stats, analytic=analytic_value(point, ctl))
        if k0 is not None and point.Q == 1:
            row = SweepRow(
                point=point,
                stats=stats,
                analytic=row.analytic,
                bound_upper=analysis.upper_bound(point.p_e, k0),
                lower_eq2=analysis.lower_bound_recursive(point.p_e),
                lower_eq3=analysis.lower_bound_markov(point.p_e),
            )
        rows.append(row)
    return rows


def pe_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive grid start, start + step, ..., stop (rounded to suppress drift)."""
    if not step > 0:
        raise InvalidArgumentError("pe_step", f"must be positive, got {step}")
    if stop < start:
        raise InvalidArgumentError("pe_to", f"must not be below pe_from={start}, got {stop}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def grid_points(loads: Sequence[float], Q: int, n_values: Sequence[Optional[int]]) -> List[SweepPoint]:
    """Cartesian product of loads and node counts for one Q."""
    return [SweepPoint(n, Q, p_e) for p_e in loads for n in n_values]
