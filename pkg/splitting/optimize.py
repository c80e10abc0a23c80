"""
Optimal contention load per Q and the optimum table.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Tuple

import numpy as np
from scipy import optimize

import config
from splitting import analysis
from splitting.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

# Coarse grid used to find a bracketing triple before golden-section refinement
COARSE_INTERVALS = 16

# Contention load of the FCFS-limit comparison
FCFS_LOAD = 1.266


@dataclass(frozen=True)
class OptimumRow:
    """
    Optimum of m^Q over the contention load.

    improvement is 1 - m_star / (Q m*_1), the saving over running the
    single-node selection Q times at its own optimum; it is 0 for Q = 1.
    """
    Q: int
    p_e_star: float
    m_star: float
    improvement: float


@dataclass(frozen=True)
class TrendRow:
    Q: int
    p_e: float
    m: float
    throughput: float


def _check_count(value: int, param: str):
    if int(value) != value or value < 1:
        raise InvalidArgumentError(param, f"must be a positive integer, got {value}")


def _check_bracket(bracket: Tuple[float, float], xtol: float) -> Tuple[float, float]:
    try:
        low, high = (float(v) for v in bracket)
    except (TypeError, ValueError):
        raise InvalidArgumentError("bracket", f"expected (low, high), got {bracket!r}")
    if not (math.isfinite(low) and math.isfinite(high) and 0 < low < high):
        raise InvalidArgumentError("bracket", f"requires 0 < low < high, got ({low}, {high})")
    if not xtol > 0:
        raise InvalidArgumentError("xtol", f"must be positive, got {xtol}")
    return low, high


def _is_unimodal(values: np.ndarray) -> bool:
    """True when the sequence falls and then rises (either part may be empty)."""
    steps = np.sign(np.diff(values))
    turn = int(np.argmax(steps > 0)) if np.any(steps > 0) else steps.size
    return bool(np.all(steps[:turn] <= 0) and np.all(steps[turn:] >= 0))


def _grid_scan(objective, low: float, high: float, xtol: float) -> Tuple[float, float]:
    grid = np.arange(low, high + xtol / 2, xtol)
    values = np.array([objective(p) for p in grid])
    j = int(np.argmin(values))
    return float(grid[j]), float(values[j])


@lru_cache(maxsize=256)
def _locate(Q: int, low: float, high: float, xtol: float, tol: float, k_max: int) -> Tuple[float, float]:
    ctl = analysis.SeriesControl(tol=tol, k_max=k_max)

    def objective(p_e: float) -> float:
        return analysis.avg_slots_q_recursive(Q, float(p_e), ctl)

    grid = np.linspace(low, high, COARSE_INTERVALS + 1)
    values = np.array([objective(p) for p in grid])
    j = int(np.argmin(values))

    if 0 < j < grid.size - 1 and _is_unimodal(values):
        # scipy's golden stops once the bracket width falls below tol * (|x1| + |x2|)
        try:
            result = optimize.minimize_scalar(
                objective,
                bracket=(grid[j - 1], grid[j], grid[j + 1]),
                method="golden",
                tol=xtol / (2.0 * grid[j]),
            )
            return float(result.x), float(result.fun)
        except (ValueError, RuntimeError) as e:
            logger.warning(f"Golden-section search failed for Q={Q}: {e}")

    logger.warning(f"m^{Q}(p_e) is not unimodal with an interior minimum on ({low}, {high}); "
                   f"scanning with step {xtol}")
    return _grid_scan(objective, low, high, xtol)


def minimize_load(Q: int, bracket: Tuple[float, float] = config.DEFAULT_BRACKET, xtol: float = config.DEFAULT_XTOL,
                  ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> Tuple[float, float]:
    """(p_e*, m*) for one Q without the improvement column."""
    _check_count(Q, "Q")
    low, high = _check_bracket(bracket, xtol)
    return _locate(int(Q), low, high, float(xtol), ctl.tol, ctl.k_max)


def optimal_pe(Q: int, bracket: Tuple[float, float] = config.DEFAULT_BRACKET, xtol: float = config.DEFAULT_XTOL,
               ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> OptimumRow:
    """
    Contention load minimizing the average slots to select the best Q nodes.

    Args:
        Q: Number of nodes to select
        bracket: Search interval (low, high), 0 < low < high
        xtol: Absolute tolerance on p_e*
        ctl: Series truncation settings

    Returns:
        OptimumRow; the improvement is measured against Q times the Q = 1
        optimum over the same bracket

    Raises:
        InvalidArgumentError: If the bracket is degenerate or Q < 1
    """
    p_star, m_star = minimize_load(Q, bracket, xtol, ctl)
    improvement = 0.0
    if Q > 1:
        improvement = 1.0 - m_star / (Q * minimize_load(1, bracket, xtol, ctl)[1])
    logger.info(f"Optimum for Q={Q}: p_e*={p_star:.4f}, m*={m_star:.4f}")
    return OptimumRow(Q=int(Q), p_e_star=p_star, m_star=m_star, improvement=improvement)


def table1(Q_max: int, bracket: Tuple[float, float] = config.DEFAULT_BRACKET, xtol: float = config.DEFAULT_XTOL,
           ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> List[OptimumRow]:
    """Optimum rows for Q = 1..Q_max."""
    _check_count(Q_max, "Q_max")
    return [optimal_pe(Q, bracket, xtol, ctl) for Q in range(1, int(Q_max) + 1)]


def run_twice_baseline(Q: int, bracket: Tuple[float, float] = config.DEFAULT_BRACKET,
                       xtol: float = config.DEFAULT_XTOL) -> float:
    """Slots spent selecting Q nodes one at a time, each at the single-node optimum."""
    _check_count(Q, "Q")
    return Q * minimize_load(1, bracket, xtol)[1]


def greedy_gap(Q: int, bracket: Tuple[float, float] = config.DEFAULT_BRACKET, xtol: float = config.DEFAULT_XTOL,
               ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> float:
    """
    Relative penalty of the greedy setting p_e = 1.

    Returns:
        (m^Q(1) - m^Q(p_e*)) / m^Q(p_e*), clamped at 0
    """
    _, m_star = minimize_load(Q, bracket, xtol, ctl)
    greedy = analysis.avg_slots_q_recursive(Q, 1.0, ctl)
    return max(0.0, (greedy - m_star) / m_star)


def fcfs_trend(Q_values: Iterable[int], p_e: float = FCFS_LOAD,
               ctl: analysis.SeriesControl = analysis.DEFAULT_CONTROL) -> List[TrendRow]:
    """Throughput Q / m^Q(p_e) for each Q, approaching the FCFS limit 0.487 as Q grows."""
    rows = []
    for Q in Q_values:
        m = analysis.avg_slots_q_recursive(Q, p_e, ctl)
        rows.append(TrendRow(Q=int(Q), p_e=float(p_e), m=m, throughput=Q / m))
    return rows
