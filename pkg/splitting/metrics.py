"""
Metric models, the normalized (uniform) transform and Proportional Expansion.

Every node holds a suitability metric u_i. For continuous metrics with CCDF
F_c, the transform y_i = n * F_c(u_i) makes the metrics i.i.d. uniform on
(0, n) whatever F_c is, and the best metric becomes the smallest y. Discrete
metrics are first made continuous by Proportional Expansion: a node at level j
draws a new metric uniformly inside a bin whose length is the level's
probability mass.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from splitting.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

PMF_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ContinuousMetricModel:
    """
    A continuous metric distribution given by its CCDF and inverse CCDF.

    Both maps accept scalars or numpy arrays. ccdf(+inf) must be 0 and
    inverse_ccdf(1) is the infimum of the support.
    """
    name: str
    ccdf: Callable
    inverse_ccdf: Callable

    @property
    def infimum(self) -> float:
        return float(self.inverse_ccdf(1.0))

    def split(self, a: float, b: float) -> float:
        """Threshold halving the probability mass between metrics a and b."""
        return float(self.inverse_ccdf((self.ccdf(a) + self.ccdf(b)) / 2.0))


def uniform_model() -> ContinuousMetricModel:
    """Metrics uniform on (0, 1): F_c(u) = 1 - u."""
    return ContinuousMetricModel(
        name="uniform",
        ccdf=lambda u: np.clip(1.0 - np.asarray(u, dtype=float), 0.0, 1.0),
        inverse_ccdf=lambda p: np.clip(1.0 - np.asarray(p, dtype=float), 0.0, 1.0),
    )


def exponential_model(rate: float = 1.0) -> ContinuousMetricModel:
    """Exponential-tail metrics: F_c(u) = exp(-rate * u) for u >= 0."""
    if rate <= 0:
        raise InvalidArgumentError("rate", f"must be positive, got {rate}")

    def ccdf(u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return np.exp(-rate * u)

    def inverse_ccdf(p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return -np.log(p) / rate

    return ContinuousMetricModel(name="exponential", ccdf=ccdf, inverse_ccdf=inverse_ccdf)


# Built-in continuous models, selectable by name from the CLI
MODEL_REGISTRY: Dict[str, Callable[[], ContinuousMetricModel]] = {
    "uniform": uniform_model,
    "exponential": exponential_model,
}


def get_model(name: str) -> ContinuousMetricModel:
    """
    Look up a built-in continuous metric model.

    Args:
        name: Registered model name

    Returns:
        A fresh ContinuousMetricModel

    Raises:
        InvalidArgumentError: If the name is not registered
    """
    factory = MODEL_REGISTRY.get(name.lower())
    if factory is None:
        choices = ", ".join(sorted(MODEL_REGISTRY))
        raise InvalidArgumentError("model", f"unknown model '{name}' (choose from {choices})")
    return factory()


@dataclass(frozen=True)
class DiscreteMetricModel:
    """
    A metric taking levels 1..omega with probabilities rho_1..rho_omega.

    The bin edges 0 = c_0 < c_1 < ... < c_omega = 1 (cumulative sums) are
    computed once at construction.
    """
    pmf: Tuple[float, ...]
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pmf = tuple(float(p) for p in self.pmf)
        if not pmf:
            raise InvalidArgumentError("pmf", "must contain at least one probability")
        if any(p <= 0 for p in pmf):
            raise InvalidArgumentError("pmf", f"all probabilities must be positive, got {pmf}")
        total = sum(pmf)
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise InvalidArgumentError("pmf", f"probabilities must sum to 1, got {total!r}")
        edges = np.concatenate(([0.0], np.cumsum(pmf)))
        edges[-1] = 1.0
        edges.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "edges", edges)

    @property
    def omega(self) -> int:
        return len(self.pmf)


def parse_pmf(text: str) -> DiscreteMetricModel:
    """Parse a comma-separated probability list such as "0.2,0.5,0.3"."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidArgumentError("pmf", f"expected comma-separated probabilities, got '{text}'")
    return DiscreteMetricModel(tuple(values))


@dataclass(frozen=True)
class NormalizedMetrics:
    """
    Normalized metrics y_i = n * F_c(u_i), one per node.

    The node with the smallest y holds the best metric.
    """
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise InvalidArgumentError("y", "must be a non-empty one-dimensional sequence")
        n = y.size
        # No contention interval contains 0 or n.
        if np.any(y <= 0) or np.any(y >= n):
            raise InvalidArgumentError("y", f"values must lie in the open interval (0, {n})")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.y.size)


def _check_count(n: int):
    if n < 1:
        raise InvalidArgumentError("n", f"must be at least 1, got {n}")


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1); exact zeros are redrawn."""
    draws = rng.random(size)
    zeros = draws == 0.0
    while np.any(zeros):
        draws[zeros] = rng.random(int(np.count_nonzero(zeros)))
        zeros = draws == 0.0
    return draws


def _distinct_rows(values: np.ndarray) -> np.ndarray:
    """Boolean mask of rows whose entries are pairwise distinct."""
    ordered = np.sort(values, axis=-1)
    return np.all(np.diff(ordered, axis=-1) > 0, axis=-1)


def sample_normalized(n: int, rng: np.random.Generator, trials: int = None) -> np.ndarray:
    """
    Draw normalized metrics directly in the uniform domain.

    Args:
        n: Node count
        rng: Random stream
        trials: If given, draw a (trials, n) matrix of independent instances

    Returns:
        Values on (0, n) with no ties inside an instance
    """
    _check_count(n)
    shape = (n,) if trials is None else (trials, n)
    y = n * _open_uniform(rng, shape)
    rows = y.reshape(-1, n)
    tied = ~_distinct_rows(rows)
    while np.any(tied):
        rows[tied] = n * _open_uniform(rng, (int(np.count_nonzero(tied)), n))
        tied = ~_distinct_rows(rows)
    return rows.reshape(shape)


def normalize(u, model: ContinuousMetricModel) -> NormalizedMetrics:
    """Map raw metrics to the normalized domain, y_i = n * F_c(u_i)."""
    u = np.asarray(u, dtype=float)
    return NormalizedMetrics(u.size * np.asarray(model.ccdf(u), dtype=float))


def sample_metrics(n: int, model: ContinuousMetricModel, rng: np.random.Generator) -> np.ndarray:
    """Draw n raw metrics from a continuous model by inverse-CCDF sampling."""
    _check_count(n)
    return np.asarray(model.inverse_ccdf(_open_uniform(rng, n)), dtype=float)


def sample_continuous(n: int, model: ContinuousMetricModel, rng: np.random.Generator) -> NormalizedMetrics:
    """
    Draw n i.i.d. metrics from a continuous model and normalize them.

    The result is uniform on (0, n) whatever the CCDF; the simulation hot
    loop uses sample_normalized instead, which skips the round trip.

    Args:
        n: Node count
        model: Continuous metric model
        rng: Random stream

    Returns:
        NormalizedMetrics of length n
    """
    _check_count(n)
    while True:
        metrics = normalize(sample_metrics(n, model, rng), model)
        if _distinct_rows(metrics.y):
            return metrics
        logger.debug("Tied normalized metrics drawn, resampling")


def sample_levels(n: int, model: DiscreteMetricModel, rng: np.random.Generator, trials: int = None) -> np.ndarray:
    """Draw discrete levels 1..omega i.i.d. from the pmf."""
    _check_count(n)
    shape = (n,) if trials is None else (trials, n)
    return np.searchsorted(model.edges[1:-1], rng.random(shape), side="right") + 1


def expand_levels(levels, model: DiscreteMetricModel, rng: np.random.Generator) -> np.ndarray:
    """
    Proportional Expansion of an array of levels.

    Level j maps to a uniform draw on the open bin (c_{j-1}, c_j). Draws that
    land exactly on a bin edge are redrawn.
    """
    levels = np.asarray(levels)
    if levels.size and (levels.min() < 1 or levels.max() > model.omega):
        raise InvalidArgumentError("level", f"must lie in 1..{model.omega}")
    low = model.edges[levels - 1]
    high = model.edges[levels]
    nu = low + (high - low) * rng.random(levels.shape)
    on_edge = (nu <= low) | (nu >= high)
    while np.any(on_edge):
        count = int(np.count_nonzero(on_edge))
        nu[on_edge] = low[on_edge] + (high[on_edge] - low[on_edge]) * rng.random(count)
        on_edge = (nu <= low) | (nu >= high)
    return nu


def proportional_expand(level: int, model: DiscreteMetricModel, rng: np.random.Generator) -> float:
    """
    Map one discrete level to a continuous metric in its probability bin.

    Args:
        level: Metric level in 1..omega
        model: Discrete metric model
        rng: Random stream

    Returns:
        A value uniform on (sum_{l<level} rho_l, sum_{l<=level} rho_l)

    Raises:
        InvalidArgumentError: If the level is out of range
    """
    if not 1 <= level <= model.omega:
        raise InvalidArgumentError("level", f"must lie in 1..{model.omega}, got {level}")
    return float(expand_levels(np.array([level]), model, rng)[0])


def normalize_expanded(nu) -> np.ndarray:
    """
    Normalize expanded metrics (uniform on (0, 1), so F_c(v) = 1 - v).

    Works row-wise on a (trials, n) matrix as well as on a single instance.
    """
    nu = np.asarray(nu, dtype=float)
    return nu.shape[-1] * (1.0 - nu)


def sample_expanded(n: int, model: DiscreteMetricModel, rng: np.random.Generator,
                    trials: int = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw discrete levels, expand them and normalize the result.

    Instances whose expanded values contain a tie are redrawn, levels included.

    Returns:
        (levels, y) with matching shapes, (n,) or (trials, n)
    """
    _check_count(n)
    shape = (n,) if trials is None else (trials, n)
    levels = sample_levels(n, model, rng, trials=trials).reshape(-1, n)
    y = normalize_expanded(expand_levels(levels, model, rng))
    tied = ~_distinct_rows(y)
    while np.any(tied):
        count = int(np.count_nonzero(tied))
        levels[tied] = sample_levels(n, model, rng, trials=count)
        y[tied] = normalize_expanded(expand_levels(levels[tied], model, rng))
        tied = ~_distinct_rows(y)
    return levels.reshape(shape), y.reshape(shape)
