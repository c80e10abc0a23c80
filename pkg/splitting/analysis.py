"""
Exact evaluation of the average number of slots needed to select the best
Q nodes.

Covers the finite-n expression, the two asymptotic forms for a single node
(the recursive series over collision sizes and the Markov-chain series over
slots after the first non-idle slot), the tangent upper bound, and the
Q >= 2 generalizations.

Notation used throughout:
    p_e     contention load, the mean number of nodes per idle-phase slot
    E_k^Q   expected slots to finish selecting Q nodes after k nodes collide
    m^Q     expected slots to select the best Q nodes as n grows without bound
"""
import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import special, stats

import config
from splitting.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

# Below this load the idle term dominates and 1 - e^{-p_e} loses precision
SMALL_LOAD = 1e-6


@dataclass(frozen=True)
class SeriesControl:
    """
    Truncation settings for the infinite series.

    Args:
        tol: Absolute truncation tolerance
        k_max: Hard cap on the number of series terms
    """
    tol: float = config.SERIES_TOL
    k_max: int = config.SERIES_K_MAX

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgumentError("tol", f"must be positive, got {self.tol}")
        if self.k_max < 10:
            raise InvalidArgumentError("k_max", f"must be at least 10, got {self.k_max}")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class CollisionTable:
    """E_k^Q for k = 1..len(values); values[k - 1] holds E_k^Q."""
    Q: int
    p_e: float
    values: np.ndarray

    def __getitem__(self, k: int) -> float:
        return float(self.values[k - 1])


@dataclass(frozen=True)
class ChainProbabilities:
    """
    Success and visit probabilities of the post-first-non-idle Markov chains.

    Tuples are indexed from state 1: position i - 1 holds the value for state i.
    For the single-node chain `success` holds P_i and the primed visits are
    empty. For the two-node chain `success` holds P_{L,i}, `success_right`
    holds P_{R,i}, and `visit_double_prime[0]` (state 1'') is zero.
    """
    p_e: float
    P0: float
    success: Tuple[float, ...]
    visit: Tuple[float, ...]
    success_right: Tuple[float, ...] = ()
    visit_prime: Tuple[float, ...] = ()
    visit_double_prime: Tuple[float, ...] = ()


def _check_load(p_e: float, param: str = "p_e"):
    if not (math.isfinite(p_e) and p_e > 0):
        raise InvalidArgumentError(param, f"contention load must be positive and finite, got {p_e}")


def _check_count(value: int, param: str, minimum: int = 1):
    if int(value) != value or value < minimum:
        raise InvalidArgumentError(param, f"must be an integer >= {minimum}, got {value}")


def _idle_slots(p_e: float) -> float:
    """Expected slots up to and including the first non-idle slot, 1/(1 - e^{-p_e})."""
    return 1.0 / -math.expm1(-p_e)


def idle_phase_length(n: int, p_e: float) -> int:
    """Maximum number of idle-phase slots, q = ceil(n / p_e) - 1."""
    _check_count(n, "n")
    _check_load(p_e)
    return math.ceil(n / p_e) - 1


@lru_cache(maxsize=None)
def _split_weights(k: int) -> np.ndarray:
    """C(k, l) / 2^k for l = 0..k, evaluated in the log domain."""
    weights = stats.binom.pmf(np.arange(k + 1), k, 0.5)
    weights.setflags(write=False)
    return weights


# E[X_k] for the single-node collision resolution, index k (slot 0 unused)
_q1_table = [0.0, 0.0]
_q1_lock = threading.Lock()


def collision_slots_q1(k: int) -> float:
    """
    Expected slots to resolve a collision among k nodes (single best node).

    Follows E[X_1] = 0 and, for k >= 2,
    E[X_k] = (2^-k sum_{l=2}^{k-1} C(k,l) E[X_l] + 1) / (1 - 2^{1-k}).

    Args:
        k: Number of colliding nodes

    Returns:
        E[X_k]

    Raises:
        InvalidArgumentError: If k < 1
    """
    _check_count(k, "k")
    k = int(k)
    if k < len(_q1_table):
        return _q1_table[k]
    with _q1_lock:
        while len(_q1_table) <= k:
            j = len(_q1_table)
            weights = _split_weights(j)
            partial = float(np.dot(weights[2:j], _q1_table[2:j]))
            _q1_table.append((partial + 1.0) / (1.0 - 0.5 ** (j - 1)))
    return _q1_table[k]


@lru_cache(maxsize=4096)
def _collision_values(Q: int, p_e: float, tol: float, k_max: int) -> np.ndarray:
    """E_k^Q for k = 0..k_max (index 0 unused). Depends on p_e only for Q >= 2."""
    values = np.zeros(k_max + 1)
    if Q == 1:
        collision_slots_q1(k_max)
        values[1:] = _q1_table[1:k_max + 1]
        values.setflags(write=False)
        return values

    lower = _collision_values(Q - 1, p_e, tol, k_max)
    values[1] = _avg_slots(Q - 1, p_e, tol, k_max, None)
    values[2] = 3.0 if Q == 2 else _avg_slots(Q - 2, p_e, tol, k_max, None) + 3.0
    for k in range(3, k_max + 1):
        weights = _split_weights(k)
        total = float(np.dot(weights[2:k], values[2:k]))
        # Success in the left half leaves k - 1 nodes, which collide next slot
        total += k * 0.5 ** k * (1.0 + lower[k - 1])
        values[k] = (total + 1.0) / (1.0 - 0.5 ** (k - 1))
    values.setflags(write=False)
    return values


def _truncation_point(terms: np.ndarray, tails: np.ndarray, tol: float) -> Optional[int]:
    """First index where both the term and the certified tail are below tol."""
    below = np.flatnonzero((terms < tol) & (tails < tol))
    return int(below[0]) if below.size else None


@lru_cache(maxsize=4096)
def _avg_slots(Q: int, p_e: float, tol: float, k_max: int, terms: Optional[int]) -> float:
    """Average slots to select Q nodes, summing E_k^Q over the Poisson collision size."""
    if p_e < SMALL_LOAD:
        return Q / -math.expm1(-p_e)

    values = _collision_values(Q, p_e, tol, k_max)
    idle = _idle_slots(p_e)
    k = np.arange(1, k_max + 1)
    series = values[1:] * stats.poisson.pmf(k, p_e) * idle

    if terms is not None:
        return idle + float(np.sum(series[:terms]))

    # E_k^Q <= c k, so the tail beyond K is at most c p_e P(N >= K) / (1 - e^{-p_e})
    envelope = max(1.0, float(np.max(values[1:] / k)))
    tails = envelope * p_e * stats.poisson.sf(k - 1, p_e) * idle
    stop = _truncation_point(series, tails, tol)
    if stop is None:
        logger.warning(f"Series for Q={Q}, p_e={p_e} reached k_max={k_max} before tol={tol}")
        stop = k_max - 1
    logger.debug(f"Series for Q={Q}, p_e={p_e} truncated after {stop + 1} terms")
    return idle + float(np.sum(series[:stop + 1]))


def collision_slots_q(k: int, Q: int, p_e: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """
    Expected slots to finish selecting the best Q nodes after k nodes collide.

    Args:
        k: Collision size
        Q: Number of nodes to select
        p_e: Contention load (enters through E_1^Q and E_2^Q)
        ctl: Series truncation settings

    Returns:
        E_k^Q
    """
    _check_count(k, "k")
    _check_count(Q, "Q")
    _check_load(p_e)
    if Q == 1:
        return collision_slots_q1(k)
    return float(_collision_values(int(Q), float(p_e), ctl.tol, max(ctl.k_max, int(k)))[int(k)])


def collision_table(Q: int, p_e: float, ctl: SeriesControl = DEFAULT_CONTROL) -> CollisionTable:
    """E_k^Q for k = 1..ctl.k_max."""
    _check_count(Q, "Q")
    _check_load(p_e)
    values = np.array(_collision_values(int(Q), float(p_e), ctl.tol, ctl.k_max)[1:])
    values.setflags(write=False)
    return CollisionTable(Q=int(Q), p_e=float(p_e), values=values)


def avg_slots_asym_recursive(p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, terms: int = None) -> float:
    """
    Average slots to select the best node as n grows, recursive form.

    m(p_e) = 1/(e^{p_e} - 1) sum_k E[X_k] p_e^k / k! + 1/(1 - e^{-p_e})

    Args:
        p_e: Contention load
        ctl: Series truncation settings
        terms: Sum exactly this many series terms instead of truncating at tol

    Returns:
        Expected number of slots
    """
    _check_load(p_e)
    return _avg_slots(1, float(p_e), ctl.tol, ctl.k_max, terms)


def avg_slots_q_recursive(Q: int, p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, terms: int = None) -> float:
    """
    Average slots to select the best Q nodes as n grows, recursive form.

    Args:
        Q: Number of nodes to select
        p_e: Contention load
        ctl: Series truncation settings
        terms: Sum exactly this many series terms instead of truncating at tol

    Returns:
        m^Q(p_e)
    """
    _check_count(Q, "Q")
    _check_load(p_e)
    return _avg_slots(int(Q), float(p_e), ctl.tol, ctl.k_max, terms)


def _success_left(x: np.ndarray) -> np.ndarray:
    """P(N(x) = 1 | N(2x) >= 2): one node in the left half of an interval holding two or more."""
    return x * np.exp(-x) * -np.expm1(-x) / special.gammainc(2, 2 * x)


def _success_right(x: np.ndarray) -> np.ndarray:
    """P(N(x) = 1 | N(x) >= 1): one node in an interval known to hold at least one."""
    return x * np.exp(-x) / -np.expm1(-x)


def _state_loads(p_e: float, states: int) -> np.ndarray:
    """Interval length 2^-i p_e of chain states i = 1..states."""
    return p_e * 0.5 ** np.arange(1, states + 1)


def _first_success_probability(p_e: float) -> float:
    return p_e * math.exp(-p_e) / -math.expm1(-p_e)


def chain_probabilities_q1(p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, states: int = None) -> ChainProbabilities:
    """
    Success and visit probabilities of the single-node chain.

    Visits p(i) = (1 - P_0) prod_{j<i} (1 - P_j) are computed until p(i)
    drops below ctl.tol (the state where it does is included), or for
    exactly `states` states when given.

    Args:
        p_e: Contention load
        ctl: Series truncation settings
        states: Fixed number of states to compute

    Returns:
        ChainProbabilities with P_0, P_i and p(i)
    """
    _check_load(p_e)
    limit = states if states is not None else ctl.k_max
    P0 = _first_success_probability(p_e)
    success = _success_left(_state_loads(p_e, limit))
    visit = (1.0 - P0) * np.concatenate(([1.0], np.cumprod(1.0 - success[:-1])))

    if states is None:
        below = np.flatnonzero(visit < ctl.tol)
        if below.size:
            limit = int(below[0]) + 1
        else:
            logger.warning(f"Chain for p_e={p_e} reached {limit} states before tol={ctl.tol}")
    return ChainProbabilities(
        p_e=float(p_e),
        P0=P0,
        success=tuple(success[:limit].tolist()),
        visit=tuple(visit[:limit].tolist()),
    )


def avg_slots_asym_markov(p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, terms: int = None) -> float:
    """
    Average slots to select the best node as n grows, Markov-chain form.

    m(p_e) = 1/(1 - e^{-p_e}) + sum_i p(i)

    Args:
        p_e: Contention load
        ctl: Series truncation settings
        terms: Sum exactly this many visit probabilities

    Returns:
        Expected number of slots
    """
    _check_load(p_e)
    if p_e < SMALL_LOAD:
        return _idle_slots(p_e)
    chain = chain_probabilities_q1(p_e, ctl, states=terms)
    return _idle_slots(p_e) + math.fsum(chain.visit)


def chain_probabilities_q2(p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, states: int = None) -> ChainProbabilities:
    """
    Success and visit probabilities of the two-node chain.

    States i (no success yet), i' (first success in slot i) and i'' (first
    success earlier) all use an interval of length 2^-i p_e. Visits are
    computed until p(i) + p'(i) + p''(i + 1) drops below ctl.tol, or for
    exactly `states` states when given.
    """
    _check_load(p_e)
    limit = states if states is not None else ctl.k_max
    loads = _state_loads(p_e, limit + 1)
    P0 = _first_success_probability(p_e)
    left = _success_left(loads)
    right = _success_right(loads)

    visit = (1.0 - P0) * np.concatenate(([1.0], np.cumprod(1.0 - left[:-1])))
    prime = visit * left
    double_prime = np.zeros(limit + 1)
    for i in range(1, limit + 1):
        # position i holds state i + 1
        double_prime[i] = prime[i - 1] * (1.0 - right[i - 1]) + double_prime[i - 1] * (1.0 - left[i - 1])

    if states is None:
        triples = visit[:limit] + prime[:limit] + double_prime[1:limit + 1]
        below = np.flatnonzero(triples < ctl.tol)
        if below.size:
            limit = int(below[0]) + 1
        else:
            logger.warning(f"Two-node chain for p_e={p_e} reached {limit} states before tol={ctl.tol}")
    return ChainProbabilities(
        p_e=float(p_e),
        P0=P0,
        success=tuple(left[:limit].tolist()),
        visit=tuple(visit[:limit].tolist()),
        success_right=tuple(right[:limit].tolist()),
        visit_prime=tuple(prime[:limit].tolist()),
        visit_double_prime=tuple(double_prime[:limit + 1].tolist()),
    )


def avg_slots_q2_markov(p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, terms: int = None) -> float:
    """
    Average slots to select the best two nodes as n grows, Markov-chain form.

    m^2(p_e) = 1/(1 - e^{-p_e}) + P_0 m^1(p_e) + sum_i (p(i) + p'(i) + p''(i + 1))

    Args:
        p_e: Contention load
        ctl: Series truncation settings
        terms: Sum exactly this many (p, p', p'') triples

    Returns:
        m^2(p_e)
    """
    _check_load(p_e)
    if p_e < SMALL_LOAD:
        return 2 * _idle_slots(p_e)
    chain = chain_probabilities_q2(p_e, ctl, states=terms)
    single = avg_slots_asym_markov(p_e, ctl)
    states = len(chain.visit)
    series = math.fsum(chain.visit) + math.fsum(chain.visit_prime) + math.fsum(chain.visit_double_prime[1:states + 1])
    return _idle_slots(p_e) + chain.P0 * single + series


def avg_slots_q(Q: int, p_e: float, ctl: SeriesControl = DEFAULT_CONTROL, form: str = "recursive") -> float:
    """Dispatch between the recursive and Markov-chain forms (the latter exists for Q <= 2)."""
    if form == "recursive":
        return avg_slots_q_recursive(Q, p_e, ctl)
    if form != "markov":
        raise InvalidArgumentError("form", f"must be 'recursive' or 'markov', got '{form}'")
    if Q == 1:
        return avg_slots_asym_markov(p_e, ctl)
    if Q == 2:
        return avg_slots_q2_markov(p_e, ctl)
    raise InvalidArgumentError("Q", f"the Markov-chain form is only available for Q <= 2, got {Q}")


def lower_bound_recursive(p_e: float, terms: int = 4) -> float:
    """Recursive single-node series cut after `terms` collision sizes (a lower bound)."""
    _check_count(terms, "terms")
    return avg_slots_asym_recursive(p_e, terms=terms)


def lower_bound_markov(p_e: float, terms: int = 4) -> float:
    """Markov-chain single-node series cut after `terms` states (a lower bound)."""
    _check_count(terms, "terms")
    return avg_slots_asym_markov(p_e, terms=terms)


def upper_bound(p_e: float, k0: float = config.DEFAULT_K0) -> float:
    """
    Series-free upper bound on the single-node average slots.

    Uses the tangent to log2 at k0 as an envelope for E[X_k]:
    m(p_e) <= p_e / (k0 ln 2) + log2(2 k0 / e) + 1/(1 - e^{-p_e})

    Args:
        p_e: Contention load
        k0: Tangent point, at least e/2

    Returns:
        The bound
    """
    _check_load(p_e)
    if not k0 >= math.e / 2:
        raise InvalidArgumentError("k0", f"the bound holds only for k0 >= e/2, got {k0}")
    return p_e / (k0 * math.log(2)) + math.log2(2 * k0 / math.e) + _idle_slots(p_e)


def avg_slots_finite(n: int, p_e: float) -> float:
    """
    Exact average slots to select the best of n nodes.

    Sums over the first non-idle slot i <= q and the number k of nodes in it,
    plus the event that all n nodes first transmit together in slot q + 1.

    Args:
        n: Number of nodes
        p_e: Contention load, 0 < p_e <= n

    Returns:
        Expected number of slots

    Raises:
        InvalidArgumentError: If p_e is outside (0, n]
    """
    _check_count(n, "n")
    _check_load(p_e)
    if p_e > n:
        raise InvalidArgumentError("p_e", f"must not exceed n={n}, got {p_e}")
    n = int(n)
    q = idle_phase_length(n, p_e)
    collision_slots_q1(n)
    resolve = np.asarray(_q1_table[1:n + 1])
    k = np.arange(1, n + 1)
    share = p_e / n

    total = 0.0
    for i in range(1, q + 1):
        # C(n,k) a^k (s - a)^{n-k} written as s^n Binomial(n, a/s) with s = 1 - (i-1) a
        span = 1.0 - (i - 1) * share
        weights = span ** n * stats.binom.pmf(k, n, share / span)
        total += float(np.dot(weights, resolve + i))
    total += (1.0 - q * share) ** n * (resolve[-1] + q + 1)
    return total


def throughput(Q: int, p_e: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Average number of nodes selected per slot, Q / m^Q(p_e)."""
    return Q / avg_slots_q_recursive(Q, p_e, ctl)
