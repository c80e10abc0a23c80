"""
Slot-level state machines for distributed best-node selection.

Two machines share the sink's ternary feedback:

* the single-node machine keeps metric thresholds H_L < H_H (and H_min, the
  largest metric known to lie below the best one); a node transmits while
  its metric lies strictly between H_L and H_H;
* the Q-node machine works on normalized metrics y_i and keeps the
  threshold interval (T, T + alpha), the half indicator sigma and the count S
  of nodes selected so far.

With Q = 1 both machines take exactly the same slots on the same instance.
"""
import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from splitting.exceptions import ContractViolationError, InvalidArgumentError
from splitting.metrics import ContinuousMetricModel, NormalizedMetrics, uniform_model

logger = logging.getLogger(__name__)

# Slots allowed per node on top of the idle phase before a run is declared stuck
SLOTS_PER_NODE = 64


class Feedback(Enum):
    """Sink broadcast after each slot."""
    IDLE = "0"
    SUCCESS = "1"
    COLLISION = "e"

    def __str__(self):
        return self.name.capitalize()


class Half(Enum):
    """Whether the current threshold interval is the left or right half of the last split."""
    L = "L"
    R = "R"


class TranscriptRecord(NamedTuple):
    """One slot of a protocol run, in normalized units."""
    slot_index: int
    interval_start: float
    interval_width: float
    sigma: str
    feedback: str
    selected_count: int


class SingleResult(NamedTuple):
    winner: int
    slots: int


class QSelectResult(NamedTuple):
    selected: Tuple[int, ...]
    slots: int


def sink_feedback(transmit_count: int) -> Feedback:
    """
    Feedback for a slot in which transmit_count nodes transmitted.

    Args:
        transmit_count: Number of transmitting nodes

    Returns:
        IDLE for none, SUCCESS for exactly one, COLLISION otherwise
    """
    if transmit_count < 0:
        raise InvalidArgumentError("transmit_count", f"must be non-negative, got {transmit_count}")
    if transmit_count == 0:
        return Feedback.IDLE
    if transmit_count == 1:
        return Feedback.SUCCESS
    return Feedback.COLLISION


def _check_run(n: int, p_e: float):
    if n < 1:
        raise InvalidArgumentError("n", f"must be at least 1, got {n}")
    if not (math.isfinite(p_e) and 0 < p_e <= n):
        raise InvalidArgumentError("p_e", f"must lie in (0, n={n}], got {p_e}")


def slot_budget(n: int, p_e: float) -> int:
    """Upper limit on slots for a run: the idle phase plus SLOTS_PER_NODE per node."""
    return math.ceil(n / p_e) + SLOTS_PER_NODE * n


@dataclass(frozen=True)
class SingleSelectState:
    """
    Thresholds of the single-node machine.

    Args:
        h_low: Lower metric threshold H_L
        h_high: Upper metric threshold H_H
        h_min: Largest metric known to lie below the best one
        slot_index: Index of the slot these thresholds apply to (from 1)
        collision_seen: Whether the collision phase has started
    """
    h_low: float
    h_high: float
    h_min: float
    slot_index: int = 1
    collision_seen: bool = False

    @classmethod
    def initial(cls, model: ContinuousMetricModel, n: int, p_e: float) -> "SingleSelectState":
        return cls(
            h_low=_idle_threshold(model, 1, n, p_e),
            h_high=math.inf,
            h_min=model.infimum,
        )

    def transmits(self, metric: float) -> bool:
        return self.h_low < metric < self.h_high


def _idle_threshold(model: ContinuousMetricModel, k: int, n: int, p_e: float) -> float:
    """H_L after k - 1 idle slots; clamped to the metric infimum once k p_e reaches n."""
    return float(model.inverse_ccdf(min(1.0, k * p_e / n)))


def single_update(state: SingleSelectState, fb: Feedback, model: ContinuousMetricModel,
                  n: int, p_e: float) -> SingleSelectState:
    """
    Apply the single-node response rules to one slot's feedback.

    Args:
        state: Thresholds of the finished slot
        fb: Sink feedback for that slot
        model: Metric model providing F_c and its inverse
        n: Number of nodes
        p_e: Contention load

    Returns:
        Thresholds for the next slot

    Raises:
        ContractViolationError: If fb is SUCCESS, which ends the run
    """
    if fb is Feedback.SUCCESS:
        raise ContractViolationError("single_update called after a success; the run has terminated")

    k = state.slot_index
    if fb is Feedback.COLLISION:
        return replace(
            state,
            h_low=model.split(state.h_low, state.h_high),
            h_min=state.h_low,
            slot_index=k + 1,
            collision_seen=True,
        )
    if not state.collision_seen:
        return replace(
            state,
            h_high=state.h_low,
            h_low=_idle_threshold(model, k + 1, n, p_e),
            slot_index=k + 1,
        )
    return replace(
        state,
        h_high=state.h_low,
        h_low=model.split(state.h_min, state.h_low),
        slot_index=k + 1,
    )


def _single_record(state: SingleSelectState, fb: Feedback, model: ContinuousMetricModel,
                   n: int) -> TranscriptRecord:
    start = n * float(model.ccdf(state.h_high))
    end = n * float(model.ccdf(state.h_low))
    sigma = Half.L if state.collision_seen else Half.R
    selected = 1 if fb is Feedback.SUCCESS else 0
    return TranscriptRecord(state.slot_index, start, end - start, sigma.value, str(fb), selected)


def run_single_metrics(u, model: ContinuousMetricModel, p_e: float,
                       transcript: Optional[List[TranscriptRecord]] = None) -> SingleResult:
    """
    Run the single-node machine on raw metrics.

    Args:
        u: Metric of every node
        model: Metric model the thresholds are computed with
        p_e: Contention load
        transcript: If given, one TranscriptRecord per slot is appended

    Returns:
        (winner, slots): index of the node with the highest metric and the
        number of slots including the terminating success
    """
    u = np.asarray(u, dtype=float)
    n = int(u.size)
    _check_run(n, p_e)
    budget = slot_budget(n, p_e)
    state = SingleSelectState.initial(model, n, p_e)

    while True:
        active = transmitters(state, u)
        fb = sink_feedback(active.size)
        logger.debug(f"Slot {state.slot_index}: H_L={state.h_low:.6g} H_H={state.h_high:.6g} -> {fb}")
        if transcript is not None:
            transcript.append(_single_record(state, fb, model, n))
        if fb is Feedback.SUCCESS:
            return SingleResult(int(active[0]), state.slot_index)
        if state.slot_index >= budget:
            raise ContractViolationError(f"single-node run exceeded its budget of {budget} slots")
        state = single_update(state, fb, model, n, p_e)


def run_single(y, p_e: float, transcript: Optional[List[TranscriptRecord]] = None) -> SingleResult:
    """
    Run the single-node machine on normalized metrics.

    The metrics are mapped to the uniform model, u_i = 1 - y_i / n, so the
    node with the smallest y wins.
    """
    metrics = y if isinstance(y, NormalizedMetrics) else NormalizedMetrics(y)
    return run_single_metrics(1.0 - metrics.y / metrics.n, uniform_model(), p_e, transcript)


@dataclass(frozen=True)
class QSelectState:
    """
    State of the Q-node machine.

    Args:
        target: Number of nodes to select (Q)
        selected_count: Nodes selected before this slot (S)
        start: Left end T of the threshold interval
        width: Length alpha of the threshold interval
        sigma: Half indicator of the interval
        slot_index: Index of the slot this state applies to (from 1)
        selected: Selected node identities in order of selection
        sweep_end: Largest normalized metric (n); fresh intervals stop there
    """
    target: int
    selected_count: int
    start: float
    width: float
    sigma: Half = Half.R
    slot_index: int = 1
    selected: Tuple[int, ...] = ()
    sweep_end: float = math.inf

    @classmethod
    def initial(cls, p_e: float, Q: int, sweep_end: float = math.inf) -> "QSelectState":
        return cls(target=Q, selected_count=0, start=0.0, width=min(p_e, sweep_end), sweep_end=sweep_end)

    @property
    def done(self) -> bool:
        return self.selected_count >= self.target


def q_update(state: QSelectState, fb: Feedback, p_e: float, winner: Optional[int] = None) -> QSelectState:
    """
    Apply the Q-node response rules to one slot's feedback.

    Args:
        state: State of the finished slot
        fb: Sink feedback for that slot
        p_e: Contention load (length of a fresh interval)
        winner: Identity of the node that succeeded, recorded on SUCCESS

    Returns:
        State for the next slot

    Raises:
        ContractViolationError: If the selection has already terminated
    """
    if state.done:
        raise ContractViolationError("q_update called after Q nodes were selected")

    start, width = state.start, state.width
    count, selected = state.selected_count, state.selected
    if fb is Feedback.SUCCESS:
        count += 1
        if winner is not None:
            selected = selected + (winner,)

    if fb is Feedback.COLLISION:
        start, width, sigma = start, width / 2, Half.L
    elif state.sigma is Half.L and fb is Feedback.SUCCESS:
        start, sigma = start + width, Half.R
    elif state.sigma is Half.L:
        start, width, sigma = start + width, width / 2, Half.L
    else:
        start = start + width
        width, sigma = min(p_e, state.sweep_end - start), Half.R

    return replace(
        state,
        selected_count=count,
        start=start,
        width=width,
        sigma=sigma,
        slot_index=state.slot_index + 1,
        selected=selected,
    )


def transmitters(state, values) -> np.ndarray:
    """
    Indices of the nodes that transmit in the slot described by state.

    Args:
        state: SingleSelectState (values are raw metrics) or QSelectState
            (values are normalized metrics)
        values: One value per node

    Returns:
        Indices whose value lies strictly inside the threshold interval
    """
    values = np.asarray(values, dtype=float)
    if isinstance(state, SingleSelectState):
        low, high = state.h_low, state.h_high
    elif isinstance(state, QSelectState):
        low, high = state.start, state.start + state.width
    else:
        raise InvalidArgumentError("state", f"unsupported machine state {type(state).__name__}")
    return np.flatnonzero((values > low) & (values < high))


def _check_selection(n: int, p_e: float, Q: int):
    if not 1 <= Q <= n:
        raise InvalidArgumentError("Q", f"must lie in 1..n={n}, got {Q}")
    if not (math.isfinite(p_e) and p_e > 0):
        raise InvalidArgumentError("p_e", f"must be positive, got {p_e}")


def run_qselect(y, p_e: float, Q: int,
                transcript: Optional[List[TranscriptRecord]] = None) -> QSelectResult:
    """
    Select the Q nodes with the smallest normalized metrics.

    Args:
        y: Normalized metrics (NormalizedMetrics or a sequence)
        p_e: Contention load
        Q: Number of nodes to select, 1 <= Q <= n
        transcript: If given, one TranscriptRecord per slot is appended

    Returns:
        (selected, slots): node identities in increasing-y order and the
        number of slots including the Q-th success

    Raises:
        InvalidArgumentError: If Q > n or a metric lies outside (0, n)
    """
    metrics = y if isinstance(y, NormalizedMetrics) else NormalizedMetrics(y)
    n = metrics.n
    _check_selection(n, p_e, Q)
    order = np.argsort(metrics.y, kind="stable")
    ordered = metrics.y[order].tolist()
    budget = slot_budget(n, p_e)
    state = QSelectState.initial(p_e, Q, sweep_end=float(n))

    while not state.done:
        if state.width <= 0:
            raise ContractViolationError(f"sweep passed y={n} with only {state.selected_count} of {Q} selected")
        first = bisect_right(ordered, state.start)
        last = bisect_left(ordered, state.start + state.width)
        fb = sink_feedback(last - first)
        winner = int(order[first]) if fb is Feedback.SUCCESS else None
        next_state = q_update(state, fb, p_e, winner)
        logger.debug(f"Slot {state.slot_index}: ({state.start:.6g}, {state.start + state.width:.6g}) "
                     f"{state.sigma.value} -> {fb}")
        if transcript is not None:
            transcript.append(TranscriptRecord(
                state.slot_index, state.start, state.width, state.sigma.value,
                str(fb), next_state.selected_count,
            ))
        state = next_state
        if not state.done and state.slot_index > budget:
            raise ContractViolationError(f"Q-node run exceeded its budget of {budget} slots")

    return QSelectResult(state.selected, state.slot_index - 1)


def selection_slots(ordered, p_e: float, Q: int) -> int:
    """
    Slot count of run_qselect for already-sorted normalized metrics.

    The same response rules without state objects or node identities, for the
    Monte Carlo hot loop.

    Args:
        ordered: Normalized metrics of one instance in increasing order (a list)
        p_e: Contention load
        Q: Number of nodes to select, 1 <= Q <= len(ordered)

    Returns:
        Number of slots including the Q-th success
    """
    n = len(ordered)
    budget = slot_budget(n, p_e)
    start, width, left = 0.0, min(p_e, n), False
    selected = slots = 0
    while True:
        slots += 1
        count = bisect_left(ordered, start + width) - bisect_right(ordered, start)
        if count >= 2:
            width /= 2
            left = True
        else:
            if count == 1:
                selected += 1
                if selected == Q:
                    return slots
            start += width
            if not left:
                width = min(p_e, n - start)
            elif count == 0:
                width /= 2
            else:
                left = False
        if slots >= budget or width <= 0:
            raise ContractViolationError(f"Q-node run stuck after {slots} slots")
