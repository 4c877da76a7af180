"""
The backward pass: decide whether the constrained graph left by the forward
pass admits an infinite (cyclic or blocked) path, by repeatedly clearing
states all of whose counted successors are cleared.

``backward_rg`` propagates over the stored reverse edges. ``backward_rpg``
only has one father per state; it alternates CLEARING phases, which propagate
along father links, with COLLECTING phases, in which each worker scans the
states it owns for parental leaves whose successors turn out to be cleared.
"""
import enum
import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pctlib.atomic import AtomicCounter, WriteOnce, shared_array
from pctlib.explore import SeedSet
from pctlib.models.model import ModelInterface
from pctlib.options import CheckOptions
from pctlib.store import StateStore
from pctlib.workers import WorkPool

logger = logging.getLogger(__name__)

ROOT_CLEARED = "root-cleared"
OBLIGATIONS_CLEARED = "obligations-cleared"
NO_CLEARABLE_LEAF = "no-clearable-leaf"

_TARGET_REASONS = (ROOT_CLEARED, OBLIGATIONS_CLEARED)


class TargetKind(enum.Enum):
    ROOT_CLEARED = "ROOT_CLEARED"
    OBLIGATIONS_ZERO = "OBLIGATIONS_ZERO"


@dataclass(frozen=True)
class TargetCondition:
    """
    When the backward pass succeeds: for AU once the root is cleared, for
    leadsto once no obligation is left.
    """
    kind: TargetKind
    root: int
    obligations: Optional[AtomicCounter] = None


@dataclass
class BackwardResult:
    holds: bool
    reason: str
    suc_decrements: int = 0
    collect_rounds: int = 0
    steals: int = 0
    elapsed: float = 0.0


def test_cleared(store: StateStore, model: ModelInterface, sid: int) -> bool:
    """
    Recompute the successors of ``sid`` and return whether all of them are
    cleared. Vacuously true for a state without successors.
    """
    for succ in model.successors(store.vector(sid)):
        child = store.lookup(succ)
        if child is None or store.suc_get(child) != 0:
            return False
    return True


class _Backward:
    def __init__(
        self,
        store: StateStore,
        seeds: SeedSet,
        target: TargetCondition,
        options: CheckOptions,
        deadline: Optional[float],
    ):
        self.store = store
        self.target = target
        self.early_stop = options.early_stop
        self.pool = WorkPool(
            options.workers, options.batch_size, deadline, capacity=store.capacity
        )
        self.reached = WriteOnce(shared=options.workers > 1)
        self._decrements = shared_array(options.workers, np.int64)
        for worker, stack in enumerate(seeds.stacks):
            self.pool.extend(worker, stack)

    def reach(self, reason: str) -> None:
        self.reached.set(_TARGET_REASONS.index(reason))
        if self.early_stop:
            self.pool.stop(True)

    def popped(self, sid: int) -> None:
        if self.target.kind is TargetKind.ROOT_CLEARED and sid == self.target.root:
            self.reach(ROOT_CLEARED)

    def cleared(self, sid: int) -> None:
        # Called once per state, when it transitions to cleared.
        if self.store.is_obligation(sid):
            if self.target.obligations.dec() == 0:
                self.reach(OBLIGATIONS_CLEARED)

    def decrement(self, worker: int, sid: int) -> None:
        self._decrements[worker] += 1
        if self.store.suc_dec(sid) == 0:
            self.cleared(sid)
            self.pool.push(worker, sid)

    def result(self, start: float, collect_rounds: int = 0) -> BackwardResult:
        code = self.reached.get()
        return BackwardResult(
            holds=code is not None,
            reason=NO_CLEARABLE_LEAF if code is None else _TARGET_REASONS[code],
            suc_decrements=int(self._decrements.sum()),
            collect_rounds=collect_rounds,
            steals=self.pool.steals,
            elapsed=time.perf_counter() - start,
        )


def _already_reached(target: TargetCondition) -> Optional[BackwardResult]:
    if (
        target.kind is TargetKind.OBLIGATIONS_ZERO
        and target.obligations.value == 0
    ):
        return BackwardResult(holds=True, reason=OBLIGATIONS_CLEARED)
    return None


def backward_rg(
    store: StateStore,
    seeds: SeedSet,
    target: TargetCondition,
    options: CheckOptions,
    deadline: Optional[float] = None,
) -> BackwardResult:
    """
    Clear states by decrementing the ``suc`` label of every stored predecessor
    of each cleared state. The worker whose decrement reaches zero pushes the
    predecessor. Fails once every stack is exhausted without reaching the
    target.
    """
    done = _already_reached(target)
    if done is not None:
        return done
    start = time.perf_counter()
    store.index_predecessors()
    run = _Backward(store, seeds, target, options, deadline)
    logger.info("backward RG pass from %d seed(s)", len(seeds))

    def loop(worker: int) -> None:
        while True:
            sid = run.pool.next_item(worker)
            if sid is None:
                return
            run.popped(sid)
            for pred in store.predecessors(sid):
                run.decrement(worker, pred)
            run.pool.done(worker)

    run.pool.run(loop)
    result = run.result(start)
    logger.info(
        "backward RG pass done: %s after %d decrement(s)",
        result.reason,
        result.suc_decrements,
    )
    return result


def backward_rpg(
    store: StateStore,
    seeds: SeedSet,
    target: TargetCondition,
    model: ModelInterface,
    options: CheckOptions,
    deadline: Optional[float] = None,
) -> BackwardResult:
    """
    Alternate globally synchronized CLEARING and COLLECTING phases.

    CLEARING pops cleared states; each one decrements the ``sons`` label of its
    father and, unless the father is cleared already, its ``suc`` label.
    COLLECTING first tests, read-only, every owned state with ``sons == 0`` and
    ``suc != 0`` that is not blocked, then publishes the successful ones as
    cleared. A COLLECTING round that publishes nothing ends the pass.

    Whether to leave the loop is decided from state settled inside barriers
    only, so all workers leave in the same round.
    """
    done = _already_reached(target)
    if done is not None:
        return done
    start = time.perf_counter()
    run = _Backward(store, seeds, target, options, deadline)
    shared = options.workers > 1
    published = AtomicCounter(shared=shared)
    rounds = AtomicCounter(shared=shared)
    finished = WriteOnce(shared=shared)

    def end_of_round() -> None:
        count = rounds.inc()
        logger.debug("collecting round %d cleared %d state(s)", count, published.value)
        if published.value == 0:
            finished.set(count)
        elif count > store.size:
            raise AssertionError("collecting rounds exceed the number of states")
        published.set(0)

    phase = run.pool.barrier()
    round_end = run.pool.barrier(action=end_of_round)
    logger.info("backward RPG pass from %d seed(s)", len(seeds))

    def clear(worker: int, sid: int) -> None:
        run.popped(sid)
        father = store.father(sid)
        if father is None:
            return
        store.sons_dec(father)
        if store.suc_get(father) != 0:
            run.decrement(worker, father)

    def loop(worker: int) -> None:
        while True:
            while True:
                sid = run.pool.next_item(worker)
                if sid is None:
                    break
                clear(worker, sid)
                run.pool.done(worker)
            run.pool.wait(phase)
            if run.pool.stopped:
                return
            candidates = []
            for sid in store.owned_states(worker):
                if (
                    store.sons(sid) == 0
                    and store.suc_get(sid) != 0
                    and not store.is_blocked(sid)
                ):
                    run.pool.check_deadline()
                    if test_cleared(store, model, sid):
                        candidates.append(sid)
            run.pool.wait(phase)
            for sid in candidates:
                store.suc_set(sid, 0)
                published.inc()
                run.cleared(sid)
                run.pool.push(worker, sid)
            run.pool.wait(round_end)
            if finished.is_set:
                return

    run.pool.run(loop)
    result = run.result(start, collect_rounds=rounds.value)
    logger.info(
        "backward RPG pass done: %s after %d collecting round(s)",
        result.reason,
        result.collect_rounds,
    )
    return result
