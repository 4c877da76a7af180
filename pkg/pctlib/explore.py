"""
The forward pass: a parallel constrained exploration from the initial state.

All three check kinds share one SPMD loop. Workers pop state ids from their
stacks, evaluate ``psi``/``phi`` on the labeling, set the ``suc`` label, and
intern the successors they are allowed to expand. The worker whose intern call
creates a state pushes it, so every state is expanded exactly once. States
cleared during this pass (the ``phi``-states) are flagged as seeds of the
backward pass.

Which state decides a refutation depends on the schedule. The reported reason
does not once early stop is disabled: every violating state is then visited
and the reason is picked by a fixed priority.
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Collection, Iterator, List, Optional

import numpy as np

from pctlib.atomic import AtomicCounter, WriteOnce, shared_array
from pctlib.formula import AtomExpr, TaskKind, compile_atom
from pctlib.models.model import ModelInterface
from pctlib.options import CheckOptions, Variant
from pctlib.store import StateStore
from pctlib.workers import WorkPool

logger = logging.getLogger(__name__)

FORWARD_WITNESS = "forward-witness"
FORWARD_VIOLATION = "forward-violation"
DEAD_STATE = "dead-state"
REGION_EXHAUSTED = "region-exhausted"


@dataclass(frozen=True)
class ForwardPolicy:
    """
    What the forward pass explores: ``kind`` selects the edge semantics and
    ``psi``/``phi`` are the two state predicates.
    """
    kind: TaskKind
    psi: AtomExpr
    phi: AtomExpr

    def compile(self, propositions: Collection[str]):
        return (
            compile_atom(self.psi, propositions),
            compile_atom(self.phi, propositions),
        )


class SeedSet:
    """
    States cleared during the forward pass. They are flagged in the store, and
    :attr:`stacks` splits them by owner, one stack per worker. For leadsto runs
    the set also counts the open obligations, the discovered
    ``psi and not phi`` states.
    """

    def __init__(self, store: StateStore):
        self.store = store
        self.obligations = AtomicCounter(shared=store.workers > 1)

    def add(self, sid: int) -> None:
        self.store.mark_seed(sid)

    @property
    def stacks(self) -> List[List[int]]:
        seeds = self.store.seeds()
        owners = np.array([self.store.owner(sid) for sid in seeds], dtype=np.int64)
        return [seeds[owners == w].tolist() for w in range(self.store.workers)]

    def __len__(self) -> int:
        return len(self.store.seeds())

    def __iter__(self) -> Iterator[int]:
        return iter(self.store.seeds().tolist())


@dataclass
class ForwardResult:
    """
    :ivar ok: EU: a ``phi``-state was found. AU: no forward constraint was
            violated. Leadsto: always true.
    :ivar seeds: States cleared during the pass.
    :ivar root: Id of the initial state.
    :ivar reason: Why the pass ended the way it did.
    :ivar decisive: The state that decided the pass, if one did.
    """
    ok: bool
    seeds: SeedSet
    root: int
    reason: Optional[str] = None
    decisive: Optional[int] = None
    edges: int = 0
    expansions: int = 0
    steals: int = 0
    elapsed: float = 0.0


class _Forward:
    def __init__(
        self,
        model: ModelInterface,
        policy: ForwardPolicy,
        store: StateStore,
        options: CheckOptions,
        deadline: Optional[float],
    ):
        shared = options.workers > 1
        self.model = model
        self.store = store
        self.options = options
        self.link_fathers = options.variant is Variant.RPG
        self.psi, self.phi = policy.compile(model.propositions())
        self.pool = WorkPool(
            options.workers, options.batch_size, deadline, capacity=store.capacity
        )
        self.seeds = SeedSet(store)
        self.found = WriteOnce(shared=shared)
        # One cell per refutation reason, in reporting priority.
        self.violations = {
            FORWARD_VIOLATION: WriteOnce(shared=shared),
            DEAD_STATE: WriteOnce(shared=shared),
        }
        self._edges = shared_array(options.workers, np.int64)
        self._expansions = shared_array(options.workers, np.int64)

    def run(self, expand: Callable[[int, int], None], name: str) -> int:
        logger.info(
            "forward %s pass with %d worker(s), %s order",
            name,
            self.pool.workers,
            self.options.order.value,
        )
        root, _, _ = self.store.intern(self.model.initial(), 0)
        self.pool.push(0, root)

        def loop(worker: int) -> None:
            while True:
                sid = self.pool.next_item(worker)
                if sid is None:
                    return
                self._expansions[worker] += 1
                expand(worker, sid)
                self.pool.done(worker)

        self.pool.run(loop)
        logger.info(
            "forward %s pass done: %d states, %d edges, %d steals, load %.2f",
            name,
            self.store.size,
            int(self._edges.sum()),
            self.pool.steals,
            self.store.table.load_factor,
        )
        return root

    def discover(self, worker: int, parent: int, succs) -> List[int]:
        """
        Intern the successors of ``parent`` and push the new ones. Returns the
        successor ids in order.
        """
        children = []
        fathered = 0
        for succ in succs:
            sid, is_new, _ = self.store.intern(succ, worker)
            children.append(sid)
            if is_new:
                self.store.set_parent(sid, parent)
                if self.link_fathers and self.store.father_set_once(sid, parent):
                    fathered += 1
                self.pool.push(worker, sid)
        if fathered:
            self.store.sons_inc(parent, fathered)
        self._edges[worker] += len(children)
        return children

    def refute(self, sid: int, reason: str) -> None:
        if self.violations[reason].set(sid) and self.options.early_stop:
            self.pool.stop(False)

    def violation(self):
        for reason, cell in self.violations.items():
            if cell.is_set:
                return reason, cell.get()
        return None

    def result(self, ok: bool, root: int, reason: str, decisive: Optional[int], start: float):
        return ForwardResult(
            ok=ok,
            seeds=self.seeds,
            root=root,
            reason=reason,
            decisive=decisive,
            edges=int(self._edges.sum()),
            expansions=int(self._expansions.sum()),
            steals=self.pool.steals,
            elapsed=time.perf_counter() - start,
        )


def forward_check_eu(
    model: ModelInterface,
    psi: AtomExpr,
    phi: AtomExpr,
    store: StateStore,
    options: CheckOptions,
    deadline: Optional[float] = None,
) -> ForwardResult:
    """
    Search for a ``phi``-state reachable through ``psi``-states. Only states
    satisfying ``psi and not phi`` are expanded; a state satisfying neither is
    a dead end of the search. ``ok`` is true iff a ``phi``-state was found.
    """
    start = time.perf_counter()
    run = _Forward(model, ForwardPolicy(TaskKind.EU, psi, phi), store, options, deadline)

    def expand(worker: int, sid: int) -> None:
        state = store.vector(sid)
        labels = model.labeling(state)
        if run.phi(labels):
            if run.found.set(sid) and options.early_stop:
                run.pool.stop(True)
            return
        if not run.psi(labels):
            run.violations[FORWARD_VIOLATION].set(sid)
            return
        run.discover(worker, sid, model.successors(state))

    root = run.run(expand, "EU")
    if run.found.is_set:
        return run.result(True, root, FORWARD_WITNESS, run.found.get(), start)
    violation = run.violation()
    if violation is not None:
        return run.result(False, root, FORWARD_VIOLATION, violation[1], start)
    return run.result(False, root, REGION_EXHAUSTED, None, start)


def forward_check_a(
    model: ModelInterface,
    psi: AtomExpr,
    phi: AtomExpr,
    store: StateStore,
    options: CheckOptions,
    deadline: Optional[float] = None,
) -> ForwardResult:
    """
    Forward pass of ``A(psi U phi)``. A ``phi``-state is cleared (``suc = 0``)
    and seeds the backward pass without being expanded. A ``psi and not phi``
    state gets ``suc`` set to its number of distinct successors, which are
    interned with a reverse edge (RG) or a father link (RPG). Reaching a state
    satisfying neither, or a dead ``psi and not phi`` state, refutes the
    formula; when both occur, ``forward-violation`` is reported.
    """
    start = time.perf_counter()
    run = _Forward(model, ForwardPolicy(TaskKind.AU, psi, phi), store, options, deadline)
    reverse = options.variant is Variant.RG

    def expand(worker: int, sid: int) -> None:
        state = store.vector(sid)
        labels = model.labeling(state)
        if run.phi(labels):
            store.suc_set(sid, 0)
            run.seeds.add(sid)
            return
        if not run.psi(labels):
            run.refute(sid, FORWARD_VIOLATION)
            return
        succs = model.successors(state)
        if not succs:
            run.refute(sid, DEAD_STATE)
            return
        store.suc_set(sid, len(succs))
        children = run.discover(worker, sid, succs)
        if reverse:
            store.add_predecessors(children, sid)

    root = run.run(expand, "AU")
    violation = run.violation()
    if violation is not None:
        reason, sid = violation
        return run.result(False, root, reason, sid, start)
    return run.result(True, root, REGION_EXHAUSTED, None, start)


def forward_leadsto(
    model: ModelInterface,
    psi: AtomExpr,
    phi: AtomExpr,
    store: StateStore,
    options: CheckOptions,
    deadline: Optional[float] = None,
) -> ForwardResult:
    """
    Forward pass of ``psi ==> phi``: explores the whole reachable graph.
    ``phi``-states are cleared and seed the backward pass; their outgoing edges
    are followed for discovery only. Every other state with successors gets
    its ``suc`` label and propagation edges; one without successors is blocked.
    Each ``psi and not phi`` state is flagged as an obligation.
    """
    start = time.perf_counter()
    run = _Forward(
        model, ForwardPolicy(TaskKind.LEADSTO, psi, phi), store, options, deadline
    )
    reverse = options.variant is Variant.RG
    obligations = run.seeds.obligations

    def expand(worker: int, sid: int) -> None:
        state = store.vector(sid)
        labels = model.labeling(state)
        succs = model.successors(state)
        if run.phi(labels):
            store.suc_set(sid, 0)
            run.seeds.add(sid)
            run.discover(worker, sid, succs)
            return
        if run.psi(labels):
            store.set_obligation(sid)
            obligations.inc()
        if not succs:
            store.set_blocked(sid)
            return
        store.suc_set(sid, len(succs))
        children = run.discover(worker, sid, succs)
        if reverse:
            store.add_predecessors(children, sid)

    root = run.run(expand, "leadsto")
    logger.debug("%d obligation(s) after forward pass", obligations.value)
    return run.result(True, root, REGION_EXHAUSTED, None, start)
