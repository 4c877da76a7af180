"""
Entry point of the library: :func:`check` normalizes a formula into one of the
three core tasks, runs the forward pass, runs the backward pass when the task
needs one, and assembles a :obj:`Verdict`.
"""
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Union

from pctlib.backward import (
    NO_CLEARABLE_LEAF,
    OBLIGATIONS_CLEARED,
    ROOT_CLEARED,
    TargetCondition,
    TargetKind,
    backward_rg,
    backward_rpg,
)
from pctlib.explore import (
    DEAD_STATE,
    FORWARD_VIOLATION,
    FORWARD_WITNESS,
    REGION_EXHAUSTED,
    forward_check_a,
    forward_check_eu,
    forward_leadsto,
)
from pctlib.formula import Formula, TaskKind, normalize, parse_formula
from pctlib.models.model import ModelInterface, StateVector
from pctlib.options import CheckOptions, Variant
from pctlib.store import StateStore

logger = logging.getLogger(__name__)

REASONS = (
    FORWARD_WITNESS,
    FORWARD_VIOLATION,
    DEAD_STATE,
    ROOT_CLEARED,
    OBLIGATIONS_CLEARED,
    NO_CLEARABLE_LEAF,
    REGION_EXHAUSTED,
)


def _phase_times() -> Dict[str, float]:
    return {"forward": 0.0, "backward": 0.0}


@dataclass
class Stats:
    """
    Counters of one check run. ``reverse_edges_stored`` stays zero under RPG
    and ``parent_links_stored`` stays zero under RG.
    """
    states: int = 0
    forward_edges: int = 0
    reverse_edges_stored: int = 0
    parent_links_stored: int = 0
    suc_decrements: int = 0
    collect_rounds: int = 0
    steals: int = 0
    phase_times: Dict[str, float] = field(default_factory=_phase_times)
    peak_memory_estimate: int = 0

    def to_dict(self) -> dict:
        """
        Flat form, as written to stats files: ``phase_times`` becomes one
        ``phase_times_<phase>`` key per phase.
        """
        data = asdict(self)
        for phase, seconds in data.pop("phase_times").items():
            data[f"phase_times_{phase}"] = seconds
        return data


@dataclass(frozen=True)
class Verdict:
    """
    :ivar holds: Whether the formula holds at the initial state.
    :ivar reason: One of :data:`REASONS`.
    :ivar stats: Run statistics.
    :ivar witness: For violations decided by the forward pass, when witnesses
            were requested: state ids of a path from the initial state to the
            violating state.
    :ivar trace: The state vectors along ``witness``.
    """
    holds: bool
    reason: str
    stats: Stats
    witness: Optional[List[int]] = None
    trace: Optional[List[StateVector]] = None


def witness_path(store: StateStore, violating: int) -> List[int]:
    """
    Follow recorded parents from ``violating`` back to the initial state and
    return the path in forward order.
    """
    path = [violating]
    while len(path) <= store.size:
        parent = store.parent(path[-1])
        if parent is None:
            break
        path.append(parent)
    path.reverse()
    return path


def check(
    model: ModelInterface,
    formula: Union[Formula, str],
    options: Optional[CheckOptions] = None,
) -> Verdict:
    """
    Check ``formula`` at the initial state of ``model``.

    :param model: The model to check.
    :param formula: A parsed formula or its text.
    :param options: Run options, defaults to :obj:`CheckOptions()`.
    :return: The verdict. Its ``holds`` does not depend on the variant, the
            number of workers or the schedule.
    :raises ValidationError: On invalid options, formulas or propositions.
    :raises ResourceError: If the table fills up, the state cap is exceeded or
            the timeout expires.
    """
    options = CheckOptions() if options is None else options
    options.validate()
    if isinstance(formula, str):
        formula = parse_formula(formula)
    formula.validate()
    task = normalize(formula)
    deadline = None
    if options.timeout is not None:
        deadline = time.monotonic() + options.timeout
    store = StateStore(
        model,
        options.workers,
        table_bits=options.table_bits,
        max_states=options.max_states,
        record_parents=options.witness,
        record_predecessors=(
            options.variant is Variant.RG and task.kind is not TaskKind.EU
        ),
    )
    stats = Stats()
    logger.info(
        "checking %s task (variant %s, %d worker(s))",
        task.kind.value,
        options.variant.value,
        options.workers,
    )

    if task.kind is TaskKind.EU:
        fwd = forward_check_eu(model, task.psi, task.phi, store, options, deadline)
    elif task.kind is TaskKind.AU:
        fwd = forward_check_a(model, task.psi, task.phi, store, options, deadline)
    else:
        fwd = forward_leadsto(model, task.psi, task.phi, store, options, deadline)
    stats.phase_times["forward"] = fwd.elapsed
    stats.forward_edges = fwd.edges
    stats.steals = fwd.steals
    holds, reason = fwd.ok, fwd.reason

    if task.kind is not TaskKind.EU and fwd.ok:
        if task.kind is TaskKind.AU:
            target = TargetCondition(TargetKind.ROOT_CLEARED, fwd.root)
        else:
            target = TargetCondition(
                TargetKind.OBLIGATIONS_ZERO, fwd.root, fwd.seeds.obligations
            )
        if options.variant is Variant.RG:
            bwd = backward_rg(store, fwd.seeds, target, options, deadline)
        else:
            bwd = backward_rpg(store, fwd.seeds, target, model, options, deadline)
        holds, reason = bwd.holds, bwd.reason
        stats.phase_times["backward"] = bwd.elapsed
        stats.suc_decrements = bwd.suc_decrements
        stats.collect_rounds = bwd.collect_rounds
        stats.steals += bwd.steals

    stats.states = store.size
    stats.reverse_edges_stored = store.reverse_edges_stored
    stats.parent_links_stored = store.parent_links_stored
    stats.peak_memory_estimate = store.memory_estimate()

    witness = trace = None
    violating = _forward_violation(task, fwd)
    if options.witness and violating is not None:
        witness = witness_path(store, violating)
        trace = [store.vector(sid) for sid in witness]
    holds = holds != task.negate_result
    logger.info("verdict: %s (%s)", "holds" if holds else "violated", reason)
    return Verdict(
        holds=holds, reason=reason, stats=stats, witness=witness, trace=trace
    )


def _forward_violation(task, fwd) -> Optional[int]:
    # The forward pass exhibits a counterexample in two cases: AG/EU-negated
    # tasks that found their target, and AU tasks refuted by a single state.
    if task.kind is TaskKind.EU and task.negate_result and fwd.ok:
        return fwd.decisive
    if task.kind is TaskKind.AU and not task.negate_result and not fwd.ok:
        return fwd.decisive
    return None
