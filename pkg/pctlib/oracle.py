"""
Sequential reference checker and random test models.

:func:`oracle_check` labels the reachable part of an explicit model by
fixpoint iteration, one core task at a time, and follows the same conventions
as :func:`pctlib.checker.check`: a ``psi and not phi`` state without
successors refutes ``A(psi U phi)``, so ``E[] phi`` holds along a finite
maximal path that stays in ``phi``.
"""
import functools
import logging
import random
from collections import defaultdict
from typing import Callable, Dict, List, Optional, Sequence, Set, Union

from pctlib.formula import (
    And,
    Atom,
    AtomExpr,
    Const,
    Formula,
    Not,
    Operator,
    Or,
    TaskKind,
    compile_atom,
    normalize,
    parse_formula,
)
from pctlib.models.explicit import ExplicitModel, to_explicit
from pctlib.models.model import ModelInterface, reachable

logger = logging.getLogger(__name__)

SIZE_CAP = 10**6

Predicate = Callable[[int], bool]


class _Graph:
    def __init__(self, model: ExplicitModel, limit: int):
        self.order = [s[0] for s in reachable(model, limit)]
        self.model = model
        self.succ: Dict[int, List[int]] = {
            s: list(model.edges.get(s, ())) for s in self.order
        }
        self.pred: Dict[int, List[int]] = defaultdict(list)
        for src in self.order:
            for dst in self.succ[src]:
                self.pred[dst].append(src)

    def predicate(self, expr: AtomExpr) -> Predicate:
        test = compile_atom(expr, self.model.propositions())
        return lambda s: test(self.model.labels[s])


def _label_eu(graph: _Graph, psi: Predicate, phi: Predicate) -> Set[int]:
    labeled = {s for s in graph.order if phi(s)}
    queue = list(labeled)
    while queue:
        s = queue.pop()
        for p in graph.pred[s]:
            if p not in labeled and psi(p):
                labeled.add(p)
                queue.append(p)
    return labeled


def _label_au(graph: _Graph, psi: Predicate, phi: Predicate) -> Set[int]:
    labeled = {s for s in graph.order if phi(s)}
    # Unlabeled successors left per psi-state; dead states never reach zero.
    remaining = {
        s: len(graph.succ[s])
        for s in graph.order
        if s not in labeled and psi(s) and graph.succ[s]
    }
    queue = list(labeled)
    while queue:
        s = queue.pop()
        for p in graph.pred[s]:
            if p in remaining and p not in labeled:
                remaining[p] -= 1
                if remaining[p] == 0:
                    labeled.add(p)
                    queue.append(p)
    return labeled


def oracle_check(
    model: ModelInterface,
    formula: Union[Formula, str],
    limit: int = SIZE_CAP,
) -> bool:
    """
    Decide ``formula`` at the initial state by global labeling.

    :param model: An explicit model, or any model small enough to expand.
    :param formula: A parsed formula or its text.
    :param limit: Maximum number of reachable states.
    :raises ValidationError: If the model exceeds ``limit`` states or the
            formula uses unknown propositions.
    """
    if isinstance(formula, str):
        formula = parse_formula(formula)
    formula.validate()
    task = normalize(formula)
    graph = _Graph(to_explicit(model, limit), limit)
    psi, phi = graph.predicate(task.psi), graph.predicate(task.phi)
    init = graph.model.init
    if task.kind is TaskKind.EU:
        result = init in _label_eu(graph, psi, phi)
    elif task.kind is TaskKind.AU:
        result = init in _label_au(graph, psi, phi)
    else:
        eventually = _label_au(graph, lambda s: True, phi)
        result = all(s in eventually for s in graph.order if psi(s))
    return result != task.negate_result


def brute_force_au(
    model: ExplicitModel, psi: AtomExpr, phi: AtomExpr
) -> bool:
    """
    Decide ``A(psi U phi)`` at the initial state by enumerating paths. A path
    that stays in ``psi and not phi`` for as many steps as there are states
    has closed a cycle, so depth is cut off there.
    """
    props = model.propositions()
    test_psi, test_phi = compile_atom(psi, props), compile_atom(phi, props)

    @functools.lru_cache(maxsize=None)
    def holds(state: int, depth: int) -> bool:
        labels = model.labels[state]
        if test_phi(labels):
            return True
        if not test_psi(labels) or depth == 0:
            return False
        succs = model.edges.get(state, ())
        return bool(succs) and all(holds(t, depth - 1) for t in succs)

    return holds(model.init, len(model.labels))


def random_model(
    seed: int,
    n: int,
    max_out_degree: int,
    n_props: int = 3,
    p_label: float = 0.4,
) -> ExplicitModel:
    """
    Generate a reproducible random Kripke structure over states ``0..n-1``
    with initial state 0. Out-degrees are uniform in ``0..max_out_degree``
    (capped at ``n``), targets are distinct and may include the source, and
    each of the propositions ``p0..p{n_props-1}`` labels a state independently
    with probability ``p_label``.
    """
    rng = random.Random(seed)
    props = [f"p{i}" for i in range(n_props)]
    labels = {
        s: frozenset(p for p in props if rng.random() < p_label) for s in range(n)
    }
    edges = {}
    for s in range(n):
        degree = rng.randint(0, min(max_out_degree, n))
        if degree:
            edges[s] = rng.sample(range(n), degree)
    return ExplicitModel(
        init=0, labels=labels, edges=edges, declared_props=frozenset(props)
    )


def random_atom(rng: random.Random, props: Sequence[str], depth: int = 2) -> AtomExpr:
    """
    Draw a random boolean expression over ``props``, ``true`` and ``false``.
    """
    roll = rng.random()
    if depth == 0 or roll < 0.4:
        if rng.random() < 0.1:
            return Const(rng.random() < 0.5)
        return Atom(rng.choice(props))
    if roll < 0.6:
        return Not(random_atom(rng, props, depth - 1))
    children = tuple(random_atom(rng, props, depth - 1) for _ in range(2))
    return And(children) if roll < 0.8 else Or(children)


def random_formula(
    rng: random.Random,
    props: Sequence[str],
    operator: Optional[Operator] = None,
) -> Formula:
    """
    Draw a random formula with the given (or a random) temporal operator.
    """
    if operator is None:
        operator = rng.choice(list(Operator))
    phi = random_atom(rng, props)
    if operator in (Operator.EU, Operator.AU, Operator.LEADSTO):
        return Formula(operator=operator, left=random_atom(rng, props), right=phi)
    return Formula(operator=operator, right=phi)

