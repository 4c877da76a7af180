"""
Explicit Kripke structures and the line-oriented ``.ksg`` format::

    # comment
    props p q r          (optional: declare propositions no state carries)
    init 0
    state 0 [p q]
    state 1 []
    edge 0 1
    edge 1 1

Successors are reported in file edge order.
"""
import pathlib
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Union

from pctlib.errors import ModelError
from pctlib.models.model import ModelInterface, StateVector, reachable

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_INIT = re.compile(r"init\s+(\d+)$")
_STATE = re.compile(r"state\s+(\d+)\s*\[([^\]]*)\]$")
_EDGE = re.compile(r"edge\s+(\d+)\s+(\d+)$")
_PROPS = re.compile(r"props((?:\s+" + _IDENT + r")*)$")
_LABEL = re.compile(_IDENT + r"$")


@dataclass
class ExplicitModel(ModelInterface):
    """
    A Kripke structure with every state and edge listed. States are identified
    by non-negative integers and encoded as one-component state vectors.

    :ivar init: Identifier of the initial state.
    :ivar labels: Labeling of every declared state.
    :ivar edges: Ordered successor lists; states without entry are dead.
    :ivar declared_props: Propositions declared in addition to those carried by
            some state.
    """
    init: int
    labels: Dict[int, FrozenSet[str]] = field(default_factory=dict)
    edges: Dict[int, List[int]] = field(default_factory=dict)
    declared_props: FrozenSet[str] = frozenset()

    def validate(self):
        if self.init not in self.labels:
            raise ModelError(f"initial state {self.init} is not declared")
        for src, dsts in self.edges.items():
            if src not in self.labels:
                raise ModelError(f"edge from undeclared state {src}")
            for dst in dsts:
                if dst not in self.labels:
                    raise ModelError(f"edge to undeclared state {dst}")
            if len(set(dsts)) != len(dsts):
                raise ModelError(f"duplicate edge from state {src}")

    @property
    def num_edges(self) -> int:
        return sum(len(dsts) for dsts in self.edges.values())

    def initial(self) -> StateVector:
        return (self.init,)

    def successors(self, state: StateVector) -> List[StateVector]:
        return [(dst,) for dst in self.edges.get(state[0], ())]

    def propositions(self) -> List[str]:
        names = set(self.declared_props)
        for labels in self.labels.values():
            names.update(labels)
        return sorted(names)

    def labeling(self, state: StateVector) -> FrozenSet[str]:
        return self.labels[state[0]]

    def encode(self, state: StateVector) -> bytes:
        return state[0].to_bytes(4, "little")

    def decode(self, data: bytes) -> StateVector:
        return (int.from_bytes(data, "little"),)

    def dump(self) -> str:
        lines = []
        if self.declared_props:
            lines.append("props " + " ".join(sorted(self.declared_props)))
        lines.append(f"init {self.init}")
        for sid in sorted(self.labels):
            lines.append(f"state {sid} [{' '.join(sorted(self.labels[sid]))}]")
        for src in sorted(self.edges):
            lines.extend(f"edge {src} {dst}" for dst in self.edges[src])
        return "\n".join(lines) + "\n"


def parse_explicit(text: str) -> ExplicitModel:
    """
    Parse the contents of a ``.ksg`` file.

    :raises ModelError: With the offending line number on malformed directives,
            undeclared states, duplicate declarations or a missing ``init``.
    """
    init: Optional[int] = None
    labels: Dict[int, FrozenSet[str]] = {}
    edges: Dict[int, List[int]] = {}
    props = set()
    edge_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _INIT.match(line)
        if match:
            if init is not None:
                raise ModelError("duplicate 'init' directive", lineno)
            init = int(match.group(1))
            continue
        match = _STATE.match(line)
        if match:
            sid = int(match.group(1))
            if sid in labels:
                raise ModelError(f"state {sid} declared twice", lineno)
            names = match.group(2).replace(",", " ").split()
            for name in names:
                if not _LABEL.match(name):
                    raise ModelError(f"invalid proposition name '{name}'", lineno)
            labels[sid] = frozenset(names)
            continue
        match = _EDGE.match(line)
        if match:
            src, dst = int(match.group(1)), int(match.group(2))
            dsts = edges.setdefault(src, [])
            if dst in dsts:
                raise ModelError(f"duplicate edge {src} -> {dst}", lineno)
            dsts.append(dst)
            edge_lines.append((lineno, src, dst))
            continue
        match = _PROPS.match(line)
        if match:
            props.update(match.group(1).split())
            continue
        raise ModelError(f"cannot parse directive '{line}'", lineno)
    for lineno, src, dst in edge_lines:
        for sid in (src, dst):
            if sid not in labels:
                raise ModelError(f"undeclared state {sid}", lineno)
    if init is None:
        raise ModelError("missing 'init' directive")
    if init not in labels:
        raise ModelError(f"undeclared state {init} used as 'init'")
    return ExplicitModel(
        init=init, labels=labels, edges=edges, declared_props=frozenset(props)
    )


def load_explicit(path: Union[str, pathlib.Path]) -> ExplicitModel:
    with open(path, encoding="utf-8") as f:
        return parse_explicit(f.read())


def to_explicit(model: ModelInterface, limit: int = 10**6) -> ExplicitModel:
    """
    Expand the reachable part of any model into an :obj:`ExplicitModel`. State
    identifiers follow breadth-first discovery order, so the initial state is 0.

    :raises ValidationError: If more than ``limit`` states are reachable.
    """
    if isinstance(model, ExplicitModel):
        return model
    order = reachable(model, limit)
    index = {state: sid for sid, state in enumerate(order)}
    labels, edges = {}, {}
    for sid, state in enumerate(order):
        labels[sid] = frozenset(model.labeling(state))
        succ = [index[s] for s in model.successors(state)]
        if succ:
            edges[sid] = succ
    return ExplicitModel(
        init=0,
        labels=labels,
        edges=edges,
        declared_props=frozenset(model.propositions()),
    )
