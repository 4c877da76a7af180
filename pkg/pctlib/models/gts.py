"""
Guarded transition systems: bounded integer variables, guarded simultaneous
assignments and named proposition predicates::

    # two-state toggle
    var x:0..1 init 0;
    rule x == 0 -> x := 1;
    prop done: x == 1;

Expressions use integer literals, variables, ``true``/``false``, the
arithmetic operators ``+ - * / %``, comparisons ``== != < <= > >=``, and the
boolean operators ``!``, ``and``/``&``, ``or``/``|``. The successors of a state
are the distinct results of all rules whose guard holds, in declaration order.
"""
import operator
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Tuple

import pyparsing as pp

from pctlib.errors import ModelError, ValidationError
from pctlib.models.model import ModelInterface, StateVector, unique
from pctlib.utils import validate_names

Env = Tuple[int, ...]
Compiled = Callable[[Env], int]


@dataclass(frozen=True)
class Variable:
    name: str
    lo: int
    hi: int
    init: int

    @property
    def width(self) -> int:
        return max(1, ((self.hi - self.lo).bit_length() + 7) // 8)


@dataclass(frozen=True)
class Rule:
    index: int
    guard: Compiled
    targets: Tuple[int, ...]
    updates: Tuple[Compiled, ...]


@dataclass(frozen=True)
class Proposition:
    name: str
    predicate: Compiled


def _div(a, b):
    if b == 0:
        raise ModelError("division by zero")
    return a // b


def _mod(a, b):
    if b == 0:
        raise ModelError("modulo by zero")
    return a % b


_BINOPS = {
    "*": operator.mul,
    "/": _div,
    "%": _mod,
    "+": operator.add,
    "-": operator.sub,
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _build_grammar() -> pp.ParserElement:
    keywords = "var init rule prop and or true false"
    reserved = pp.MatchFirst(pp.Keyword(k) for k in keywords.split())
    ident = ~reserved + pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    number = pp.Regex(r"\d+").set_parse_action(lambda t: int(t[0]))
    literal = (pp.Keyword("true") | pp.Keyword("false")).set_parse_action(
        lambda t: int(t[0] == "true")
    )
    operand = (
        number.copy().add_parse_action(lambda t: ("lit", t[0]))
        | literal.copy().add_parse_action(lambda t: ("lit", t[0]))
        | ident.copy().set_parse_action(lambda t: ("var", t[0]))
    )
    expr = pp.infix_notation(
        operand,
        [
            (pp.one_of("- !"), 1, pp.OpAssoc.RIGHT, lambda t: ("un", *t[0])),
            (pp.one_of("* / %"), 2, pp.OpAssoc.LEFT, _binary),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _binary),
            (pp.one_of("== != <= >= < >"), 2, pp.OpAssoc.LEFT, _binary),
            (pp.Keyword("and") | "&", 2, pp.OpAssoc.LEFT, _logical("and")),
            (pp.Keyword("or") | "|", 2, pp.OpAssoc.LEFT, _logical("or")),
        ],
    )
    semi = pp.Suppress(";")
    var_decl = pp.Group(
        pp.Keyword("var")
        - ident
        - pp.Suppress(":")
        - number
        - pp.Suppress("..")
        - number
        - pp.Suppress(pp.Keyword("init"))
        - number
        - semi
    )
    assignment = pp.Group(ident + pp.Suppress(":=") - expr)
    rule = pp.Group(
        pp.Keyword("rule")
        - expr
        - pp.Suppress("->")
        - pp.Group(pp.DelimitedList(assignment))
        - semi
    )
    prop = pp.Group(
        pp.Keyword("prop") - ident - pp.Suppress(":") - expr - semi
    )
    grammar = pp.ZeroOrMore(var_decl | rule | prop) + pp.StringEnd()
    grammar.ignore(pp.python_style_comment)
    return grammar


def _binary(tokens):
    items = list(tokens[0])
    node = items[0]
    for idx in range(1, len(items), 2):
        node = ("bin", items[idx], node, items[idx + 1])
    return [node]


def _logical(op):
    def action(tokens):
        return [(op, tuple(tokens[0][::2]))]

    return action


_GRAMMAR = _build_grammar()


def _compile(node, index) -> Compiled:
    kind = node[0]
    if kind == "lit":
        value = node[1]
        return lambda env: value
    if kind == "var":
        if node[1] not in index:
            raise ModelError(f"undeclared variable '{node[1]}'")
        pos = index[node[1]]
        return lambda env: env[pos]
    if kind == "un":
        child = _compile(node[2], index)
        if node[1] == "-":
            return lambda env: -child(env)
        return lambda env: int(not child(env))
    if kind == "bin":
        func = _BINOPS[node[1]]
        left, right = _compile(node[2], index), _compile(node[3], index)
        return lambda env: int(func(left(env), right(env)))
    children = [_compile(c, index) for c in node[1]]
    if kind == "and":
        return lambda env: int(all(c(env) for c in children))
    return lambda env: int(any(c(env) for c in children))


class GuardedModel(ModelInterface):
    """
    A model defined by a guarded transition system.
    """

    def __init__(
        self,
        variables: List[Variable],
        rules: List[Rule],
        props: List[Proposition],
    ):
        self._variables = tuple(variables)
        self._rules = tuple(rules)
        self._props = tuple(props)
        self._offsets = []
        offset = 0
        for var in self._variables:
            self._offsets.append(offset)
            offset += var.width

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return self._variables

    def initial(self) -> StateVector:
        return tuple(v.init for v in self._variables)

    def successors(self, state: StateVector) -> List[StateVector]:
        result = []
        for rule in self._rules:
            if not rule.guard(state):
                continue
            values = [update(state) for update in rule.updates]
            succ = list(state)
            for pos, value in zip(rule.targets, values):
                var = self._variables[pos]
                if not var.lo <= value <= var.hi:
                    raise ModelError(
                        f"rule {rule.index}: value {value} of variable "
                        f"'{var.name}' outside of {var.lo}..{var.hi}"
                    )
                succ[pos] = value
            result.append(tuple(succ))
        return unique(result)

    def propositions(self) -> List[str]:
        return [p.name for p in self._props]

    def labeling(self, state: StateVector) -> FrozenSet[str]:
        return frozenset(p.name for p in self._props if p.predicate(state))

    def encode(self, state: StateVector) -> bytes:
        return b"".join(
            (value - var.lo).to_bytes(var.width, "little")
            for var, value in zip(self._variables, state)
        )

    def decode(self, data: bytes) -> StateVector:
        return tuple(
            var.lo + int.from_bytes(data[offset : offset + var.width], "little")
            for var, offset in zip(self._variables, self._offsets)
        )


def parse_gts(text: str) -> GuardedModel:
    """
    Parse a guarded transition system.

    :raises ModelError: On syntax errors (with line number), undeclared or
            duplicate names, empty ranges and out-of-range initial values.
    """
    try:
        decls = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        raise ModelError(f"syntax error: {err.msg}", err.lineno) from None
    variables = []
    for decl in decls:
        if decl[0] == "var":
            _, name, lo, hi, init = decl
            if lo > hi:
                raise ModelError(f"variable '{name}' has empty range {lo}..{hi}")
            if not lo <= init <= hi:
                raise ModelError(
                    f"initial value {init} of '{name}' outside of {lo}..{hi}"
                )
            variables.append(Variable(name=name, lo=lo, hi=hi, init=init))
    if not variables:
        raise ModelError("model declares no variable")
    try:
        validate_names(variables, "variable")
    except ValidationError as err:
        raise ModelError(str(err)) from None
    index = {v.name: pos for pos, v in enumerate(variables)}
    rules, props = [], []
    for decl in decls:
        if decl[0] == "rule":
            _, guard, assignments = decl
            targets, updates = [], []
            for name, value in assignments:
                if name not in index:
                    raise ModelError(f"assignment to undeclared variable '{name}'")
                if index[name] in targets:
                    raise ModelError(f"variable '{name}' assigned twice in a rule")
                targets.append(index[name])
                updates.append(_compile(value, index))
            rules.append(
                Rule(
                    index=len(rules),
                    guard=_compile(guard, index),
                    targets=tuple(targets),
                    updates=tuple(updates),
                )
            )
        elif decl[0] == "prop":
            _, name, predicate = decl
            props.append(Proposition(name=name, predicate=_compile(predicate, index)))
    try:
        validate_names(props, "proposition")
    except ValidationError as err:
        raise ModelError(str(err)) from None
    return GuardedModel(variables, rules, props)


def load_gts(path) -> GuardedModel:
    with open(path, encoding="utf-8") as f:
        return parse_gts(f.read())
