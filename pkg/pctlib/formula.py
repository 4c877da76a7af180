"""
This module contains the formula language of pctlib: boolean expressions over
atomic propositions (:obj:`AtomExpr`), the nesting-free temporal formulas built
on top of them (:obj:`Formula`), and the three core check tasks every formula
is normalized into (:obj:`CheckTask`).

Surface syntax::

    E( a U b )    A( a U b )    E<> a    A<> a    E[] a    A[] a
    a ==> b       A[]<> a

where ``a`` and ``b`` are boolean expressions over identifiers, ``true`` and
``false``, using ``-``/``!`` (negation), ``and``/``&`` and ``or``/``|``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Collection, FrozenSet, Optional, Tuple, Union

import pyparsing as pp

from pctlib.errors import FormulaSyntaxError, ValidationError

pp.ParserElement.enable_packrat()


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    child: AtomExpr


@dataclass(frozen=True)
class And:
    children: Tuple[AtomExpr, ...]


@dataclass(frozen=True)
class Or:
    children: Tuple[AtomExpr, ...]


AtomExpr = Union[Const, Atom, Not, And, Or]

TRUE = Const(True)
FALSE = Const(False)


class Operator(enum.Enum):
    EU = "EU"
    AU = "AU"
    EF = "EF"
    AF = "AF"
    EG = "EG"
    AG = "AG"
    LEADSTO = "LEADSTO"
    AGAF = "AGAF"


class TaskKind(enum.Enum):
    EU = "EU"
    AU = "AU"
    LEADSTO = "LEADSTO"


_BINARY = (Operator.EU, Operator.AU, Operator.LEADSTO)


@dataclass(frozen=True)
class Formula:
    """
    A formula of the supported fragment. Binary operators (EU, AU, LEADSTO) use
    both ``left`` (psi) and ``right`` (phi); the unary ones only use ``right``.

    :ivar operator: The temporal operator.
    :ivar right: The phi operand.
    :ivar left: The psi operand, ``None`` for unary operators.
    """
    operator: Operator
    right: AtomExpr
    left: Optional[AtomExpr] = None

    def validate(self):
        if (self.operator in _BINARY) != (self.left is not None):
            raise ValidationError(
                f"operator '{self.operator.value}' expects "
                f"{'two operands' if self.operator in _BINARY else 'one operand'}"
            )

    def atoms(self) -> FrozenSet[str]:
        names = atom_names(self.right)
        if self.left is not None:
            names |= atom_names(self.left)
        return names


@dataclass(frozen=True)
class CheckTask:
    """
    A normalized check: one of the three core procedures applied to ``psi`` and
    ``phi``, whose result is flipped when ``negate_result`` is set.
    """
    kind: TaskKind
    psi: AtomExpr
    phi: AtomExpr
    negate_result: bool = False


def negate(expr: AtomExpr) -> AtomExpr:
    if isinstance(expr, Const):
        return Const(not expr.value)
    if isinstance(expr, Not):
        return expr.child
    return Not(expr)


def atom_names(expr: AtomExpr) -> FrozenSet[str]:
    if isinstance(expr, Atom):
        return frozenset([expr.name])
    if isinstance(expr, Not):
        return atom_names(expr.child)
    if isinstance(expr, (And, Or)):
        return frozenset().union(*(atom_names(c) for c in expr.children))
    return frozenset()


def normalize(formula: Formula) -> CheckTask:
    op, phi = formula.operator, formula.right
    if op is Operator.EU:
        return CheckTask(TaskKind.EU, formula.left, phi)
    if op is Operator.AU:
        return CheckTask(TaskKind.AU, formula.left, phi)
    if op is Operator.EF:
        return CheckTask(TaskKind.EU, TRUE, phi)
    if op is Operator.AF:
        return CheckTask(TaskKind.AU, TRUE, phi)
    if op is Operator.AG:
        return CheckTask(TaskKind.EU, TRUE, negate(phi), negate_result=True)
    if op is Operator.EG:
        return CheckTask(TaskKind.AU, TRUE, negate(phi), negate_result=True)
    if op is Operator.LEADSTO:
        return CheckTask(TaskKind.LEADSTO, formula.left, phi)
    return CheckTask(TaskKind.LEADSTO, TRUE, phi)


def eval_atom(
    expr: AtomExpr,
    labeling: Collection[str],
    propositions: Optional[Collection[str]] = None,
) -> bool:
    """
    Evaluate a boolean expression against the set of propositions that hold.

    :param expr: Expression to evaluate.
    :param labeling: Names of the propositions that are true.
    :param propositions: Declared proposition names. If given, any atom outside
            of this collection is rejected.
    :raises ValidationError: If an atom is not a declared proposition.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Atom):
        if propositions is not None and expr.name not in propositions:
            raise ValidationError(f"unknown proposition '{expr.name}'")
        return expr.name in labeling
    if isinstance(expr, Not):
        return not eval_atom(expr.child, labeling, propositions)
    if isinstance(expr, And):
        return all(eval_atom(c, labeling, propositions) for c in expr.children)
    return any(eval_atom(c, labeling, propositions) for c in expr.children)


def compile_atom(
    expr: AtomExpr, propositions: Collection[str]
) -> Callable[[Collection[str]], bool]:
    """
    Turn an expression into a predicate over labelings. Atom names are checked
    against ``propositions`` once, here, rather than on every evaluation.
    """
    unknown = sorted(atom_names(expr) - frozenset(propositions))
    if unknown:
        text = ", ".join(repr(name) for name in unknown)
        raise ValidationError(f"unknown proposition(s): {text}")
    return _compile(expr)


def _compile(expr):
    if isinstance(expr, Const):
        value = expr.value
        return lambda labels: value
    if isinstance(expr, Atom):
        name = expr.name
        return lambda labels: name in labels
    if isinstance(expr, Not):
        child = _compile(expr.child)
        return lambda labels: not child(labels)
    children = [_compile(c) for c in expr.children]
    if isinstance(expr, And):
        return lambda labels: all(c(labels) for c in children)
    return lambda labels: any(c(labels) for c in children)


def render_atom(expr: AtomExpr) -> str:
    if isinstance(expr, Const):
        return "true" if expr.value else "false"
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Not):
        return f"!{_render_operand(expr.child)}"
    sep = " and " if isinstance(expr, And) else " or "
    return sep.join(_render_operand(c) for c in expr.children)


def _render_operand(expr: AtomExpr) -> str:
    if isinstance(expr, (And, Or)):
        return f"({render_atom(expr)})"
    return render_atom(expr)


def render(formula: Formula) -> str:
    op, phi = formula.operator, render_atom(formula.right)
    if op is Operator.EU:
        return f"E({render_atom(formula.left)} U {phi})"
    if op is Operator.AU:
        return f"A({render_atom(formula.left)} U {phi})"
    if op is Operator.LEADSTO:
        return f"({render_atom(formula.left)}) ==> ({phi})"
    prefix = {
        Operator.EF: "E<>",
        Operator.AF: "A<>",
        Operator.EG: "E[]",
        Operator.AG: "A[]",
        Operator.AGAF: "A[]<>",
    }[op]
    return f"{prefix}({phi})"


def _build_grammar(nested: bool) -> pp.ParserElement:
    # With ``nested`` set the grammar also accepts temporal formulas in operand
    # position. It has no parse actions and only serves to tell nesting apart
    # from plain syntax errors.
    E, A, U = pp.Keyword("E"), pp.Keyword("A"), pp.Keyword("U")
    true, false = pp.Keyword("true"), pp.Keyword("false")
    and_kw, or_kw = pp.Keyword("and"), pp.Keyword("or")
    reserved = E | A | U | true | false | and_kw | or_kw
    ident = ~reserved + pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    const = true | false
    if not nested:
        ident.set_parse_action(lambda t: Atom(t[0]))
        const.set_parse_action(lambda t: Const(t[0] == "true"))

    temporal = pp.Forward()
    operand = const | ident
    if nested:
        operand = temporal | operand
    not_op = pp.one_of("- !")
    and_op = and_kw | pp.Literal("&")
    or_op = or_kw | pp.Literal("|")
    if nested:
        expr = pp.infix_notation(
            operand,
            [
                (not_op, 1, pp.OpAssoc.RIGHT),
                (and_op, 2, pp.OpAssoc.LEFT),
                (or_op, 2, pp.OpAssoc.LEFT),
            ],
        )
    else:
        expr = pp.infix_notation(
            operand,
            [
                (not_op, 1, pp.OpAssoc.RIGHT, lambda t: Not(t[0][1])),
                (and_op, 2, pp.OpAssoc.LEFT, lambda t: And(tuple(t[0][::2]))),
                (or_op, 2, pp.OpAssoc.LEFT, lambda t: Or(tuple(t[0][::2]))),
            ],
        )

    lpar, rpar = pp.Suppress("("), pp.Suppress(")")
    until = lpar + expr + pp.Suppress(U) + expr + rpar
    always, eventually = pp.Literal("[]"), pp.Literal("<>")
    rules = [
        (pp.Suppress(E) + until, Operator.EU),
        (pp.Suppress(A) + until, Operator.AU),
        (pp.Suppress(A + always + eventually) + expr, Operator.AGAF),
        (pp.Suppress(E + eventually) + expr, Operator.EF),
        (pp.Suppress(A + eventually) + expr, Operator.AF),
        (pp.Suppress(E + always) + expr, Operator.EG),
        (pp.Suppress(A + always) + expr, Operator.AG),
        (expr + pp.Suppress("==>") + expr, Operator.LEADSTO),
    ]
    alternatives = []
    for rule, op in rules:
        if not nested:
            rule = rule.copy().set_parse_action(_formula_action(op))
        alternatives.append(rule)
    temporal <<= pp.MatchFirst(alternatives[:-1])
    return pp.MatchFirst(alternatives) + pp.StringEnd()


def _formula_action(op: Operator):
    def action(tokens):
        if op in _BINARY:
            return Formula(operator=op, left=tokens[0], right=tokens[1])
        return Formula(operator=op, right=tokens[0])

    return action


_STRICT = _build_grammar(nested=False)
_NESTED = _build_grammar(nested=True)


def parse_formula(text: str) -> Formula:
    """
    Parse a formula of the supported fragment.

    :param text: Formula text, e.g. ``"(-cs_0) ==> (cs_0)"``.
    :return: The parsed formula.
    :raises FormulaSyntaxError: On syntax errors, or if temporal operators are
            nested.
    """
    try:
        return _STRICT.parse_string(text, parse_all=True)[0]
    except pp.ParseException as err:
        offset = len(text[: err.loc].encode("utf-8"))
        strict_error = err
    try:
        _NESTED.parse_string(text, parse_all=True)
    except pp.ParseException:
        raise FormulaSyntaxError(
            f"syntax error: {strict_error.msg}", offset
        ) from None
    raise FormulaSyntaxError("unsupported nesting of temporal operators", offset)
