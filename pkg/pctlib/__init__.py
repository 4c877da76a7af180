from .checker import Stats, Verdict, check
from .formula import Formula, parse_formula, render
from .options import CheckOptions, Variant
from .oracle import oracle_check

__all__ = [
    "CheckOptions",
    "Formula",
    "Stats",
    "Variant",
    "Verdict",
    "check",
    "oracle_check",
    "parse_formula",
    "render",
]
