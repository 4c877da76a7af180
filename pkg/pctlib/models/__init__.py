from .explicit import ExplicitModel, load_explicit, parse_explicit, to_explicit
from .generators import generate, generate_philosophers, generate_token_ring
from .gts import GuardedModel, load_gts, parse_gts
from .model import ModelInterface, StateVector, reachable

__all__ = [
    "ExplicitModel",
    "GuardedModel",
    "ModelInterface",
    "StateVector",
    "generate",
    "generate_philosophers",
    "generate_token_ring",
    "load_explicit",
    "load_gts",
    "parse_explicit",
    "parse_gts",
    "reachable",
    "to_explicit",
]
