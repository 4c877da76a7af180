import textwrap

import pytest

from pctlib.models import parse_explicit
from pctlib.options import CheckOptions, Variant

VARIANTS = [Variant.RG, Variant.RPG]


def ksg(text):
    return parse_explicit(textwrap.dedent(text))


def options(variant=Variant.RG, workers=1, **kwargs):
    return CheckOptions(variant=variant, workers=workers, table_bits=16, **kwargs)


@pytest.fixture
def chain():
    # p -> p -> q
    return ksg(
        """
        init 0
        state 0 [p]
        state 1 [p]
        state 2 [q]
        edge 0 1
        edge 1 2
        """
    )


@pytest.fixture
def two_cycle():
    return ksg(
        """
        init 0
        state 0 [p]
        state 1 [p]
        edge 0 1
        edge 1 0
        """
    )


@pytest.fixture
def diamond():
    return ksg(
        """
        init 0
        state 0 [p]
        state 1 [p]
        state 2 [p]
        state 3 [q]
        edge 0 1
        edge 0 2
        edge 1 3
        edge 2 3
        """
    )


@pytest.fixture
def dead_end():
    # p -> p, and the second state has no successor.
    return ksg(
        """
        props q
        init 0
        state 0 [p]
        state 1 [p]
        edge 0 1
        """
    )


@pytest.fixture
def self_loop():
    return ksg(
        """
        init 0
        state 0 [p]
        edge 0 0
        """
    )
