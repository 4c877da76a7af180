import random

import pytest

from pctlib.atomic import AtomicCounter
from pctlib.backward import (
    NO_CLEARABLE_LEAF,
    OBLIGATIONS_CLEARED,
    ROOT_CLEARED,
    TargetCondition,
    TargetKind,
    backward_rg,
    backward_rpg,
    test_cleared as all_successors_cleared,
)
from pctlib.checker import check
from pctlib.explore import SeedSet, forward_check_a, forward_leadsto
from pctlib.formula import TRUE, Atom, Not
from pctlib.models import generate_philosophers, generate_token_ring
from pctlib.options import Variant
from pctlib.oracle import oracle_check, random_model
from pctlib.store import StateStore

from .conftest import VARIANTS, ksg, options

P, Q = Atom("p"), Atom("q")


def backward(model, psi, phi, variant=Variant.RG, workers=1, leadsto=False, **kwargs):
    opts = options(variant, workers, **kwargs)
    store = StateStore(model, workers, table_bits=opts.table_bits)
    forward = forward_leadsto if leadsto else forward_check_a
    fwd = forward(model, psi, phi, store, opts)
    assert fwd.ok
    if leadsto:
        target = TargetCondition(
            TargetKind.OBLIGATIONS_ZERO, fwd.root, fwd.seeds.obligations
        )
    else:
        target = TargetCondition(TargetKind.ROOT_CLEARED, fwd.root)
    if variant is Variant.RG:
        result = backward_rg(store, fwd.seeds, target, opts)
    else:
        result = backward_rpg(store, fwd.seeds, target, model, opts)
    return result, store


@pytest.mark.parametrize("variant", VARIANTS)
def test_chain_clears_root(chain, variant):
    result, _ = backward(chain, P, Q, variant)
    assert result.holds
    assert result.reason == ROOT_CLEARED
    assert result.suc_decrements == 2
    assert result.collect_rounds == 0


@pytest.mark.parametrize("variant", VARIANTS)
def test_cycle_never_clears(two_cycle, variant):
    result, store = backward(two_cycle, P, Not(P), variant)
    assert not result.holds
    assert result.reason == NO_CLEARABLE_LEAF
    assert store.suc_get(0) == store.suc_get(1) == 1
    if variant is Variant.RPG:
        assert result.collect_rounds == 1


def test_diamond_needs_one_collecting_round(diamond):
    result, _ = backward(diamond, P, Q, Variant.RPG)
    assert result.holds
    assert result.reason == ROOT_CLEARED
    assert result.collect_rounds == 1


def test_rg_work_bounded_by_reverse_edges(diamond):
    result, store = backward(diamond, P, Q, Variant.RG, early_stop=False)
    assert result.holds
    assert result.suc_decrements == store.reverse_edges_stored == 4


def test_all_successors_cleared(diamond):
    store = StateStore(diamond, 1, table_bits=8)
    ids = [store.intern((s,), 0)[0] for s in range(4)]
    for sid in ids:
        store.suc_set(sid, 1)
    store.suc_set(ids[3], 0)
    assert all_successors_cleared(store, diamond, ids[1])
    assert not all_successors_cleared(store, diamond, ids[0])
    # Vacuously true without successors.
    assert all_successors_cleared(store, diamond, ids[3])


def test_undiscovered_successor_is_not_cleared(chain):
    store = StateStore(chain, 1, table_bits=8)
    sid = store.intern((1,), 0)[0]
    assert not all_successors_cleared(store, chain, sid)


@pytest.mark.parametrize("backward_pass", [backward_rg, backward_rpg])
def test_no_obligation_short_circuits(chain, backward_pass):
    store = StateStore(chain, 1, table_bits=8)
    target = TargetCondition(TargetKind.OBLIGATIONS_ZERO, 0, AtomicCounter())
    if backward_pass is backward_rg:
        result = backward_pass(store, SeedSet(store), target, options())
    else:
        result = backward_pass(store, SeedSet(store), target, chain, options())
    assert result.holds
    assert result.reason == OBLIGATIONS_CLEARED


@pytest.mark.parametrize("variant", VARIANTS)
def test_leadsto_cycle_keeps_obligation(variant):
    model = ksg(
        """
        props q
        init 0
        state 0 [p]
        state 1 []
        edge 0 1
        edge 1 0
        """
    )
    result, _ = backward(model, P, Q, variant, leadsto=True)
    assert not result.holds
    assert result.reason == NO_CLEARABLE_LEAF


@pytest.mark.parametrize("variant", VARIANTS)
def test_leadsto_blocked_state_keeps_obligation(dead_end, variant):
    result, store = backward(dead_end, P, Q, variant, leadsto=True)
    assert not result.holds
    assert store.is_blocked(store.lookup((1,)))


@pytest.mark.parametrize("variant", VARIANTS)
def test_leadsto_obligations_cleared(chain, variant):
    result, _ = backward(chain, P, Q, variant, leadsto=True)
    assert result.holds
    assert result.reason == OBLIGATIONS_CLEARED


@pytest.mark.parametrize("workers", [1, 2, 4])
@pytest.mark.parametrize(
    "model, psi, phi, leadsto, expected",
    [
        (generate_token_ring(5), Atom("wait_0"), Atom("cs_0"), True, True),
        (generate_token_ring(5), TRUE, Atom("tok_1"), False, True),
        (generate_token_ring(5), TRUE, Atom("cs_1"), False, False),
        (generate_philosophers(3), Atom("hungry_0"), Atom("eat_0"), True, False),
    ],
)
def test_variants_agree(model, psi, phi, leadsto, expected, workers):
    for variant in VARIANTS:
        result, _ = backward(model, psi, phi, variant, workers, leadsto=leadsto)
        assert result.holds is expected


@pytest.mark.parametrize("repeat", range(20))
@pytest.mark.parametrize("formula", ["A(p1 U !p1)", "(p0) ==> (p2)"])
def test_rpg_workers_leave_rounds_together(formula, repeat):
    # Several collecting rounds with early stop: every worker must leave the
    # round loop at the same barrier, or the run would hit its timeout.
    rng = random.Random(52)
    model = random_model(52, rng.randint(10, 200), max_out_degree=4)
    verdict = check(model, formula, options(Variant.RPG, 4, timeout=10.0))
    assert verdict.holds == oracle_check(model, formula)
