import os
import random
import statistics

import pytest

from pctlib import CheckOptions, Variant, check, oracle_check, parse_formula
from pctlib.checker import REASONS, Stats
from pctlib.errors import CapacityError, CheckTimeout, MemoryCapExceeded, ValidationError
from pctlib.formula import Operator
from pctlib.models import generate, generate_philosophers, generate_token_ring
from pctlib.models.generators import HAS_LEFT
from pctlib.oracle import random_formula, random_model

from .conftest import VARIANTS, options

PROPS = ["p0", "p1", "p2"]


def sweep(seeds, workers_choices=(1, 4)):
    for seed in seeds:
        rng = random.Random(seed)
        model = random_model(seed, rng.randint(10, 200), max_out_degree=4)
        for operator in Operator:
            formula = random_formula(rng, PROPS, operator)
            expected = oracle_check(model, formula)
            for variant in VARIANTS:
                for workers in workers_choices:
                    verdict = check(model, formula, options(variant, workers))
                    assert verdict.holds is expected, (seed, formula, variant, workers)
                    assert verdict.reason in REASONS


def test_agrees_with_oracle():
    sweep(range(12))


@pytest.mark.slow
def test_agrees_with_oracle_many_models():
    sweep(range(500))


class TestExamples:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_chain(self, chain, variant):
        assert check(chain, "A(p U q)", options(variant)).holds
        assert check(chain, "E(p U q)", options(variant)).holds
        assert not check(chain, "A[](p)", options(variant)).holds

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_two_cycle(self, two_cycle, variant):
        assert check(two_cycle, "E[](p)", options(variant)).holds
        verdict = check(two_cycle, "A<>(!p)", options(variant))
        assert not verdict.holds
        assert verdict.reason == "no-clearable-leaf"

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_dead_end(self, dead_end, variant):
        verdict = check(dead_end, "A(p U q)", options(variant))
        assert not verdict.holds
        assert verdict.reason == "dead-state"
        # A finite maximal path staying in p counts for E[].
        assert check(dead_end, "E[](p)", options(variant)).holds

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_self_loop(self, self_loop, variant):
        assert check(self_loop, "A[](p)", options(variant)).holds
        assert check(self_loop, "A[]<>(p)", options(variant)).holds
        assert check(self_loop, "(p) ==> (p)", options(variant)).holds

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_diamond(self, diamond, variant):
        verdict = check(diamond, "A(p U q)", options(variant))
        assert verdict.holds
        assert verdict.reason == "root-cleared"

    def test_philosophers_deadlock(self):
        model = generate_philosophers(2)
        verdict = check(model, "A<>(eat_0)", options())
        assert not verdict.holds
        assert verdict.reason == "dead-state"
        assert check(model, "E<>(eat_0)", options()).holds

    def test_token_ring_liveness(self):
        model = generate_token_ring(4)
        for variant in VARIANTS:
            assert check(model, "A<>(tok_1)", options(variant, 2)).holds
            assert check(model, "(wait_0) ==> (cs_0)", options(variant, 2)).holds
            assert not check(model, "A<>(cs_1)", options(variant, 2)).holds

    @pytest.mark.parametrize("workers", [1, 2])
    def test_token_ring_negated_request(self, workers):
        model = generate_token_ring(2)
        formula = "(-cs_0) ==> (cs_0)"
        expected = oracle_check(model, formula)
        for variant in VARIANTS:
            assert check(model, formula, options(variant, workers)).holds is expected

    def test_default_options(self, chain):
        assert check(chain, parse_formula("E<>(q)")).holds


class TestMetamorphic:
    IDENTITIES = [
        ("A[](%s)", "E<>(!(%s))", True),
        ("E[](%s)", "A<>(!(%s))", True),
        ("A[]<>(%s)", "(true) ==> (%s)", False),
        ("E<>(%s)", "E(true U %s)", False),
        ("A<>(%s)", "A(true U %s)", False),
    ]

    @pytest.mark.parametrize("left, right, negated", IDENTITIES)
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_identities(self, left, right, negated, variant):
        for seed in range(15):
            model = random_model(seed, 8, max_out_degree=2)
            for atom in ("p0", "p1 and !p2", "p0 or p1"):
                a = check(model, left % atom, options(variant, 2)).holds
                b = check(model, right % atom, options(variant, 2)).holds
                assert a == (not b if negated else b)


class TestWitness:
    def assert_path(self, model, verdict):
        assert verdict.trace[0] == model.initial()
        for src, dst in zip(verdict.trace, verdict.trace[1:]):
            assert dst in model.successors(src)
        assert len(verdict.witness) == len(verdict.trace)

    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("workers", [1, 3])
    def test_invariant_violation(self, variant, workers):
        model = generate_token_ring(4)
        verdict = check(
            model, "A[](!cs_2)", options(variant, workers, witness=True)
        )
        assert not verdict.holds
        assert verdict.reason == "forward-witness"
        self.assert_path(model, verdict)
        assert "cs_2" in model.labeling(verdict.trace[-1])

    def test_dead_state(self):
        model = generate_philosophers(2)
        verdict = check(model, "A<>(eat_0)", options(witness=True))
        self.assert_path(model, verdict)
        assert model.successors(verdict.trace[-1]) == []
        assert verdict.trace[-1] == (HAS_LEFT, HAS_LEFT)

    def test_forward_violation(self, chain):
        verdict = check(chain, "A(p U false)", options(witness=True))
        assert verdict.reason == "forward-violation"
        self.assert_path(chain, verdict)
        assert verdict.trace[-1] == (2,)

    def test_violation_at_initial_state(self, self_loop):
        verdict = check(self_loop, "A[](!p)", options(witness=True))
        assert verdict.witness == [0]
        assert verdict.trace == [(0,)]

    def test_no_witness_unless_requested(self):
        verdict = check(generate_token_ring(3), "A[](!cs_1)", options())
        assert not verdict.holds
        assert verdict.witness is None

    def test_no_witness_when_holding(self, self_loop):
        verdict = check(self_loop, "A[](p)", options(witness=True))
        assert verdict.holds
        assert verdict.witness is None


class TestStats:
    def test_keys(self, chain):
        data = check(chain, "A(p U q)", options()).stats.to_dict()
        assert set(data) == {
            "states",
            "forward_edges",
            "reverse_edges_stored",
            "parent_links_stored",
            "suc_decrements",
            "collect_rounds",
            "steals",
            "phase_times_forward",
            "phase_times_backward",
            "peak_memory_estimate",
        }

    def test_rg_invariants(self):
        model = generate_token_ring(6)
        stats = check(model, "A<>(tok_1)", options(early_stop=False)).stats
        assert stats.parent_links_stored == 0
        assert stats.reverse_edges_stored == stats.forward_edges
        assert 0 < stats.suc_decrements <= stats.reverse_edges_stored
        assert stats.collect_rounds == 0

    @pytest.mark.slow
    def test_rg_invariants_token_ring_12(self):
        opts = CheckOptions(table_bits=18, early_stop=False)
        stats = check(generate_token_ring(12), "A<>(tok_1)", opts).stats
        assert stats.parent_links_stored == 0
        assert stats.reverse_edges_stored == stats.forward_edges
        assert stats.suc_decrements <= stats.reverse_edges_stored
        assert stats.forward_edges / stats.states >= 2

    @pytest.mark.slow
    def test_rpg_invariants_token_ring_12(self):
        opts = CheckOptions(variant=Variant.RPG, table_bits=18, early_stop=False)
        stats = check(generate_token_ring(12), "A<>(tok_1)", opts).stats
        assert stats.reverse_edges_stored == 0
        assert stats.parent_links_stored == stats.states - 1
        assert stats.forward_edges / stats.states >= 2

    def test_rpg_invariants(self):
        model = generate_token_ring(6)
        stats = check(
            model, "A<>(tok_1)", options(Variant.RPG, 3, early_stop=False)
        ).stats
        assert stats.reverse_edges_stored == 0
        assert stats.parent_links_stored == stats.states - 1
        assert stats.collect_rounds <= stats.states

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_leadsto_explores_everything(self, variant):
        model = generate_token_ring(5)
        stats = check(model, "(wait_0) ==> (cs_0)", options(variant)).stats
        assert stats.states == 5 * 3 * 2**4
        assert stats.peak_memory_estimate > 0
        if variant is Variant.RPG:
            assert stats.parent_links_stored == stats.states - 1

    def test_eu_has_no_backward_phase(self, chain):
        stats = check(chain, "E<>(q)", options()).stats
        assert stats.phase_times["backward"] == 0.0
        assert stats.suc_decrements == 0

    def test_stats_defaults(self):
        assert Stats().to_dict()["phase_times_forward"] == 0.0


class TestEarlyStop:
    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize(
        "formula",
        ["A<>(tok_1)", "A<>(cs_1)", "E<>(cs_2)", "A[](!cs_2)", "(wait_1) ==> (cs_1)"],
    )
    def test_same_verdict(self, variant, formula):
        model = generate_token_ring(4)
        fast = check(model, formula, options(variant, 2))
        full = check(model, formula, options(variant, 2, early_stop=False))
        assert fast.holds == full.holds
        assert full.stats.states >= fast.stats.states

    def test_full_exploration_without_early_stop(self):
        model = generate_token_ring(4)
        verdict = check(model, "E<>(false)", options(early_stop=False))
        assert not verdict.holds
        assert verdict.reason == "region-exhausted"
        assert verdict.stats.states == 4 * 3 * 2**3


@pytest.mark.slow
@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize(
    "spec, formula, holds",
    [
        ("token-ring:10", "A<>(tok_1)", True),
        ("token-ring:10", "A<>(cs_1)", False),
        ("philosophers:8", "E<>(eat_0 and eat_2)", True),
        ("philosophers:8", "A<>(eat_0)", False),
    ],
)
def test_deterministic_verdicts(spec, formula, holds, variant):
    model = generate(spec)
    outcomes = set()
    for _ in range(20):
        verdict = check(model, formula, options(variant, 8, early_stop=False))
        outcomes.add((verdict.holds, verdict.reason, verdict.stats.states))
    assert len(outcomes) == 1
    assert outcomes.pop()[0] is holds


class TestErrors:
    def test_unknown_proposition(self, chain):
        with pytest.raises(ValidationError, match="unknown proposition"):
            check(chain, "E<>(nope)", options())

    def test_invalid_options(self, chain):
        with pytest.raises(ValidationError):
            check(chain, "E<>(q)", CheckOptions(workers=0))
        with pytest.raises(ValidationError):
            check(chain, "E<>(q)", CheckOptions(table_bits=31))

    def test_several_workers_need_fork(self, chain, monkeypatch):
        monkeypatch.setattr("pctlib.options.can_fork", lambda: False)
        assert check(chain, "E<>(q)", options()).holds
        with pytest.raises(ValidationError, match="fork"):
            check(chain, "E<>(q)", options(workers=2))

    def test_timeout(self):
        with pytest.raises(CheckTimeout):
            check(generate_token_ring(8), "A<>(tok_1)", options(timeout=1e-9))

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_max_states(self, variant):
        with pytest.raises(MemoryCapExceeded):
            check(generate_token_ring(4), "A<>(cs_1)", options(variant, 2, max_states=10))

    def test_table_full(self):
        opts = CheckOptions(table_bits=4)
        with pytest.raises(CapacityError) as info:
            check(generate_token_ring(4), "E<>(false)", opts)
        assert info.value.required == 32


def forward_seconds(model, formula, workers):
    times = []
    states = set()
    for _ in range(3):
        verdict = check(model, formula, CheckOptions(workers=workers, table_bits=22))
        assert not verdict.holds
        times.append(verdict.stats.phase_times["forward"])
        states.add(verdict.stats.states)
    assert len(states) == 1
    return statistics.median(times), states.pop()


@pytest.mark.slow
@pytest.mark.skipif(
    len(os.sched_getaffinity(0)) < 4, reason="needs at least 4 available cores"
)
def test_parallel_speedup():
    model = generate_token_ring(16)
    one, states = forward_seconds(model, "E<>(false)", 1)
    four, same_states = forward_seconds(model, "E<>(false)", 4)
    assert states == same_states == 16 * 3 * 2**15
    assert one / four >= 2.0
