import pytest

from pctlib.errors import ModelError
from pctlib.models import (
    ExplicitModel,
    generate,
    generate_philosophers,
    generate_token_ring,
    load_explicit,
    parse_explicit,
    parse_gts,
    reachable,
    to_explicit,
)
from pctlib.models.generators import EATING, HAS_LEFT, HUNGRY, THINKING

from .conftest import ksg


class TestExplicit:
    def test_self_loop(self):
        model = ksg(
            """
            init 0
            state 0 [p]
            edge 0 0
            """
        )
        assert model.initial() == (0,)
        assert model.successors((0,)) == [(0,)]
        assert model.labeling((0,)) == {"p"}

    def test_chain(self):
        model = ksg(
            """
            init 0
            state 0 []
            state 1 [q]
            edge 0 1
            """
        )
        assert reachable(model) == [(0,), (1,)]
        assert model.successors((1,)) == []
        assert model.propositions() == ["q"]

    def test_successor_order_follows_file(self):
        model = ksg(
            """
            init 0
            state 0 []
            state 1 []
            state 2 []
            edge 0 2
            edge 0 1
            """
        )
        assert model.successors((0,)) == [(2,), (1,)]

    def test_undeclared_state(self):
        with pytest.raises(ModelError, match="undeclared state") as info:
            parse_explicit("edge 0 1\n")
        assert info.value.line == 1

    def test_missing_init(self):
        with pytest.raises(ModelError, match="missing 'init'"):
            parse_explicit("state 0 []\n")

    def test_syntax_error_line(self):
        with pytest.raises(ModelError) as info:
            parse_explicit("init 0\nstate 0 []\nstat 1 []\n")
        assert info.value.line == 3
        assert str(info.value).startswith("line 3:")

    def test_duplicate_edge(self):
        with pytest.raises(ModelError, match="duplicate edge"):
            parse_explicit("init 0\nstate 0 []\nedge 0 0\nedge 0 0\n")

    def test_comments_and_declared_props(self):
        model = ksg(
            """
            # header
            props r
            init 0
            state 0 [p]  # trailing
            """
        )
        assert model.propositions() == ["p", "r"]

    def test_dump_reparses(self, diamond):
        assert parse_explicit(diamond.dump()) == diamond

    def test_load(self, tmp_path, chain):
        path = tmp_path / "chain.ksg"
        path.write_text(chain.dump())
        assert load_explicit(path) == chain


class TestGuarded:
    TOGGLE = "var x:0..1 init 0; rule x==0 -> x:=1; prop done: x==1;"

    def test_toggle(self):
        model = parse_gts(self.TOGGLE)
        assert model.initial() == (0,)
        assert model.successors((0,)) == [(1,)]
        assert model.successors((1,)) == []
        assert model.labeling((1,)) == {"done"}
        assert model.labeling((0,)) == set()

    def test_simultaneous_assignment(self):
        model = parse_gts(
            """
            var a:0..3 init 1;
            var b:0..3 init 2;
            rule true -> a := b, b := a;
            """
        )
        assert model.successors((1, 2)) == [(2, 1)]

    def test_duplicate_results_removed(self):
        model = parse_gts(
            """
            var x:0..2 init 0;
            rule x < 2 -> x := x + 1;
            rule x == 0 -> x := 1;
            """
        )
        assert model.successors((0,)) == [(1,)]

    def test_range_violation_at_exploration(self):
        model = parse_gts("var x:0..1 init 0; rule true -> x := x + 1;")
        assert model.successors((0,)) == [(1,)]
        with pytest.raises(ModelError, match="outside of 0..1"):
            model.successors((1,))

    def test_syntax_error_has_line(self):
        with pytest.raises(ModelError) as info:
            parse_gts("var x:0..1 init 0;\nrule x == -> x := 1;\n")
        assert info.value.line == 2

    def test_undeclared_variable(self):
        with pytest.raises(ModelError, match="undeclared variable 'y'"):
            parse_gts("var x:0..1 init 0; rule y == 0 -> x := 1;")

    def test_assignment_to_undeclared_variable(self):
        with pytest.raises(ModelError, match="assignment to undeclared variable 'z'"):
            parse_gts("var x:0..1 init 0; rule true -> x := 1, z := 0;")

    def test_variable_assigned_twice(self):
        with pytest.raises(ModelError, match="assigned twice"):
            parse_gts("var x:0..3 init 0; rule true -> x := 1, x := 2;")

    def test_three_assignments_in_one_rule(self):
        model = parse_gts(
            """
            var a:0..3 init 0;
            var b:0..3 init 0;
            var c:0..3 init 0;
            rule a == 0 -> a := 1, b := 2, c := a + 3;
            """
        )
        assert model.successors((0, 0, 0)) == [(1, 2, 3)]

    def test_initial_value_out_of_range(self):
        with pytest.raises(ModelError, match="initial value"):
            parse_gts("var x:0..1 init 3;")

    def test_duplicate_variable(self):
        with pytest.raises(ModelError, match="duplicate variable"):
            parse_gts("var x:0..1 init 0; var x:0..2 init 0;")

    def test_encoding_is_canonical(self):
        model = parse_gts("var x:0..300 init 0; var y:5..7 init 5;")
        states = [(x, y) for x in (0, 1, 255, 256, 300) for y in (5, 6, 7)]
        encodings = {model.encode(s) for s in states}
        assert len(encodings) == len(states)
        assert model.encode((256, 5)) != model.encode((0, 6))

    def test_decode_restores_vector(self):
        model = parse_gts("var x:0..300 init 0; var y:-2..7 init 5;")
        assert model.decode(model.encode((256, -1))) == (256, -1)


class TestTokenRing:
    def test_initial_labeling(self):
        model = generate_token_ring(2)
        assert not any(name.startswith("cs_") for name in model.labeling(model.initial()))

    def test_only_token_holder_is_critical(self):
        model = generate_token_ring(3)
        for state in reachable(model):
            critical = [i for i in range(3) if f"cs_{i}" in model.labeling(state)]
            assert critical in ([], [state[0]])

    def test_state_count(self):
        # token position x holder in {idle, waiting, critical} x others in {idle, waiting}
        assert len(reachable(generate_token_ring(4))) == 4 * 3 * 2**3

    def test_deterministic(self):
        assert reachable(generate_token_ring(3)) == reachable(generate_token_ring(3))

    @pytest.mark.parametrize("n", [1, 31])
    def test_size_range(self, n):
        with pytest.raises(ModelError):
            generate_token_ring(n)


class TestPhilosophers:
    def test_initial_labeling_empty(self):
        model = generate_philosophers(2)
        assert model.labeling(model.initial()) == set()

    def test_deadlock_reachable(self):
        model = generate_philosophers(3)
        deadlock = (HAS_LEFT,) * 3
        assert deadlock in reachable(model)
        assert model.successors(deadlock) == []

    def test_neighbours_never_eat_together(self):
        model = generate_philosophers(4)
        for state in reachable(model):
            for i in range(4):
                assert not (state[i] == EATING and state[(i + 1) % 4] == EATING)

    def test_hungry_label(self):
        model = generate_philosophers(2)
        assert model.labeling((HUNGRY, THINKING)) == {"hungry_0"}
        assert model.labeling((HAS_LEFT, EATING)) == {"hungry_0", "eat_1"}

    @pytest.mark.parametrize("n", [1, 17])
    def test_size_range(self, n):
        with pytest.raises(ModelError):
            generate_philosophers(n)


class TestGenerate:
    def test_families(self):
        assert reachable(generate("token-ring:3")) == reachable(generate_token_ring(3))
        assert reachable(generate("philosophers:2")) == reachable(
            generate_philosophers(2)
        )

    @pytest.mark.parametrize("spec", ["ring:3", "token-ring", "token-ring:x"])
    def test_bad_specs(self, spec):
        with pytest.raises(ModelError):
            generate(spec)

    def test_to_explicit(self):
        model = generate_token_ring(3)
        explicit = to_explicit(model)
        assert isinstance(explicit, ExplicitModel)
        assert explicit.init == 0
        assert len(explicit.labels) == len(reachable(model))
        assert explicit.labeling((0,)) == model.labeling(model.initial())
        assert set(explicit.propositions()) == set(model.propositions())
