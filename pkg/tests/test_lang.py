# tests/test_lang.py
import pytest

from lang.evaluator import EvaluationError, StepBudgetExceeded, count_parameters, evaluate, \
    instantiate_parameters, values_equal
from lang.primitives import PRIMITIVES, load_manifest
from lang.program import Abstraction, Application, Index, InferenceError, Invented, ParseError, \
    UnknownPrimitiveError, infer_type, program_size, render_program
from lang.types import Context, OccursCheckError, TypeVariable, UnificationError, arrow, parse_type, \
    render_type, tbool, tint, tlist
from tests.conftest import parse, sample_programs

MAP_DOUBLE = ("(lambda (Y (lambda (lambda (if (empty? $0) nil "
              "(cons (+ (car $0) (car $0)) ($1 (cdr $0)))))) $0))")


class TestTypes:

    def test_parse_and_render(self):
        assert render_type(parse_type("ilist→int")) == "ilist→int"
        assert render_type(parse_type("(t0->t1)->list(t0)->list(t1)")) == "(t0→t1)→list(t0)→list(t1)"
        assert parse_type("ilist") == tlist(tint)

    def test_unification_is_symmetric(self):
        a = arrow(TypeVariable(0), tint)
        b = arrow(tbool, TypeVariable(1))
        left = Context(2).unify(a, b)
        right = Context(2).unify(b, a)
        assert a.apply(left) == b.apply(left) == arrow(tbool, tint)
        assert a.apply(right) == arrow(tbool, tint)

    def test_occurs_check(self):
        with pytest.raises(OccursCheckError):
            Context(1).unify(TypeVariable(0), tlist(TypeVariable(0)))

    def test_constructor_mismatch(self):
        with pytest.raises(UnificationError):
            Context().unify(tint, tbool)


class TestParsing:

    def test_identity(self):
        assert parse("(lambda $0)") == Abstraction(Index(0))

    def test_application_is_curried(self):
        expected = Abstraction(Application(Application(PRIMITIVES["+"], Index(0)), Index(0)))
        assert parse("(lambda (+ $0 $0))") == expected

    def test_unbalanced_parenthesis_reports_offset(self):
        with pytest.raises(ParseError) as error:
            parse("(lambda ($1)")
        assert error.value.offset == 12

    def test_unknown_identifier(self):
        with pytest.raises(UnknownPrimitiveError):
            parse("(lambda (frobnicate $0))")

    def test_round_trip(self):
        for text in ["(lambda $0)", "map", MAP_DOUBLE, "(lambda (fold $0 0 (lambda (lambda (+ $0 $1)))))"]:
            program = parse(text)
            assert parse(render_program(program)) == program

    def test_invention_round_trip(self):
        invention = Invented(parse("(lambda (+ $0 $0))"), "f0")
        text = render_program(Abstraction(Application(invention, Index(0))))
        assert text.startswith("(lambda (#(lambda")
        assert parse(text) == Abstraction(Application(invention, Index(0)))

    def test_program_size(self):
        assert program_size(parse("(lambda (+ $0 $0))")) == 4
        invention = Invented(parse("(lambda (+ $0 $0))"), "f0")
        assert program_size(Abstraction(Application(invention, Index(0)))) == 3


class TestInference:

    def test_identity_is_polymorphic(self):
        assert render_type(infer_type(parse("(lambda $0)"))) == "t0→t0"

    def test_declared_types_force_result(self):
        assert render_type(infer_type(parse("(lambda (+ $0 1))"))) == "int→int"

    def test_map_double_type(self):
        assert render_type(infer_type(parse(MAP_DOUBLE))) == "ilist→ilist"

    def test_ill_typed(self):
        with pytest.raises(InferenceError):
            infer_type(parse("(+ nil 1)"))

    def test_self_application_fails_occurs_check(self):
        with pytest.raises(InferenceError):
            infer_type(parse("(lambda ($0 $0))"))


class TestEvaluator:

    def test_arithmetic(self):
        assert evaluate(parse("(lambda (+ $0 $0))"), [3]) == 6

    def test_y_recursion(self):
        assert evaluate(parse(MAP_DOUBLE), [[1, 2, 3]]) == [2, 4, 6]
        assert evaluate(parse(MAP_DOUBLE), [[]]) == []

    def test_if_is_lazy(self):
        assert evaluate(parse("(lambda (if (empty? $0) 0 (car $0)))"), [[]]) == 0

    def test_runtime_error(self):
        with pytest.raises(EvaluationError):
            evaluate(parse("(lambda (car $0))"), [[]])

    def test_nontermination_hits_budget(self):
        with pytest.raises(StepBudgetExceeded):
            evaluate(parse("(lambda (Y (lambda (lambda ($1 $0))) $0))"), [1], step_budget=100)

    def test_deep_recursion_runs_on_the_machine_stack(self):
        xs = list(range(3000))
        assert evaluate(parse(MAP_DOUBLE), [xs], step_budget=1_000_000) == [2 * x for x in xs]

    def test_deep_recursion_still_hits_budget(self):
        with pytest.raises(StepBudgetExceeded):
            evaluate(parse(MAP_DOUBLE), [list(range(3000))], step_budget=1000)

    def test_invention_evaluates_its_definition(self):
        double = Invented(parse("(lambda (+ $0 $0))"), "f0")
        assert evaluate(Abstraction(Application(double, Index(0))), [5]) == 10

    def test_values_equal_is_type_strict(self):
        assert not values_equal(True, 1)
        assert values_equal([1, [2]], [1, [2]])
        assert not values_equal([1], [1, 2])

    def test_parameters_fill_in_preorder(self):
        skeleton = parse("(lambda (+. REAL (*. $0 REAL)))")
        assert count_parameters(skeleton) == 2
        assert evaluate(instantiate_parameters(skeleton, [1.0, 3.0]), [2.0]) == 7.0
        with pytest.raises(ValueError):
            instantiate_parameters(skeleton, [1.0])


class TestManifest:

    def test_manifest_entries(self):
        registry = load_manifest([{"name": "+", "type": "int→int→int", "implementation": "+"}])
        assert registry["+"].tp == arrow(tint, tint, tint)


LIST_REQUESTS = [parse_type(t) for t in ["ilist→ilist", "ilist→int", "ilist→bool", "int→int", "ilist"]]
INPUTS = [[], [1, 2, 3], [5, 0, 7, 2, 2]]


def _has_type(value, tp) -> bool:
    if tp == tint:
        return type(value) is int
    if tp == tbool:
        return type(value) is bool
    if tp == tlist(tint):
        return isinstance(value, list) and all(type(v) is int for v in value)
    raise AssertionError(f"no runtime check for {render_type(tp)}")


class TestSampledPrograms:

    def test_render_parse_round_trip(self, list_library, fig3_library):
        increment = Invented(parse("(lambda (map (lambda (+ $0 1)) $0))"), "f0")
        extended = list_library.with_productions([increment])
        drawn = (sample_programs(list_library, LIST_REQUESTS, 4000, seed=1)
                 + sample_programs(extended, LIST_REQUESTS, 3000, seed=2)
                 + sample_programs(fig3_library, [parse_type("ilist→ilist"), parse_type("int")], 3000, seed=3))
        assert len(drawn) == 10_000
        assert any(s == increment for _, p in drawn for _, s in p.walk())
        for _, program in drawn:
            assert parse(render_program(program)) == program

    @pytest.mark.parametrize("request_text", ["ilist→ilist", "ilist→int", "ilist→bool"])
    def test_well_typed_programs_produce_values_of_their_type(self, list_library, request_text):
        request = parse_type(request_text)
        _, result = request.arguments
        drawn = sample_programs(list_library, [request], 300, seed=4)
        assert len(drawn) == 300
        evaluated = 0
        for _, program in drawn:
            Context(100).unify(infer_type(program), request)
            for xs in INPUTS:
                try:
                    value = evaluate(program, [xs], step_budget=10_000)
                except EvaluationError:
                    continue
                evaluated += 1
                assert _has_type(value, result), f"{program} on {xs} gave {value!r}"
        assert evaluated > 0
