# tests/test_compression.py
import numpy as np
import pytest

from abstraction.compression import close_candidate, compress, eta_long_call, is_nontrivial, memorize, \
    propose_candidates, rewrite_minimal
from abstraction.version_space import VersionTable, inverse_beta
from config.settings import settings
from domains.curricula import base_library, fig3_pair
from domains.tasks import Task
from grammar.frontier import Frontier, FrontierEntry
from lang.evaluator import evaluate
from lang.program import Application, Invented, infer_type
from lang.types import arrow, tint, tlist
from search.enumerator import SearchBudget
from tests.conftest import parse
from tools.wake import WakeTool

ilist = tlist(tint)

DOUBLE = ("(lambda (Y (lambda (lambda (if (empty? $0) nil "
          "(cons (+ (car $0) (car $0)) ($1 (cdr $0)))))) $0))")
DECREMENT = ("(lambda (Y (lambda (lambda (if (empty? $0) nil "
             "(cons (- (car $0) 1) ($1 (cdr $0)))))) $0))")


def _frontiers(library, tasks, sources):
    frontiers = []
    for task, source in zip(tasks, sources):
        program = parse(source)
        entry = FrontierEntry(program, library.log_prior(task.request, program), task.log_likelihood(program))
        frontiers.append(Frontier(task.task_id, task.request, [entry]))
    return frontiers


class TestCandidates:

    def test_close_candidate_binds_free_indices(self):
        definition, free = close_candidate(parse("(+ $1 $3)"))
        assert free == [1, 3]
        assert definition == parse("(lambda (lambda (+ $0 $1)))")

    def test_closed_program_is_unchanged(self):
        definition, free = close_candidate(parse("(+ 1 1)"))
        assert definition == parse("(+ 1 1)")
        assert free == []

    @pytest.mark.parametrize("source, expected", [
        ("(+ 1 1)", True),
        ("(lambda (+ $0 1))", True),
        ("(lambda (+ $0 $0))", True),
        ("(lambda (car $0))", False),
        ("+", False),
    ])
    def test_nontrivial(self, source, expected):
        assert is_nontrivial(parse(source)) is expected

    def test_candidates_are_shared(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        candidates = propose_candidates(frontiers, steps=1)
        assert candidates
        assert all(c.uses >= 2 for c in candidates)


class TestCompression:

    def test_no_frontiers(self, fig3_library):
        result = compress(fig3_library, [])
        assert result.library is fig3_library
        assert result.frontiers == [] and result.inventions == []

    def test_large_penalty_adopts_nothing(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        result = compress(fig3_library, frontiers, fig3_tasks, structure_penalty=1000.0, steps=1)
        assert result.inventions == []
        assert result.library.inventions == []
        assert [f.best.program for f in result.frontiers] == [parse(DOUBLE), parse(DECREMENT)]

    def test_rewrites_preserve_behaviour(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        result = compress(fig3_library, frontiers, fig3_tasks, steps=1, max_inventions=1)
        by_id = {t.task_id: t for t in fig3_tasks}
        for frontier in result.frontiers:
            assert by_id[frontier.task_id].log_likelihood(frontier.best.program) == 0.0

    def test_without_tasks_rewrites_are_refused(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        result = compress(fig3_library, frontiers, None, steps=1, max_inventions=1)
        assert result.inventions == []
        assert [f.best.program for f in result.frontiers] == [parse(DOUBLE), parse(DECREMENT)]

    @pytest.mark.slow
    def test_compression_is_idempotent(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        first = compress(fig3_library, frontiers, fig3_tasks, steps=1)
        assert len(first.inventions) < settings.MAX_INVENTIONS
        second = compress(first.library, first.frontiers, fig3_tasks, steps=1)
        assert second.inventions == []
        assert second.library.programs == first.library.programs
        assert [f.best.program for f in second.frontiers] == [f.best.program for f in first.frontiers]


@pytest.fixture(scope="module")
def map_compression():
    library = base_library("fig3")
    tasks = fig3_pair()
    frontiers = _frontiers(library, tasks, [DOUBLE, DECREMENT])
    return library, tasks, compress(library, frontiers, tasks, steps=2, max_inventions=1)


def _map_family():
    examples = [[1, 2, 3], [5, 0], [], [7], [4, 9, 2, 6]]
    return [
        Task("add-one", "add one to each element", arrow(ilist, ilist), "list",
             examples=[((xs,), [x + 1 for x in xs]) for xs in examples]),
        Task("zero", "replace each element by zero", arrow(ilist, ilist), "list",
             examples=[((xs,), [0 for _ in xs]) for xs in examples]),
    ]


@pytest.mark.slow
class TestMapRediscovery:

    def test_invention_behaves_as_map(self, map_compression):
        _, _, result = map_compression
        invention = result.library.inventions[0]
        assert result.inventions[0].source == invention.show()
        arguments = infer_type(invention.definition).function_arguments()
        assert len(arguments) == 2
        function_first = arguments[0].is_arrow

        rng = np.random.default_rng(0)
        functions = [lambda x: x + 1, lambda x: 2 * x, lambda x: x - 1, lambda x: x * x, lambda x: -x]
        for k in range(100):
            f = functions[k % len(functions)]
            xs = [int(v) for v in rng.integers(0, 10, int(rng.integers(0, 7)))]
            inputs = [f, xs] if function_first else [xs, f]
            assert evaluate(invention.definition, inputs) == [f(x) for x in xs]

    def test_both_frontiers_call_the_invention(self, map_compression):
        _, tasks, result = map_compression
        by_id = {t.task_id: t for t in tasks}
        invention = result.library.inventions[0]
        assert "Y" in result.inventions[0].source
        assert result.inventions[0].mdl_gain > 0
        assert {f.task_id for f in result.frontiers} == {t.task_id for t in tasks}
        for frontier in result.frontiers:
            assert any(q == invention for _, q in frontier.best.program.walk())
            assert by_id[frontier.task_id].log_likelihood(frontier.best.program) == 0.0

    def test_invention_bootstraps_new_tasks(self, map_compression):
        library, _, result = map_compression
        wake = WakeTool(budget=SearchBudget(wall_clock_timeout=30.0), deterministic=True)

        def solved(grammar):
            return {r.frontier.task_id for r in wake.run(tasks=_map_family(), library=grammar)
                    if not r.frontier.empty}

        baseline = solved(library)
        grown = solved(result.library)
        assert baseline < grown
        assert grown == {"add-one", "zero"}


class TestMemorize:

    def test_each_solution_becomes_an_invention(self, fig3_library, fig3_tasks):
        frontiers = _frontiers(fig3_library, fig3_tasks, [DOUBLE, DECREMENT])
        result = memorize(fig3_library, frontiers)
        assert len(result.inventions) == 2
        assert len(result.library) == len(fig3_library) + 2
        for frontier in result.frontiers:
            invention = frontier.best.program.body.f
            assert isinstance(invention, Invented)
            assert frontier.best.program == eta_long_call(invention, frontier.request)

    def test_unsolved_frontiers_are_skipped(self, fig3_library):
        result = memorize(fig3_library, [Frontier("t", arrow(ilist, ilist))])
        assert result.inventions == []
        assert result.frontiers == []

    def test_eta_long_call(self):
        invention = Invented(parse("(lambda (lambda (+ $0 $1)))"), "f0")
        call = eta_long_call(invention, arrow(tint, tint, tint))
        assert call.show() == f"(lambda (lambda ({invention.show()} $1 $0)))"


class TestRewriteMinimal:

    def test_without_inventions_the_program_is_kept(self, tiny_library):
        table = VersionTable()
        space = inverse_beta(table, table.incorporate(parse("(+ 1 1)")), steps=1)
        assert rewrite_minimal(table, space.node, tiny_library, tint) == parse("(+ 1 1)")

    def test_invention_is_recognised(self, tiny_library):
        double = Invented(parse("(lambda (+ $0 $0))"), "f0")
        library = tiny_library.with_productions([double])
        table = VersionTable()
        space = inverse_beta(table, table.incorporate(parse("(+ 1 1)")), steps=1)
        assert rewrite_minimal(table, space.node, library, tint) == Application(double, parse("1"))
