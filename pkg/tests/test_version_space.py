# tests/test_version_space.py
from typing import Dict, List, Set, Tuple

import pytest

from abstraction.version_space import NodeBudgetExceeded, VersionTable, inverse_beta
from domains.curricula import base_library
from lang.evaluator import try_evaluate
from lang.program import Abstraction, Application, Index, Program, beta_reduce_once
from lang.types import parse_type
from tests.conftest import parse, sample_programs

Path = Tuple[int, ...]


def _subterms(p: Program, path: Path = (), depth: int = 0):
    yield path, depth, p
    if p.is_abstraction:
        yield from _subterms(p.body, path + (0,), depth + 1)
    elif p.is_application:
        yield from _subterms(p.f, path + (0,), depth)
        yield from _subterms(p.x, path + (1,), depth)


def _abstract_positions(p: Program, chosen: Set[Path], path: Path = (), depth: int = 0) -> Program:
    """p with the chosen positions replaced by the new variable and other free indices raised."""
    if path in chosen:
        return Index(depth)
    if p.is_index:
        return Index(p.i + 1) if p.i >= depth else p
    if p.is_abstraction:
        return Abstraction(_abstract_positions(p.body, chosen, path + (0,), depth + 1))
    if p.is_application:
        return Application(_abstract_positions(p.f, chosen, path + (0,), depth),
                           _abstract_positions(p.x, chosen, path + (1,), depth))
    return p


def _root_inversions(p: Program) -> Set[Program]:
    occurrences: Dict[Program, List[Path]] = {}
    for path, depth, q in _subterms(p):
        if any(i < depth for i in q.free_variables()):
            continue
        occurrences.setdefault(q.shift(-depth), []).append(path)
    results = set()
    for value, paths in occurrences.items():
        for mask in range(1, 2 ** len(paths)):
            chosen = {paths[k] for k in range(len(paths)) if mask >> k & 1}
            results.add(Application(Abstraction(_abstract_positions(p, chosen)), value))
    return results


def _one_step(p: Program) -> Set[Program]:
    """Every program one inverse β-reduction away from p, by brute force."""
    results = _root_inversions(p)
    if p.is_abstraction:
        results |= {Abstraction(b) for b in _one_step(p.body)}
    elif p.is_application:
        results |= {Application(f, p.x) for f in _one_step(p.f)}
        results |= {Application(p.f, x) for x in _one_step(p.x)}
    return results


def _normalize(p: Program) -> Program:
    for _ in range(100):
        reduced = beta_reduce_once(p)
        if reduced is None:
            return p
        p = reduced
    raise AssertionError(f"{p} did not normalize")


class TestHashConsing:

    def test_identical_programs_share_a_node(self):
        table = VersionTable()
        a = table.incorporate(parse("(lambda (+ $0 1))"))
        b = table.incorporate(parse("(lambda (+ $0 1))"))
        assert a == b
        assert table.extension(a) == {parse("(lambda (+ $0 1))")}

    def test_unions_flatten(self):
        table = VersionTable()
        x, y, z = (table.incorporate(parse(s)) for s in ["0", "1", "nil"])
        nested = table.union([table.union([x, y]), z])
        assert nested == table.union([z, y, x])
        assert table.members(nested) == tuple(sorted((x, y, z)))

    def test_intersection(self):
        table = VersionTable()
        x, y, z = (table.incorporate(parse(s)) for s in ["0", "1", "nil"])
        both = table.intersection(table.union([x, y]), table.union([y, z]))
        assert table.extension(both) == {parse("1")}
        assert table.intersection(x, z) == table.empty
        assert table.intersection(table.universe, x) == x

    def test_contains(self):
        table = VersionTable()
        f = table.incorporate(parse("+"))
        node = table.apply(f, table.union([table.incorporate(parse("0")), table.incorporate(parse("1"))]))
        assert table.contains(node, parse("(+ 1)"))
        assert not table.contains(node, parse("(+ nil)"))

    def test_node_budget(self):
        table = VersionTable(node_budget=4)
        with pytest.raises(NodeBudgetExceeded):
            table.incorporate(parse("(lambda (+ $0 1))"))


class TestInverseBeta:

    @pytest.mark.parametrize("source", ["(+ 1 1)", "(lambda (+ $0 1))", "(cons 0 nil)"])
    def test_one_step_matches_brute_force(self, source):
        program = parse(source)
        table = VersionTable()
        node = table.recursive_inversion(table.incorporate(program))
        assert table.extension(node) == _one_step(program)

    def test_two_steps_match_brute_force(self):
        program = parse("(+ 1 1)")
        first = _one_step(program)
        expected = {program} | first | {q for p in first for q in _one_step(p)}
        table = VersionTable()
        space = inverse_beta(table, table.incorporate(program), steps=2)
        assert space.exhaustive
        assert table.extension(space.node) == expected

    def test_every_member_reduces_to_the_original(self):
        program = parse("(lambda (cons (car $0) (cdr $0)))")
        table = VersionTable()
        space = inverse_beta(table, table.incorporate(program), steps=2)
        members = table.extension(space.node)
        assert program in members
        assert all(_normalize(p) == program for p in members)

    def test_expected_refactorings(self):
        table = VersionTable()
        space = inverse_beta(table, table.incorporate(parse("(+ 1 1)")), steps=1)
        for source in ["((lambda (+ $0 $0)) 1)", "((lambda (+ $0 1)) 1)", "((lambda ($0 1 1)) +)",
                       "(+ ((lambda $0) 1) 1)"]:
            assert table.contains(space.node, parse(source))

    def test_zero_steps_is_the_program(self):
        table = VersionTable()
        node = table.incorporate(parse("(+ 1 1)"))
        assert inverse_beta(table, node, steps=0).node == node

    def test_negative_steps(self):
        table = VersionTable()
        with pytest.raises(ValueError):
            inverse_beta(table, table.incorporate(parse("0")), steps=-1)

    def test_budget_truncates_levels(self):
        table = VersionTable(node_budget=60)
        node = table.incorporate(parse("(lambda (cons (car $0) (cdr $0)))"))
        space = inverse_beta(table, node, steps=3)
        assert not space.exhaustive
        assert table.contains(space.node, parse("(lambda (cons (car $0) (cdr $0)))"))


RANDOM_REQUESTS = [parse_type(t) for t in ["ilist→ilist", "ilist→int", "ilist→bool", "int→int", "ilist"]]


@pytest.mark.slow
class TestRandomPrograms:

    @pytest.fixture(scope="class")
    def programs(self):
        drawn = sample_programs(base_library("list"), RANDOM_REQUESTS, 200, seed=5, max_size=7, distinct=True)
        assert len(drawn) == 200
        return [p for _, p in drawn]

    def test_one_and_two_steps_match_brute_force(self, programs):
        for program in programs:
            first = _one_step(program)
            table = VersionTable()
            node = table.incorporate(program)
            assert table.extension(inverse_beta(table, node, steps=1).node) == {program} | first
            second = {q for p in first for q in _one_step(p)}
            assert table.extension(inverse_beta(table, node, steps=2).node) == {program} | first | second

    def test_refactorings_evaluate_like_the_original(self, programs):
        inputs = [[], [1, 2, 3], [5, 0, 7, 2]]
        for program in programs:
            if not program.is_abstraction:
                continue
            table = VersionTable()
            refactorings = table.extension(inverse_beta(table, table.incorporate(program), steps=1).node)
            for xs in inputs:
                for refactored in refactorings:
                    ok, value = try_evaluate(refactored, [xs])
                    # a lifted argument is evaluated eagerly, so only successful runs must agree
                    if ok:
                        assert try_evaluate(program, [xs]) == (True, value), f"{refactored} vs {program}"
