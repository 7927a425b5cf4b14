# tests/test_enumerator.py
import itertools
from unittest.mock import patch

import numpy as np
import pytest

from domains.tasks import Task
from grammar.library import log_prior
from lang.evaluator import evaluate
from lang.primitives import PRIMITIVES
from lang.program import Application
from lang.types import arrow, tint
from search.enumerator import ProgramCountClock, SearchBudget, SearchInterrupted, enumerate_programs, \
    enumerate_window, solve_task
from tests.conftest import parse


def _trees(leaves: int):
    """Every (+ ...) tree over 0 and 1 with exactly `leaves` leaves."""
    if leaves == 1:
        yield PRIMITIVES["0"]
        yield PRIMITIVES["1"]
        return
    for left in range(1, leaves):
        for a, b in itertools.product(_trees(left), _trees(leaves - left)):
            yield Application(Application(PRIMITIVES["+"], a), b)


def _window(library, request, lower, upper):
    seen = []
    enumerate_window(library, request, lower, upper, lambda p, _: seen.append(p))
    return seen


class PollingClock:
    """Expires on the poll after `limit`; counts every look at `expired`."""

    def __init__(self, limit: int):
        self.limit = limit
        self.polls = 0
        self.programs = 0

    def tick(self):
        self.programs += 1

    @property
    def elapsed(self) -> float:
        return float(self.polls)

    @property
    def expired(self) -> bool:
        self.polls += 1
        return self.polls > self.limit


class TestEnumeration:

    def test_complete_against_brute_force(self, tiny_library):
        expected = {p for leaves in (1, 2, 3) for p in _trees(leaves)}
        found = [p for _, p in enumerate_programs(tiny_library, tint, 0.0, 6.0)]
        assert set(found) == expected
        assert len(found) == len(expected) == 22

    def test_reported_prior_matches_scorer(self, tiny_library):
        for log_probability, program in enumerate_programs(tiny_library, tint, 0.0, 6.0):
            assert log_probability == pytest.approx(log_prior(tiny_library, program, tint))

    def test_windows_partition(self, tiny_library):
        bounds = np.arange(0.0, 7.5, 1.5)
        windows = [_window(tiny_library, tint, lo, hi) for lo, hi in zip(bounds, bounds[1:])]
        flattened = [p for w in windows for p in w]
        assert len(flattened) == len(set(flattened))
        assert set(flattened) == {p for _, p in enumerate_programs(tiny_library, tint, 0.0, 6.0)}
        for (lo, hi), window in zip(zip(bounds, bounds[1:]), windows):
            for program in window:
                assert lo <= -log_prior(tiny_library, program, tint) < hi

    def test_abstractions_for_arrow_requests(self, tiny_library):
        programs = _window(tiny_library, arrow(tint, tint), 0.0, 1.5)
        assert all(p.is_abstraction for p in programs)
        assert parse("(lambda $0)") in programs

    def test_stop_ends_a_window_before_any_emission(self, tiny_library):
        clock = PollingClock(20)
        emitted = []
        with pytest.raises(SearchInterrupted):
            enumerate_window(tiny_library, tint, 40.0, 41.0, lambda p, _: emitted.append(p),
                             stop=lambda: clock.expired)
        assert emitted == []
        assert clock.polls == 21

    def test_stop_that_never_fires_changes_nothing(self, tiny_library):
        plain = _window(tiny_library, tint, 0.0, 6.0)
        polled = []
        enumerate_window(tiny_library, tint, 0.0, 6.0, lambda p, _: polled.append(p), stop=lambda: False)
        assert polled == plain


class TestSolveTask:

    def _successor_task(self):
        return Task("succ", "add one", arrow(tint, tint), "list", examples=[((3,), 4), ((0,), 1)])

    def test_finds_successor(self, tiny_library):
        budget = SearchBudget(beam_k=2, wall_clock_timeout=1.0)
        result = solve_task(self._successor_task(), tiny_library, budget, ProgramCountClock(1.0, 1000.0))
        assert result.frontier.best.program == parse("(lambda (+ $0 1))")
        assert len(result.frontier) == 2
        assert result.solve_time is not None

    def test_program_count_clock_is_deterministic(self, tiny_library):
        budget = SearchBudget(beam_k=2, wall_clock_timeout=1.0)
        first = solve_task(self._successor_task(), tiny_library, budget, ProgramCountClock(1.0, 1000.0))
        second = solve_task(self._successor_task(), tiny_library, budget, ProgramCountClock(1.0, 1000.0))
        assert first.solve_time == second.solve_time
        assert [e.program for e in first.frontier] == [e.program for e in second.frontier]

    def test_unsolvable_task_times_out(self, tiny_library):
        task = Task("neg", "impossible", arrow(tint, tint), "list", examples=[((3,), -7)])
        budget = SearchBudget(wall_clock_timeout=0.2)
        result = solve_task(task, tiny_library, budget, ProgramCountClock(0.2, 1000.0))
        assert result.frontier.empty
        assert result.solve_time is None
        assert result.programs == 200

    def test_each_program_scored_once(self, tiny_library):
        task = self._successor_task()
        budget = SearchBudget(beam_k=1, wall_clock_timeout=0.05)
        with patch.object(Task, "log_likelihood", autospec=True, return_value=float("-inf")) as scored:
            result = solve_task(task, tiny_library, budget, ProgramCountClock(0.05, 1000.0))
        programs = [call.args[1] for call in scored.call_args_list]
        assert len(programs) == len(set(programs))
        assert result.frontier.empty

    def test_clock_bounds_search_between_emissions(self, tiny_library):
        task = Task("neg", "impossible", arrow(tint, tint), "list", examples=[((3,), -7)])
        clock = PollingClock(500)
        result = solve_task(task, tiny_library, SearchBudget(nats_window_width=1000.0), clock)
        assert result.frontier.empty
        assert clock.polls == 501
        assert result.programs < 500

    @pytest.mark.slow
    @pytest.mark.xfail(strict=False, reason="the Y-combinator solution sits deep in the uniform fig3 prior; "
                                            "720 s of enumeration may not reach it")
    def test_doubles_from_the_fixed_point_basis(self, fig3_library, fig3_tasks):
        result = solve_task(fig3_tasks[0], fig3_library, SearchBudget(wall_clock_timeout=720.0))
        assert not result.frontier.empty
        assert evaluate(result.frontier.best.program, [[1, 2, 3]]) == [2, 4, 6]
