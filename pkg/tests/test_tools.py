# tests/test_tools.py
import logging
from unittest.mock import patch

import pytest

from domains.tasks import Task
from grammar.frontier import Frontier, FrontierEntry
from lang.program import Invented
from lang.types import arrow, tint
from recognition.model import RecognitionModel
from search.enumerator import SearchBudget
from tools.abstraction import AbstractionTool
from tools.dreaming import DreamingTool
from tools.wake import WakeTool, solve_times
from tests.conftest import parse


def _tasks():
    return [
        Task("succ", "add one", arrow(tint, tint), "list", examples=[((3,), 4), ((0,), 1)]),
        Task("neg", "impossible", arrow(tint, tint), "list", examples=[((3,), -7)]),
    ]


def _wake(**overrides) -> WakeTool:
    options = dict(budget=SearchBudget(beam_k=2, wall_clock_timeout=0.2), deterministic=True)
    options.update(overrides)
    return WakeTool(**options)


class TestWakeTool:

    def test_results_follow_task_order(self, tiny_library):
        tasks = _tasks()
        results = _wake().run(tasks=tasks, library=tiny_library)
        assert [r.frontier.task_id for r in results] == ["succ", "neg"]
        assert not results[0].frontier.empty
        assert results[1].frontier.empty

    def test_solve_times(self, tiny_library):
        tasks = _tasks()
        times = solve_times(_wake().run(tasks=tasks, library=tiny_library), tasks)
        assert times["neg"] is None
        assert times["succ"] is not None and times["succ"] <= 0.2

    def test_thread_pool_matches_sequential_frontiers(self, tiny_library):
        tasks = _tasks()
        pooled = _wake(deterministic=False, workers=2, budget=SearchBudget(beam_k=2, wall_clock_timeout=1.0))
        results = pooled.run(tasks=tasks, library=tiny_library)
        assert results[0].frontier.best.program == parse("(lambda (+ $0 1))")

    def test_untrained_model_guides_like_the_library(self, tiny_library):
        tasks = _tasks()
        plain = _wake().run(tasks=tasks, library=tiny_library)
        guided = _wake().run(tasks=tasks, library=tiny_library, model=RecognitionModel(tiny_library))
        assert [e.program for e in guided[0].frontier] == [e.program for e in plain[0].frontier]

    def test_guided_entries_carry_library_priors(self, tiny_library):
        task = _tasks()[0]
        program = parse("(lambda (+ $0 1))")
        frontier = Frontier(task.task_id, task.request,
                            [FrontierEntry(program, tiny_library.log_prior(task.request, program), 0.0)])
        model = DreamingTool(epochs=30, fantasy_count=0).run(model=None, library=tiny_library,
                                                            frontiers=[frontier], tasks={task.task_id: task})
        assert model.log_q(task, program) > tiny_library.log_prior(task.request, program)

        guided = _wake().run(tasks=[task], library=tiny_library, model=model)[0].frontier
        assert not guided.empty
        for entry in guided:
            assert entry.log_prior == pytest.approx(tiny_library.log_prior(task.request, entry.program))

    def test_task_failure_gives_empty_frontier(self, tiny_library, caplog):
        with patch("tools.wake.solve_task", side_effect=RuntimeError("boom")):
            with caplog.at_level(logging.ERROR, logger="wake_sleep.tools"):
                results = _wake().run(tasks=_tasks(), library=tiny_library)
        assert all(r.frontier.empty and r.solve_time is None for r in results)
        assert "boom" in caplog.text

    def test_budget_is_validated(self):
        with pytest.raises(ValueError):
            WakeTool(workers=0)


class TestAbstractionTool:

    def test_memorize(self, tiny_library):
        program = parse("(lambda (+ $0 1))")
        frontier = Frontier("succ", arrow(tint, tint),
                            [FrontierEntry(program, tiny_library.log_prior(arrow(tint, tint), program), 0.0)])
        result = AbstractionTool(memorize=True).run(library=tiny_library, frontiers=[frontier])
        assert len(result.inventions) == 1
        assert result.library.inventions == [Invented(program)]

    def test_errors_are_logged_and_raised(self, tiny_library, caplog):
        with patch("tools.abstraction.compress", side_effect=ValueError("bad frontier")):
            with caplog.at_level(logging.ERROR, logger="wake_sleep.tools"):
                with pytest.raises(ValueError):
                    AbstractionTool().run(library=tiny_library, frontiers=[])
        assert "bad frontier" in caplog.text

    def test_no_frontiers_keeps_the_library(self, tiny_library):
        result = AbstractionTool(steps=1).run(library=tiny_library, frontiers=[])
        assert result.library is tiny_library
        assert result.inventions == []


class TestDreamingTool:

    def _frontier(self, library, task, source):
        program = parse(source)
        return Frontier(task.task_id, task.request,
                        [FrontierEntry(program, library.log_prior(task.request, program), 0.0)])

    def test_builds_and_trains_a_model(self, tiny_library):
        task = _tasks()[0]
        frontier = self._frontier(tiny_library, task, "(lambda (+ $0 1))")
        model = DreamingTool(epochs=3, fantasy_count=2).run(model=None, library=tiny_library,
                                                           frontiers=[frontier], tasks={task.task_id: task})
        assert isinstance(model, RecognitionModel)
        assert len(model.history) == 3

    def test_resizes_for_a_grown_library(self, tiny_library):
        task = _tasks()[0]
        frontier = self._frontier(tiny_library, task, "(lambda (+ $0 1))")
        tool = DreamingTool(epochs=1, fantasy_count=0)
        model = tool.run(model=None, library=tiny_library, frontiers=[frontier], tasks={task.task_id: task})
        grown = tiny_library.with_productions([Invented(parse("(lambda (+ $0 1))"))])
        resized = tool.run(model=model, library=grown, frontiers=[frontier], tasks={task.task_id: task},
                           iteration=1)
        assert resized is not model
        assert resized.keys == grown.keys
        assert len(resized.history) == 2

    def test_same_keys_reuse_the_model(self, tiny_library):
        task = _tasks()[0]
        tool = DreamingTool(epochs=0, fantasy_count=0)
        model = tool.run(model=None, library=tiny_library, frontiers=[], tasks={task.task_id: task})
        refitted = tiny_library.with_weights([0.0, -1.0, 0.0, 0.0])
        again = tool.run(model=model, library=refitted, frontiers=[], tasks={task.task_id: task})
        assert again is model
        assert again.library is refitted
