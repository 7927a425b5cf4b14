# tests/test_recognition.py
from unittest.mock import patch

import numpy as np
import pytest

from domains.curricula import builtin_curricula
from grammar.frontier import Frontier, FrontierEntry
from grammar.library import ContextualLibrary, Library, LibraryMismatchError
from lang.program import Invented
from recognition.fantasies import generate_fantasies
from recognition.features import featurize_task
from recognition.model import RecognitionModel, predict_weights, symmetry_breaking_rate, train_recognition
from tests.conftest import parse

DOUBLE = ("(lambda (Y (lambda (lambda (if (empty? $0) nil "
          "(cons (+ (car $0) (car $0)) ($1 (cdr $0)))))) $0))")
DECREMENT = ("(lambda (Y (lambda (lambda (if (empty? $0) nil "
             "(cons (- (car $0) 1) ($1 (cdr $0)))))) $0))")


@pytest.fixture
def replays(fig3_tasks):
    return list(zip(fig3_tasks, [parse(DOUBLE), parse(DECREMENT)]))


class TestFeatures:

    def test_width_and_finiteness(self):
        for name in ["list-basic-40", "text-basic-20", "regression-16"]:
            for task in builtin_curricula(name)[:5]:
                features = featurize_task(task)
                assert features.shape == (64,)
                assert np.all(np.isfinite(features))

    def test_deterministic(self):
        task = builtin_curricula("list-basic-40")[3]
        assert np.array_equal(featurize_task(task), featurize_task(task))

    def test_different_tasks_differ(self, fig3_tasks):
        assert not np.array_equal(featurize_task(fig3_tasks[0]), featurize_task(fig3_tasks[1]))

    def test_custom_width(self):
        task = builtin_curricula("regression-16")[0]
        assert featurize_task(task, 32).shape == (32,)


class TestFantasies:

    def test_fixed_seed_is_deterministic(self, fig3_library, fig3_tasks):
        first = generate_fantasies(fig3_library, fig3_tasks, 5, rng_seed=7)
        second = generate_fantasies(fig3_library, fig3_tasks, 5, rng_seed=7)
        assert [p for _, p in first] == [p for _, p in second]
        assert [t.examples for t, _ in first] == [t.examples for t, _ in second]

    def test_fantasy_program_solves_its_task(self, fig3_library, fig3_tasks):
        fantasies = generate_fantasies(fig3_library, fig3_tasks, 5, rng_seed=0)
        assert 0 < len(fantasies) <= 5
        for task, program in fantasies:
            assert task.log_likelihood(program) == 0.0
            assert task.request == fig3_tasks[0].request

    def test_failing_programs_are_discarded(self, fig3_library, fig3_tasks):
        with patch("recognition.fantasies.evaluate_all", return_value=None):
            assert generate_fantasies(fig3_library, fig3_tasks, 3, rng_seed=0, retry_factor=2) == []

    def test_needs_training_tasks(self, fig3_library):
        with pytest.raises(ValueError):
            generate_fantasies(fig3_library, [], 3, rng_seed=0)


class TestRecognitionModel:

    def test_untrained_model_reproduces_the_library(self, fig3_library, replays):
        model = RecognitionModel(fig3_library)
        for task, program in replays:
            assert model.log_q(task, program) == pytest.approx(fig3_library.log_prior(task.request, program))

    def test_untrained_bigram_model_reproduces_the_library(self, fig3_library, replays):
        model = RecognitionModel(fig3_library, bigram=True)
        task, program = replays[0]
        assert isinstance(model.predict_weights(task), ContextualLibrary)
        assert model.log_q(task, program) == pytest.approx(fig3_library.log_prior(task.request, program))

    def test_training_lowers_the_loss(self, fig3_library, replays):
        model = train_recognition(RecognitionModel(fig3_library), replays, [], epochs=30, learning_rate=1e-2)
        assert len(model.history) == 30
        assert model.history[-1] < model.history[0]

    def test_trained_model_lifts_replayed_programs(self, fig3_library, replays):
        model = train_recognition(RecognitionModel(fig3_library), replays, [], epochs=30, learning_rate=1e-2)
        lifted = np.mean([model.log_q(t, p) for t, p in replays])
        prior = np.mean([fig3_library.log_prior(t.request, p) for t, p in replays])
        assert lifted > prior

    def test_bigram_training(self, fig3_library, replays, fig3_tasks):
        fantasies = generate_fantasies(fig3_library, fig3_tasks, 4, rng_seed=1)
        model = train_recognition(RecognitionModel(fig3_library, bigram=True), replays, fantasies,
                                  epochs=10, learning_rate=1e-2)
        assert model.history[-1] < model.history[0]

    def test_predictions_keep_every_program_reachable(self, fig3_library, replays):
        model = train_recognition(RecognitionModel(fig3_library), replays, [], epochs=30, learning_rate=1e-2)
        task = replays[0][0]
        guided = predict_weights(model, task, fig3_library)
        assert isinstance(guided, Library)
        assert guided.programs == fig3_library.programs
        for source in ["(lambda $0)", "(lambda (cdr $0))", "(lambda (cons 0 $0))", DECREMENT]:
            assert np.isfinite(guided.log_prior(task.request, parse(source)))

    def test_zero_epochs_leaves_the_model_unchanged(self, fig3_library, replays):
        model = RecognitionModel(fig3_library)
        before = {name: p.copy() for name, p in model.parameters().items()}
        trained = train_recognition(model, replays, [], epochs=0)
        assert trained is model
        assert trained.history == []
        for name, p in trained.parameters().items():
            assert np.array_equal(p, before[name])

    def test_mismatched_library(self, fig3_library, list_library, replays):
        model = RecognitionModel(fig3_library)
        with pytest.raises(LibraryMismatchError):
            model.predict_weights(replays[0][0], list_library)

    def test_json_round_trip(self, fig3_library, replays):
        model = train_recognition(RecognitionModel(fig3_library), replays, [], epochs=3)
        restored = RecognitionModel.from_json(model.to_json(), fig3_library)
        task, program = replays[0]
        assert restored.log_q(task, program) == pytest.approx(model.log_q(task, program))
        with pytest.raises(LibraryMismatchError):
            RecognitionModel.from_json(model.to_json(), Library.uniform(fig3_library.programs[:3]))

    def test_resize_keeps_surviving_rows(self, fig3_library, replays):
        model = train_recognition(RecognitionModel(fig3_library), replays, [], epochs=3)
        grown_library = fig3_library.with_productions([Invented(parse("(lambda (+ $0 1))"), "f0")])
        grown = model.resize(grown_library)
        assert len(grown.keys) == len(model.keys) + 1
        assert np.array_equal(grown.W1, model.W1)
        for key, k in model.key_index.items():
            assert grown.b2[grown.key_index[key]] == model.b2[k]
            assert np.array_equal(grown.W2[grown.key_index[key]], model.W2[k])
        assert grown.history == model.history


class TestSymmetryBreaking:

    def test_no_frontiers(self, fig3_library):
        assert symmetry_breaking_rate(RecognitionModel(fig3_library), [], {}) == 0.0

    def test_single_entry_frontiers_are_unique(self, fig3_library, replays):
        frontiers = [Frontier(t.task_id, t.request, [FrontierEntry(p, fig3_library.log_prior(t.request, p), 0.0)])
                     for t, p in replays]
        tasks = {t.task_id: t for t, _ in replays}
        assert symmetry_breaking_rate(RecognitionModel(fig3_library), frontiers, tasks) == 1.0
