# recognition/model.py
"""Task-conditioned production weights: a two-layer tanh network trained with Adam.

The output layer starts at zero weight with biases equal to the library's log
weights, so an untrained model reproduces the library prior. The training loss of
a (task, program) pair is −log Q(program | task), computed by scoring the
program's likelihood summary against the predicted library; the same summary is
what `log_prior` scores during search.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from grammar.frontier import Frontier
from grammar.library import ROOT, ContextualLibrary, Grammar, Library, LibraryMismatchError, \
    LikelihoodSummary, logsumexp
from lang.program import Program
from models.schemas import ModelDocument
from recognition.features import featurize_task

logger = logging.getLogger("wake_sleep.recognition")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPSILON = 1e-8

Example = Tuple[object, Program]


def _key_name(key) -> str:
    return key if isinstance(key, str) else key.show()


class RecognitionModel:
    def __init__(self, library: Library, feature_width: Optional[int] = None, hidden_width: Optional[int] = None,
                 bigram: bool = False, seed: int = 0):
        self.library = library
        self.feature_width = settings.FEATURE_WIDTH if feature_width is None else feature_width
        self.hidden_width = settings.HIDDEN_WIDTH if hidden_width is None else hidden_width
        self.bigram = bigram
        self.keys = library.keys
        self.key_index = {k: i for i, k in enumerate(self.keys)}
        self.contexts = self._contexts(library) if bigram else [ROOT]
        self.context_index = {c: i for i, c in enumerate(self.contexts)}
        rng = np.random.default_rng(seed)
        self.W1 = rng.normal(0.0, 1.0 / np.sqrt(self.feature_width), (self.hidden_width, self.feature_width))
        self.b1 = np.zeros(self.hidden_width)
        outputs = len(self.keys) * len(self.contexts)
        self.W2 = np.zeros((outputs, self.hidden_width))
        self.b2 = np.tile(library.weight_vector(), len(self.contexts))
        self._reset_optimizer()
        self.history: List[float] = []

    @staticmethod
    def _contexts(library: Library) -> List[tuple]:
        contexts = [ROOT]
        for production in library.productions:
            for i in range(len(production.tp.function_arguments())):
                contexts.append((production.program, i))
        return contexts

    def _reset_optimizer(self):
        self._moments = {name: (np.zeros_like(p), np.zeros_like(p)) for name, p in self.parameters().items()}
        self._step = 0

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def __repr__(self) -> str:
        mode = "bigram" if self.bigram else "unigram"
        return f"RecognitionModel({len(self.keys)} keys, {len(self.contexts)} contexts, {mode})"

    # --- prediction ----------------------------------------------------------------

    def _forward(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        hidden = np.tanh(self.W1 @ features + self.b1)
        return hidden, self.W2 @ hidden + self.b2

    def _as_grammar(self, outputs: np.ndarray) -> Grammar:
        width = len(self.keys)
        tables = [self.library.with_weights(outputs[c * width:(c + 1) * width]) for c in range(len(self.contexts))]
        if not self.bigram:
            return tables[0]
        return ContextualLibrary(tables[0], {c: t for c, t in zip(self.contexts[1:], tables[1:])})

    def predict_weights(self, task, library: Optional[Library] = None) -> Grammar:
        """Task-conditioned library; raises LibraryMismatchError if `library` differs from the model's."""
        if library is not None and [_key_name(k) for k in library.keys] != [_key_name(k) for k in self.keys]:
            raise LibraryMismatchError(f"model was built for {len(self.keys)} keys, library has {len(library.keys)}")
        _, outputs = self._forward(featurize_task(task, self.feature_width))
        return self._as_grammar(outputs)

    def log_q(self, task, program: Program) -> float:
        summary = self.library.closed_summary(task.request, program)
        if summary is None:
            return float("-inf")
        return summary.log_likelihood(self.predict_weights(task))

    # --- training ------------------------------------------------------------------

    def _output_gradient(self, summary: LikelihoodSummary, outputs: np.ndarray) -> np.ndarray:
        """∂ log Q / ∂ outputs: uses minus expected uses under each normaliser."""
        width = len(self.keys)
        gradient = np.zeros_like(outputs)

        def position(context, key) -> int:
            c = self.context_index.get(context, 0) if self.bigram else 0
            return c * width + self.key_index[key]

        for (context, key), count in summary.uses.items():
            gradient[position(context, key)] += count
        for (context, alternatives), count in summary.normalizers.items():
            slots = [position(context, k) for k in alternatives]
            weights = outputs[slots]
            gradient[slots] -= count * np.exp(weights - logsumexp(weights))
        return gradient

    def _adam(self, gradients: Dict[str, np.ndarray], learning_rate: float):
        self._step += 1
        beta1, beta2 = ADAM_BETAS
        for name, parameter in self.parameters().items():
            m, v = self._moments[name]
            g = gradients[name]
            m[...] = beta1 * m + (1 - beta1) * g
            v[...] = beta2 * v + (1 - beta2) * g * g
            m_hat = m / (1 - beta1 ** self._step)
            v_hat = v / (1 - beta2 ** self._step)
            parameter -= learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)

    def train_batch(self, batch: Sequence[Tuple[np.ndarray, LikelihoodSummary]], learning_rate: float) -> List[float]:
        """One Adam step on the mean loss of the batch; returns per-example losses before the step."""
        gradients = {name: np.zeros_like(p) for name, p in self.parameters().items()}
        losses = []
        for features, summary in batch:
            hidden, outputs = self._forward(features)
            losses.append(-summary.log_likelihood(self._as_grammar(outputs)))
            g = -self._output_gradient(summary, outputs)
            gradients["W2"] += np.outer(g, hidden)
            gradients["b2"] += g
            pre = (self.W2.T @ g) * (1.0 - hidden ** 2)
            gradients["W1"] += np.outer(pre, features)
            gradients["b1"] += pre
        for name in gradients:
            gradients[name] /= len(batch)
        self._adam(gradients, learning_rate)
        return losses

    # --- library growth and persistence ----------------------------------------------

    def resize(self, library: Library) -> "RecognitionModel":
        """Model for a grown library: the feature layer and the rows of surviving keys are kept."""
        grown = RecognitionModel(library, self.feature_width, self.hidden_width, self.bigram)
        grown.W1 = self.W1.copy()
        grown.b1 = self.b1.copy()
        old_width, new_width = len(self.keys), len(grown.keys)
        for c, context in enumerate(grown.contexts):
            if context not in self.context_index:
                continue
            old_c = self.context_index[context]
            for k, key in enumerate(grown.keys):
                if key in self.key_index:
                    grown.W2[c * new_width + k] = self.W2[old_c * old_width + self.key_index[key]]
                    grown.b2[c * new_width + k] = self.b2[old_c * old_width + self.key_index[key]]
        grown._reset_optimizer()
        grown.history = list(self.history)
        return grown

    def to_json(self) -> ModelDocument:
        shape = {
            "feature_width": self.feature_width,
            "hidden_width": self.hidden_width,
            "bigram": self.bigram,
            "keys": [_key_name(k) for k in self.keys],
            "contexts": len(self.contexts),
        }
        parameters = np.concatenate([p.ravel() for p in self.parameters().values()])
        return ModelDocument(shape=shape, parameters=parameters.tolist())

    @classmethod
    def from_json(cls, document: ModelDocument, library: Library) -> "RecognitionModel":
        shape = document.shape
        if shape["keys"] != [_key_name(k) for k in library.keys]:
            raise LibraryMismatchError("checkpointed model does not match the library")
        model = cls(library, shape["feature_width"], shape["hidden_width"], shape["bigram"])
        flat = np.asarray(document.parameters, dtype=float)
        offset = 0
        for name, parameter in model.parameters().items():
            size = parameter.size
            parameter[...] = flat[offset:offset + size].reshape(parameter.shape)
            offset += size
        if offset != len(flat):
            raise LibraryMismatchError(f"expected {offset} parameters, got {len(flat)}")
        return model


def _examples(model: RecognitionModel, pairs: Sequence[Example]) -> List[Tuple[np.ndarray, LikelihoodSummary]]:
    prepared = []
    for task, program in pairs:
        summary = model.library.closed_summary(task.request, program)
        if summary is None:
            logger.warning(f"Skipping {program}: not expressible under the current library")
            continue
        prepared.append((featurize_task(task, model.feature_width), summary))
    return prepared


def train_recognition(model: RecognitionModel, replays: Sequence[Example], fantasies: Sequence[Example],
                      epochs: Optional[int] = None, rng_seed: int = 0, batch_size: Optional[int] = None,
                      learning_rate: Optional[float] = None) -> RecognitionModel:
    """Minimise −log Q(program | task) over batches drawn half from replays, half from fantasies."""
    epochs = settings.EPOCHS if epochs is None else epochs
    batch_size = settings.BATCH_SIZE if batch_size is None else batch_size
    learning_rate = settings.LEARNING_RATE if learning_rate is None else learning_rate
    replayed = _examples(model, replays)
    dreamed = _examples(model, fantasies)
    if epochs == 0 or not (replayed or dreamed):
        return model
    rng = np.random.default_rng(rng_seed)
    streams = [s for s in (replayed, dreamed) if s]
    share = max(1, batch_size // len(streams))
    for epoch in range(epochs):
        orders = [rng.permutation(len(s)) for s in streams]
        batches = -(-max(len(s) for s in streams) // share)
        losses: List[float] = []
        for b in range(batches):
            batch = []
            for stream, order in zip(streams, orders):
                for k in range(b * share, (b + 1) * share):
                    batch.append(stream[order[k % len(stream)]])
            losses.extend(model.train_batch(batch, learning_rate))
        model.history.append(float(np.mean(losses)))
        logger.debug(f"Recognition epoch {epoch}: loss {model.history[-1]:.4f}")
    logger.info(f"Trained recognition model on {len(replayed)} replays and {len(dreamed)} fantasies "
                f"for {epochs} epochs (final loss {model.history[-1]:.4f})")
    return model


def predict_weights(model: RecognitionModel, task, library: Optional[Library] = None) -> Grammar:
    return model.predict_weights(task, library)


def symmetry_breaking_rate(model: RecognitionModel, frontiers: Sequence[Frontier], tasks: Dict[str, object]) -> float:
    """Fraction of frontiers whose MAP program is the unique highest-Q entry."""
    hits = total = 0
    for frontier in frontiers:
        if frontier.empty or frontier.task_id not in tasks:
            continue
        task = tasks[frontier.task_id]
        scores = [model.log_q(task, e.program) for e in frontier.entries]
        total += 1
        best = scores[0]
        if all(best > s for s in scores[1:]):
            hits += 1
    return hits / total if total else 0.0
