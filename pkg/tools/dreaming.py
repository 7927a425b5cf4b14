# tools/dreaming.py
from typing import Dict, Optional, Sequence

from pydantic import Field

from config.settings import settings
from domains.tasks import Task
from grammar.frontier import Frontier
from grammar.library import Library
from recognition.fantasies import generate_fantasies
from recognition.model import RecognitionModel, symmetry_breaking_rate, train_recognition
from tools.base import BasePhaseTool


class DreamingTool(BasePhaseTool):
    """Train the recognition model on replayed solutions and on fantasies sampled from the library."""

    name: str = Field(default="dreaming", description="Dreaming sleep")
    description: str = Field(default="""
    Builds (or resizes) the recognition model for the current library and trains it for MAP inference.
    Input: model, library, frontiers, training tasks, iteration
    Returns: the trained RecognitionModel.
    """)
    epochs: int = Field(default_factory=lambda: settings.EPOCHS, ge=0)
    fantasy_count: int = Field(default_factory=lambda: settings.FANTASY_COUNT, ge=0)
    bigram: bool = False
    seed: int = Field(default_factory=lambda: settings.SEED)

    def _run(self, model: Optional[RecognitionModel], library: Library, frontiers: Sequence[Frontier],
             tasks: Dict[str, Task], iteration: int = 0) -> RecognitionModel:
        model = self._model_for(model, library)
        replays = [(tasks[f.task_id], f.best.program) for f in frontiers
                   if not f.empty and f.task_id in tasks]
        fantasies = []
        if self.fantasy_count > 0 and tasks:
            fantasies = generate_fantasies(library, [tasks[k] for k in sorted(tasks)], self.fantasy_count,
                                           self.seed + iteration)
        train_recognition(model, replays, fantasies, self.epochs, self.seed + iteration)
        if replays:
            rate = symmetry_breaking_rate(model, frontiers, tasks)
            if rate < settings.SYMMETRY_BREAKING_THRESHOLD:
                self.logger.warning(f"MAP program is the unique highest-Q entry for only {rate:.0%} of replays")
            else:
                self.logger.info(f"Symmetry breaking rate {rate:.0%}")
        return model

    def _model_for(self, model: Optional[RecognitionModel], library: Library) -> RecognitionModel:
        if model is None:
            return RecognitionModel(library, bigram=self.bigram, seed=self.seed)
        if model.keys != library.keys:
            return model.resize(library)
        # same keys, refitted weights
        model.library = library
        return model
