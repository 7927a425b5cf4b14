# domains/tasks.py
import logging
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from domains.likelihood import io_likelihood
from domains.regression import regression_likelihood
from lang.evaluator import DEFAULT_STEP_BUDGET
from lang.program import Program
from lang.types import PolyType

logger = logging.getLogger("wake_sleep.domains")

DOMAINS = ("list", "text", "regression")

Example = Tuple[Tuple[Any, ...], Any]


class Task:
    """Observed data plus the likelihood functional that scores programs against it.

    IO tasks (list, text) carry `examples`: (input tuple, output) pairs. Regression
    tasks carry `points`, an (N, 2) array of (x, y), and optionally the generating
    `solution` {"skeleton": source, "parameters": [...]}.
    """

    def __init__(self, task_id: str, name: str, request: PolyType, domain: str,
                 examples: Optional[Sequence[Example]] = None,
                 points: Optional[np.ndarray] = None,
                 solution: Optional[dict] = None,
                 step_budget: int = DEFAULT_STEP_BUDGET):
        if domain not in DOMAINS:
            raise ValueError(f"unknown domain {domain!r}")
        self.task_id = task_id
        self.name = name
        self.request = request
        self.domain = domain
        self.examples: List[Example] = [(tuple(i), o) for i, o in (examples or [])]
        self.points = None if points is None else np.asarray(points, dtype=float)
        self.solution = solution
        self.step_budget = step_budget
        if domain == "regression":
            if self.points is None or len(self.points) < 20:
                raise ValueError(f"regression task {name!r} needs at least 20 points")
        elif not self.examples:
            raise ValueError(f"task {name!r} has no examples")

    def __repr__(self) -> str:
        size = len(self.points) if self.domain == "regression" else len(self.examples)
        return f"Task({self.task_id!r}, {self.name!r}, {self.request}, {size} observations)"

    @property
    def inputs(self) -> List[Tuple[Any, ...]]:
        if self.domain == "regression":
            return [(x,) for x in self.points[:, 0]]
        return [i for i, _ in self.examples]

    def log_likelihood(self, program: Program) -> float:
        if self.domain == "regression":
            return regression_likelihood(self, program)
        return io_likelihood(self, program)
