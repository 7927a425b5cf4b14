# recognition/fantasies.py
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from domains.tasks import Task
from grammar.library import Grammar, SamplingDepthExceeded
from lang.evaluator import EvaluationError, count_parameters, evaluate, evaluate_all, instantiate_parameters, \
    is_first_order
from lang.program import Program
from lang.types import render_type

logger = logging.getLogger("wake_sleep.recognition.fantasies")

Fantasy = Tuple[Task, Program]


def _attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, attempt]))


def _regression_fantasy(program: Program, source: Task, rng: np.random.Generator,
                        name: str) -> Optional[Task]:
    d = count_parameters(program)
    parameters = rng.uniform(-settings.PARAMETER_INIT_RANGE, settings.PARAMETER_INIT_RANGE, d)
    x = source.points[:, 0]
    try:
        y = evaluate(instantiate_parameters(program, parameters.tolist()), [x], source.step_budget)
        y = np.asarray(y, dtype=float) * np.ones_like(x)
    except (EvaluationError, TypeError, ValueError):
        return None
    if y.shape != x.shape or not np.all(np.isfinite(y)):
        return None
    return Task(name, name, source.request, "regression", points=np.stack([x, y], axis=1),
                solution={"skeleton": program.show(), "parameters": parameters.tolist()},
                step_budget=source.step_budget)


def _io_fantasy(program: Program, source: Task, name: str) -> Optional[Task]:
    inputs = source.inputs
    outputs = evaluate_all(program, inputs, source.step_budget)
    if outputs is None or not all(is_first_order(o) for o in outputs):
        return None
    return Task(name, name, source.request, source.domain, examples=list(zip(inputs, outputs)),
                step_budget=source.step_budget)


def generate_fantasies(library: Grammar, train_tasks: Sequence[Task], count: int, rng_seed: int,
                       max_depth: Optional[int] = None, retry_factor: Optional[int] = None) -> List[Fantasy]:
    """Sample programs from the library and run them on training inputs.

    Each attempt draws its randomness from (rng_seed, attempt), so the result is a
    pure function of the arguments.
    """
    if not train_tasks:
        raise ValueError("fantasies need at least one training task")
    max_depth = settings.FANTASY_MAX_DEPTH if max_depth is None else max_depth
    retry_factor = settings.FANTASY_RETRY_FACTOR if retry_factor is None else retry_factor
    by_request: Dict[str, List[Task]] = {}
    for task in train_tasks:
        by_request.setdefault(render_type(task.request), []).append(task)

    fantasies: List[Fantasy] = []
    attempts = retry_factor * count
    for attempt in range(attempts):
        if len(fantasies) >= count:
            break
        rng = _attempt_rng(rng_seed, attempt)
        request = train_tasks[int(rng.integers(len(train_tasks)))].request
        try:
            program = library.sample(request, rng, max_depth)
        except SamplingDepthExceeded:
            continue
        sources = by_request[render_type(request)]
        source = sources[int(rng.integers(len(sources)))]
        name = f"fantasy/{len(fantasies):04d}"
        if source.domain == "regression":
            task = _regression_fantasy(program, source, rng, name)
        else:
            task = _io_fantasy(program, source, name)
        if task is not None:
            fantasies.append((task, program))
    if len(fantasies) < count:
        logger.warning(f"Generated only {len(fantasies)} of {count} fantasies in {attempts} attempts")
    else:
        logger.info(f"Generated {len(fantasies)} fantasies")
    return fantasies
