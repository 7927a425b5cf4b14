# search/enumerator.py
"""Wake-phase search: enumerate programs in bands of description length.

`enumerate_window` emits every program whose cost (negative log prior) lies in
[lower, upper). Internal pruning is lenient by `SLACK` so that no program is
lost to rounding; the top-level band test on the summed cost is exact, which
makes successive windows an exact partition.
"""
import logging
import time
from typing import Callable, Iterator, List, Optional, Tuple

from pydantic import BaseModel, Field

from grammar.frontier import Frontier, FrontierEntry
from grammar.library import ROOT, Grammar, fresh_context, logsumexp
from lang.program import Abstraction, Application, Program
from lang.types import Context, PolyType

logger = logging.getLogger("wake_sleep.search")

SLACK = 1e-9
DEFAULT_MAX_DEPTH = 99

Stop = Optional[Callable[[], bool]]


class SearchBudget(BaseModel):
    nats_window_start: float = Field(0.0, ge=0.0)
    nats_window_width: float = Field(1.5, gt=0.0)
    wall_clock_timeout: float = Field(720.0, gt=0.0)
    beam_k: int = Field(5, ge=1)
    max_description_length: float = Field(99.0, gt=0.0)


class WallClock:
    def __init__(self, timeout: float):
        self.timeout = timeout
        self.programs = 0
        self._start = time.monotonic()

    def tick(self):
        self.programs += 1

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self._start

    @property
    def expired(self) -> bool:
        return self.elapsed >= self.timeout


class ProgramCountClock:
    """Deterministic clock: elapsed time is programs enumerated over a nominal rate."""

    def __init__(self, timeout: float, rate: float = 1000.0):
        self.timeout = timeout
        self.rate = rate
        self.programs = 0

    def tick(self):
        self.programs += 1

    @property
    def elapsed(self) -> float:
        return self.programs / self.rate

    @property
    def expired(self) -> bool:
        return self.elapsed >= self.timeout


class SearchInterrupted(Exception):
    """Raised out of enumeration when the `stop` predicate fires."""


def _enumerate_hole(grammar: Grammar, context: Context, environment: List[PolyType],
                    request: PolyType, upper: float, lower: float, depth: int,
                    parent, stop: Stop = None) -> Iterator[Tuple[float, Context, Program]]:
    request = request.apply(context)
    if request.is_arrow:
        argument, result = request.arguments
        for log_probability, context_, body in _enumerate_hole(
                grammar, context, [argument, *environment], result, upper, lower, depth, parent, stop):
            yield log_probability, context_, Abstraction(body)
        return
    if depth <= 0:
        return
    candidates = grammar.library_for(*parent).build_candidates(request, context, environment)
    if not candidates:
        return
    z = logsumexp([c.log_weight for c in candidates])
    for candidate in candidates:
        if stop is not None and stop():
            raise SearchInterrupted()
        log_probability = candidate.log_weight - z
        cost = -log_probability
        if cost >= upper + SLACK:
            continue
        yield from _enumerate_application(
            grammar, candidate.context, environment, candidate.program, candidate.key,
            candidate.tp.function_arguments(), 0, upper - cost, lower - cost, depth - 1, log_probability, stop)


def _enumerate_application(grammar: Grammar, context: Context, environment: List[PolyType],
                           function: Program, key, argument_types: List[PolyType], index: int,
                           upper: float, lower: float, depth: int,
                           log_probability: float, stop: Stop = None) -> Iterator[Tuple[float, Context, Program]]:
    if not argument_types:
        if lower <= SLACK and upper > -SLACK:
            yield log_probability, context, function
        return
    first, rest = argument_types[0], argument_types[1:]
    # only the last argument sees the lower bound
    for argument_log_probability, context_, argument in _enumerate_hole(
            grammar, context, environment, first, upper, lower if not rest else 0.0, depth, (key, index), stop):
        yield from _enumerate_application(
            grammar, context_, environment, Application(function, argument), key, rest, index + 1,
            upper + argument_log_probability, lower + argument_log_probability, depth,
            log_probability + argument_log_probability, stop)


def enumerate_programs(grammar: Grammar, request: PolyType, lower: float, upper: float,
                       max_depth: int = DEFAULT_MAX_DEPTH, stop: Stop = None) -> Iterator[Tuple[float, Program]]:
    """Yield (log_prior, program) for every program with cost in [lower, upper)."""
    for log_probability, _, program in _enumerate_hole(
            grammar, fresh_context(request), [], request, upper, lower, max_depth, ROOT, stop):
        cost = -log_probability
        if lower <= cost < upper:
            yield log_probability, program


def enumerate_window(grammar: Grammar, request: PolyType, lower: float, upper: float,
                     emit: Callable[[Program, float], None], max_depth: int = DEFAULT_MAX_DEPTH,
                     stop: Stop = None) -> int:
    """Emit every program in the window; `stop` is polled before each hole expansion and
    ends the window early with SearchInterrupted."""
    emitted = 0
    for log_probability, program in enumerate_programs(grammar, request, lower, upper, max_depth, stop):
        emit(program, log_probability)
        emitted += 1
    return emitted


class SolveResult:
    __slots__ = ("frontier", "solve_time", "programs")

    def __init__(self, frontier: Frontier, solve_time: Optional[float], programs: int):
        self.frontier = frontier
        self.solve_time = solve_time
        self.programs = programs

    def __repr__(self) -> str:
        return f"SolveResult({self.frontier}, solve_time={self.solve_time}, programs={self.programs})"


class MemoizedLikelihood:
    """Per-task cache of program → log-likelihood."""

    def __init__(self, task):
        self.task = task
        self._cache = {}

    def __call__(self, program: Program) -> float:
        if program not in self._cache:
            self._cache[program] = self.task.log_likelihood(program)
        return self._cache[program]


def solve_task(task, grammar: Grammar, budget: SearchBudget, clock=None,
               max_depth: int = DEFAULT_MAX_DEPTH, prior: Optional[Grammar] = None) -> SolveResult:
    """Iterative deepening over nats windows until the clock expires.

    `grammar` orders the search; frontier entries store their log prior under
    `prior` (default: `grammar`), so guided and unguided frontiers stay comparable.
    """
    clock = clock or WallClock(budget.wall_clock_timeout)
    prior = grammar if prior is None else prior
    scorer = MemoizedLikelihood(task)
    request = task.request
    hits: List[FrontierEntry] = []
    first_hit: Optional[float] = None

    def emit(program: Program, _: float):
        nonlocal hits, first_hit
        if clock.expired:
            raise SearchInterrupted()
        clock.tick()
        log_likelihood = scorer(program)
        if log_likelihood == float("-inf"):
            return
        log_prior = prior.log_prior(request, program)
        if log_prior == float("-inf"):
            return
        if first_hit is None:
            first_hit = clock.elapsed
        hits.append(FrontierEntry(program, log_prior, log_likelihood))
        hits = sorted(hits, key=FrontierEntry.sort_key)[:budget.beam_k]

    lower = budget.nats_window_start
    try:
        while lower < budget.max_description_length:
            if clock.expired:
                raise SearchInterrupted()
            upper = lower + budget.nats_window_width
            enumerate_window(grammar, request, lower, upper, emit, max_depth, stop=lambda: clock.expired)
            lower = upper
    except SearchInterrupted:
        logger.debug(f"Search for {task.name} timed out after {clock.programs} programs")
    frontier = Frontier(task.task_id, request, hits, budget.beam_k)
    if frontier.empty:
        logger.debug(f"No solution for {task.name} ({clock.programs} programs)")
    else:
        logger.debug(f"Solved {task.name}: {frontier.best.program} ({clock.programs} programs)")
    return SolveResult(frontier, first_hit, clock.programs)
