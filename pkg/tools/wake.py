# tools/wake.py
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

from pydantic import Field

from config.settings import settings
from domains.tasks import Task
from grammar.frontier import Frontier
from grammar.library import Library
from recognition.model import RecognitionModel
from search.enumerator import ProgramCountClock, SearchBudget, SolveResult, solve_task
from tools.base import BasePhaseTool


class WakeTool(BasePhaseTool):
    """Solve a batch of tasks by enumeration under the library or the recognition model."""

    name: str = Field(default="wake", description="Wake phase")
    description: str = Field(default="""
    Enumerates programs for each task in order of decreasing prior probability.
    Input: tasks, library, optional recognition model
    Returns: one SolveResult per task, in task order.
    """)
    budget: SearchBudget = Field(default_factory=SearchBudget)
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    deterministic: bool = False
    program_rate: float = Field(default_factory=lambda: settings.DETERMINISTIC_PROGRAM_RATE, gt=0)

    def _run(self, tasks: Sequence[Task], library: Library,
             model: Optional[RecognitionModel] = None) -> List[SolveResult]:
        if self.deterministic or self.workers == 1:
            results = [self._solve(t, library, model) for t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(lambda t: self._solve(t, library, model), tasks))
        solved = sum(1 for r in results if not r.frontier.empty)
        self.logger.info(f"Solved {solved}/{len(tasks)} tasks")
        return results

    def _solve(self, task: Task, library: Library, model: Optional[RecognitionModel]) -> SolveResult:
        clock = ProgramCountClock(self.budget.wall_clock_timeout, self.program_rate) if self.deterministic else None
        try:
            grammar = library if model is None else model.predict_weights(task, library)
            return solve_task(task, grammar, self.budget, clock, prior=library)
        except Exception as e:
            self._log_error(e, {"task": task.name})
            return SolveResult(Frontier(task.task_id, task.request), None, 0)


def solve_times(results: Sequence[SolveResult], tasks: Sequence[Task]) -> Dict[str, Optional[float]]:
    return {t.task_id: r.solve_time for t, r in zip(tasks, results)}
