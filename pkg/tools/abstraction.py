# tools/abstraction.py
from typing import Dict, Optional, Sequence

from pydantic import Field

from abstraction.compression import CompressionResult, compress, memorize
from config.settings import settings
from domains.tasks import Task
from grammar.frontier import Frontier
from grammar.library import Library
from tools.base import BasePhaseTool


class AbstractionTool(BasePhaseTool):
    """Grow the library by refactoring the frontiers, or memorize MAP programs wholesale."""

    name: str = Field(default="abstraction", description="Abstraction sleep")
    description: str = Field(default="""
    Proposes inventions from inverse-beta version spaces and adopts those that raise the MDL objective.
    Input: library, frontiers, tasks (for the semantic check)
    Returns: CompressionResult with the new library and rewritten frontiers.
    """)
    structure_penalty: float = Field(default_factory=lambda: settings.STRUCTURE_PENALTY, gt=0)
    steps: int = Field(default_factory=lambda: settings.REFACTOR_STEPS, ge=0)
    max_inventions: int = Field(default_factory=lambda: settings.MAX_INVENTIONS, ge=0)
    candidate_pool: int = Field(default_factory=lambda: settings.CANDIDATE_POOL, ge=1)
    max_refactor: bool = False
    memorize: bool = False

    def _run(self, library: Library, frontiers: Sequence[Frontier],
             tasks: Optional[Dict[str, Task]] = None) -> CompressionResult:
        if self.memorize:
            result = memorize(library, frontiers)
        else:
            result = compress(library, frontiers, tasks, structure_penalty=self.structure_penalty,
                              steps=self.steps, max_inventions=self.max_inventions,
                              candidate_pool=self.candidate_pool, max_refactor=self.max_refactor)
        self.logger.info(f"Library now has {len(result.library)} productions "
                         f"({len(result.inventions)} adopted this phase)")
        return result
