# grammar/frontier.py
import logging
from typing import Dict, Iterable, List, Optional

from lang.program import Program, parse_program
from lang.primitives import PRIMITIVES
from lang.types import PolyType, parse_type, render_type

logger = logging.getLogger("wake_sleep.grammar.frontier")


class FrontierEntry:
    __slots__ = ("program", "log_prior", "log_likelihood")

    def __init__(self, program: Program, log_prior: float, log_likelihood: float):
        self.program = program
        self.log_prior = log_prior
        self.log_likelihood = log_likelihood

    @property
    def posterior(self) -> float:
        return self.log_prior + self.log_likelihood

    def sort_key(self):
        return (-self.posterior, self.program.size(), self.program.show())

    def __repr__(self) -> str:
        return (f"FrontierEntry({self.program}, log_prior={self.log_prior:.3f}, "
                f"log_likelihood={self.log_likelihood:.3f})")


class Frontier:
    """The best k solutions found for one task, highest posterior first."""

    def __init__(self, task_id: str, request: PolyType, entries: Iterable[FrontierEntry] = (),
                 beam: Optional[int] = None):
        self.task_id = task_id
        self.request = request
        kept = [e for e in entries if e.log_likelihood > float("-inf")]
        kept.sort(key=FrontierEntry.sort_key)
        self.entries: List[FrontierEntry] = kept if beam is None else kept[:beam]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self) -> str:
        return f"Frontier({self.task_id}, {len(self.entries)} entries)"

    @property
    def empty(self) -> bool:
        return not self.entries

    @property
    def best(self) -> Optional[FrontierEntry]:
        return self.entries[0] if self.entries else None

    def combine(self, other: "Frontier", beam: int) -> "Frontier":
        """Union of two beams for the same task; for a repeated program the later entry wins."""
        merged: Dict[Program, FrontierEntry] = {e.program: e for e in self.entries}
        for e in other.entries:
            merged[e.program] = e
        return Frontier(self.task_id, self.request, merged.values(), beam)

    def rescore(self, library) -> "Frontier":
        entries = [FrontierEntry(e.program, library.log_prior(self.request, e.program), e.log_likelihood)
                   for e in self.entries]
        for e in entries:
            if e.log_prior == float("-inf"):
                logger.debug(f"Dropping {e.program} from {self.task_id}: unreachable under the library")
        return Frontier(self.task_id, self.request,
                        [e for e in entries if e.log_prior > float("-inf")])

    def replace_programs(self, programs: List[Program], library) -> "Frontier":
        entries = [FrontierEntry(p, library.log_prior(self.request, p), e.log_likelihood)
                   for p, e in zip(programs, self.entries)]
        return Frontier(self.task_id, self.request, entries)

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "request": render_type(self.request),
            "entries": [{"program": e.program.show(), "logPrior": e.log_prior,
                         "logLikelihood": e.log_likelihood} for e in self.entries],
        }

    @classmethod
    def from_json(cls, document: dict, registry: Optional[Dict[str, Program]] = None,
                  inventions: Optional[Dict[Program, Program]] = None) -> "Frontier":
        registry = registry or PRIMITIVES
        entries = [FrontierEntry(parse_program(e["program"], registry, inventions),
                                 float(e["logPrior"]), float(e["logLikelihood"]))
                   for e in document["entries"]]
        return cls(document["task_id"], parse_type(document["request"]), entries)


def merge_frontiers(stored: Dict[str, Frontier], fresh: Iterable[Frontier], beam: int,
                    library=None) -> Dict[str, Frontier]:
    """Best-k union per task. With `library`, stored entries are rescored first so both sides
    carry priors under the same weights."""
    merged = dict(stored) if library is None else {k: f.rescore(library) for k, f in stored.items()}
    for frontier in fresh:
        if frontier.task_id in merged:
            merged[frontier.task_id] = merged[frontier.task_id].combine(frontier, beam)
        else:
            merged[frontier.task_id] = Frontier(frontier.task_id, frontier.request, frontier.entries, beam)
    return merged
