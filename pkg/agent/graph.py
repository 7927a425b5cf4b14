# agent/graph.py
import logging
import operator
from pathlib import Path
from typing import Annotated, Dict, List, Optional, Tuple, Union

import numpy as np
from langgraph.graph import END, START, StateGraph
from typing_extensions import TypedDict

from agent.checkpoints import build_checkpoint, load_checkpoint, restore, write_checkpoint
from domains.curricula import base_library, basis_for_tasks, builtin_curricula, split_tasks
from domains.task_io import load_tasks
from domains.tasks import Task
from grammar.frontier import Frontier, merge_frontiers
from grammar.library import Library
from models.schemas import CheckpointDocument, InventionRecord, RunConfig
from recognition.model import RecognitionModel
from search.enumerator import SearchBudget
from tools.abstraction import AbstractionTool
from tools.dreaming import DreamingTool
from tools.wake import WakeTool, solve_times
from utils.json_utils import write_json

logger = logging.getLogger("wake_sleep.agent")


class WakeSleepState(TypedDict):
    iteration: int
    library: Library
    frontiers: Dict[str, Frontier]
    model: Optional[RecognitionModel]
    solve_times: Dict[str, Optional[float]]
    inventions: List[InventionRecord]
    checkpoints: Annotated[List[CheckpointDocument], operator.add]


def load_run_tasks(config: RunConfig) -> Tuple[List[Task], Library]:
    """Tasks and initial library of a run; task file errors surface here, before the loop."""
    if config.curriculum is not None:
        tasks = builtin_curricula(config.curriculum)
        library = base_library(config.basis or config.curriculum)
    else:
        tasks = load_tasks(config.task_file)
        library = base_library(config.basis or basis_for_tasks(tasks))
    return tasks, library


class WakeSleepAgent:
    """The wake / abstraction / dreaming loop as a LangGraph workflow."""

    def __init__(self, config: RunConfig, run_dir: Optional[Union[str, Path]] = None):
        self.logger = logging.getLogger("wake_sleep.agent.WakeSleepAgent")
        self.config = config
        self.run_dir = Path(run_dir) if run_dir is not None else None

        tasks, self.initial_library = load_run_tasks(config)
        self.train_tasks, self.test_tasks = split_tasks(tasks, config.test_fraction, config.seed)
        self.task_map = {t.task_id: t for t in self.train_tasks}

        budget = SearchBudget(nats_window_width=config.nats_window, wall_clock_timeout=config.timeout,
                              beam_k=config.beam)
        ablations = config.ablations
        self.wake = WakeTool(budget=budget, workers=config.workers, deterministic=config.deterministic)
        self.abstraction = AbstractionTool(structure_penalty=config.structure_penalty, steps=config.steps,
                                           max_inventions=config.max_inventions,
                                           candidate_pool=config.candidate_pool,
                                           max_refactor=config.max_refactor, memorize=ablations.memorize)
        self.dreaming = DreamingTool(epochs=config.epochs, fantasy_count=config.fantasy_count,
                                     bigram=config.bigram, seed=config.seed)

        self.graph = self._build_graph()
        self.logger.info(f"Wake-sleep agent initialized with {len(self.train_tasks)} training and "
                         f"{len(self.test_tasks)} held-out tasks")

    # --- phase switches --------------------------------------------------------------

    @property
    def abstraction_enabled(self) -> bool:
        a = self.config.ablations
        # memorize replaces compression, so it runs even with no_abstraction
        return not a.enumerate_only and (a.memorize or not a.no_abstraction)

    @property
    def dreaming_enabled(self) -> bool:
        a = self.config.ablations
        return not (a.enumerate_only or a.no_recognition)

    def _minibatch(self, iteration: int) -> List[Task]:
        size = self.config.minibatch
        if size is None or size >= len(self.train_tasks):
            return list(self.train_tasks)
        rng = np.random.default_rng([self.config.seed, iteration])
        chosen = sorted(int(i) for i in rng.choice(len(self.train_tasks), size, replace=False))
        return [self.train_tasks[i] for i in chosen]

    # --- graph -----------------------------------------------------------------------

    def _build_graph(self):
        graph_builder = StateGraph(WakeSleepState)

        def wake(state: WakeSleepState):
            iteration = state["iteration"] + 1
            batch = self._minibatch(iteration)
            self.logger.info(f"Iteration {iteration}: waking on {len(batch)} tasks")
            results = self.wake.run(tasks=batch, library=state["library"], model=state["model"])
            frontiers = merge_frontiers(state["frontiers"], [r.frontier for r in results], self.config.beam,
                                        library=state["library"])
            times = {**state["solve_times"], **solve_times(results, batch)}
            return {"iteration": iteration, "frontiers": frontiers, "solve_times": times}

        def abstraction(state: WakeSleepState):
            result = self.abstraction.run(library=state["library"], frontiers=list(state["frontiers"].values()),
                                          tasks=self.task_map)
            frontiers = {**state["frontiers"], **{f.task_id: f for f in result.frontiers}}
            return {"library": result.library, "frontiers": frontiers,
                    "inventions": state["inventions"] + list(result.inventions)}

        def dreaming(state: WakeSleepState):
            frontiers = [state["frontiers"][k] for k in sorted(state["frontiers"])]
            model = self.dreaming.run(model=state["model"], library=state["library"], frontiers=frontiers,
                                      tasks=self.task_map, iteration=state["iteration"])
            return {"model": model}

        def checkpoint(state: WakeSleepState):
            document = build_checkpoint(state["iteration"], state["library"], state["frontiers"], state["model"],
                                        state["solve_times"], [t.task_id for t in self.train_tasks],
                                        state["inventions"], self.config.seed)
            if self.run_dir is not None:
                write_checkpoint(self.run_dir, document)
            return {"checkpoints": [document]}

        def after_checkpoint(state: WakeSleepState) -> str:
            return "wake" if state["iteration"] < self.config.iterations else END

        def after_wake(state: WakeSleepState) -> str:
            if self.abstraction_enabled:
                return "abstraction"
            return "dreaming" if self.dreaming_enabled else "checkpoint"

        def after_abstraction(state: WakeSleepState) -> str:
            return "dreaming" if self.dreaming_enabled else "checkpoint"

        graph_builder.add_node("wake", wake)
        graph_builder.add_node("abstraction", abstraction)
        graph_builder.add_node("dreaming", dreaming)
        graph_builder.add_node("checkpoint", checkpoint)

        graph_builder.add_edge(START, "checkpoint")
        graph_builder.add_conditional_edges("checkpoint", after_checkpoint, ["wake", END])
        graph_builder.add_conditional_edges("wake", after_wake, ["abstraction", "dreaming", "checkpoint"])
        graph_builder.add_conditional_edges("abstraction", after_abstraction, ["dreaming", "checkpoint"])
        graph_builder.add_edge("dreaming", "checkpoint")
        return graph_builder.compile()

    def initial_state(self, resume: Optional[CheckpointDocument] = None) -> WakeSleepState:
        if resume is None:
            return {"iteration": 0, "library": self.initial_library, "frontiers": {}, "model": None,
                    "solve_times": {t.task_id: None for t in self.train_tasks}, "inventions": [],
                    "checkpoints": []}
        library, frontiers, model = restore(resume)
        self.logger.info(f"Resuming from iteration {resume.iteration}")
        return {"iteration": resume.iteration, "library": library, "frontiers": frontiers, "model": model,
                "solve_times": dict(resume.solve_times), "inventions": list(resume.inventions),
                "checkpoints": []}

    def run(self, resume: Optional[CheckpointDocument] = None) -> List[CheckpointDocument]:
        """Run until `config.iterations`; returns every checkpoint emitted, the initial one first."""
        if self.run_dir is not None:
            write_json(self.run_dir / "config.json", self.config)
        state = self.initial_state(resume)
        final = self.graph.invoke(state, {"recursion_limit": 4 * self.config.iterations + 10})
        self.logger.info(f"Wake-sleep finished after {final['iteration']} iterations")
        return final["checkpoints"]


def run_wake_sleep(config: RunConfig, run_dir: Optional[Union[str, Path]] = None,
                   resume: Optional[Union[str, Path]] = None) -> List[CheckpointDocument]:
    checkpoint = load_checkpoint(resume) if resume is not None else None
    return WakeSleepAgent(config, run_dir).run(checkpoint)
