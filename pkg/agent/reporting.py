# agent/reporting.py
"""Per-iteration metrics: training coverage, held-out accuracy, solve times and library shape."""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from agent.checkpoints import restore
from domains.tasks import Task
from models.schemas import CheckpointDocument, MetricsDocument, MetricsRow
from tools.wake import WakeTool
from utils.json_utils import write_json

logger = logging.getLogger("wake_sleep.agent.reporting")

METRICS_COLUMNS = ["iter", "train_solved", "test_solved", "mean_time_s", "median_time_s", "lib_size", "lib_depth"]


def _percent(solved: int, total: int) -> float:
    return 100.0 * solved / total if total else 0.0


def metrics_row(checkpoint: CheckpointDocument, test_tasks: Sequence[Task],
                wake: Optional[WakeTool] = None) -> MetricsRow:
    library, frontiers, model = restore(checkpoint)
    train_ids = checkpoint.train_task_ids or sorted(frontiers)
    train_solved = sum(1 for k in train_ids if k in frontiers and not frontiers[k].empty)

    test_solved = 0
    if test_tasks:
        wake = wake or WakeTool()
        # fresh search under the frozen library and model; nothing is written back
        results = wake.run(tasks=list(test_tasks), library=library, model=model)
        test_solved = sum(1 for r in results if not r.frontier.empty)

    times = [t for t in checkpoint.solve_times.values() if t is not None]
    return MetricsRow(
        iter=checkpoint.iteration,
        train_solved=_percent(train_solved, len(train_ids)),
        test_solved=_percent(test_solved, len(test_tasks)),
        mean_time_s=float(np.mean(times)) if times else None,
        median_time_s=float(np.median(times)) if times else None,
        lib_size=len(library),
        lib_depth=library.depth(),
    )


def report(checkpoints: Sequence[CheckpointDocument], test_tasks: Sequence[Task],
           wake: Optional[WakeTool] = None) -> MetricsDocument:
    rows = [metrics_row(c, test_tasks, wake) for c in checkpoints]
    for row in rows:
        logger.info(f"iter {row.iter}: train {row.train_solved:.1f}%, test {row.test_solved:.1f}%, "
                    f"library {row.lib_size} (depth {row.lib_depth})")
    return MetricsDocument(rows=rows)


def metrics_frame(metrics: MetricsDocument) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in metrics.rows], columns=METRICS_COLUMNS)


def write_metrics(run_dir: Union[str, Path], metrics: MetricsDocument) -> List[Path]:
    run_dir = Path(run_dir)
    json_path = write_json(run_dir / "metrics.json", metrics)
    csv_path = run_dir / "metrics.csv"
    metrics_frame(metrics).to_csv(csv_path, index=False)
    logger.info(f"Wrote {json_path} and {csv_path}")
    return [json_path, csv_path]
