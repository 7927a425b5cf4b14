# main.py
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

import click
import orjson
from pydantic import ValidationError

from abstraction.compression import compress
from agent.checkpoints import CheckpointFileError, load_checkpoint, load_checkpoints, load_frontiers, \
    load_library, restore
from agent.graph import WakeSleepAgent, load_run_tasks
from agent.reporting import report, write_metrics
from config.settings import settings
from domains.curricula import UnknownCurriculumError, split_tasks
from domains.task_io import TaskFileError, task_to_document
from models.schemas import AblationFlags, CompressionDocument, FantasyDocument, RunConfig
from recognition.fantasies import generate_fantasies
from search.enumerator import SearchBudget
from tools.wake import WakeTool
from utils.json_utils import read_json, write_json
from utils.logging_config import LEVELS, setup_logging

logger = logging.getLogger("wake_sleep.cli")

CONFIG_ERRORS = (click.UsageError, ValidationError, UnknownCurriculumError)
IO_ERRORS = (TaskFileError, CheckpointFileError, OSError, orjson.JSONDecodeError)


def task_source(command):
    """--curriculum / --task-file / --basis, shared by every command that loads tasks."""
    command = click.option("--basis", default=None, help="Primitive basis (list, text, regression, fig3)")(command)
    command = click.option("--task-file", type=click.Path(), default=None, help="JSON task file")(command)
    command = click.option("--curriculum", default=None, help="Built-in curriculum name")(command)
    return command


def search_options(command):
    command = click.option("--workers", type=int, default=settings.WORKERS, show_default=True)(command)
    command = click.option("--deterministic", is_flag=True, help="Sequential solving with a program-count clock")(command)
    command = click.option("--nats-window", type=float, default=settings.NATS_WINDOW, show_default=True)(command)
    command = click.option("--beam", type=int, default=settings.BEAM_SIZE, show_default=True)(command)
    command = click.option("--timeout", type=float, default=settings.TASK_TIMEOUT, show_default=True,
                           help="Seconds per task")(command)
    return command


def _wake_tool(timeout: float, beam: int, nats_window: float, deterministic: bool, workers: int) -> WakeTool:
    budget = SearchBudget(nats_window_width=nats_window, wall_clock_timeout=timeout, beam_k=beam)
    return WakeTool(budget=budget, workers=workers, deterministic=deterministic)


@click.group()
@click.option("--log-level", type=click.Choice(LEVELS, case_sensitive=False), default=settings.LOG_LEVEL,
              show_default=True)
@click.option("--log-file", default=settings.LOG_FILE or None)
def cli(log_level: str, log_file: Optional[str]):
    """Wake-sleep library learning for program induction."""
    setup_logging(log_level, log_file)


@cli.command()
@task_source
@click.option("--iterations", type=int, default=settings.ITERATIONS, show_default=True)
@click.option("--minibatch", type=int, default=None, help="Tasks per wake phase (default: all)")
@search_options
@click.option("--lambda", "structure_penalty", type=float, default=settings.STRUCTURE_PENALTY, show_default=True)
@click.option("--steps", type=int, default=settings.REFACTOR_STEPS, show_default=True)
@click.option("--max-inventions", type=int, default=settings.MAX_INVENTIONS, show_default=True)
@click.option("--candidate-pool", type=int, default=settings.CANDIDATE_POOL, show_default=True)
@click.option("--max-refactor", is_flag=True, help="Score frontiers by their best entry instead of logsumexp")
@click.option("--epochs", type=int, default=settings.EPOCHS, show_default=True)
@click.option("--fantasy-count", type=int, default=settings.FANTASY_COUNT, show_default=True)
@click.option("--bigram", is_flag=True)
@click.option("--seed", type=int, default=settings.SEED, show_default=True)
@click.option("--test-fraction", type=float, default=settings.TEST_FRACTION, show_default=True)
@click.option("--no-abstraction", is_flag=True)
@click.option("--no-recognition", is_flag=True)
@click.option("--memorize", is_flag=True)
@click.option("--enumerate-only", is_flag=True)
@click.option("--output-dir", type=click.Path(), default=settings.OUTPUT_DIR, show_default=True)
@click.option("--resume", type=click.Path(), default=None, help="Checkpoint to continue from")
def run(output_dir: str, resume: Optional[str], no_abstraction: bool, no_recognition: bool, memorize: bool,
        enumerate_only: bool, **options):
    """Run the full wake-sleep loop."""
    config = RunConfig(ablations=AblationFlags(no_abstraction=no_abstraction, no_recognition=no_recognition,
                                               memorize=memorize, enumerate_only=enumerate_only), **options)
    checkpoint = load_checkpoint(resume) if resume is not None else None
    agent = WakeSleepAgent(config, output_dir)
    checkpoints = agent.run(checkpoint)
    metrics = report(checkpoints, agent.test_tasks, agent.wake)
    write_metrics(output_dir, metrics)
    click.echo(f"{len(checkpoints)} checkpoints written to {output_dir}")


@cli.command()
@task_source
@search_options
@click.option("--library", "library_path", type=click.Path(), default=None, help="Library JSON")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), default=None,
              help="Use the library and recognition model of a checkpoint")
@click.option("--output", type=click.Path(), default="frontiers.json", show_default=True)
def solve(curriculum, task_file, basis, library_path, checkpoint_path, output, **search):
    """One wake pass over a task set."""
    config = RunConfig(curriculum=curriculum, task_file=task_file, basis=basis)
    tasks, library = load_run_tasks(config)
    model = None
    if checkpoint_path is not None:
        library, _, model = restore(load_checkpoint(checkpoint_path))
    elif library_path is not None:
        library = load_library(library_path)
    results = _wake_tool(**search).run(tasks=tasks, library=library, model=model)
    frontiers = sorted((r.frontier for r in results), key=lambda f: f.task_id)
    write_json(output, [f.to_json() for f in frontiers])
    solved = sum(1 for f in frontiers if not f.empty)
    click.echo(f"Solved {solved}/{len(tasks)} tasks; frontiers written to {output}")


@cli.command(name="compress")
@click.option("--frontiers", "frontiers_path", type=click.Path(), required=True, help="Frontier JSON list")
@click.option("--library", "library_path", type=click.Path(), default=None, help="Library JSON")
@task_source
@click.option("--lambda", "structure_penalty", type=float, default=settings.STRUCTURE_PENALTY, show_default=True)
@click.option("--steps", type=int, default=settings.REFACTOR_STEPS, show_default=True)
@click.option("--max-inventions", type=int, default=settings.MAX_INVENTIONS, show_default=True)
@click.option("--candidate-pool", type=int, default=settings.CANDIDATE_POOL, show_default=True)
@click.option("--max-refactor", is_flag=True)
@click.option("--output", type=click.Path(), default="compressed.json", show_default=True)
def compress_command(frontiers_path, library_path, curriculum, task_file, basis, output, **options):
    """One abstraction pass over saved frontiers.

    The tasks are required: every rewritten program is re-evaluated on its task's examples.
    """
    if curriculum is None and task_file is None:
        raise click.UsageError("compress needs the frontiers' tasks: pass --curriculum or --task-file")
    tasks, library = load_run_tasks(RunConfig(curriculum=curriculum, task_file=task_file, basis=basis))
    if library_path is not None:
        library = load_library(library_path)
    frontiers = load_frontiers(frontiers_path, library)
    result = compress(library, list(frontiers.values()), tasks, **options)
    document = CompressionDocument(
        library=result.library.to_json(),
        frontiers=[f.to_json() for f in result.frontiers],
        inventions=result.inventions,
    )
    write_json(output, document)
    click.echo(f"Adopted {len(result.inventions)} inventions; written to {output}")


@cli.command()
@click.option("--curriculum", default="list-basic-40", show_default=True)
@click.option("--task-file", type=click.Path(), default=None)
@click.option("--basis", default=None)
@click.option("--library", "library_path", type=click.Path(), default=None, help="Library JSON")
@click.option("--count", type=int, default=settings.FANTASY_COUNT, show_default=True)
@click.option("--seed", type=int, default=settings.SEED, show_default=True)
@click.option("--output", type=click.Path(), default="fantasies.json", show_default=True)
def dream(curriculum, task_file, basis, library_path, count, seed, output):
    """Sample fantasy tasks from a library and write them out."""
    if task_file is not None:
        curriculum = None
    tasks, library = load_run_tasks(RunConfig(curriculum=curriculum, task_file=task_file, basis=basis))
    if library_path is not None:
        library = load_library(library_path)
    fantasies = generate_fantasies(library, tasks, count, seed)
    write_json(output, [FantasyDocument(task=task_to_document(t), program=p.show()) for t, p in fantasies])
    click.echo(f"{len(fantasies)} fantasies written to {output}")


@cli.command(name="report")
@click.option("--run-dir", type=click.Path(), required=True)
@search_options
def report_command(run_dir, **search):
    """Recompute metrics.json and metrics.csv for a run directory."""
    try:
        config = RunConfig.model_validate(read_json(Path(run_dir) / "config.json"))
    except ValidationError as e:
        raise CheckpointFileError(f"{run_dir}/config.json: not a run configuration") from e
    tasks, _ = load_run_tasks(config)
    _, test_tasks = split_tasks(tasks, config.test_fraction, config.seed)
    metrics = report(load_checkpoints(run_dir), test_tasks, _wake_tool(**search))
    write_metrics(run_dir, metrics)
    click.echo(f"{len(metrics.rows)} metrics rows written to {run_dir}")


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and map failures to exit codes: 1 for configuration, 2 for I/O."""
    try:
        result = cli.main(args=argv, prog_name="wake-sleep", standalone_mode=False)
    except CONFIG_ERRORS as e:
        if isinstance(e, click.UsageError):
            e.show()
        else:
            click.echo(f"Error: {e}", err=True)
        return 1
    except IO_ERRORS as e:
        click.echo(f"Error: {e}", err=True)
        return 2
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
