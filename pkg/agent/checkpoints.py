# agent/checkpoints.py
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import orjson
from pydantic import TypeAdapter, ValidationError

from grammar.frontier import Frontier
from grammar.library import Library, LibraryMismatchError
from lang.program import ParseError, UnknownPrimitiveError
from models.schemas import CheckpointDocument, FrontierDocument, InventionRecord, LibraryDocument
from recognition.model import RecognitionModel
from utils.json_utils import read_json, write_json

logger = logging.getLogger("wake_sleep.agent.checkpoints")

CHECKPOINT_PATTERN = re.compile(r"checkpoint_(\d+)\.json$")
_CHECKPOINT = TypeAdapter(CheckpointDocument)
_LIBRARY = TypeAdapter(LibraryDocument)
_FRONTIER_LIST = TypeAdapter(List[FrontierDocument])


class CheckpointFileError(ValueError):
    """A checkpoint or frontier file is missing, malformed, or inconsistent with its library."""


def build_checkpoint(iteration: int, library: Library, frontiers: Dict[str, Frontier],
                     model: Optional[RecognitionModel], solve_times: Dict[str, Optional[float]],
                     train_task_ids: List[str], inventions: List[InventionRecord],
                     seed: int) -> CheckpointDocument:
    return CheckpointDocument(
        iteration=iteration,
        library=LibraryDocument.model_validate(library.to_json()),
        frontiers=[FrontierDocument.model_validate(frontiers[k].to_json()) for k in sorted(frontiers)],
        model=None if model is None else model.to_json(),
        solve_times=dict(sorted(solve_times.items())),
        train_task_ids=list(train_task_ids),
        inventions=list(inventions),
        rng={"seed": seed, "iteration": iteration},
    )


def checkpoint_path(run_dir: Union[str, Path], iteration: int) -> Path:
    return Path(run_dir) / f"checkpoint_{iteration}.json"


def write_checkpoint(run_dir: Union[str, Path], checkpoint: CheckpointDocument) -> Path:
    path = write_json(checkpoint_path(run_dir, checkpoint.iteration), checkpoint)
    logger.info(f"Wrote checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> CheckpointDocument:
    return _read_document(path, _CHECKPOINT)


def load_checkpoints(run_dir: Union[str, Path]) -> List[CheckpointDocument]:
    """All checkpoints of a run directory in iteration order."""
    paths = []
    for path in Path(run_dir).glob("checkpoint_*.json"):
        match = CHECKPOINT_PATTERN.search(path.name)
        if match:
            paths.append((int(match.group(1)), path))
    if not paths:
        raise CheckpointFileError(f"{run_dir}: no checkpoints found")
    return [load_checkpoint(p) for _, p in sorted(paths)]


def library_from_document(document: LibraryDocument) -> Library:
    try:
        return Library.from_json(document.model_dump())
    except ValueError as e:
        raise CheckpointFileError(f"library: {e}") from e


def frontiers_from_documents(documents: List[FrontierDocument], library: Library) -> Dict[str, Frontier]:
    inventions = {i.definition: i for i in library.inventions}
    try:
        frontiers = [Frontier.from_json(d.model_dump(), inventions=inventions) for d in documents]
    except (ParseError, UnknownPrimitiveError) as e:
        raise CheckpointFileError(f"frontiers: {e}") from e
    return {f.task_id: f for f in frontiers}


def restore(checkpoint: CheckpointDocument) -> Tuple[Library, Dict[str, Frontier], Optional[RecognitionModel]]:
    """Live library, frontiers and model of a checkpoint."""
    library = library_from_document(checkpoint.library)
    frontiers = frontiers_from_documents(checkpoint.frontiers, library)
    model = None
    if checkpoint.model is not None:
        try:
            model = RecognitionModel.from_json(checkpoint.model, library)
        except LibraryMismatchError as e:
            raise CheckpointFileError(f"model: {e}") from e
    return library, frontiers, model


def _read_document(path: Union[str, Path], adapter: TypeAdapter):
    try:
        return adapter.validate_python(read_json(path))
    except OSError as e:
        raise CheckpointFileError(f"{path}: cannot read file ({e.strerror})") from e
    except orjson.JSONDecodeError as e:
        raise CheckpointFileError(f"{path}: invalid JSON ({e})") from e
    except ValidationError as e:
        raise CheckpointFileError(f"{path}: unexpected document ({e.error_count()} errors)") from e


def load_library(path: Union[str, Path]) -> Library:
    return library_from_document(_read_document(path, _LIBRARY))


def load_frontiers(path: Union[str, Path], library: Library) -> Dict[str, Frontier]:
    return frontiers_from_documents(_read_document(path, _FRONTIER_LIST), library)
