# domains/task_io.py
"""Task files: a JSON list of task documents, values encoded according to the task type."""
import logging
from pathlib import Path
from typing import Any, List, Union

import orjson
from pydantic import TypeAdapter, ValidationError

from domains.tasks import Task
from lang.types import PolyType, TypeParseError, parse_type, render_type, tbool, tchar, tint, treal
from models.schemas import ExampleDocument, TaskDocument
from utils.json_utils import read_json, write_json

logger = logging.getLogger("wake_sleep.domains.task_io")

_TASK_LIST = TypeAdapter(List[TaskDocument])


class TaskFileError(ValueError):
    """A task file is missing, unreadable, or violates the schema; the message carries the path."""


class _ValueError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")


def value_from_json(obj: Any, tp: PolyType, where: str = "$") -> Any:
    if tp == tint:
        if isinstance(obj, bool) or not isinstance(obj, int):
            raise _ValueError(where, f"expected int, got {obj!r}")
        return obj
    if tp == tbool:
        if not isinstance(obj, bool):
            raise _ValueError(where, f"expected bool, got {obj!r}")
        return obj
    if tp == tchar:
        if not isinstance(obj, str) or len(obj) != 1:
            raise _ValueError(where, f"expected a single character, got {obj!r}")
        return obj
    if tp == treal:
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            raise _ValueError(where, f"expected real, got {obj!r}")
        return float(obj)
    if not tp.is_variable and tp.name == "list":
        element = tp.arguments[0]
        if element == tchar:
            if not isinstance(obj, str):
                raise _ValueError(where, f"expected string, got {obj!r}")
            return list(obj)
        if not isinstance(obj, list):
            raise _ValueError(where, f"expected list, got {obj!r}")
        return [value_from_json(x, element, f"{where}[{k}]") for k, x in enumerate(obj)]
    raise _ValueError(where, f"unsupported observation type {render_type(tp)}")


def value_to_json(value: Any, tp: PolyType) -> Any:
    if not tp.is_variable and tp.name == "list":
        if tp.arguments[0] == tchar:
            return "".join(value)
        return [value_to_json(x, tp.arguments[0]) for x in value]
    return value


def task_from_document(document: TaskDocument, where: str = "$") -> Task:
    try:
        request = parse_type(document.type)
    except TypeParseError as e:
        raise _ValueError(f"{where}.type", str(e)) from e
    if document.domain == "regression":
        return Task(document.id, document.name, request, "regression",
                    points=document.points, solution=document.solution)
    argument_types = request.function_arguments()
    result_type = request.returns()
    examples = []
    for k, example in enumerate(document.examples):
        here = f"{where}.examples[{k}]"
        if len(example.inputs) != len(argument_types):
            raise _ValueError(f"{here}.inputs",
                              f"expected {len(argument_types)} inputs for type {document.type}")
        inputs = tuple(value_from_json(v, t, f"{here}.inputs[{j}]")
                       for j, (v, t) in enumerate(zip(example.inputs, argument_types)))
        examples.append((inputs, value_from_json(example.output, result_type, f"{here}.output")))
    return Task(document.id, document.name, request, document.domain, examples=examples,
                solution=document.solution)


def task_to_document(task: Task) -> TaskDocument:
    if task.domain == "regression":
        return TaskDocument(id=task.task_id, name=task.name, domain="regression",
                            type=render_type(task.request), points=task.points.tolist(),
                            solution=task.solution)
    argument_types = task.request.function_arguments()
    result_type = task.request.returns()
    examples = [ExampleDocument(inputs=[value_to_json(v, t) for v, t in zip(inputs, argument_types)],
                                output=value_to_json(output, result_type))
                for inputs, output in task.examples]
    return TaskDocument(id=task.task_id, name=task.name, domain=task.domain,
                        type=render_type(task.request), examples=examples, solution=task.solution)


def tasks_from_json(documents: Any, source: str = "<memory>") -> List[Task]:
    try:
        parsed = _TASK_LIST.validate_python(documents)
    except ValidationError as e:
        first = e.errors()[0]
        location = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in first["loc"])
        raise TaskFileError(f"{source}: {location}: {first['msg']}") from e
    tasks = []
    try:
        for k, document in enumerate(parsed):
            tasks.append(task_from_document(document, f"$[{k}]"))
    except ValueError as e:
        raise TaskFileError(f"{source}: {e}") from e
    return tasks


def load_tasks(path: Union[str, Path]) -> List[Task]:
    path = Path(path)
    try:
        documents = read_json(path)
    except OSError as e:
        raise TaskFileError(f"{path}: cannot read task file ({e.strerror})") from e
    except orjson.JSONDecodeError as e:
        raise TaskFileError(f"{path}: invalid JSON ({e})") from e
    tasks = tasks_from_json(documents, str(path))
    logger.info(f"Loaded {len(tasks)} tasks from {path}")
    return tasks


def save_tasks(path: Union[str, Path], tasks: List[Task]) -> Path:
    return write_json(path, [task_to_document(t).model_dump(mode="json", exclude_none=True) for t in tasks])
