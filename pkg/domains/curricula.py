# domains/curricula.py
"""Built-in task sets. Every generator is seeded, so a curriculum is a fixed set of bytes."""
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from domains.tasks import Task
from grammar.library import Library, base_library as library_from_primitives
from lang.evaluator import evaluate, instantiate_parameters
from lang.primitives import PRIMITIVES, base_primitives
from lang.program import Abstraction, Application, Index, Program
from lang.types import arrow, tbool, tint, tlist, treal, tstr

logger = logging.getLogger("wake_sleep.domains.curricula")

CURRICULUM_SEED = 0
LIST_EXAMPLES = 15
TEXT_EXAMPLES = 10
REGRESSION_POINTS = 50

ilist = tlist(tint)


class UnknownCurriculumError(KeyError):
    """No built-in curriculum has the requested name."""


# --- list-basic-40 ---------------------------------------------------------

ListFamily = Tuple[str, Callable[[List[int]], object], object, int]


def _list_families() -> List[ListFamily]:
    """(name, function, output type, minimum input length)."""
    families: List[ListFamily] = [
        ("double each element", lambda xs: [2 * x for x in xs], ilist, 0),
        ("square each element", lambda xs: [x * x for x in xs], ilist, 0),
        ("reverse", lambda xs: xs[::-1], ilist, 0),
        ("length", len, tint, 0),
        ("sum", sum, tint, 0),
        ("product", lambda xs: int(np.prod(xs)) if xs else 1, tint, 0),
        ("filter even", lambda xs: [x for x in xs if x % 2 == 0], ilist, 0),
        ("filter odd", lambda xs: [x for x in xs if x % 2 == 1], ilist, 0),
        ("head", lambda xs: xs[0], tint, 1),
        ("last", lambda xs: xs[-1], tint, 1),
        ("drop first", lambda xs: xs[1:], ilist, 1),
        ("is empty", lambda xs: len(xs) == 0, tbool, 0),
        ("largest", max, tint, 1),
        ("second largest", lambda xs: sorted(xs)[-2], tint, 2),
        ("smallest", min, tint, 1),
    ]
    for k in (1, 2, 3):
        families.append((f"add {k} to each element", lambda xs, k=k: [x + k for x in xs], ilist, 0))
    families.append(("subtract one from each element", lambda xs: [x - 1 for x in xs], ilist, 0))
    for k in (3, 4):
        families.append((f"multiply each element by {k}", lambda xs, k=k: [k * x for x in xs], ilist, 0))
    for k in (2, 4, 6):
        families.append((f"keep elements greater than {k}", lambda xs, k=k: [x for x in xs if x > k], ilist, 0))
    for k in (0, 1, 2):
        families.append((f"prepend {k}", lambda xs, k=k: [k, *xs], ilist, 0))
    for k in (0, 1):
        families.append((f"append {k}", lambda xs, k=k: [*xs, k], ilist, 0))
    for k in (0, 1, 2):
        families.append((f"element at {k}", lambda xs, k=k: xs[k], tint, k + 1))
    for k in (2, 3):
        families.append((f"each element mod {k}", lambda xs, k=k: [x % k for x in xs], ilist, 0))
    for k in (0, 1):
        families.append((f"count {k}s", lambda xs, k=k: sum(1 for x in xs if x == k), tint, 0))
    for k in (3, 5):
        families.append((f"contains {k}", lambda xs, k=k: k in xs, tbool, 0))
    families.append(("length plus one", lambda xs: len(xs) + 1, tint, 0))
    families.append(("sum plus one", lambda xs: sum(xs) + 1, tint, 0))
    return families


def _random_list(rng: np.random.Generator, minimum: int) -> List[int]:
    length = int(rng.integers(minimum, 7))
    return [int(v) for v in rng.integers(0, 10, length)]


def _list_task(task_id: str, name: str, function, output_type, minimum: int,
               rng: np.random.Generator) -> Task:
    examples = []
    for _ in range(LIST_EXAMPLES):
        xs = _random_list(rng, minimum)
        output = function(xs)
        if isinstance(output, (bool, np.bool_)):
            output = bool(output)
        elif isinstance(output, (int, np.integer)):
            output = int(output)
        examples.append(((xs,), output))
    return Task(task_id, name, arrow(ilist, output_type), "list", examples=examples)


def list_basic_40() -> List[Task]:
    rng = np.random.default_rng(CURRICULUM_SEED)
    families = _list_families()
    return [_list_task(f"list-basic-40/{k:02d}", name, function, output_type, minimum, rng)
            for k, (name, function, output_type, minimum) in enumerate(families)]


def fig3_pair() -> List[Task]:
    rng = np.random.default_rng(CURRICULUM_SEED)
    return [
        _list_task("fig3-pair/00", "double each list element", lambda xs: [2 * x for x in xs], ilist, 0, rng),
        _list_task("fig3-pair/01", "subtract one from each list element", lambda xs: [x - 1 for x in xs],
                   ilist, 0, rng),
    ]


# --- text-basic-20 ---------------------------------------------------------

FIRST_NAMES = ["Alan", "Grace", "Ada", "Edsger", "Barbara", "Donald", "Frances", "John",
               "Margaret", "Niklaus", "Radia", "Dennis", "Shafi", "Ken", "Leslie"]
LAST_NAMES = ["Turing", "Hopper", "Lovelace", "Dijkstra", "Liskov", "Knuth", "Allen", "Backus",
              "Hamilton", "Wirth", "Perlman", "Ritchie", "Goldwasser", "Thompson", "Lamport"]


def _text_families() -> List[Tuple[str, Callable[[str], str]]]:
    def words(s: str) -> List[str]:
        return s.split(" ")

    return [
        ("initials with periods", lambda s: "".join(w[0] + "." for w in words(s))),
        ("initials", lambda s: "".join(w[0] for w in words(s))),
        ("initials with dashes", lambda s: "-".join(w[0] for w in words(s))),
        ("first word", lambda s: words(s)[0]),
        ("last word", lambda s: words(s)[-1]),
        ("first character", lambda s: s[0]),
        ("drop first character", lambda s: s[1:]),
        ("append period", lambda s: s + "."),
        ("prepend dash", lambda s: "-" + s),
        ("surround with dashes", lambda s: "-" + s + "-"),
        ("spaces to dashes", lambda s: s.replace(" ", "-")),
        ("spaces to commas", lambda s: s.replace(" ", ",")),
        ("remove spaces", lambda s: s.replace(" ", "")),
        ("last name comma first name", lambda s: words(s)[-1] + "," + words(s)[0]),
        ("first word with period", lambda s: words(s)[0] + "."),
        ("last word with period", lambda s: words(s)[-1] + "."),
        ("uppercase letters", lambda s: "".join(c for c in s if c.isupper())),
        ("duplicate", lambda s: s + s),
        ("first initial and last name", lambda s: words(s)[0][0] + "." + words(s)[-1]),
        ("swap words with space", lambda s: " ".join(reversed(words(s)))),
    ]


def text_basic_20() -> List[Task]:
    rng = np.random.default_rng(CURRICULUM_SEED)
    tasks = []
    for k, (name, function) in enumerate(_text_families()):
        examples = []
        for _ in range(TEXT_EXAMPLES):
            s = f"{FIRST_NAMES[int(rng.integers(len(FIRST_NAMES)))]} {LAST_NAMES[int(rng.integers(len(LAST_NAMES)))]}"
            examples.append(((list(s),), list(function(s))))
        tasks.append(Task(f"text-basic-20/{k:02d}", name, arrow(tstr, tstr), "text", examples=examples))
    return tasks


# --- regression-16 ---------------------------------------------------------

def polynomial_skeleton(degree: int) -> Program:
    """Horner form c0 + x(c1 + x(c2 + ...)); parameters in preorder are c0, c1, ..., c_degree."""
    body: Program = PRIMITIVES["REAL"]
    for _ in range(degree):
        body = Application(Application(PRIMITIVES["+."], PRIMITIVES["REAL"]),
                           Application(Application(PRIMITIVES["*."], Index(0)), body))
    return Abstraction(body)


def rational_skeleton() -> Program:
    """a / (x − b); parameters in preorder are a, b."""
    return Abstraction(Application(
        Application(PRIMITIVES["/."], PRIMITIVES["REAL"]),
        Application(Application(PRIMITIVES["-."], Index(0)), PRIMITIVES["REAL"])))


def regression_task(task_id: str, name: str, skeleton: Program, parameters: List[float],
                    x: Optional[np.ndarray] = None) -> Task:
    x = np.linspace(-3.0, 3.0, REGRESSION_POINTS) if x is None else np.asarray(x, dtype=float)
    program = instantiate_parameters(skeleton, parameters)
    y = np.asarray(evaluate(program, [x]), dtype=float) * np.ones_like(x)
    return Task(task_id, name, arrow(treal, treal), "regression",
                points=np.stack([x, y], axis=1),
                solution={"skeleton": skeleton.show(), "parameters": list(parameters)})


def regression_16() -> List[Task]:
    rng = np.random.default_rng(CURRICULUM_SEED)
    tasks = []
    degrees = [0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 4, 4]
    for degree in degrees:
        coefficients = [round(float(c), 1) for c in rng.uniform(-3, 3, degree + 1)]
        k = len(tasks)
        tasks.append(regression_task(f"regression-16/{k:02d}", f"polynomial of degree {degree} ({k})",
                                     polynomial_skeleton(degree), coefficients))
    for _ in range(4):
        a = round(float(rng.uniform(-3, 3)), 1)
        b = round(float(rng.choice([-1, 1]) * rng.uniform(3.2, 5.0)), 1)
        k = len(tasks)
        tasks.append(regression_task(f"regression-16/{k:02d}", f"rational function ({k})",
                                     rational_skeleton(), [a, b]))
    return tasks


CURRICULA: Dict[str, Callable[[], List[Task]]] = {
    "list-basic-40": list_basic_40,
    "text-basic-20": text_basic_20,
    "regression-16": regression_16,
    "fig3-pair": fig3_pair,
}

CURRICULUM_BASES = {
    "list-basic-40": "list",
    "text-basic-20": "text",
    "regression-16": "regression",
    "fig3-pair": "fig3",
}

DOMAIN_BASES = {"list": "list", "text": "text", "regression": "regression"}


def builtin_curricula(name: str) -> List[Task]:
    if name not in CURRICULA:
        raise UnknownCurriculumError(f"unknown curriculum {name!r}; expected one of {sorted(CURRICULA)}")
    return CURRICULA[name]()


def base_library(name: str) -> Library:
    """Initial library for a curriculum name or a primitive basis name."""
    basis = CURRICULUM_BASES.get(name, name)
    try:
        primitives = base_primitives(basis)
    except KeyError as e:
        raise UnknownCurriculumError(f"unknown curriculum or basis {name!r}") from e
    return library_from_primitives(primitives)


def basis_for_tasks(tasks: List[Task]) -> str:
    domains = {t.domain for t in tasks}
    if len(domains) != 1:
        raise ValueError(f"cannot infer a primitive basis for mixed domains {sorted(domains)}")
    return DOMAIN_BASES[domains.pop()]


def split_tasks(tasks: List[Task], test_fraction: float, seed: int) -> Tuple[List[Task], List[Task]]:
    """Deterministic train/test split; task sets with fewer than 4 tasks are not split."""
    if len(tasks) < 4 or test_fraction <= 0:
        return list(tasks), []
    order = np.random.default_rng(seed).permutation(len(tasks))
    test_size = int(round(len(tasks) * test_fraction))
    test_indices = set(int(i) for i in order[:test_size])
    train = [t for k, t in enumerate(tasks) if k not in test_indices]
    test = [t for k, t in enumerate(tasks) if k in test_indices]
    return train, test
