# lang/evaluator.py
"""Call-by-value evaluation with an evaluation-local step budget.

Applied spines headed by `if` evaluate only the taken branch; everything else
is strict. Recursion enters only through the `Y` primitive, which the machine
unfolds on an explicit continuation stack, so recursion depth is limited by the
step budget and not by the interpreter's call stack. Higher-order primitives
(map, fold, ...) call closures from Python and nest one machine loop per call.
"""
import logging
from typing import Any, List, Optional, Sequence, Tuple

from lang.primitives import FixedPoint, constant_primitive, is_parameter
from lang.program import Abstraction, Application, Program

logger = logging.getLogger("wake_sleep.lang.evaluator")

DEFAULT_STEP_BUDGET = 10_000


class EvaluationError(RuntimeError):
    """Runtime failure while evaluating a program (head of nil, type confusion, ...)."""


class StepBudgetExceeded(EvaluationError):
    """The step budget ran out; treated as nontermination."""


class Closure:
    __slots__ = ("body", "environment", "machine")

    def __init__(self, body: Program, environment: Tuple, machine: "_Machine"):
        self.body = body
        self.environment = environment
        self.machine = machine

    def __call__(self, argument):
        return self.machine.apply(self, argument)

    def __repr__(self) -> str:
        return f"<closure {self.body}>"


# continuation frames
_ARGUMENT = 0   # function in hand: evaluate (program, environment), then apply
_APPLY = 1      # argument in hand: apply the saved function to it
_APPLY_TO = 2   # function in hand: apply it to the saved argument
_BRANCH = 3     # condition in hand: evaluate the taken branch


class _Machine:
    __slots__ = ("budget", "steps")

    def __init__(self, budget: int):
        self.budget = budget
        self.steps = 0

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(f"exceeded {self.budget} evaluation steps")

    def run(self, p: Program, environment: Tuple):
        return self._loop([], p, environment, None, True)

    def apply(self, f, x):
        return self._loop([(_APPLY, f)], None, None, x, False)

    def _loop(self, stack: List[tuple], p: Optional[Program], environment, value, evaluating: bool):
        while True:
            if evaluating:
                self.tick()
                if p.is_index:
                    value = environment[p.i]
                elif p.is_abstraction:
                    value = Closure(p.body, environment, self)
                elif p.is_application:
                    head, arguments = p.application_spine()
                    if head.is_primitive and head.name == "if" and len(arguments) >= 3:
                        for a in reversed(arguments[3:]):
                            stack.append((_ARGUMENT, a, environment))
                        stack.append((_BRANCH, arguments[1], arguments[2], environment))
                        p = arguments[0]
                    else:
                        stack.append((_ARGUMENT, p.x, environment))
                        p = p.f
                    continue
                elif p.is_invented:
                    p, environment = p.definition, ()
                    continue
                elif is_parameter(p):
                    raise EvaluationError("unbound continuous parameter")
                else:
                    value = p.value
                evaluating = False
                continue

            if not stack:
                return value
            frame = stack.pop()
            kind = frame[0]
            if kind == _ARGUMENT:
                stack.append((_APPLY, value))
                p, environment, evaluating = frame[1], frame[2], True
            elif kind == _APPLY_TO:
                stack.append((_APPLY, value))
                value = frame[1]
            elif kind == _BRANCH:
                p = frame[1] if value else frame[2]
                environment, evaluating = frame[3], True
            else:
                f = frame[1]
                self.tick()
                if isinstance(f, Closure):
                    p, environment, evaluating = f.body, (value,) + f.environment, True
                elif isinstance(f, FixedPoint):
                    # (Y g) x → g (Y g) x
                    stack.append((_APPLY_TO, value))
                    stack.append((_APPLY, f.function))
                    value = f
                elif callable(f):
                    value = f(value)
                else:
                    raise EvaluationError(f"cannot apply non-function {f!r}")


def evaluate(p: Program, arguments: Sequence[Any] = (), step_budget: int = DEFAULT_STEP_BUDGET) -> Any:
    """Apply closed program `p` to `arguments`; deterministic for a fixed budget."""
    machine = _Machine(step_budget)
    try:
        value = machine.run(p, ())
        for a in arguments:
            value = machine.apply(value, a)
        return value
    except EvaluationError:
        raise
    except RecursionError as e:
        raise EvaluationError("higher-order primitives nested too deeply") from e
    except Exception as e:
        raise EvaluationError(f"{type(e).__name__}: {e}") from e


def count_parameters(p: Program) -> int:
    return sum(1 for _, s in p.walk() if is_parameter(s))


def instantiate_parameters(p: Program, values: Sequence[Any]) -> Program:
    """Replace continuous-parameter placeholders, in left-to-right preorder, with literals."""
    remaining = list(values)

    def fill(q: Program) -> Program:
        if q.is_application:
            f = fill(q.f)
            return Application(f, fill(q.x))
        if q.is_abstraction:
            return Abstraction(fill(q.body))
        if is_parameter(q):
            if not remaining:
                raise ValueError("fewer parameter values than placeholders")
            return constant_primitive(remaining.pop(0))
        return q

    filled = fill(p)
    if remaining:
        raise ValueError("more parameter values than placeholders")
    return filled


def values_equal(a: Any, b: Any) -> bool:
    """Type-strict structural equality; booleans never equal integers."""
    if type(a) is not type(b):
        return False
    if isinstance(a, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def is_first_order(value: Any) -> bool:
    if callable(value):
        return False
    if isinstance(value, list):
        return all(is_first_order(v) for v in value)
    return True


def try_evaluate(p: Program, arguments: Sequence[Any],
                 step_budget: int = DEFAULT_STEP_BUDGET) -> Tuple[bool, Optional[Any]]:
    try:
        return True, evaluate(p, arguments, step_budget)
    except EvaluationError:
        return False, None


def evaluate_all(p: Program, inputs: List[Sequence[Any]],
                 step_budget: int = DEFAULT_STEP_BUDGET) -> Optional[List[Any]]:
    """Outputs for every input tuple, or None if any evaluation fails."""
    outputs = []
    for arguments in inputs:
        ok, value = try_evaluate(p, arguments, step_budget)
        if not ok:
            return None
        outputs.append(value)
    return outputs
