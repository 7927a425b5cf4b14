# domains/likelihood.py
from lang.evaluator import EvaluationError, evaluate, values_equal
from lang.program import Program

NEGATIVE_INFINITY = float("-inf")


def io_likelihood(task, program: Program) -> float:
    """0 when the program reproduces every example exactly, −∞ otherwise."""
    for inputs, output in task.examples:
        try:
            value = evaluate(program, inputs, task.step_budget)
        except EvaluationError:
            return NEGATIVE_INFINITY
        if not values_equal(value, output):
            return NEGATIVE_INFINITY
    return 0.0
