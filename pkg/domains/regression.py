# domains/regression.py
"""Symbolic regression: continuous parameters fitted by gradient descent, BIC-penalised.

Parameters are fitted on the mean squared error with central finite
differences. All restarts and all finite-difference points are evaluated in one
numpy batch: each placeholder becomes an (M, 1) column and x a (1, N) row, so a
single evaluation of the skeleton yields an (M, N) prediction.

Descent stops once every restart has stalled; each restart is then polished
with damped Gauss-Newton steps on the same finite-difference Jacobian, which
settles the ill-conditioned valleys of rational skeletons that plain descent
crawls along.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from config.settings import settings
from lang.evaluator import EvaluationError, count_parameters, evaluate, instantiate_parameters
from lang.program import Program

logger = logging.getLogger("wake_sleep.domains.regression")

MAXIMUM_PARAMETERS = 4


class ContinuousProgram:
    """A skeleton whose REAL placeholders (left-to-right preorder) are free parameters."""

    def __init__(self, skeleton: Program):
        self.skeleton = skeleton
        self.d = count_parameters(skeleton)

    def __repr__(self) -> str:
        return f"ContinuousProgram({self.skeleton}, d={self.d})"

    def instantiate(self, parameters) -> Program:
        return instantiate_parameters(self.skeleton, list(parameters))


def _batched_predictions(cp: ContinuousProgram, parameters: np.ndarray, x: np.ndarray,
                         step_budget: int) -> np.ndarray:
    """Predictions of shape (M, N) for each row of `parameters` (shape (M, d)); NaN where evaluation fails."""
    m = parameters.shape[0]
    columns = [parameters[:, j:j + 1] for j in range(cp.d)]
    try:
        with np.errstate(all="ignore"):
            prediction = evaluate(cp.instantiate(columns), [x], step_budget)
            return np.array(np.broadcast_to(np.asarray(prediction, dtype=float), (m, x.shape[1])))
    except (EvaluationError, TypeError, ValueError):
        return np.full((m, x.shape[1]), np.nan)


def _mse(prediction: np.ndarray, y: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        mse = np.mean((prediction - y) ** 2, axis=-1)
    return np.where(np.isfinite(mse), mse, np.inf)


def _batched_mse(cp: ContinuousProgram, parameters: np.ndarray, x: np.ndarray, y: np.ndarray,
                 step_budget: int) -> np.ndarray:
    """Mean squared error for each row of `parameters`; non-finite → +∞."""
    return _mse(_batched_predictions(cp, parameters, x, step_budget), y)


def _shifted(theta: np.ndarray, fd_step: float) -> np.ndarray:
    """(M, 2d, d): every row of theta shifted by ±fd_step along each axis."""
    offsets = np.eye(theta.shape[1]) * fd_step
    return np.concatenate([theta[:, None, :] + offsets[None], theta[:, None, :] - offsets[None]], axis=1)


def _descend(cp: ContinuousProgram, theta: np.ndarray, loss: np.ndarray, x: np.ndarray, y: np.ndarray,
             learning_rate: float, iterations: int, fd_step: float, tolerance: float,
             step_budget: int) -> Tuple[np.ndarray, np.ndarray]:
    restarts, d = theta.shape
    rates = np.full(restarts, learning_rate)
    for _ in range(iterations):
        shifted_loss = _batched_mse(cp, _shifted(theta, fd_step).reshape(restarts * 2 * d, d), x, y, step_budget)
        shifted_loss = shifted_loss.reshape(restarts, 2 * d)
        with np.errstate(invalid="ignore"):
            gradient = (shifted_loss[:, :d] - shifted_loss[:, d:]) / (2 * fd_step)
        candidate = theta - rates[:, None] * np.nan_to_num(gradient, nan=0.0, posinf=0.0, neginf=0.0)
        candidate_loss = _batched_mse(cp, candidate, x, y, step_budget)
        accept = (np.isfinite(candidate_loss) & (candidate_loss <= loss)
                  & np.all(np.isfinite(gradient), axis=1))
        with np.errstate(invalid="ignore"):
            stalled = accept & (loss - candidate_loss <= tolerance * loss)
        theta = np.where(accept[:, None], candidate, theta)
        loss = np.where(accept, candidate_loss, loss)
        rates = np.where(accept, rates, rates * 0.5)
        if np.all(stalled | (loss < 1e-16) | (rates < 1e-12)):
            break
    return theta, loss


def _polish(cp: ContinuousProgram, theta: np.ndarray, loss: np.ndarray, x: np.ndarray, y: np.ndarray,
            iterations: int, fd_step: float, step_budget: int) -> Tuple[np.ndarray, np.ndarray]:
    """Levenberg-damped Gauss-Newton steps, accepted only when the loss does not rise."""
    restarts, d = theta.shape
    damping = np.full(restarts, 1e-3)
    identity = np.eye(d)[None]
    for _ in range(iterations):
        prediction = _batched_predictions(cp, theta, x, step_budget)
        residual = prediction - y
        shifted = _batched_predictions(cp, _shifted(theta, fd_step).reshape(restarts * 2 * d, d), x, step_budget)
        shifted = shifted.reshape(restarts, 2 * d, -1)
        with np.errstate(all="ignore"):
            jacobian = np.swapaxes((shifted[:, :d] - shifted[:, d:]) / (2 * fd_step), 1, 2)
            usable = np.all(np.isfinite(jacobian), axis=(1, 2)) & np.all(np.isfinite(residual), axis=1)
            jacobian = np.where(usable[:, None, None], jacobian, 0.0)
            residual = np.where(usable[:, None], residual, 0.0)
            normal = np.swapaxes(jacobian, 1, 2) @ jacobian
            gradient = np.swapaxes(jacobian, 1, 2) @ residual[:, :, None]
            usable &= np.all(np.isfinite(normal), axis=(1, 2)) & np.all(np.isfinite(gradient), axis=(1, 2))
            normal = np.where(usable[:, None, None], normal, 0.0)
            gradient = np.where(usable[:, None, None], gradient, 0.0)
            diagonal = np.diagonal(normal, axis1=1, axis2=2)[:, :, None]
            system = normal + damping[:, None, None] * identity * (diagonal + 1.0)
        try:
            step = np.linalg.solve(system, -gradient)[:, :, 0]
        except np.linalg.LinAlgError:
            break
        candidate = theta + step
        candidate_loss = _batched_mse(cp, candidate, x, y, step_budget)
        accept = usable & np.isfinite(candidate_loss) & (candidate_loss <= loss)
        theta = np.where(accept[:, None], candidate, theta)
        loss = np.where(accept, candidate_loss, loss)
        damping = np.where(accept, np.maximum(damping / 3.0, 1e-12), damping * 4.0)
        if np.all((loss < 1e-24) | (damping > 1e10)):
            break
    return theta, loss


def fit_constants(cp: ContinuousProgram, points: np.ndarray,
                  learning_rate: Optional[float] = None,
                  iterations: Optional[int] = None,
                  restarts: Optional[int] = None,
                  fd_step: Optional[float] = None,
                  seed: int = 0,
                  step_budget: Optional[int] = None) -> Tuple[List[float], float]:
    """Best-of-restarts parameters and their sum of squared errors (+∞ if every restart fails)."""
    learning_rate = settings.FD_LEARNING_RATE if learning_rate is None else learning_rate
    iterations = settings.FD_ITERATIONS if iterations is None else iterations
    restarts = settings.FD_RESTARTS if restarts is None else restarts
    fd_step = settings.FD_STEP if fd_step is None else fd_step
    step_budget = settings.STEP_BUDGET if step_budget is None else step_budget

    points = np.asarray(points, dtype=float)
    n = len(points)
    x = points[:, 0][None, :]
    y = points[:, 1][None, :]
    d = cp.d

    if d == 0:
        mse = _batched_mse(cp, np.zeros((1, 0)), x, y, step_budget)[0]
        return [], float(mse * n)

    rng = np.random.default_rng(seed)
    theta = rng.uniform(-settings.PARAMETER_INIT_RANGE, settings.PARAMETER_INIT_RANGE, (restarts, d))
    loss = _batched_mse(cp, theta, x, y, step_budget)
    theta, loss = _descend(cp, theta, loss, x, y, learning_rate, iterations, fd_step,
                           settings.FD_TOLERANCE, step_budget)
    theta, loss = _polish(cp, theta, loss, x, y, settings.FD_POLISH_ITERATIONS, fd_step, step_budget)

    best = int(np.argmin(loss))
    if not np.isfinite(loss[best]):
        return theta[best].tolist(), float("inf")
    return theta[best].tolist(), float(loss[best] * n)


def regression_log_likelihood(sse: float, n: int, d: int, variance_floor: Optional[float] = None) -> float:
    """Gaussian log-likelihood at the MLE σ̂² = sse/N (floored) minus the BIC penalty (d/2)·log N."""
    if not np.isfinite(sse):
        return float("-inf")
    floor = settings.VARIANCE_FLOOR if variance_floor is None else variance_floor
    variance = max(sse / n, floor)
    return float(-0.5 * n * np.log(variance) - n / 2 - 0.5 * d * np.log(n))


def regression_likelihood(task, program: Program) -> float:
    cp = ContinuousProgram(program)
    if cp.d > MAXIMUM_PARAMETERS:
        return float("-inf")
    _, sse = fit_constants(cp, task.points, step_budget=task.step_budget)
    return regression_log_likelihood(sse, len(task.points), cp.d)
