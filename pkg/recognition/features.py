# recognition/features.py
"""Fixed-width task features.

IO tasks hash (position, input token, output token) triples into signed buckets
and reserve a few slots for length and type summaries. Regression tasks use the
resampled curve plus quantiles and moments of (x, y).
"""
from typing import Any, List, Optional

import numpy as np
import xxhash

from config.settings import settings

SUMMARY_SLOTS = 8
MAX_POSITIONS = 12


def _tokens(value: Any) -> List[str]:
    if isinstance(value, list):
        tokens = ["["]
        for v in value:
            tokens.extend(_tokens(v))
        tokens.append("]")
        return tokens
    if isinstance(value, bool):
        return ["T" if value else "F"]
    return [str(value)]


def _bucket(key: str, width: int) -> tuple:
    digest = xxhash.xxh64_intdigest(key)
    return digest % width, 1.0 if (digest >> 63) & 1 else -1.0


def _io_features(task, width: int) -> np.ndarray:
    hashed = width - SUMMARY_SLOTS
    vector = np.zeros(width)
    input_lengths, output_lengths, same, identical = [], [], [], []
    for inputs, output in task.examples:
        input_tokens = [t for v in inputs for t in _tokens(v)]
        output_tokens = _tokens(output)
        for k in range(MAX_POSITIONS):
            a = input_tokens[k] if k < len(input_tokens) else "<end>"
            b = output_tokens[k] if k < len(output_tokens) else "<end>"
            slot, sign = _bucket(f"{k}|{a}|{b}", hashed)
            vector[slot] += sign
        slot, sign = _bucket(f"out|{output_tokens[0]}|{len(output_tokens)}", hashed)
        vector[slot] += sign
        input_lengths.append(len(input_tokens))
        output_lengths.append(len(output_tokens))
        same.append(float(len(input_tokens) == len(output_tokens)))
        identical.append(float(input_tokens == output_tokens))
    vector[:hashed] /= len(task.examples)
    output = task.examples[0][1]
    vector[hashed:] = [
        np.mean(input_lengths) / 10.0,
        np.mean(output_lengths) / 10.0,
        np.mean(same),
        np.mean(identical),
        float(isinstance(output, bool)),
        float(isinstance(output, int) and not isinstance(output, bool)),
        float(isinstance(output, list)),
        len(task.request.function_arguments()) / 4.0,
    ]
    return np.tanh(vector)


def _regression_features(task, width: int) -> np.ndarray:
    points = task.points[np.argsort(task.points[:, 0])]
    x, y = points[:, 0], points[:, 1]
    statistics = 16
    grid = np.linspace(x[0], x[-1], width - statistics)
    curve = np.interp(grid, x, y)
    scale = np.max(np.abs(y)) + 1.0
    centred = y - y.mean()
    spread = y.std() + 1e-9
    extra = [
        *np.quantile(y, [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]) / scale,
        y.mean() / scale,
        np.log1p(y.std()),
        np.mean(centred ** 3) / spread ** 3,
        np.mean(centred ** 4) / spread ** 4 - 3.0,
        np.corrcoef(x, y)[0, 1] if y.std() > 0 else 0.0,
        np.mean(np.diff(np.sign(np.diff(y))) != 0),
        np.log1p(np.max(np.abs(np.diff(y)))),
        x[0] / 10.0,
        x[-1] / 10.0,
    ]
    vector = np.concatenate([curve / scale, np.asarray(extra, dtype=float)])
    return np.tanh(np.nan_to_num(vector, nan=0.0, posinf=1.0, neginf=-1.0))


def featurize_task(task, width: Optional[int] = None) -> np.ndarray:
    """Deterministic, finite feature vector of length `width` (default 64)."""
    width = settings.FEATURE_WIDTH if width is None else width
    if task.domain == "regression":
        return _regression_features(task, width)
    return _io_features(task, width)
