# lang/primitives.py
"""Primitive registry: the four built-in bases and JSON manifest loading."""
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import orjson

from lang.program import Primitive
from lang.types import (
    PolyType, arrow, parse_type, t0, t1, tbool, tchar, tint, tlist, treal, tstr,
)

logger = logging.getLogger("wake_sleep.lang.primitives")


class ManifestError(ValueError):
    """A primitive manifest entry is malformed or names an unknown implementation."""


# --- implementations --------------------------------------------------------
# Curried Python callables. Runtime failures (car of nil, division by zero)
# raise ordinary exceptions that the evaluator folds into EvaluationError.

class FixedPoint:
    """Y f. The evaluator unfolds it on its own stack; Python callers recurse."""

    __slots__ = ("function",)

    def __init__(self, function):
        self.function = function

    def __call__(self, x):
        return self.function(self)(x)


def _y(f):
    return FixedPoint(f)


def _if(c):
    # strict fallback; applied spines of `if` are evaluated lazily by the evaluator
    return lambda t: lambda e: t if c else e


def _fold(xs):
    def with_initial(initial):
        def with_function(f):
            accumulator = initial
            for x in reversed(xs):
                accumulator = f(x)(accumulator)
            return accumulator
        return with_function
    return with_initial


def _index(i):
    def get(xs):
        if i < 0:
            raise IndexError("negative index")
        return xs[i]
    return get


def _split(delimiter):
    def split(s):
        words, current = [], []
        for c in s:
            if c == delimiter:
                words.append(current)
                current = []
            else:
                current.append(c)
        words.append(current)
        return words
    return split


def _join(separator):
    def join(words):
        joined = []
        for k, w in enumerate(words):
            if k:
                joined.extend(separator)
            joined.extend(w)
        return joined
    return join


def _car(xs):
    if not xs:
        raise IndexError("car of empty list")
    return xs[0]


def _cdr(xs):
    if not xs:
        raise IndexError("cdr of empty list")
    return xs[1:]


IMPLEMENTATIONS: Dict[str, Any] = {
    "Y": _y,
    "if": _if,
    "cons": lambda x: lambda xs: [x, *xs],
    "car": _car,
    "cdr": _cdr,
    "nil": [],
    "empty?": lambda xs: len(xs) == 0,
    "map": lambda f: lambda xs: [f(x) for x in xs],
    "fold": _fold,
    "filter": lambda f: lambda xs: [x for x in xs if f(x)],
    "length": len,
    "index": _index,
    "append": lambda xs: lambda ys: [*xs, *ys],
    "+": lambda a: lambda b: a + b,
    "-": lambda a: lambda b: a - b,
    "*": lambda a: lambda b: a * b,
    "mod": lambda a: lambda b: a % b,
    "gt?": lambda a: lambda b: a > b,
    "eq?": lambda a: lambda b: a == b,
    "0": 0,
    "1": 1,
    "2": 2,
    "split": _split,
    "join": _join,
    "char-space": " ",
    "char-period": ".",
    "char-comma": ",",
    "char-dash": "-",
    "char-eq?": lambda a: lambda b: a == b,
    "upper?": lambda c: c.isupper(),
    "+.": lambda a: lambda b: a + b,
    "-.": lambda a: lambda b: a - b,
    "*.": lambda a: lambda b: a * b,
    "/.": lambda a: lambda b: a / b,
    "REAL": None,
}

# Placeholder for a continuous parameter; bound by `instantiate_parameters`.
REAL = "REAL"


def _declare(name: str, tp: PolyType) -> Primitive:
    return Primitive(name, tp, IMPLEMENTATIONS[name])


PRIMITIVES: Dict[str, Primitive] = {p.name: p for p in [
    _declare("Y", arrow(arrow(arrow(t0, t1), t0, t1), t0, t1)),
    _declare("if", arrow(tbool, t0, t0, t0)),
    _declare("cons", arrow(t0, tlist(t0), tlist(t0))),
    _declare("car", arrow(tlist(t0), t0)),
    _declare("cdr", arrow(tlist(t0), tlist(t0))),
    _declare("nil", tlist(t0)),
    _declare("empty?", arrow(tlist(t0), tbool)),
    _declare("map", arrow(arrow(t0, t1), tlist(t0), tlist(t1))),
    _declare("fold", arrow(tlist(t0), t1, arrow(t0, t1, t1), t1)),
    _declare("filter", arrow(arrow(t0, tbool), tlist(t0), tlist(t0))),
    _declare("length", arrow(tlist(t0), tint)),
    _declare("index", arrow(tint, tlist(t0), t0)),
    _declare("append", arrow(tlist(t0), tlist(t0), tlist(t0))),
    _declare("+", arrow(tint, tint, tint)),
    _declare("-", arrow(tint, tint, tint)),
    _declare("*", arrow(tint, tint, tint)),
    _declare("mod", arrow(tint, tint, tint)),
    _declare("gt?", arrow(tint, tint, tbool)),
    _declare("eq?", arrow(tint, tint, tbool)),
    _declare("0", tint),
    _declare("1", tint),
    _declare("2", tint),
    _declare("split", arrow(tchar, tstr, tlist(tstr))),
    _declare("join", arrow(tstr, tlist(tstr), tstr)),
    _declare("char-space", tchar),
    _declare("char-period", tchar),
    _declare("char-comma", tchar),
    _declare("char-dash", tchar),
    _declare("char-eq?", arrow(tchar, tchar, tbool)),
    _declare("upper?", arrow(tchar, tbool)),
    _declare("+.", arrow(treal, treal, treal)),
    _declare("-.", arrow(treal, treal, treal)),
    _declare("*.", arrow(treal, treal, treal)),
    _declare("/.", arrow(treal, treal, treal)),
    _declare("REAL", treal),
]}

BASES: Dict[str, List[str]] = {
    "fig3": ["Y", "cons", "car", "cdr", "if", "empty?", "+", "-", "0", "1", "nil"],
    "list": ["map", "fold", "filter", "cons", "car", "cdr", "nil", "empty?", "if",
             "length", "index", "+", "-", "*", "mod", "gt?", "eq?", "0", "1", "2"],
    "text": ["map", "fold", "cons", "car", "cdr", "nil", "empty?", "if", "split",
             "join", "append", "char-space", "char-period", "char-comma", "char-dash", "char-eq?", "upper?"],
    "regression": ["+.", "-.", "*.", "/.", "REAL"],
}


def base_primitives(base: str) -> List[Primitive]:
    if base not in BASES:
        raise KeyError(f"unknown primitive basis {base!r}; expected one of {sorted(BASES)}")
    return [PRIMITIVES[name] for name in BASES[base]]


def load_manifest(source: Union[str, Path, List[Dict[str, str]]]) -> Dict[str, Primitive]:
    """Build a registry from `[{name, type, implementation}, ...]` (a path or parsed JSON)."""
    if isinstance(source, (str, Path)):
        entries = orjson.loads(Path(source).read_bytes())
    else:
        entries = source
    registry: Dict[str, Primitive] = {}
    for position, entry in enumerate(entries):
        try:
            name, type_text, key = entry["name"], entry["type"], entry["implementation"]
        except (KeyError, TypeError) as e:
            raise ManifestError(f"manifest entry {position}: missing field {e}") from e
        if key not in IMPLEMENTATIONS:
            raise ManifestError(f"manifest entry {position}: unknown implementation {key!r}")
        if name in registry:
            raise ManifestError(f"manifest entry {position}: duplicate primitive {name!r}")
        registry[name] = Primitive(name, parse_type(type_text), IMPLEMENTATIONS[key])
    logger.debug(f"Loaded {len(registry)} primitives from manifest")
    return registry


def constant_primitive(value: Any) -> Primitive:
    """A real-typed literal standing in for a fitted parameter."""
    return Primitive(f"{value!r}" if not hasattr(value, "shape") else f"<real{value.shape}>",
                     treal, value)


def is_parameter(p) -> bool:
    return p.is_primitive and p.name == REAL

