# lang/types.py
"""Polymorphic types, substitutions and unification.

Types are immutable. Type variables that occur in a declared primitive type
are implicitly universally quantified; `instantiate` replaces them with fresh
variables drawn from a `Context`.
"""
import re
from typing import Dict, Iterable, List, Optional, Tuple


class UnificationError(ValueError):
    """Raised when two types cannot be made equal."""


class OccursCheckError(UnificationError):
    """Raised when unification would build an infinite type."""


class TypeParseError(ValueError):
    """Raised on malformed type strings."""


class PolyType:
    __slots__ = ()

    is_variable = False

    @property
    def is_arrow(self) -> bool:
        return False

    def apply(self, context: "Context") -> "PolyType":
        raise NotImplementedError

    def free_type_variables(self) -> List[int]:
        raise NotImplementedError

    def returns(self) -> "PolyType":
        t = self
        while t.is_arrow:
            t = t.arguments[1]
        return t

    def function_arguments(self) -> List["PolyType"]:
        arguments = []
        t = self
        while t.is_arrow:
            arguments.append(t.arguments[0])
            t = t.arguments[1]
        return arguments

    def instantiate(self, context: "Context",
                    bindings: Optional[Dict[int, "PolyType"]] = None) -> Tuple["Context", "PolyType"]:
        if bindings is None:
            bindings = {}
        return self._instantiate(context, bindings)

    def canonical(self) -> "PolyType":
        """Rename type variables to t0, t1, ... in order of first appearance."""
        mapping: Dict[int, PolyType] = {}
        for v in self.free_type_variables():
            if v not in mapping:
                mapping[v] = TypeVariable(len(mapping))
        return self._rename(mapping)

    def __repr__(self) -> str:
        return render_type(self)

    def __str__(self) -> str:
        return render_type(self)


class TypeVariable(PolyType):
    __slots__ = ("id",)

    is_variable = True

    def __init__(self, id: int):
        self.id = id

    def __eq__(self, other) -> bool:
        return isinstance(other, TypeVariable) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("tv", self.id))

    def apply(self, context: "Context") -> PolyType:
        bound = context.substitution.get(self.id)
        if bound is None:
            return self
        resolved = bound.apply(context)
        return resolved

    def free_type_variables(self) -> List[int]:
        return [self.id]

    def occurs(self, v: int) -> bool:
        return self.id == v

    def _instantiate(self, context, bindings):
        if self.id not in bindings:
            context, bindings[self.id] = context.make_variable()
        return context, bindings[self.id]

    def _rename(self, mapping):
        return mapping.get(self.id, self)


class TypeConstructor(PolyType):
    __slots__ = ("name", "arguments", "_hash")

    def __init__(self, name: str, arguments: Iterable[PolyType] = ()):
        self.name = name
        self.arguments = tuple(arguments)
        self._hash = hash((self.name, self.arguments))

    def __eq__(self, other) -> bool:
        return (isinstance(other, TypeConstructor) and other._hash == self._hash
                and other.name == self.name and other.arguments == self.arguments)

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_arrow(self) -> bool:
        return self.name == ARROW

    def apply(self, context: "Context") -> PolyType:
        if not self.arguments or not context.substitution:
            return self
        return TypeConstructor(self.name, [a.apply(context) for a in self.arguments])

    def free_type_variables(self) -> List[int]:
        return [v for a in self.arguments for v in a.free_type_variables()]

    def occurs(self, v: int) -> bool:
        return any(a.occurs(v) for a in self.arguments)

    def _instantiate(self, context, bindings):
        if not self.arguments:
            return context, self
        arguments = []
        for a in self.arguments:
            context, a = a._instantiate(context, bindings)
            arguments.append(a)
        return context, TypeConstructor(self.name, arguments)

    def _rename(self, mapping):
        if not self.arguments:
            return self
        return TypeConstructor(self.name, [a._rename(mapping) for a in self.arguments])


ARROW = "->"

tint = TypeConstructor("int")
tbool = TypeConstructor("bool")
tchar = TypeConstructor("char")
treal = TypeConstructor("real")


def tlist(t: PolyType) -> PolyType:
    return TypeConstructor("list", [t])


tstr = tlist(tchar)
t0, t1, t2 = TypeVariable(0), TypeVariable(1), TypeVariable(2)


def arrow(*types: PolyType) -> PolyType:
    if len(types) == 1:
        return types[0]
    return TypeConstructor(ARROW, [types[0], arrow(*types[1:])])


class Context:
    """Immutable substitution plus the next fresh type variable."""

    __slots__ = ("next_variable", "substitution")

    def __init__(self, next_variable: int = 0, substitution: Optional[Dict[int, PolyType]] = None):
        self.next_variable = next_variable
        self.substitution = substitution or {}

    def make_variable(self) -> Tuple["Context", TypeVariable]:
        return Context(self.next_variable + 1, self.substitution), TypeVariable(self.next_variable)

    def extend(self, v: int, t: PolyType) -> "Context":
        substitution = dict(self.substitution)
        substitution[v] = t
        return Context(self.next_variable, substitution)

    def unify(self, t1: PolyType, t2: PolyType) -> "Context":
        t1 = t1.apply(self)
        t2 = t2.apply(self)
        if t1 == t2:
            return self
        if t1.is_variable:
            if t2.occurs(t1.id):
                raise OccursCheckError(f"{t1} occurs in {t2}")
            return self.extend(t1.id, t2)
        if t2.is_variable:
            return self.unify(t2, t1)
        if t1.name != t2.name or len(t1.arguments) != len(t2.arguments):
            raise UnificationError(f"cannot unify {t1} with {t2}")
        context = self
        for a1, a2 in zip(t1.arguments, t2.arguments):
            context = context.unify(a1, a2)
        return context

    def __repr__(self) -> str:
        bindings = ", ".join(f"t{v}:={t}" for v, t in sorted(self.substitution.items()))
        return f"Context(next={self.next_variable}, {{{bindings}}})"


Context.EMPTY = Context()


def canonical_pair(request: PolyType, environment: Iterable[PolyType]) -> str:
    """Rename variables jointly across a request and an environment; used as a memo key."""
    joined = TypeConstructor("$key", [request, *environment])
    return render_type(joined.canonical())


def unifiable(t1: PolyType, t2: PolyType) -> bool:
    context = Context(max([-1, *t1.free_type_variables(), *t2.free_type_variables()]) + 1)
    try:
        context.unify(t1, t2)
        return True
    except UnificationError:
        return False


def render_type(t: PolyType) -> str:
    if t.is_variable:
        return f"t{t.id}"
    if t.is_arrow:
        left, right = t.arguments
        left_text = render_type(left)
        if left.is_arrow:
            left_text = f"({left_text})"
        return f"{left_text}→{render_type(right)}"
    if t.name == "list" and t.arguments[0] == tint:
        return "ilist"
    if t.name == "list" and t.arguments[0] == tchar:
        return "str"
    if not t.arguments:
        return t.name
    return f"{t.name}({', '.join(render_type(a) for a in t.arguments)})"


_TYPE_TOKEN = re.compile(r"\s*(→|->|\(|\)|,|[A-Za-z_$][A-Za-z0-9_]*)")
_ALIASES = {"ilist": tlist(tint), "str": tstr}


def parse_type(text: str) -> PolyType:
    """Parse "ilist→int", "(t0→t1)→list(t0)→list(t1)", ... ."""
    tokens = []
    position = 0
    stripped = text.rstrip()
    while position < len(stripped):
        match = _TYPE_TOKEN.match(stripped, position)
        if match is None:
            raise TypeParseError(f"unexpected character at offset {position} in {text!r}")
        tokens.append(match.group(1))
        position = match.end()

    cursor = 0

    def peek() -> Optional[str]:
        return tokens[cursor] if cursor < len(tokens) else None

    def take(expected: Optional[str] = None) -> str:
        nonlocal cursor
        token = peek()
        if token is None or (expected is not None and token != expected):
            raise TypeParseError(f"expected {expected or 'a type'} in {text!r}")
        cursor += 1
        return token

    def parse_arrow() -> PolyType:
        left = parse_atom()
        if peek() in ("→", "->"):
            take()
            return arrow(left, parse_arrow())
        return left

    def parse_atom() -> PolyType:
        token = take()
        if token == "(":
            inner = parse_arrow()
            take(")")
            return inner
        if token in _ALIASES:
            return _ALIASES[token]
        if re.fullmatch(r"t[0-9]+", token):
            return TypeVariable(int(token[1:]))
        arguments = []
        if peek() == "(":
            take("(")
            arguments.append(parse_arrow())
            while peek() == ",":
                take(",")
                arguments.append(parse_arrow())
            take(")")
        return TypeConstructor(token, arguments)

    if not tokens:
        raise TypeParseError("empty type string")
    result = parse_arrow()
    if cursor != len(tokens):
        raise TypeParseError(f"trailing input in type {text!r}")
    return result
