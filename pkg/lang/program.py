# lang/program.py
"""De Bruijn-indexed lambda terms and their S-expression surface syntax."""
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Tuple

from lang.types import Context, PolyType, UnificationError, arrow


class ParseError(ValueError):
    """Syntax error in program text; `offset` is the character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownPrimitiveError(ValueError):
    """An identifier in program text is not in the primitive registry."""


class ShiftError(ValueError):
    """Shifting would make a bound index negative."""


class InferenceError(ValueError):
    """The program cannot be typed (free variable or unification failure)."""


class Program:
    __slots__ = ("_hash",)

    is_index = False
    is_abstraction = False
    is_application = False
    is_primitive = False
    is_invented = False

    def __repr__(self) -> str:
        return self.show()

    def __str__(self) -> str:
        return self.show()

    def show(self) -> str:
        raise NotImplementedError

    def size(self) -> int:
        raise NotImplementedError

    def walk(self, depth: int = 0) -> Iterator[Tuple[int, "Program"]]:
        """Yield (binding depth, subterm) for every subterm, pre-order."""
        yield depth, self

    def shift(self, offset: int, depth: int = 0) -> "Program":
        return self

    def free_variables(self, depth: int = 0) -> List[int]:
        return []

    def substitute(self, value: "Program", index: int = 0) -> "Program":
        """Replace free Index(index) with `value`, lowering higher free indices (β-reduction body)."""
        return self

    def application_spine(self) -> Tuple["Program", List["Program"]]:
        return self, []

    @property
    def is_closed(self) -> bool:
        return not self.free_variables()

    def infer(self) -> PolyType:
        return infer_type(self)


class Index(Program):
    __slots__ = ("i",)
    is_index = True

    def __init__(self, i: int):
        self.i = i
        self._hash = hash(("$", i))

    def __eq__(self, other) -> bool:
        return isinstance(other, Index) and other.i == self.i

    def __hash__(self) -> int:
        return self._hash

    def show(self) -> str:
        return f"${self.i}"

    def size(self) -> int:
        return 1

    def shift(self, offset: int, depth: int = 0) -> Program:
        if self.i < depth:
            return self
        if self.i + offset < depth:
            raise ShiftError(f"cannot shift {self} by {offset}")
        return Index(self.i + offset)

    def free_variables(self, depth: int = 0) -> List[int]:
        return [self.i - depth] if self.i >= depth else []

    def substitute(self, value: Program, index: int = 0) -> Program:
        if self.i == index:
            return value.shift(index)
        if self.i > index:
            return Index(self.i - 1)
        return self


class Abstraction(Program):
    __slots__ = ("body",)
    is_abstraction = True

    def __init__(self, body: Program):
        self.body = body
        self._hash = hash(("lambda", body))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Abstraction) and other._hash == self._hash
                and other.body == self.body)

    def __hash__(self) -> int:
        return self._hash

    def show(self) -> str:
        return f"(lambda {self.body.show()})"

    def size(self) -> int:
        return 1 + self.body.size()

    def walk(self, depth: int = 0):
        yield depth, self
        yield from self.body.walk(depth + 1)

    def shift(self, offset: int, depth: int = 0) -> Program:
        return Abstraction(self.body.shift(offset, depth + 1))

    def free_variables(self, depth: int = 0) -> List[int]:
        return self.body.free_variables(depth + 1)

    def substitute(self, value: Program, index: int = 0) -> Program:
        return Abstraction(self.body.substitute(value, index + 1))


class Application(Program):
    __slots__ = ("f", "x")
    is_application = True

    def __init__(self, f: Program, x: Program):
        self.f = f
        self.x = x
        self._hash = hash(("@", f, x))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Application) and other._hash == self._hash
                and other.f == self.f and other.x == self.x)

    def __hash__(self) -> int:
        return self._hash

    def show(self) -> str:
        head, arguments = self.application_spine()
        return "(" + " ".join(p.show() for p in [head, *arguments]) + ")"

    def size(self) -> int:
        return self.f.size() + self.x.size()

    def walk(self, depth: int = 0):
        yield depth, self
        yield from self.f.walk(depth)
        yield from self.x.walk(depth)

    def shift(self, offset: int, depth: int = 0) -> Program:
        return Application(self.f.shift(offset, depth), self.x.shift(offset, depth))

    def free_variables(self, depth: int = 0) -> List[int]:
        return self.f.free_variables(depth) + self.x.free_variables(depth)

    def substitute(self, value: Program, index: int = 0) -> Program:
        return Application(self.f.substitute(value, index), self.x.substitute(value, index))

    def application_spine(self) -> Tuple[Program, List[Program]]:
        arguments = []
        head: Program = self
        while head.is_application:
            arguments.append(head.x)
            head = head.f
        arguments.reverse()
        return head, arguments


class Primitive(Program):
    """A named library primitive. Equality is by name."""

    __slots__ = ("name", "tp", "value")
    is_primitive = True

    def __init__(self, name: str, tp: PolyType, value: Any = None):
        self.name = name
        self.tp = tp
        self.value = value
        self._hash = hash(("primitive", name))

    def __eq__(self, other) -> bool:
        return isinstance(other, Primitive) and other.name == self.name

    def __hash__(self) -> int:
        return self._hash

    def show(self) -> str:
        return self.name

    def size(self) -> int:
        return 1


class Invented(Program):
    """A learned production. Equality is structural on the definition."""

    __slots__ = ("name", "definition", "_tp")
    is_invented = True

    def __init__(self, definition: Program, name: str = ""):
        self.definition = definition
        self.name = name
        self._tp: Optional[PolyType] = None
        self._hash = hash(("invented", definition))

    def __eq__(self, other) -> bool:
        return isinstance(other, Invented) and other.definition == self.definition

    def __hash__(self) -> int:
        return self._hash

    @property
    def tp(self) -> PolyType:
        if self._tp is None:
            self._tp = infer_type(self.definition)
        return self._tp

    def show(self) -> str:
        return "#" + self.definition.show()

    def size(self) -> int:
        return 1


def program_size(p: Program) -> int:
    """Number of primitives, invention references, indices and abstractions."""
    return p.size()


def beta_reduce_once(p: Program) -> Optional[Program]:
    """Contract the leftmost-outermost redex, or return None when p is normal."""
    if p.is_application:
        if p.f.is_abstraction:
            return p.f.body.substitute(p.x)
        reduced = beta_reduce_once(p.f)
        if reduced is not None:
            return Application(reduced, p.x)
        reduced = beta_reduce_once(p.x)
        if reduced is not None:
            return Application(p.f, reduced)
        return None
    if p.is_abstraction:
        reduced = beta_reduce_once(p.body)
        return None if reduced is None else Abstraction(reduced)
    return None


def apply_arguments(head: Program, arguments: List[Program]) -> Program:
    for a in arguments:
        head = Application(head, a)
    return head


def wrap_abstractions(body: Program, count: int) -> Program:
    for _ in range(count):
        body = Abstraction(body)
    return body


# --- type inference -------------------------------------------------------

def _infer(context: Context, environment: List[PolyType], p: Program) -> Tuple[Context, PolyType]:
    if p.is_index:
        if p.i >= len(environment):
            raise InferenceError(f"free variable {p} in closed program")
        return context, environment[p.i].apply(context)
    if p.is_abstraction:
        context, argument = context.make_variable()
        context, body = _infer(context, [argument, *environment], p.body)
        return context, arrow(argument, body).apply(context)
    if p.is_application:
        context, ft = _infer(context, environment, p.f)
        context, xt = _infer(context, environment, p.x)
        context, result = context.make_variable()
        context = context.unify(ft, arrow(xt, result))
        return context, result.apply(context)
    return p.tp.instantiate(context)


def infer_type(p: Program, environment: Optional[List[PolyType]] = None) -> PolyType:
    """Most general type of a closed program (Hindley-Milner over de Bruijn terms)."""
    try:
        context, tp = _infer(Context.EMPTY, list(environment or []), p)
    except UnificationError as e:
        raise InferenceError(f"{p} is ill-typed: {e}") from e
    return tp.apply(context).canonical()


def is_well_typed(p: Program) -> bool:
    try:
        infer_type(p)
        return True
    except InferenceError:
        return False


# --- surface syntax -------------------------------------------------------

_DELIMITERS = set("() \t\n\r")


def render_program(p: Program) -> str:
    return p.show()


def parse_program(text: str, registry: Mapping[str, Program],
                  inventions: Optional[Mapping[Program, Invented]] = None) -> Program:
    """Parse S-expression program text against a primitive registry.

    `inventions` maps known definitions to their named `Invented` productions so
    that parsed `#(...)` references recover the library's names.
    """
    position = 0
    length = len(text)

    def skip_space():
        nonlocal position
        while position < length and text[position] in " \t\n\r":
            position += 1

    def parse_expression() -> Program:
        nonlocal position
        skip_space()
        if position >= length:
            raise ParseError("unexpected end of input", position)
        c = text[position]
        if c == ")":
            raise ParseError("unexpected ')'", position)
        if c == "#":
            position += 1
            definition = parse_expression()
            if inventions is not None and definition in inventions:
                return inventions[definition]
            return Invented(definition)
        if c == "(":
            position += 1
            skip_space()
            if text.startswith("lambda", position) and \
                    (position + 6 >= length or text[position + 6] in _DELIMITERS):
                position += 6
                body = parse_expression()
                close()
                return Abstraction(body)
            items = []
            while True:
                skip_space()
                if position >= length:
                    raise ParseError("unbalanced parenthesis", position)
                if text[position] == ")":
                    position += 1
                    break
                items.append(parse_expression())
            if not items:
                raise ParseError("empty application", position - 1)
            return apply_arguments(items[0], items[1:])
        start = position
        while position < length and text[position] not in _DELIMITERS:
            position += 1
        token = text[start:position]
        if token.startswith("$"):
            try:
                return Index(int(token[1:]))
            except ValueError:
                raise ParseError(f"bad index {token!r}", start)
        if token == "lambda":
            raise ParseError("'lambda' outside parentheses", start)
        if token not in registry:
            raise UnknownPrimitiveError(f"unknown identifier {token!r} at offset {start}")
        return registry[token]

    def close():
        nonlocal position
        skip_space()
        if position >= length:
            raise ParseError("unbalanced parenthesis", position)
        if text[position] != ")":
            raise ParseError("expected ')'", position)
        position += 1

    program = parse_expression()
    skip_space()
    if position != length:
        raise ParseError("trailing input", position)
    return program


def map_primitives(p: Program, f: Callable[[Program], Program]) -> Program:
    """Rebuild p, replacing every primitive/invention leaf by f(leaf)."""
    if p.is_application:
        return Application(map_primitives(p.f, f), map_primitives(p.x, f))
    if p.is_abstraction:
        return Abstraction(map_primitives(p.body, f))
    if p.is_primitive or p.is_invented:
        return f(p)
    return p


def invention_table(productions: Dict[str, Program]) -> Dict[Program, Invented]:
    return {p.definition: p for p in productions.values() if p.is_invented}
