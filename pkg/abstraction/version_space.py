# abstraction/version_space.py
"""Hash-consed version spaces over de Bruijn terms.

A node id denotes a finite set of programs. Structurally identical nodes share
one id, unions are flattened, and the inverse-β closure of a program is built
by memoised substitution tables rather than by enumerating refactorings.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Set, Tuple

from lang.program import Abstraction, Application, Index, Program

logger = logging.getLogger("wake_sleep.abstraction.version_space")

# Small per-node cost so that, among equal-size inhabitants, fewer applications win.
EPSILON = 0.001


class NodeBudgetExceeded(RuntimeError):
    """The table grew past its node budget."""


@dataclass(frozen=True, slots=True)
class Leaf:
    program: Program


@dataclass(frozen=True, slots=True)
class IndexVS:
    i: int


@dataclass(frozen=True, slots=True)
class ApplyVS:
    f: int
    x: int


@dataclass(frozen=True, slots=True)
class AbstractVS:
    body: int


@dataclass(frozen=True, slots=True)
class Union:
    members: Tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Universe:
    pass


class InverseBeta(NamedTuple):
    node: int
    exhaustive: bool


class VersionTable:
    def __init__(self, node_budget: Optional[int] = None):
        self.node_budget = node_budget
        self.expressions: List[object] = []
        self._ids: Dict[object, int] = {}
        self._substitution_table: Dict[Tuple[int, int], Dict[int, int]] = {}
        self._inversion_table: Dict[int, int] = {}
        self._shift_table: Dict[Tuple[int, int, int], int] = {}
        self._intersection_table: Dict[Tuple[int, int], int] = {}
        self._inhabitants: Dict[int, Tuple[float, Tuple[int, ...]]] = {}
        self._function_inhabitants: Dict[int, Tuple[float, Tuple[int, ...]]] = {}
        self.universe = self._incorporate(Universe())
        self.empty = self._incorporate(Union(()))

    def __len__(self) -> int:
        return len(self.expressions)

    def _incorporate(self, expression) -> int:
        j = self._ids.get(expression)
        if j is not None:
            return j
        if self.node_budget is not None and len(self.expressions) >= self.node_budget:
            raise NodeBudgetExceeded(f"version space exceeded {self.node_budget} nodes")
        j = len(self.expressions)
        self.expressions.append(expression)
        self._ids[expression] = j
        return j

    # --- constructors ----------------------------------------------------------

    def incorporate(self, p: Program) -> int:
        if p.is_index:
            return self.index(p.i)
        if p.is_abstraction:
            return self.abstract(self.incorporate(p.body))
        if p.is_application:
            return self.apply(self.incorporate(p.f), self.incorporate(p.x))
        return self._incorporate(Leaf(p))

    def index(self, i: int) -> int:
        return self._incorporate(IndexVS(i))

    def apply(self, f: int, x: int) -> int:
        if f == self.empty or x == self.empty:
            return self.empty
        return self._incorporate(ApplyVS(f, x))

    def abstract(self, body: int) -> int:
        if body == self.empty:
            return self.empty
        return self._incorporate(AbstractVS(body))

    def union(self, elements: Iterable[int]) -> int:
        members: Set[int] = set()
        for e in elements:
            if e == self.universe:
                return self.universe
            expression = self.expressions[e]
            if isinstance(expression, Union):
                members.update(expression.members)
            else:
                members.add(e)
        if not members:
            return self.empty
        if len(members) == 1:
            return next(iter(members))
        return self._incorporate(Union(tuple(sorted(members))))

    def members(self, j: int) -> Tuple[int, ...]:
        expression = self.expressions[j]
        return expression.members if isinstance(expression, Union) else (j,)

    # --- set operations --------------------------------------------------------

    def intersection(self, a: int, b: int) -> int:
        if a == self.empty or b == self.empty:
            return self.empty
        if a == self.universe:
            return b
        if b == self.universe or a == b:
            return a
        key = (a, b) if a < b else (b, a)
        if key in self._intersection_table:
            return self._intersection_table[key]
        x, y = self.expressions[a], self.expressions[b]
        if isinstance(x, Union) or isinstance(y, Union):
            result = self.union(self.intersection(p, q) for p in self.members(a) for q in self.members(b))
        elif isinstance(x, AbstractVS) and isinstance(y, AbstractVS):
            result = self.abstract(self.intersection(x.body, y.body))
        elif isinstance(x, ApplyVS) and isinstance(y, ApplyVS):
            result = self.apply(self.intersection(x.f, y.f), self.intersection(x.x, y.x))
        else:
            result = self.empty
        self._intersection_table[key] = result
        return result

    def contains(self, j: int, p: Program) -> bool:
        """Membership test: p ∈ ⟦j⟧."""
        expression = self.expressions[j]
        if isinstance(expression, Universe):
            return True
        if isinstance(expression, Union):
            return any(self.contains(m, p) for m in expression.members)
        if isinstance(expression, ApplyVS):
            return p.is_application and self.contains(expression.f, p.f) and self.contains(expression.x, p.x)
        if isinstance(expression, AbstractVS):
            return p.is_abstraction and self.contains(expression.body, p.body)
        if isinstance(expression, IndexVS):
            return p.is_index and p.i == expression.i
        return expression.program == p

    # --- denotation ------------------------------------------------------------

    def extract(self, j: int) -> Iterator[Program]:
        expression = self.expressions[j]
        if isinstance(expression, Union):
            for m in expression.members:
                yield from self.extract(m)
        elif isinstance(expression, ApplyVS):
            for f in self.extract(expression.f):
                for x in self.extract(expression.x):
                    yield Application(f, x)
        elif isinstance(expression, AbstractVS):
            for body in self.extract(expression.body):
                yield Abstraction(body)
        elif isinstance(expression, IndexVS):
            yield Index(expression.i)
        elif isinstance(expression, Leaf):
            yield expression.program
        else:
            raise ValueError("the universe has no finite denotation")

    def extension(self, j: int) -> Set[Program]:
        return set(self.extract(j))

    def reachable(self, heads: Iterable[int]) -> Set[int]:
        visited: Set[int] = set()
        stack = list(heads)
        while stack:
            j = stack.pop()
            if j in visited:
                continue
            visited.add(j)
            expression = self.expressions[j]
            if isinstance(expression, Union):
                stack.extend(expression.members)
            elif isinstance(expression, ApplyVS):
                stack.extend((expression.f, expression.x))
            elif isinstance(expression, AbstractVS):
                stack.append(expression.body)
        return visited

    def minimal_inhabitants(self, j: int) -> Tuple[float, Tuple[int, ...]]:
        """(cost, singleton nodes) of the smallest members of ⟦j⟧."""
        if j in self._inhabitants:
            return self._inhabitants[j]
        expression = self.expressions[j]
        if isinstance(expression, AbstractVS):
            cost, members = self.minimal_inhabitants(expression.body)
            result = (cost + EPSILON, tuple(self.abstract(m) for m in members))
        elif isinstance(expression, ApplyVS):
            result = self._application_inhabitants(expression)
        elif isinstance(expression, Union):
            result = self._cheapest(self.minimal_inhabitants(m) for m in expression.members)
        else:
            result = (1.0, (j,))
        self._inhabitants[j] = result
        return result

    def minimal_function_inhabitants(self, j: int) -> Tuple[float, Tuple[int, ...]]:
        """Like minimal_inhabitants, restricted to members that are not abstractions."""
        if j in self._function_inhabitants:
            return self._function_inhabitants[j]
        expression = self.expressions[j]
        if isinstance(expression, AbstractVS):
            result = (float("inf"), ())
        elif isinstance(expression, ApplyVS):
            result = self._application_inhabitants(expression)
        elif isinstance(expression, Union):
            result = self._cheapest(self.minimal_function_inhabitants(m) for m in expression.members)
        else:
            result = (1.0, (j,))
        self._function_inhabitants[j] = result
        return result

    def _application_inhabitants(self, expression: ApplyVS) -> Tuple[float, Tuple[int, ...]]:
        fc, fs = self.minimal_function_inhabitants(expression.f)
        xc, xs = self.minimal_inhabitants(expression.x)
        members = sorted({self.apply(f, x) for f in fs for x in xs})
        return fc + xc + EPSILON, tuple(members)

    @staticmethod
    def _cheapest(children: Iterable[Tuple[float, Tuple[int, ...]]]) -> Tuple[float, Tuple[int, ...]]:
        children = list(children)
        cost = min(c for c, _ in children)
        members = sorted({m for c, ms in children if c == cost for m in ms})
        return cost, tuple(members)

    # --- inverse β ---------------------------------------------------------------

    def shift_free(self, j: int, n: int, cutoff: int = 0) -> int:
        """Lower free indices at or above `cutoff` by n; members whose lowered index would be
        captured are dropped."""
        if n == 0:
            return j
        key = (j, n, cutoff)
        if key in self._shift_table:
            return self._shift_table[key]
        expression = self.expressions[j]
        if isinstance(expression, Union):
            result = self.union(self.shift_free(m, n, cutoff) for m in expression.members)
        elif isinstance(expression, ApplyVS):
            result = self.apply(self.shift_free(expression.f, n, cutoff),
                                self.shift_free(expression.x, n, cutoff))
        elif isinstance(expression, AbstractVS):
            result = self.abstract(self.shift_free(expression.body, n, cutoff + 1))
        elif isinstance(expression, IndexVS):
            if expression.i < cutoff:
                result = j
            elif expression.i >= n + cutoff:
                result = self.index(expression.i - n)
            else:
                result = self.empty
        else:
            result = j
        self._shift_table[key] = result
        return result

    def substitutions(self, j: int, n: int = 0) -> Dict[int, int]:
        """Map each extractable value v to the body b with chosen occurrences of v replaced by $n.

        The universe key maps to j itself with free indices above n raised by one, that is
        the body when nothing is abstracted.
        """
        key = (j, n)
        if key in self._substitution_table:
            return self._substitution_table[key]
        mapping: Dict[int, int] = {}
        lowered = self.shift_free(j, n)
        if lowered != self.empty:
            mapping[lowered] = self.index(n)
        expression = self.expressions[j]
        if isinstance(expression, (Leaf, Universe)):
            mapping[self.universe] = j
        elif isinstance(expression, IndexVS):
            mapping[self.universe] = j if expression.i < n else self.index(expression.i + 1)
        elif isinstance(expression, AbstractVS):
            for v, body in self.substitutions(expression.body, n + 1).items():
                mapping[v] = self.abstract(body)
        elif isinstance(expression, ApplyVS):
            combined: Dict[int, List[int]] = {}
            fm = self.substitutions(expression.f, n)
            xm = self.substitutions(expression.x, n)
            for v1, f in fm.items():
                for v2, x in xm.items():
                    v = self.intersection(v1, v2)
                    if v == self.empty:
                        continue
                    combined.setdefault(v, []).append(self.apply(f, x))
            mapping = {**{v: self.union(bodies) for v, bodies in combined.items()}, **mapping}
        elif isinstance(expression, Union):
            combined = {}
            for m in expression.members:
                for v, body in self.substitutions(m, n).items():
                    combined.setdefault(v, []).append(body)
            mapping = {**{v: self.union(bodies) for v, bodies in combined.items()}, **mapping}
        self._substitution_table[key] = mapping
        return mapping

    def inversion(self, j: int) -> int:
        """All one-step inverse β-reductions at the root of j."""
        return self.union(self.apply(self.abstract(body), v)
                          for v, body in self.substitutions(j).items() if v != self.universe)

    def recursive_inversion(self, j: int) -> int:
        """All one-step inverse β-reductions at any position of j."""
        if j in self._inversion_table:
            return self._inversion_table[j]
        expression = self.expressions[j]
        if isinstance(expression, Union):
            result = self.union(self.recursive_inversion(m) for m in expression.members)
        else:
            rewrites = [self.apply(self.abstract(body), v)
                        for v, body in self.substitutions(j).items() if v != self.universe]
            if isinstance(expression, ApplyVS):
                rewrites.append(self.apply(self.recursive_inversion(expression.f), expression.x))
                rewrites.append(self.apply(expression.f, self.recursive_inversion(expression.x)))
            elif isinstance(expression, AbstractVS):
                rewrites.append(self.abstract(self.recursive_inversion(expression.body)))
            result = self.union(rewrites)
        self._inversion_table[j] = result
        return result

    def repeated_expansion(self, j: int, steps: int) -> List[int]:
        """Level k holds the programs exactly k inverse β-steps from j."""
        levels = [j]
        for _ in range(steps):
            levels.append(self.recursive_inversion(levels[-1]))
        return levels

    def inverse_beta(self, j: int, steps: int = 3) -> InverseBeta:
        """Programs within `steps` inverse β-reductions of ⟦j⟧, including ⟦j⟧ itself.

        When the node budget runs out the union of the completed levels is returned
        with `exhaustive=False`.
        """
        if steps < 0:
            raise ValueError("steps must be non-negative")
        levels = [j]
        try:
            for _ in range(steps):
                levels.append(self.recursive_inversion(levels[-1]))
        except NodeBudgetExceeded as e:
            logger.warning(f"{e}; keeping {len(levels) - 1} of {steps} refactoring levels")
            budget, self.node_budget = self.node_budget, None
            try:
                return InverseBeta(self.union(levels), False)
            finally:
                self.node_budget = budget
        return InverseBeta(self.union(levels), True)


def inverse_beta(table: VersionTable, node: int, steps: int = 3) -> InverseBeta:
    return table.inverse_beta(node, steps)
