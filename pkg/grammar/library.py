# grammar/library.py
"""The library: a weighted set of typed productions defining a prior over programs.

Generation is top-down and type-directed. At a hole of requested type τ in
environment Γ the candidates are the productions whose fully applied return
type unifies with τ, plus the Γ-variables that do; arrow-typed holes always
become abstractions. Weights are renormalised per hole.
"""
import logging
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from lang.program import Application, Index, Invented, Primitive, Program, Abstraction, parse_program
from lang.primitives import PRIMITIVES
from lang.types import Context, PolyType, UnificationError, parse_type, render_type

logger = logging.getLogger("wake_sleep.grammar")

VARIABLE = "$var"
ROOT = (None, 0)

ProductionKey = Union[Program, str]
ChoiceContext = Tuple[Optional[ProductionKey], int]


class UnreachableProgram(ValueError):
    """The program cannot be generated by the library at the requested type."""


class SamplingDepthExceeded(RuntimeError):
    """A sampled derivation ran out of depth (or hit a hole with no candidates)."""


class LibraryMismatchError(ValueError):
    """A weight vector does not match the library's production set."""


def logsumexp(values: Sequence[float]) -> float:
    if len(values) == 0:
        return float("-inf")
    return float(np.logaddexp.reduce(np.asarray(values, dtype=float)))


class Candidate(NamedTuple):
    key: ProductionKey
    program: Program
    log_weight: float
    context: Context
    tp: PolyType


class Production(NamedTuple):
    log_weight: float
    tp: PolyType
    program: Program


class LikelihoodSummary:
    """Weight-independent record of one derivation.

    `uses` counts each (choice context, chosen key); `normalizers` counts each
    (choice context, candidate keys) alternative set; `constant` collects the
    −log n terms from choosing one of n variables.
    """

    __slots__ = ("uses", "normalizers", "constant")

    def __init__(self):
        self.uses: Counter = Counter()
        self.normalizers: Counter = Counter()
        self.constant = 0.0

    def record(self, context: ChoiceContext, key: ProductionKey,
               alternatives: Tuple[ProductionKey, ...], constant: float = 0.0):
        self.uses[(context, key)] += 1
        self.normalizers[(context, alternatives)] += 1
        self.constant += constant

    def log_likelihood(self, library: "Library") -> float:
        total = self.constant
        for (context, key), count in self.uses.items():
            total += count * library.library_for(*context).log_weight(key)
        for (context, alternatives), count in self.normalizers.items():
            table = library.library_for(*context)
            total -= count * logsumexp([table.log_weight(k) for k in alternatives])
        return total

    def use_counts(self) -> Counter:
        """Uses per production key, context ignored."""
        counts: Counter = Counter()
        for (_, key), count in self.uses.items():
            counts[key] += count
        return counts

    def __repr__(self) -> str:
        return f"LikelihoodSummary(uses={dict(self.use_counts())}, constant={self.constant:.3f})"


class Library:
    def __init__(self, productions: Iterable[Tuple[float, PolyType, Program]],
                 variable_log_weight: float = 0.0):
        self.productions: List[Production] = [Production(*p) for p in productions]
        self.variable_log_weight = variable_log_weight
        self._weights: Dict[ProductionKey, float] = {p.program: p.log_weight for p in self.productions}
        if len(self._weights) != len(self.productions):
            raise ValueError("duplicate productions in library")
        self._weights[VARIABLE] = variable_log_weight

    @classmethod
    def uniform(cls, programs: Iterable[Program]) -> "Library":
        return cls([(0.0, p.tp, p) for p in programs], 0.0)

    def __len__(self) -> int:
        return len(self.productions)

    def __contains__(self, program: Program) -> bool:
        return program in self._weights

    def __repr__(self) -> str:
        return f"Library({len(self.productions)} productions, {len(self.inventions)} inventions)"

    @property
    def programs(self) -> List[Program]:
        return [p.program for p in self.productions]

    @property
    def inventions(self) -> List[Invented]:
        return [p.program for p in self.productions if p.program.is_invented]

    @property
    def keys(self) -> List[ProductionKey]:
        """Production keys in a fixed order, the shared variable key last."""
        return [*self.programs, VARIABLE]

    def log_weight(self, key: ProductionKey) -> float:
        return self._weights[key]

    def weight_vector(self) -> np.ndarray:
        return np.array([self._weights[k] for k in self.keys], dtype=float)

    def library_for(self, parent: Optional[ProductionKey], index: int) -> "Library":
        return self

    @property
    def base(self) -> "Library":
        return self

    def with_weights(self, weights: Sequence[float]) -> "Library":
        if len(weights) != len(self.productions) + 1:
            raise LibraryMismatchError(
                f"expected {len(self.productions) + 1} weights, got {len(weights)}")
        return Library([(float(w), p.tp, p.program) for w, p in zip(weights, self.productions)],
                       float(weights[-1]))

    def with_uniform_weights(self) -> "Library":
        return Library([(0.0, p.tp, p.program) for p in self.productions], 0.0)

    def with_productions(self, programs: Iterable[Program], log_weight: float = 0.0) -> "Library":
        extra = [(log_weight, p.tp, p) for p in programs if p not in self]
        return Library([*self.productions, *extra], self.variable_log_weight)

    def next_invention_name(self) -> str:
        return f"f{len(self.inventions)}"

    # --- candidates ----------------------------------------------------------

    def build_candidates(self, request: PolyType, context: Context,
                         environment: Sequence[PolyType]) -> List[Candidate]:
        candidates: List[Candidate] = []
        for production in self.productions:
            extended, tp = production.tp.instantiate(context)
            try:
                extended = extended.unify(tp.returns(), request)
            except UnificationError:
                continue
            candidates.append(Candidate(production.program, production.program,
                                        production.log_weight, extended, tp.apply(extended)))
        variables: List[Tuple[int, Context, PolyType]] = []
        for i, t in enumerate(environment):
            t = t.apply(context)
            try:
                extended = context.unify(t.returns(), request)
            except UnificationError:
                continue
            variables.append((i, extended, t.apply(extended)))
        if variables:
            weight = self.variable_log_weight - np.log(len(variables))
            candidates.extend(Candidate(VARIABLE, Index(i), float(weight), extended, tp)
                              for i, extended, tp in variables)
        return candidates

    # --- scoring -------------------------------------------------------------

    def _summarize(self, context: Context, environment: List[PolyType], request: PolyType,
                   p: Program, summary: LikelihoodSummary, parent: ChoiceContext) -> Context:
        request = request.apply(context)
        if request.is_arrow:
            if not p.is_abstraction:
                raise UnreachableProgram(f"{p} is not an abstraction at arrow type {request}")
            argument, result = request.arguments
            return self._summarize(context, [argument, *environment], result, p.body, summary, parent)
        head, arguments = p.application_spine()
        candidates = self.build_candidates(request, context, environment)
        chosen = next((c for c in candidates if c.program == head), None)
        if chosen is None:
            raise UnreachableProgram(f"{head} is not a candidate at type {request}")
        argument_types = chosen.tp.function_arguments()
        if len(argument_types) != len(arguments):
            raise UnreachableProgram(f"{head} expects {len(argument_types)} arguments, got {len(arguments)}")
        alternatives = tuple(dict.fromkeys(c.key for c in candidates))
        constant = 0.0
        if chosen.key == VARIABLE:
            constant = -float(np.log(sum(1 for c in candidates if c.key == VARIABLE)))
        summary.record(parent, chosen.key, alternatives, constant)
        context = chosen.context
        for i, (t, a) in enumerate(zip(argument_types, arguments)):
            context = self._summarize(context, environment, t, a, summary, (chosen.key, i))
        return context

    def summarize(self, request: PolyType, p: Program,
                  environment: Sequence[PolyType] = (),
                  context: Optional[Context] = None) -> Tuple[Context, LikelihoodSummary]:
        if context is None:
            context = fresh_context(request, *environment)
        summary = LikelihoodSummary()
        context = self._summarize(context, list(environment), request, p, summary, ROOT)
        return context, summary

    def closed_summary(self, request: PolyType, p: Program) -> Optional[LikelihoodSummary]:
        try:
            return self.summarize(request, p)[1]
        except UnreachableProgram:
            return None

    def log_prior(self, request: PolyType, p: Program) -> float:
        summary = self.closed_summary(request, p)
        if summary is None:
            return float("-inf")
        return summary.log_likelihood(self)

    # --- sampling ------------------------------------------------------------

    def _sample(self, context: Context, environment: List[PolyType], request: PolyType,
                rng: np.random.Generator, depth: int, parent: ChoiceContext) -> Tuple[Context, Program]:
        request = request.apply(context)
        if request.is_arrow:
            argument, result = request.arguments
            context, body = self._sample(context, [argument, *environment], result, rng, depth, parent)
            return context, Abstraction(body)
        table = self.library_for(*parent)
        candidates = table.build_candidates(request, context, environment)
        if not candidates:
            raise SamplingDepthExceeded(f"no candidates at type {request}")
        weights = np.array([c.log_weight for c in candidates])
        probabilities = np.exp(weights - logsumexp(weights))
        choice = int(np.searchsorted(np.cumsum(probabilities), rng.random() * probabilities.sum(),
                                     side="right"))
        chosen = candidates[min(choice, len(candidates) - 1)]
        argument_types = chosen.tp.function_arguments()
        if argument_types and depth <= 0:
            raise SamplingDepthExceeded("maximum depth reached")
        context = chosen.context
        program = chosen.program
        for i, t in enumerate(argument_types):
            context, argument = self._sample(context, environment, t, rng, depth - 1, (chosen.key, i))
            program = Application(program, argument)
        return context, program

    def sample(self, request: PolyType, rng: np.random.Generator, max_depth: int = 20) -> Program:
        _, program = self._sample(fresh_context(request), [], request, rng, max_depth, ROOT)
        return program

    # --- learning ------------------------------------------------------------

    def fit_weights(self, frontiers, pseudo_count: float = 0.5) -> "Library":
        """Responsibility-weighted production counts from frontier beams, plus pseudo-counts."""
        unique = {f.task_id: f for f in frontiers}
        counts: Dict[ProductionKey, float] = defaultdict(float)
        for task_id in sorted(unique):
            frontier = unique[task_id]
            if frontier.empty:
                continue
            posteriors = [e.log_prior + e.log_likelihood for e in frontier.entries]
            z = logsumexp(posteriors)
            for entry, posterior in zip(frontier.entries, posteriors):
                summary = self.closed_summary(frontier.request, entry.program)
                if summary is None:
                    logger.warning(f"Skipping unreachable program {entry.program} for {task_id}")
                    continue
                responsibility = float(np.exp(posterior - z))
                for key, count in summary.use_counts().items():
                    counts[key] += responsibility * count
        weights = [float(np.log(counts[k] + pseudo_count)) for k in self.keys]
        return self.with_weights(weights)

    def description_length(self, structure_penalty: float) -> float:
        return structure_penalty * sum(i.definition.size() for i in self.inventions)

    def depth(self) -> int:
        """Longest chain of inventions calling inventions."""
        memo: Dict[Invented, int] = {}

        def chain(invention: Invented) -> int:
            if invention not in memo:
                nested = [s for _, s in invention.definition.walk() if s.is_invented]
                memo[invention] = 1 + max((chain(s) for s in nested), default=0)
            return memo[invention]

        return max((chain(i) for i in self.inventions), default=0)

    # --- JSON ----------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "productions": [{"source": p.program.show(), "type": render_type(p.tp),
                             "logWeight": p.log_weight} for p in self.productions],
            "variableLogWeight": self.variable_log_weight,
        }

    @classmethod
    def from_json(cls, document: dict, registry: Optional[Dict[str, Program]] = None) -> "Library":
        registry = dict(registry or PRIMITIVES)
        inventions: Dict[Program, Invented] = {}
        productions = []
        for entry in document["productions"]:
            program = parse_program(entry["source"], registry, inventions)
            if program.is_invented:
                if program.definition not in inventions:
                    program = Invented(program.definition, f"f{len(inventions)}")
                    inventions[program.definition] = program
                program = inventions[program.definition]
            productions.append((float(entry["logWeight"]), parse_type(entry["type"]), program))
        return cls(productions, float(document["variableLogWeight"]))


class ContextualLibrary:
    """Per-(parent production, argument index) weight tables over one production set."""

    def __init__(self, base: Library, tables: Dict[Tuple[Optional[ProductionKey], int], Library]):
        self._base = base
        self.tables = tables

    @property
    def base(self) -> Library:
        return self._base

    def library_for(self, parent: Optional[ProductionKey], index: int) -> Library:
        return self.tables.get((parent, index), self._base)

    def log_prior(self, request: PolyType, p: Program) -> float:
        summary = self._base.closed_summary(request, p)
        if summary is None:
            return float("-inf")
        return summary.log_likelihood(self)

    _sample = Library._sample
    sample = Library.sample

    def __getattr__(self, name):
        return getattr(self._base, name)


Grammar = Union[Library, ContextualLibrary]


def fresh_context(*types: PolyType) -> Context:
    used = [v for t in types for v in t.free_type_variables()]
    return Context(max(used, default=-1) + 1)


def log_prior(library: Grammar, p: Program, requested: PolyType) -> float:
    return library.log_prior(requested, p)


def sample_program(library: Grammar, requested: PolyType, rng_seed, max_depth: int = 20) -> Program:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return library.sample(requested, rng, max_depth)


def fit_weights(library: Library, frontiers, pseudo_count: float = 0.5) -> Library:
    return library.fit_weights(frontiers, pseudo_count)


def library_description_length(library: Library, structure_penalty: float = 1.5) -> float:
    return library.description_length(structure_penalty)


def base_library(primitives: Iterable[Primitive]) -> Library:
    return Library.uniform(primitives)
