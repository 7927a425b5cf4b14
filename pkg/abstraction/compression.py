# abstraction/compression.py
"""Library growth by compressing refactored frontier programs.

Each round builds the inverse-β version space of every frontier program, draws
candidate inventions from the smallest inhabitants of those spaces, and scores
each candidate by rewriting the frontiers with it:

    score(L) = −λ·|L| + Σ_tasks logsumexp_entries(log_likelihood + log_prior(rewrite | L))

The best candidate is adopted when it improves the score by more than the
improvement threshold; rounds stop when nothing improves or the invention cap
is reached.
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union as TypeUnion

import numpy as np
import orjson

from abstraction.version_space import AbstractVS, ApplyVS, IndexVS, Leaf, Union, VersionTable
from config.settings import settings
from grammar.frontier import Frontier, FrontierEntry
from grammar.library import VARIABLE, Library, UnreachableProgram, fresh_context, logsumexp
from lang.program import Abstraction, Index, Invented, Program, apply_arguments, is_well_typed, wrap_abstractions
from lang.types import PolyType, canonical_pair
from models.schemas import InventionRecord

logger = logging.getLogger("wake_sleep.abstraction")

# Rewritten regression programs may refit to a marginally different optimum.
REGRESSION_AGREEMENT = 1e-6


class CandidateInvention(NamedTuple):
    definition: Program
    uses: int
    mdl_gain: float = 0.0


class CompressionResult(NamedTuple):
    library: Library
    frontiers: List[Frontier]
    inventions: List[InventionRecord]


def close_candidate(p: Program) -> Tuple[Program, List[int]]:
    """Renumber free indices of p in ascending order and bind them with λs.

    Returns the closed definition and the original free indices, smallest first.
    """
    free = sorted(set(p.free_variables()))
    mapping = {v: k for k, v in enumerate(free)}

    def rename(q: Program, depth: int) -> Program:
        if q.is_index:
            return Index(mapping[q.i - depth] + depth) if q.i >= depth else q
        if q.is_abstraction:
            return Abstraction(rename(q.body, depth + 1))
        if q.is_application:
            return apply_arguments(rename(q.f, depth), [rename(q.x, depth)])
        return q

    return wrap_abstractions(rename(p, 0), len(free)), free


def is_nontrivial(p: Program) -> bool:
    """More than one leaf production, or one production with a repeated variable."""
    primitives = 0
    collisions = 0
    indices: Set[int] = set()
    for depth, q in p.walk():
        if q.is_primitive or q.is_invented:
            primitives += 1
        elif q.is_index:
            i = q.i - depth
            if i in indices:
                collisions += 1
            indices.add(i)
    return primitives > 1 or (primitives == 1 and collisions > 0)


def _leading_abstractions(p: Program) -> int:
    count = 0
    while p.is_abstraction:
        p = p.body
        count += 1
    return count


def _peel(p: Program, m: int) -> Program:
    for _ in range(m):
        p = p.body
    return p


class _Choice(NamedTuple):
    score: float
    size: int
    program: Program


def _better(a: Optional[_Choice], b: Optional[_Choice]) -> bool:
    """Higher prior, then smaller, then lexicographically first."""
    if b is None:
        return a is not None
    if a is None:
        return False
    if a.score != b.score:
        return a.score > b.score
    if a.size != b.size:
        return a.size < b.size
    return a.program.show() < b.program.show()


Argument = TypeUnion[int, Program]


class Rewriter:
    """Highest-prior member of a version space under one library.

    Inventions of the library are recognised inside the space: a node that
    matches an invention body, with every parameter bound to a variable, becomes
    the invention applied to those variables.
    """

    def __init__(self, table: VersionTable, library: Library):
        self.table = table
        self.library = library
        self._patterns: List[Tuple[Program, int, Program]] = []
        for invention in library.inventions:
            for m in range(_leading_abstractions(invention.definition) + 1):
                self._patterns.append((invention, m, _peel(invention.definition, m)))
        self._spines: Dict[int, List[Tuple[Program, Tuple[Argument, ...]]]] = {}
        self._matches: Dict[Tuple[Program, int, int, int], List[Tuple[Optional[int], ...]]] = {}
        self._best: Dict[Tuple[int, str], Optional[_Choice]] = {}

    # --- invention matching ------------------------------------------------------

    def _match(self, pattern: Program, m: int, depth: int, j: int) -> List[Tuple[Optional[int], ...]]:
        key = (pattern, m, depth, j)
        if key in self._matches:
            return self._matches[key]
        expression = self.table.expressions[j]
        unbound = (None,) * m
        results: List[Tuple[Optional[int], ...]] = []
        if isinstance(expression, Union):
            for member in expression.members:
                results.extend(self._match(pattern, m, depth, member))
        elif pattern.is_index:
            if isinstance(expression, IndexVS):
                if pattern.i < depth:
                    if expression.i == pattern.i:
                        results.append(unbound)
                elif expression.i >= depth:
                    binding = list(unbound)
                    binding[pattern.i - depth] = expression.i - depth
                    results.append(tuple(binding))
        elif pattern.is_abstraction:
            if isinstance(expression, AbstractVS):
                results = self._match(pattern.body, m, depth + 1, expression.body)
        elif pattern.is_application:
            if isinstance(expression, ApplyVS):
                for left in self._match(pattern.f, m, depth, expression.f):
                    for right in self._match(pattern.x, m, depth, expression.x):
                        merged = _merge(left, right)
                        if merged is not None:
                            results.append(merged)
        elif isinstance(expression, Leaf) and expression.program == pattern:
            results.append(unbound)
        results = list(dict.fromkeys(results))
        self._matches[key] = results
        return results

    def _invention_heads(self, j: int) -> List[Tuple[Program, Tuple[Argument, ...]]]:
        heads = []
        for invention, m, pattern in self._patterns:
            for binding in self._match(pattern, m, 0, j):
                if None in binding:
                    continue
                heads.append((invention, tuple(Index(binding[k]) for k in reversed(range(m)))))
        return heads

    def spines(self, j: int) -> List[Tuple[Program, Tuple[Argument, ...]]]:
        """(head, arguments) readings of j; arguments are fixed programs or node ids."""
        if j in self._spines:
            return self._spines[j]
        expression = self.table.expressions[j]
        options: List[Tuple[Program, Tuple[Argument, ...]]] = []
        if isinstance(expression, Union):
            for member in expression.members:
                options.extend(self.spines(member))
        else:
            options.extend(self._invention_heads(j))
            if isinstance(expression, ApplyVS):
                options.extend((head, (*arguments, expression.x)) for head, arguments in self.spines(expression.f))
            elif isinstance(expression, IndexVS):
                options.append((Index(expression.i), ()))
            elif isinstance(expression, Leaf):
                options.append((expression.program, ()))
        options = list(dict.fromkeys(options))
        self._spines[j] = options
        return options

    # --- dynamic program -----------------------------------------------------------

    def best(self, j: int, request: PolyType, environment: Sequence[PolyType]) -> Optional[_Choice]:
        key = (j, canonical_pair(request, environment))
        if key in self._best:
            return self._best[key]
        if request.is_arrow:
            argument, result = request.arguments
            winner = None
            for member in self.table.members(j):
                expression = self.table.expressions[member]
                if not isinstance(expression, AbstractVS):
                    continue
                body = self.best(expression.body, result, [argument, *environment])
                if body is not None:
                    choice = _Choice(body.score, body.size + 1, Abstraction(body.program))
                    if _better(choice, winner):
                        winner = choice
        else:
            winner = self._best_spine(j, request, list(environment))
        self._best[key] = winner
        return winner

    def _best_spine(self, j: int, request: PolyType, environment: List[PolyType]) -> Optional[_Choice]:
        library = self.library
        context = fresh_context(request, *environment)
        candidates = library.build_candidates(request, context, environment)
        if not candidates:
            return None
        by_program = {c.program: c for c in candidates}
        alternatives = tuple(dict.fromkeys(c.key for c in candidates))
        normalizer = logsumexp([library.log_weight(k) for k in alternatives])
        variables = sum(1 for c in candidates if c.key == VARIABLE)
        winner = None
        for head, arguments in self.spines(j):
            chosen = by_program.get(head)
            if chosen is None:
                continue
            argument_types = chosen.tp.function_arguments()
            if len(argument_types) != len(arguments):
                continue
            score = library.log_weight(chosen.key) - normalizer
            if chosen.key == VARIABLE:
                score -= float(np.log(variables))
            context = chosen.context
            programs = []
            for t, argument in zip(argument_types, arguments):
                t = t.apply(context)
                if isinstance(argument, Program):
                    program = argument
                else:
                    sub = self.best(argument, t, [e.apply(context) for e in environment])
                    if sub is None:
                        break
                    program = sub.program
                try:
                    context, summary = library.summarize(t, program, environment, context)
                except UnreachableProgram:
                    break
                score += summary.log_likelihood(library)
                programs.append(program)
            else:
                program = apply_arguments(chosen.program, programs)
                choice = _Choice(score, program.size(), program)
                if _better(choice, winner):
                    winner = choice
        return winner


def _merge(left: Tuple[Optional[int], ...], right: Tuple[Optional[int], ...]) -> Optional[Tuple[Optional[int], ...]]:
    merged = []
    for a, b in zip(left, right):
        if a is not None and b is not None and a != b:
            return None
        merged.append(a if a is not None else b)
    return tuple(merged)


def rewrite_minimal(table: VersionTable, node: int, library: Library, request: PolyType) -> Program:
    """The member of ⟦node⟧ (with library inventions recognised) of highest log prior."""
    choice = Rewriter(table, library).best(node, request, [])
    if choice is None:
        raise UnreachableProgram(f"no member of version space {node} is expressible at {request}")
    return choice.program


class Compressor:
    def __init__(self, library: Library, frontiers: Iterable[Frontier], tasks: Optional[Dict[str, object]] = None,
                 structure_penalty: Optional[float] = None, steps: Optional[int] = None,
                 max_inventions: Optional[int] = None, candidate_pool: Optional[int] = None,
                 max_refactor: bool = False, node_budget: Optional[int] = None,
                 improvement_threshold: Optional[float] = None, pseudo_count: Optional[float] = None):
        unique: Dict[str, Frontier] = {}
        for frontier in frontiers:
            if not frontier.empty:
                unique[frontier.task_id] = frontier
        self.frontiers = [unique[k] for k in sorted(unique)]
        self.library = library
        self.tasks = tasks
        self.structure_penalty = settings.STRUCTURE_PENALTY if structure_penalty is None else structure_penalty
        self.steps = settings.REFACTOR_STEPS if steps is None else steps
        self.max_inventions = settings.MAX_INVENTIONS if max_inventions is None else max_inventions
        self.candidate_pool = settings.CANDIDATE_POOL if candidate_pool is None else candidate_pool
        self.max_refactor = max_refactor
        self.node_budget = settings.NODE_BUDGET if node_budget is None else node_budget
        self.improvement_threshold = (settings.IMPROVEMENT_THRESHOLD if improvement_threshold is None
                                      else improvement_threshold)
        self.pseudo_count = settings.PSEUDO_COUNT if pseudo_count is None else pseudo_count
        self.exhaustive = True

    def score(self, library: Library, frontiers: List[Frontier]) -> Tuple[float, Library, List[Frontier]]:
        """Refit weights, rescore, and return (objective, fitted library, rescored frontiers)."""
        fitted = library.fit_weights(frontiers, self.pseudo_count)
        rescored = [f.rescore(fitted) for f in frontiers]
        total = -fitted.description_length(self.structure_penalty)
        for frontier in rescored:
            posteriors = [e.posterior for e in frontier.entries]
            if not posteriors:
                return float("-inf"), fitted, rescored
            total += max(posteriors) if self.max_refactor else logsumexp(posteriors)
        return total, fitted, rescored

    # --- version spaces and candidates ---------------------------------------------

    def build_spaces(self, frontiers: List[Frontier]) -> Tuple[VersionTable, List[List[int]]]:
        """One inverse-β space per frontier entry, in entry order."""
        table = VersionTable(self.node_budget)
        spaces: List[List[int]] = []
        for frontier in frontiers:
            row = []
            for entry in frontier.entries:
                space = table.inverse_beta(table.incorporate(entry.program), self.steps)
                self.exhaustive = self.exhaustive and space.exhaustive
                row.append(space.node)
            spaces.append(row)
        return table, spaces

    @staticmethod
    def _close(table: VersionTable, j: int, library: Library) -> Optional[Program]:
        p = next(table.extract(j))
        if not is_nontrivial(p):
            return None
        definition, _ = close_candidate(p)
        if definition.size() < 2 or Invented(definition) in library or not is_well_typed(definition):
            return None
        return definition

    def _entry_candidates(self, table: VersionTable, space: int, library: Library,
                          closed: Dict[int, Optional[Program]]) -> Set[Program]:
        definitions: Set[Program] = set()
        for k in table.reachable([space]):
            for _, inhabitants in (table.minimal_inhabitants(k), table.minimal_function_inhabitants(k)):
                for j in inhabitants:
                    if j not in closed:
                        closed[j] = self._close(table, j, library)
                    if closed[j] is not None:
                        definitions.add(closed[j])
        return definitions

    def candidates(self, table: VersionTable, spaces: List[List[int]],
                   library: Library) -> Tuple[List[CandidateInvention], List[List[Set[Program]]]]:
        """Candidate pool ranked by (uses, size, render), plus the candidate set of every entry."""
        closed: Dict[int, Optional[Program]] = {}
        per_entry = [[self._entry_candidates(table, space, library, closed) for space in row] for row in spaces]
        uses: Dict[Program, int] = defaultdict(int)
        for row in per_entry:
            for definition in set().union(*row):
                uses[definition] += 1
        pool = [CandidateInvention(d, n) for d, n in uses.items() if n >= 2]
        pool.sort(key=lambda c: (-c.uses, -c.definition.size(), c.definition.show()))
        return pool[:self.candidate_pool], per_entry

    # --- rewriting -------------------------------------------------------------------

    def rewrite(self, table: VersionTable, spaces: List[List[int]], per_entry: List[List[Set[Program]]],
                library: Library, frontiers: List[Frontier], definition: Program) -> List[List[Program]]:
        """Programs aligned with each frontier's entries; entries whose space never held the
        candidate keep their program."""
        rewriter = Rewriter(table, library)
        rewritten = []
        for frontier, row, sets in zip(frontiers, spaces, per_entry):
            programs = []
            for entry, space, definitions in zip(frontier.entries, row, sets):
                choice = rewriter.best(space, frontier.request, []) if definition in definitions else None
                programs.append(entry.program if choice is None else choice.program)
            rewritten.append(programs)
        return rewritten

    def check_semantics(self, frontiers: List[Frontier], rewritten: List[List[Program]]) -> List[List[Program]]:
        """Re-evaluate changed programs on their task; disagreeing rewrites, and rewrites of
        frontiers whose task is unknown, fall back to the original."""
        tasks = self.tasks or {}
        checked = []
        for frontier, programs in zip(frontiers, rewritten):
            task = tasks.get(frontier.task_id)
            row = []
            for entry, program in zip(frontier.entries, programs):
                if program != entry.program and task is None:
                    logger.warning(f"No task for {frontier.task_id}; rewrite {program} cannot be re-evaluated")
                    program = entry.program
                elif program != entry.program:
                    likelihood = task.log_likelihood(program)
                    if task.domain == "regression":
                        agrees = likelihood >= entry.log_likelihood - REGRESSION_AGREEMENT
                    else:
                        agrees = likelihood == entry.log_likelihood
                    if not agrees:
                        logger.warning(f"Rewrite {program} of {entry.program} for {frontier.task_id} "
                                       f"changes its behaviour; keeping the original")
                        program = entry.program
                row.append(program)
            checked.append(row)
        return checked

    @staticmethod
    def _replace(frontiers: List[Frontier], rewritten: List[List[Program]], library: Library) -> List[Frontier]:
        return [f.replace_programs(programs, library) for f, programs in zip(frontiers, rewritten)]

    def score_candidates(self, library: Library, frontiers: List[Frontier], table: VersionTable,
                         spaces: List[List[int]], pool: List[CandidateInvention],
                         per_entry: List[List[Set[Program]]]) -> List[tuple]:
        """(score, candidate, invention, trial library, rewritten programs), best first."""
        scored = []
        for candidate in pool:
            invention = Invented(candidate.definition, library.next_invention_name())
            trial = library.with_productions([invention]).with_uniform_weights()
            rewritten = self.rewrite(table, spaces, per_entry, trial, frontiers, candidate.definition)
            value, _, _ = self.score(trial, self._replace(frontiers, rewritten, trial))
            scored.append((value, candidate, invention, trial, rewritten))
        scored.sort(key=lambda s: (-s[0], s[1].definition.show()))
        return scored

    # --- greedy loop -----------------------------------------------------------------

    def run(self) -> CompressionResult:
        if not self.frontiers:
            return CompressionResult(self.library, [], [])
        current, library, frontiers = self.score(self.library, self.frontiers)
        records: List[InventionRecord] = []
        for _ in range(self.max_inventions):
            table, spaces = self.build_spaces(frontiers)
            pool, per_entry = self.candidates(table, spaces, library)
            logger.debug(f"{len(pool)} candidates from {len(table)} version-space nodes")
            if not pool:
                break
            adopted = False
            for value, candidate, invention, trial, rewritten in self.score_candidates(
                    library, frontiers, table, spaces, pool, per_entry):
                if value - current <= self.improvement_threshold:
                    break
                checked = self.check_semantics(frontiers, rewritten)
                value, fitted, rescored = self.score(trial, self._replace(frontiers, checked, trial))
                if value - current <= self.improvement_threshold:
                    continue
                record = InventionRecord(name=invention.name, source=invention.show(),
                                         mdl_gain=value - current, uses=candidate.uses)
                logger.info(orjson.dumps(record.model_dump()).decode())
                records.append(record)
                current, library, frontiers = value, fitted, rescored
                adopted = True
                break
            if not adopted:
                break
        if not self.exhaustive:
            logger.warning("Version spaces were truncated by the node budget; candidates may be incomplete")
        return CompressionResult(library, frontiers, records)


def _as_task_map(tasks) -> Optional[Dict[str, object]]:
    if tasks is None or isinstance(tasks, dict):
        return tasks
    return {t.task_id: t for t in tasks}


def propose_candidates(frontiers: Sequence[Frontier], steps: Optional[int] = None,
                       library: Optional[Library] = None, tasks=None, **options) -> List[CandidateInvention]:
    """Candidate inventions shared by at least two tasks, best MDL gain first.

    Without a library only the uses are reported and the list keeps pool order.
    """
    compressor = Compressor(library or Library([]), frontiers, _as_task_map(tasks), steps=steps, **options)
    if not compressor.frontiers:
        return []
    if library is None:
        table, spaces = compressor.build_spaces(compressor.frontiers)
        return compressor.candidates(table, spaces, compressor.library)[0]
    current, fitted, frontiers = compressor.score(library, compressor.frontiers)
    table, spaces = compressor.build_spaces(frontiers)
    pool, per_entry = compressor.candidates(table, spaces, fitted)
    scored = compressor.score_candidates(fitted, frontiers, table, spaces, pool, per_entry)
    return [CandidateInvention(candidate.definition, candidate.uses, value - current)
            for value, candidate, _, _, _ in scored]


def compress(library: Library, frontiers: Sequence[Frontier], tasks=None,
             structure_penalty: Optional[float] = None, steps: Optional[int] = None,
             max_inventions: Optional[int] = None, **options) -> CompressionResult:
    return Compressor(library, frontiers, _as_task_map(tasks), structure_penalty=structure_penalty,
                      steps=steps, max_inventions=max_inventions, **options).run()


def eta_long_call(invention: Invented, request: PolyType) -> Program:
    """λ…λ (invention $k−1 … $0) at a request of arity k."""
    arity = len(request.function_arguments())
    return wrap_abstractions(apply_arguments(invention, [Index(k) for k in reversed(range(arity))]), arity)


def memorize(library: Library, frontiers: Sequence[Frontier], pseudo_count: Optional[float] = None) -> CompressionResult:
    """Add every solved task's MAP program to the library as an invention."""
    pseudo_count = settings.PSEUDO_COUNT if pseudo_count is None else pseudo_count
    solved = sorted((f for f in frontiers if not f.empty), key=lambda f: f.task_id)
    grown = library
    records: List[InventionRecord] = []
    for frontier in solved:
        definition = frontier.best.program
        if definition.size() < 2 or Invented(definition) in grown:
            continue
        invention = Invented(definition, grown.next_invention_name())
        grown = grown.with_productions([invention])
        records.append(InventionRecord(name=invention.name, source=invention.show(), mdl_gain=0.0, uses=1))
    named = {i.definition: i for i in grown.inventions}
    rewritten = []
    for frontier in solved:
        best, rest = frontier.entries[0], frontier.entries[1:]
        invention = named.get(best.program)
        if invention is not None:
            best = FrontierEntry(eta_long_call(invention, frontier.request), best.log_prior, best.log_likelihood)
        rewritten.append(Frontier(frontier.task_id, frontier.request, [best, *rest]))
    fitted = grown.fit_weights(rewritten, pseudo_count)
    for record in records:
        logger.info(orjson.dumps(record.model_dump()).decode())
    return CompressionResult(fitted, [f.rescore(fitted) for f in rewritten], records)
