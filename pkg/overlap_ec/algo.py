"""
LARGEST-CLAUSE and LAZY LARGEST-CLAUSE on random 1-in-k formulas.

Both algorithms shrink the formula one variable at a time until no clause of
length three or more remains. The residual 1-in-2 clauses are disequalities
x != y; when their graph is bipartite with small components, each component
has exactly two colorings and the two runs' assignments A and B take opposite
colorings on every component.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import networkx as nx

from .const import DEFAULT_DRAIN, DRAIN_MODES, SAMPLES_PER_RUN
from .core import (
    OverlapEcContradictionError,
    OverlapEcInvalidParametersError,
    make_rng,
)
from .data import (
    Assignment,
    Fail,
    OverlapWindow,
    Pair,
    RngSpec,
    RunResult,
    RunStats,
    StepEffects,
    TrajectoryCurve,
    TrajectorySample,
    TunedPair,
)
from .trajectory import Schedule

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Sequence

    import numpy as np

    from .data import EcInstance

_LOGGER = logging.getLogger(__name__)

UNIFORM_BATCH = 4096
LONG_CLAUSE = 3
SINGLETON_LIMIT = 2.0


class IndexedSet:
    """Set with O(1) add, discard and uniform pick by position."""

    __slots__ = ("_index", "_items")

    def __init__(self, items: Iterable[int] = ()) -> None:
        self._items: list[int] = []
        self._index: dict[int, int] = {}
        for item in items:
            self.add(item)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item: int) -> bool:
        return item in self._index

    def __iter__(self):  # noqa: ANN204
        return iter(self._items)

    def add(self, item: int) -> bool:
        if item in self._index:
            return False
        self._index[item] = len(self._items)
        self._items.append(item)
        return True

    def discard(self, item: int) -> bool:
        position = self._index.pop(item, None)
        if position is None:
            return False
        last = self._items.pop()
        if position < len(self._items):
            self._items[position] = last
            self._index[last] = position
        return True

    def pick(self, u: float) -> int:
        """Return the item at position floor(u * len) for u in [0, 1)."""
        return self._items[min(int(u * len(self._items)), len(self._items) - 1)]

    def at(self, position: int) -> int:
        return self._items[position]

    def last(self) -> int:
        return self._items[-1]


class WorkingFormula:
    """Mutable state of a run: active clauses, unit queues and partial assignment."""

    def __init__(self, n: int, k: int) -> None:
        """Initialize an empty formula over variables 1..n."""
        self.n = n
        self.k = k
        self.value = [-1] * (n + 1)
        self.members: dict[int, set[int]] = {}
        self.source: dict[int, tuple[int, ...]] = {}
        self.by_length = {length: IndexedSet() for length in range(2, k + 1)}
        self.occurrences: list[set[int]] = [set() for _ in range(n + 1)]
        self.pos_units = IndexedSet()
        self.neg_units = IndexedSet()
        self.free = IndexedSet(range(1, n + 1))
        self.assigned = 0

    @classmethod
    def from_clauses(cls, n: int, clauses: Sequence[Sequence[int]]) -> WorkingFormula:
        """Build a formula of 1-in-j clauses; 1-in-1 clauses become positive units."""
        k = max((len(c) for c in clauses), default=2)
        wf = cls(n, max(k, 2))
        for cid, clause in enumerate(clauses):
            members = set(clause)
            if len(members) != len(clause) or not members:
                msg = f"Clause {clause} must have distinct members"
                raise OverlapEcInvalidParametersError(msg)
            if min(members) < 1 or max(members) > n:
                msg = f"Clause {clause} has members outside 1..{n}"
                raise OverlapEcInvalidParametersError(msg)
            wf.source[cid] = tuple(clause)
            if len(members) == 1:
                wf.push_positive(clause[0], cid)
                continue
            wf.members[cid] = members
            wf.by_length[len(members)].add(cid)
            for v in members:
                wf.occurrences[v].add(cid)
        return wf

    @classmethod
    def from_instance(cls, inst: EcInstance) -> WorkingFormula:
        return cls.from_clauses(inst.n, inst.clauses)

    def count(self, length: int) -> int:
        """Return the number of active clauses of the given length."""
        bucket = self.by_length.get(length)
        return len(bucket) if bucket is not None else 0

    def max_length(self) -> int:
        """Return the longest active clause length, 0 when none is left."""
        for length in range(self.k, 1, -1):
            if self.by_length[length]:
                return length
        return 0

    def counts(self) -> dict[str, int]:
        """Return P, N and C_j for every length j."""
        counts = {"P": len(self.pos_units), "N": len(self.neg_units)}
        counts.update({f"C{length}": len(b) for length, b in self.by_length.items()})
        return counts

    @property
    def free_count(self) -> int:
        return len(self.free)

    def unassigned(self) -> list[int]:
        return [v for v in range(1, self.n + 1) if self.value[v] == -1]

    def _witness(self, cid: int | None) -> tuple[int, ...] | None:
        return self.source.get(cid) if cid is not None else None

    def push_positive(self, v: int, cid: int | None = None) -> None:
        """Queue v to be set TRUE."""
        if v in self.neg_units or self.value[v] == 0:
            raise OverlapEcContradictionError(v, self._witness(cid))
        if self.value[v] == 1:
            return
        self.pos_units.add(v)
        self.free.discard(v)

    def push_negative(self, v: int, cid: int | None = None) -> None:
        """Queue v to be set FALSE."""
        if v in self.pos_units or self.value[v] == 1:
            raise OverlapEcContradictionError(v, self._witness(cid))
        if self.value[v] == 0:
            return
        self.neg_units.add(v)
        self.free.discard(v)

    def set_variable(self, v: int, value: bool) -> StepEffects:  # noqa: FBT001
        """Assign v and update every active clause that contains it."""
        if self.value[v] != -1:
            msg = f"Variable {v} is already assigned"
            raise OverlapEcInvalidParametersError(msg)
        if v in self.pos_units:
            if not value:
                raise OverlapEcContradictionError(v, (v,))
            self.pos_units.discard(v)
        if v in self.neg_units:
            if value:
                raise OverlapEcContradictionError(v, (v,))
            self.neg_units.discard(v)
        self.free.discard(v)
        self.value[v] = int(value)
        self.assigned += 1

        removed = shrunk = neg_pushes = pos_pushes = 0
        for cid in sorted(self.occurrences[v]):
            members = self.members[cid]
            self.by_length[len(members)].discard(cid)
            members.discard(v)
            if value:
                del self.members[cid]
                removed += 1
                for u in sorted(members):
                    self.occurrences[u].discard(cid)
                for u in sorted(members):
                    self.push_negative(u, cid)
                    neg_pushes += 1
            elif len(members) == 1:
                del self.members[cid]
                shrunk += 1
                (u,) = members
                self.occurrences[u].discard(cid)
                self.push_positive(u, cid)
                pos_pushes += 1
            else:
                self.by_length[len(members)].add(cid)
                shrunk += 1
        self.occurrences[v].clear()
        return StepEffects(
            variable=v,
            value=bool(value),
            removed=removed,
            shrunk=shrunk,
            neg_pushes=neg_pushes,
            pos_pushes=pos_pushes,
        )


def set_variable_step(wf: WorkingFormula, v: int, value: bool) -> StepEffects:  # noqa: FBT001
    """Set one variable and report the clause transitions it caused."""
    return wf.set_variable(v, value)


@dataclass(frozen=True)
class ComponentLimit:
    """Endgame component size limit f(n)."""

    kind: str = "ln2"
    scale: float = 1.0

    def __call__(self, n: int) -> float:
        if self.kind == "ln2":
            value = self.scale * math.log(n) ** 2
        elif self.kind == "ln":
            value = self.scale * math.log(n)
        elif self.kind == "sqrt":
            value = self.scale * math.sqrt(n)
        else:
            msg = f"Unknown component limit '{self.kind}'"
            raise OverlapEcInvalidParametersError(msg)
        # Singleton components always pass.
        return max(SINGLETON_LIMIT, value)


class _Uniforms:
    """Uniform draws from a generator, fetched in batches."""

    def __init__(self, generator: np.random.Generator) -> None:
        self._generator = generator
        self._buffer: list[float] = []

    def __call__(self) -> float:
        if not self._buffer:
            self._buffer = self._generator.random(UNIFORM_BATCH).tolist()[::-1]
        return self._buffer.pop()


def endgame_graph(wf: WorkingFormula) -> nx.Graph:
    """Return the disequality graph on all unassigned variables."""
    graph = nx.Graph()
    graph.add_nodes_from(wf.unassigned())
    for cid in wf.by_length[2]:
        graph.add_edge(*sorted(wf.members[cid]))
    return graph


def endgame_2xor(
    wf: WorkingFormula,
    f_n: Callable[[int], float],
    graph: nx.Graph | None = None,
) -> tuple[dict[int, int], dict[int, int], tuple[tuple[int, ...], ...]] | Fail:
    """Solve the residual 1-in-2 clauses two ways, opposite on every component."""
    if wf.max_length() > 2 or wf.pos_units or wf.neg_units:  # noqa: PLR2004
        msg = "The endgame needs a formula of 1-in-2 clauses with empty unit queues"
        raise OverlapEcInvalidParametersError(msg)
    if graph is None:
        graph = endgame_graph(wf)
    if not nx.is_bipartite(graph):
        return Fail(reason="non-bipartite", step=0, detail="odd cycle in endgame graph")
    limit = f_n(wf.n)
    components = sorted(
        (tuple(sorted(c)) for c in nx.connected_components(graph)), key=lambda c: c[0]
    )
    largest = max((len(c) for c in components), default=0)
    if largest >= limit:
        return Fail(
            reason="oversized-component",
            step=0,
            detail=f"component of size {largest} >= f(n) = {limit:.3f}",
        )
    a_partial: dict[int, int] = {}
    for component in components:
        root = component[0]
        a_partial[root] = 1
        for parent, child in nx.bfs_edges(graph, root):
            a_partial[child] = 1 - a_partial[parent]
    b_partial = {v: 1 - value for v, value in a_partial.items()}
    return a_partial, b_partial, tuple(components)


class _Runner(ABC):
    """Shared bookkeeping of the two algorithms."""

    schedule_id = ""

    def __init__(
        self,
        inst: EcInstance,
        f_n: Callable[[int], float],
        rng: RngSpec,
        record: bool = False,  # noqa: FBT001, FBT002
        step_log: bool = False,  # noqa: FBT001, FBT002
    ) -> None:
        self.inst = inst
        self.wf = WorkingFormula.from_instance(inst)
        self.f_n = f_n
        self.uniform = _Uniforms(make_rng(rng))
        self.record = record
        self.every = max(1, math.ceil(inst.n / SAMPLES_PER_RUN))
        self.steps = 0
        self.samples: list[TrajectorySample] = []
        self.log: list[dict[str, Any]] | None = [] if step_log else None
        self.t2_emp: float | None = None
        self.clamped = False
        self.peak_pos = 0
        self.peak_neg = 0
        if inst.k != LONG_CLAUSE:
            _LOGGER.warning("Runs with k=%d are experimental", inst.k)
        if record:
            self._sample()
        self._check_t2()

    def _sample(self) -> None:
        n = self.inst.n
        self.samples.append(
            TrajectorySample(
                t=self.steps / n,
                c3=self.wf.count(3) / n,
                c2=self.wf.count(2) / n,
                p=len(self.wf.pos_units) / n,
                n=len(self.wf.neg_units) / n,
            )
        )

    def _check_t2(self) -> None:
        if self.t2_emp is None and self.wf.max_length() < LONG_CLAUSE:
            self.t2_emp = self.steps / self.inst.n

    def _set(self, v: int, value: bool, branch: str) -> None:  # noqa: FBT001
        if self.log is not None:
            self.log.append(
                {
                    "step": self.steps,
                    "branch": branch,
                    "variable": v,
                    "value": value,
                    "counts": self.wf.counts(),
                }
            )
        self.wf.set_variable(v, value)
        self.steps += 1
        self.peak_pos = max(self.peak_pos, len(self.wf.pos_units))
        self.peak_neg = max(self.peak_neg, len(self.wf.neg_units))
        if self.record and self.steps % self.every == 0:
            self._sample()
        self._check_t2()

    def _clause_step(self) -> None:
        """Set a random member of a random maximal clause FALSE."""
        bucket = self.wf.by_length[self.wf.max_length()]
        cid = bucket.pick(self.uniform())
        members = sorted(self.wf.members[cid])
        v = members[min(int(self.uniform() * len(members)), len(members) - 1)]
        self._set(v, value=False, branch="clause")

    @abstractmethod
    def step(self) -> bool:
        """Take one step; False once the endgame can start."""

    def drain(self) -> None:
        """Serve every queued unit; positive units first."""
        while self.wf.pos_units or self.wf.neg_units:
            if self.wf.pos_units:
                self._set(self.wf.pos_units.last(), value=True, branch="drain")
            else:
                self._set(self.wf.neg_units.last(), value=False, branch="drain")

    def run(self) -> RunResult:
        """Run to completion and assemble the result."""
        graph = None
        outcome: Pair | Fail
        try:
            while self.step():
                pass
            self.drain()
            graph = endgame_graph(self.wf)
            endgame = endgame_2xor(self.wf, self.f_n, graph)
        except OverlapEcContradictionError as err:
            _LOGGER.debug("Run stopped at step %d: %s", self.steps, err)
            outcome = Fail(reason="contradiction", step=self.steps, detail=str(err))
        else:
            if isinstance(endgame, Fail):
                outcome = Fail(reason=endgame.reason, step=self.steps, detail=endgame.detail)
            else:
                a_partial, b_partial, components = endgame
                base = self.wf.value
                variables = range(1, self.inst.n + 1)
                a = Assignment(tuple(a_partial.get(v, base[v]) for v in variables))
                b = Assignment(tuple(b_partial.get(v, base[v]) for v in variables))
                outcome = Pair(a=a, b=b, components=components)
        if self.record and (not self.samples or self.samples[-1].t != self.steps / self.inst.n):
            self._sample()
        return RunResult(
            outcome=outcome,
            trajectory=self._curve() if self.record else None,
            stats=self._stats(graph),
            step_log=tuple(self.log) if self.log is not None else None,
        )

    def _curve(self) -> TrajectoryCurve:
        return TrajectoryCurve(
            samples=tuple(self.samples),
            mode="empirical",
            r=self.inst.m / self.inst.n,
            schedule_id=self.schedule_id,
        )

    def _stats(self, graph: nx.Graph | None) -> RunStats:
        if graph is None:
            return RunStats(
                t2_emp=self.t2_emp,
                steps=self.steps,
                schedule_clamped=self.clamped,
                peak_pos=self.peak_pos,
                peak_neg=self.peak_neg,
            )
        vertices = graph.number_of_nodes()
        edges = self.wf.count(2)
        return RunStats(
            t2_emp=self.t2_emp,
            graph_edges=edges,
            graph_vertices=vertices,
            max_component=max((len(c) for c in nx.connected_components(graph)), default=0),
            bipartite=nx.is_bipartite(graph),
            mean_degree=2.0 * edges / vertices if vertices else 0.0,
            steps=self.steps,
            schedule_clamped=self.clamped,
            peak_pos=self.peak_pos,
            peak_neg=self.peak_neg,
        )


class LazyLargestClause(_Runner):
    """Serve each branch with probabilities drawn from a schedule."""

    def __init__(
        self,
        inst: EcInstance,
        schedule: Schedule,
        f_n: Callable[[int], float],
        rng: RngSpec,
        record: bool = False,  # noqa: FBT001, FBT002
        drain: str = DEFAULT_DRAIN,
        step_log: bool = False,  # noqa: FBT001, FBT002
    ) -> None:
        """Prepare a run; drain is 'drain' or 'keep-lazy'."""
        if drain not in DRAIN_MODES:
            msg = f"Unknown drain mode '{drain}', expected one of {DRAIN_MODES}"
            raise OverlapEcInvalidParametersError(msg)
        self.schedule = schedule
        self.schedule_id = schedule.schedule_id
        self.drain_mode = drain
        super().__init__(inst, f_n, rng, record=record, step_log=step_log)

    def _choose(self, weights: Sequence[float]) -> int:
        """Draw a branch proportionally to weights; negative weights are inapplicable."""
        applicable = [i for i, w in enumerate(weights) if w >= 0]
        total = sum(weights[i] for i in applicable)
        if total <= 0:
            return applicable[0]
        u = self.uniform() * total
        acc = 0.0
        chosen = applicable[0]
        for i in applicable:
            if weights[i] > 0:
                acc += weights[i]
                chosen = i
                if u < acc:
                    break
        return chosen

    def _lambdas(self) -> tuple[float, float, float]:
        n = self.inst.n
        lambda1, lambda2, lambda3, clamped = self.schedule.probabilities(
            self.steps / n, self.wf.count(3) / n, self.wf.count(2) / n
        )
        self.clamped = self.clamped or clamped
        return lambda1, lambda2, lambda3

    def step(self) -> bool:
        """Take one lazy step; False once no clause of length >= 3 is left."""
        if self.wf.max_length() < LONG_CLAUSE:
            return False
        lambda1, lambda2, lambda3 = self._lambdas()
        wf = self.wf
        # A branch with nothing to act on is redrawn among the others.
        weights = (
            lambda1 if wf.pos_units or wf.free else -1.0,
            lambda2 if wf.neg_units or wf.free else -1.0,
            lambda3,
        )
        branch = self._choose(weights) + 1
        if branch == 1:
            source = wf.pos_units if wf.pos_units else wf.free
            self._set(source.pick(self.uniform()), value=True, branch="1")
        elif branch == 2:  # noqa: PLR2004
            source = wf.neg_units if wf.neg_units else wf.free
            self._set(source.pick(self.uniform()), value=False, branch="2")
        else:
            self._clause_step()
        return True

    def drain(self) -> None:
        """Empty the unit queues before the endgame."""
        if self.drain_mode == "drain":
            super().drain()
            return
        while self.wf.pos_units or self.wf.neg_units:
            lambda1, lambda2, _ = self._lambdas()
            weights = (
                lambda1 if self.wf.pos_units else -1.0,
                lambda2 if self.wf.neg_units else -1.0,
            )
            if max(weights) <= 0:
                weights = (
                    1.0 if self.wf.pos_units else -1.0,
                    1.0 if self.wf.neg_units else -1.0,
                )
            if self._choose(weights) == 0:
                self._set(self.wf.pos_units.pick(self.uniform()), value=True, branch="1")
            else:
                self._set(self.wf.neg_units.pick(self.uniform()), value=False, branch="2")


class LargestClause(_Runner):
    """Serve unit clauses first, otherwise shrink a random maximal clause."""

    schedule_id = "largest-clause"

    def step(self) -> bool:
        """Take one step; False once only 1-in-2 clauses and no units remain."""
        wf = self.wf
        units = len(wf.pos_units) + len(wf.neg_units)
        if units:
            index = min(int(self.uniform() * units), units - 1)
            if index < len(wf.pos_units):
                self._set(wf.pos_units.at(index), value=True, branch="unit")
            else:
                self._set(wf.neg_units.at(index - len(wf.pos_units)), value=False, branch="unit")
            return True
        if wf.max_length() >= LONG_CLAUSE:
            self._clause_step()
            return True
        return False


def run_lazy(  # noqa: PLR0913
    inst: EcInstance,
    schedule: Schedule,
    f_n: Callable[[int], float],
    rng: RngSpec,
    record: bool = False,  # noqa: FBT001, FBT002
    drain: str = DEFAULT_DRAIN,
    step_log: bool = False,  # noqa: FBT001, FBT002
) -> RunResult:
    """Run LAZY LARGEST-CLAUSE followed by the 2-XOR endgame."""
    return LazyLargestClause(
        inst, schedule, f_n, rng, record=record, drain=drain, step_log=step_log
    ).run()


def run_largest_clause(
    inst: EcInstance,
    f_n: Callable[[int], float],
    rng: RngSpec,
    record: bool = False,  # noqa: FBT001, FBT002
    step_log: bool = False,  # noqa: FBT001, FBT002
) -> RunResult:
    """Run LARGEST-CLAUSE followed by the 2-XOR endgame."""
    return LargestClause(inst, f_n, rng, record=record, step_log=step_log).run()


def tune_overlap(result: RunResult, window: OverlapWindow) -> TunedPair | Fail:
    """Copy whole components of A into B, largest first, until the overlap enters the window."""
    pair = result.outcome
    if not isinstance(pair, Pair):
        msg = "Overlap tuning needs a successful run"
        raise OverlapEcInvalidParametersError(msg)
    n = pair.a.n
    agreements = n - sum(len(c) for c in pair.components)
    _, hi = window.bounds(n)
    order = sorted(range(len(pair.components)), key=lambda i: (-len(pair.components[i]), i))
    flipped: list[int] = []
    for index in order:
        if window.admits(agreements, n):
            break
        size = len(pair.components[index])
        if (agreements + size) / n <= hi + OverlapWindow.SLACK:
            agreements += size
            flipped.append(index)
    if not window.admits(agreements, n):
        return Fail(
            reason="window-unreachable",
            step=result.stats.steps,
            detail=f"best overlap {agreements / n:.6f} misses window at q={window.q}",
        )
    values = list(pair.b.values)
    for index in flipped:
        for v in pair.components[index]:
            values[v - 1] = pair.a.values[v - 1]
    return TunedPair(
        a=pair.a,
        b=Assignment(tuple(values)),
        flipped=tuple(sorted(flipped)),
        overlap=agreements / n,
    )
