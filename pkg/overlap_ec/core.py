"""
Exact Cover core.

Instance construction and random generation, assignment arithmetic, the
per-clause pair predicates and the exception hierarchy shared by every
other module.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from typing import Any

import networkx as nx
import numpy as np

from .data import (
    Assignment,
    ClausePairProfile,
    EcInstance,
    GlobalPairProfile,
    OverlapWindow,
    RngSpec,
)

_LOGGER = logging.getLogger(__name__)

MIN_K = 3
MAX_SEED = (1 << 64) - 1


class OverlapEcError(Exception):
    """Exception to indicate a general overlap_ec error."""


class OverlapEcInvalidParametersError(OverlapEcError):
    """Exception to indicate invalid parameters or a violated precondition."""

    def __str__(self) -> str:
        """Return a string representation of the error."""
        message = super().__str__()
        if self.__cause__:
            return f"{message}: {self.__cause__}"
        return message


class OverlapEcDomainError(OverlapEcInvalidParametersError):
    """Exception to indicate an argument outside a function's domain."""


class OverlapEcResourceLimitError(OverlapEcError):
    """Exception to indicate that an enumeration or summation cap was exceeded."""


class OverlapEcNumericalError(OverlapEcError):
    """Exception to indicate that a numerical procedure did not converge."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        """Store the diagnostics next to the message."""
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        """Return a string representation of the error."""
        message = super().__str__()
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
            return f"{message} ({details})"
        return message


class OverlapEcContradictionError(OverlapEcError):
    """Exception to indicate that propagation forced a variable both ways."""

    def __init__(self, variable: int, clause: Sequence[int] | None = None) -> None:
        """Record the variable and the clause that witnessed the conflict."""
        self.variable = variable
        self.clause = tuple(clause) if clause is not None else ()
        super().__init__(f"Contradiction on variable {variable} in clause {self.clause}")


def make_rng(spec: RngSpec) -> np.random.Generator:
    """Return the random stream for (seed, stream_id)."""
    if not 0 <= spec.seed <= MAX_SEED or spec.stream_id < 0:
        msg = f"Seed must be a 64-bit unsigned integer, got {spec}"
        raise OverlapEcInvalidParametersError(msg)
    sequence = np.random.SeedSequence(spec.seed, spawn_key=(spec.stream_id,))
    return np.random.Generator(np.random.PCG64(sequence))


def make_instance(n: int, k: int, clauses: Iterable[Iterable[int]]) -> EcInstance:
    """Validate clauses and build an instance with each clause sorted."""
    if n < 1:
        msg = f"Variable count must be positive, got n={n}"
        raise OverlapEcInvalidParametersError(msg)
    if k < MIN_K:
        msg = f"Clause width must be at least {MIN_K}, got k={k}"
        raise OverlapEcInvalidParametersError(msg)
    normalized = []
    for index, clause in enumerate(clauses, start=1):
        members = tuple(sorted(int(v) for v in clause))
        if len(members) != k or len(set(members)) != k:
            msg = f"Clause {index} must have {k} distinct members, got {members}"
            raise OverlapEcInvalidParametersError(msg)
        if members[0] < 1 or members[-1] > n:
            msg = f"Clause {index} has members outside 1..{n}: {members}"
            raise OverlapEcInvalidParametersError(msg)
        normalized.append(members)
    return EcInstance(n=n, k=k, clauses=tuple(normalized))


def make_window(
    q: float,
    n: int | None = None,
    epsilon_n: float | None = None,
    epsilon_exponent: float = 0.75,
) -> OverlapWindow:
    """Build an overlap window; epsilon_n defaults to n ** epsilon_exponent."""
    if not 0.0 <= q <= 1.0:
        msg = f"Overlap target must lie in [0, 1], got q={q}"
        raise OverlapEcInvalidParametersError(msg)
    if epsilon_n is None:
        if n is None:
            msg = "Either n or epsilon_n is required"
            raise OverlapEcInvalidParametersError(msg)
        return OverlapWindow.for_size(q, n, epsilon_exponent)
    if epsilon_n < 0:
        msg = f"epsilon_n must be nonnegative, got {epsilon_n}"
        raise OverlapEcInvalidParametersError(msg)
    return OverlapWindow(q=q, epsilon_n=float(epsilon_n))


def generate_instance(n: int, m: int, k: int, rng: RngSpec) -> EcInstance:
    """Sample m clauses independently and uniformly from all k-subsets of 1..n."""
    if k < MIN_K:
        msg = f"Clause width must be at least {MIN_K}, got k={k}"
        raise OverlapEcInvalidParametersError(msg)
    if k > n:
        msg = f"Clause width k={k} exceeds variable count n={n}"
        raise OverlapEcInvalidParametersError(msg)
    if m < 0:
        msg = f"Clause count must be nonnegative, got m={m}"
        raise OverlapEcInvalidParametersError(msg)

    generator = make_rng(rng)
    rows = np.empty((m, k), dtype=np.int64)
    if k * k > n:
        # Rejection would be slow when collisions are likely.
        if m:
            keys = generator.random((m, n))
            rows[:] = np.sort(np.argsort(keys, axis=1)[:, :k] + 1, axis=1)
    else:
        filled = 0
        while filled < m:
            draw = np.sort(generator.integers(1, n + 1, size=(m - filled, k)), axis=1)
            distinct = np.all(np.diff(draw, axis=1) != 0, axis=1)
            accepted = draw[distinct]
            rows[filled : filled + len(accepted)] = accepted
            filled += len(accepted)

    _LOGGER.debug("Generated instance n=%d m=%d k=%d from %s", n, m, k, rng)
    return EcInstance(n=n, k=k, clauses=tuple(map(tuple, rows.tolist())))


def _check_lengths(a: Assignment, b: Assignment) -> None:
    if a.n != b.n:
        msg = f"Assignment lengths differ: {a.n} != {b.n}"
        raise OverlapEcInvalidParametersError(msg)


def _check_against(a: Assignment, inst: EcInstance) -> None:
    if a.n != inst.n:
        msg = f"Assignment has {a.n} values but the instance has n={inst.n}"
        raise OverlapEcInvalidParametersError(msg)


def overlap_and_distance(a: Assignment, b: Assignment) -> tuple[float, int]:
    """Return (overlap, hamming distance) of two assignments."""
    _check_lengths(a, b)
    if a.n == 0:
        return 1.0, 0
    hamming = int(np.count_nonzero(a.array != b.array))
    return 1.0 - hamming / a.n, hamming


def satisfies(a: Assignment, inst: EcInstance) -> bool:
    """Return whether every clause has exactly one TRUE variable under a."""
    _check_against(a, inst)
    if inst.m == 0:
        return True
    trues = a.array[inst.clause_array - 1].sum(axis=1)
    return bool(np.all(trues == 1))


def clause_pair_profile(
    clause: Sequence[int], a: Assignment, b: Assignment
) -> tuple[ClausePairProfile, bool]:
    """Classify the clause's variables by (A, B) values and test joint satisfaction."""
    _check_lengths(a, b)
    counts = [0, 0, 0, 0]
    for variable in clause:
        counts[2 * a.values[variable - 1] + b.values[variable - 1]] += 1
    profile = ClausePairProfile(*counts)
    k = profile.k
    both_satisfied = (profile.c0, profile.c1, profile.c2, profile.c3) in {
        (k - 2, 1, 1, 0),
        (k - 1, 0, 0, 1),
    }
    return profile, both_satisfied


def global_pair_profile(a: Assignment, b: Assignment) -> GlobalPairProfile:
    """Return the sizes of the four agreement classes over all variables."""
    _check_lengths(a, b)
    classes = 2 * a.array.astype(np.int64) + b.array.astype(np.int64)
    a_, b_, c_, d_ = np.bincount(classes, minlength=4).tolist()
    return GlobalPairProfile(a=a_, b=b_, c=c_, d=d_)


def hypergraph_components(inst: EcInstance) -> list[tuple[int, ...]]:
    """Return the connected components of the formula hypergraph."""
    graph = nx.Graph()
    graph.add_nodes_from(range(1, inst.n + 1))
    for clause in inst.clauses:
        nx.add_path(graph, clause)
    components = [tuple(sorted(c)) for c in nx.connected_components(graph)]
    components.sort(key=lambda component: component[0])
    return components
