"""
Exhaustive ground truth for small instances.

Solutions are enumerated by backtracking with unit propagation. Pair statistics
use the hypergraph component structure: a pair of solutions is a product of
independent per-component pairs, so the distance distribution of all ordered
pairs is the product of per-component distance polynomials.
"""

from __future__ import annotations

import itertools
import logging
import math
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse, special
from scipy.sparse import csgraph

from .const import (
    EXACT_ARITHMETIC_MAX_VARIABLES,
    EXPECTED_Z_MAX_VARIABLES,
    ORACLE_MAX_PAIRS,
    ORACLE_MAX_SOLUTIONS,
    ORACLE_MAX_VARIABLES,
)
from .core import (
    OverlapEcInvalidParametersError,
    OverlapEcResourceLimitError,
    hypergraph_components,
    satisfies,
)
from .data import Assignment, ClusterReport, EcInstance, OverlapWindow, SolutionSet
from .parse_helper import instance_digest
from .upper import pstar_exact, pstar_log_array

if TYPE_CHECKING:
    from collections.abc import Sequence

_LOGGER = logging.getLogger(__name__)

_POPCOUNT16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.int64)
BLOCK_ELEMENTS = 1 << 22


def _chunk(size: int) -> int:
    """Return how many rows of a pairwise block fit the memory budget."""
    return max(1, BLOCK_ELEMENTS // max(1, size))


def popcount(values: np.ndarray) -> np.ndarray:
    """Return the number of set bits of each nonnegative int64."""
    x = np.asarray(values, dtype=np.uint64)
    total = np.zeros(x.shape, dtype=np.int64)
    for shift in (0, 16, 32, 48):
        total += _POPCOUNT16[((x >> np.uint64(shift)) & np.uint64(0xFFFF)).astype(np.int64)]
    return total


class _Propagator:
    """Partial assignment with 1-in-j unit propagation and an undo trail."""

    def __init__(self, n: int, clauses: Sequence[Sequence[int]]) -> None:
        self.n = n
        self.clauses = [tuple(c) for c in clauses]
        self.occurs: list[list[int]] = [[] for _ in range(n + 1)]
        for index, clause in enumerate(self.clauses):
            for v in clause:
                self.occurs[v].append(index)
        self.trues = [0] * len(self.clauses)
        self.open = [len(c) for c in self.clauses]
        self.value = [-1] * (n + 1)
        self.trail: list[int] = []

    def assign(self, variable: int, value: int) -> bool:
        """Assign and propagate; return False on conflict."""
        stack = [(variable, value)]
        while stack:
            v, val = stack.pop()
            if self.value[v] != -1:
                if self.value[v] != val:
                    return False
                continue
            self.value[v] = val
            self.trail.append(v)
            conflict = False
            for index in self.occurs[v]:
                self.open[index] -= 1
                if val:
                    self.trues[index] += 1
                if conflict:
                    continue
                if self.trues[index] > 1:
                    conflict = True
                elif self.trues[index] == 1:
                    if val:
                        stack.extend(
                            (u, 0) for u in self.clauses[index] if self.value[u] == -1
                        )
                elif self.open[index] == 0:
                    conflict = True
                elif self.open[index] == 1:
                    stack.extend(
                        (u, 1) for u in self.clauses[index] if self.value[u] == -1
                    )
            if conflict:
                return False
        return True

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            v = self.trail.pop()
            for index in self.occurs[v]:
                self.open[index] += 1
                if self.value[v] == 1:
                    self.trues[index] -= 1
            self.value[v] = -1

    def solutions(self, max_solutions: int) -> list[tuple[int, ...]]:
        """Return every satisfying assignment in lexicographic order."""
        found: list[tuple[int, ...]] = []

        def search(start: int) -> None:
            v = start
            while v <= self.n and self.value[v] != -1:
                v += 1
            if v > self.n:
                if len(found) >= max_solutions:
                    msg = f"More than {max_solutions} solutions"
                    raise OverlapEcResourceLimitError(msg)
                found.append(tuple(self.value[1:]))
                return
            for val in (0, 1):
                mark = len(self.trail)
                if self.assign(v, val):
                    search(v + 1)
                self.undo(mark)

        search(1)
        return found


def enumerate_solutions(
    inst: EcInstance,
    max_variables: int = ORACLE_MAX_VARIABLES,
    max_solutions: int = ORACLE_MAX_SOLUTIONS,
) -> SolutionSet:
    """Return all satisfying assignments of a small instance."""
    if inst.n > max_variables:
        msg = f"Enumeration is capped at n={max_variables}, got n={inst.n}"
        raise OverlapEcResourceLimitError(msg)
    found = _Propagator(inst.n, inst.clauses).solutions(max_solutions)
    found.sort()
    _LOGGER.debug("Enumerated %d solutions for n=%d m=%d", len(found), inst.n, inst.m)
    return SolutionSet(
        solutions=tuple(Assignment(values) for values in found),
        instance_ref=instance_digest(inst),
        n=inst.n,
    )


def _codes(rows: Sequence[Sequence[int]], width: int) -> np.ndarray:
    if not rows:
        return np.zeros(0, dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(width - 1, -1, -1, dtype=np.int64))
    return np.asarray(rows, dtype=np.int64) @ weights


def _distance_histogram(codes: np.ndarray, width: int) -> list[int]:
    """Return counts of ordered pairs (equal pairs included) per Hamming distance."""
    if codes.size * codes.size > ORACLE_MAX_PAIRS:
        msg = f"{codes.size} solutions give too many pairs to histogram"
        raise OverlapEcResourceLimitError(msg)
    histogram = np.zeros(width + 1, dtype=np.int64)
    for start in range(0, codes.size, _chunk(codes.size)):
        block = codes[start : start + _chunk(codes.size), None] ^ codes[None, :]
        histogram += np.bincount(popcount(block).ravel(), minlength=width + 1)
    return [int(v) for v in histogram]


def _multiply(left: list[int], right: list[int]) -> list[int]:
    product = [0] * (len(left) + len(right) - 1)
    for i, x in enumerate(left):
        if x:
            for j, y in enumerate(right):
                product[i + j] += x * y
    return product


def overlap_distribution(
    inst: EcInstance,
    include_equal: bool = False,  # noqa: FBT001, FBT002
    max_variables: int = ORACLE_MAX_VARIABLES,
) -> dict[int, int]:
    """Return {hamming distance: number of ordered solution pairs}."""
    if inst.n > max_variables:
        msg = f"Enumeration is capped at n={max_variables}, got n={inst.n}"
        raise OverlapEcResourceLimitError(msg)
    polynomial = [1]
    total_solutions = 1
    for component in hypergraph_components(inst):
        if len(component) == 1:
            factor, count = [2, 2], 2
        else:
            index = {v: i for i, v in enumerate(component, start=1)}
            members = set(component)
            local = [
                tuple(index[v] for v in clause)
                for clause in inst.clauses
                if clause[0] in members
            ]
            rows = _Propagator(len(component), local).solutions(ORACLE_MAX_SOLUTIONS)
            if not rows:
                return {}
            factor = _distance_histogram(_codes(rows, len(component)), len(component))
            count = len(rows)
        polynomial = _multiply(polynomial, factor)
        total_solutions *= count
    if not include_equal:
        polynomial[0] -= total_solutions
    return {distance: count for distance, count in enumerate(polynomial) if count}


def count_overlap_pairs(
    inst: EcInstance,
    window: OverlapWindow,
    include_equal: bool = False,  # noqa: FBT001, FBT002
) -> int:
    """Return the number of ordered solution pairs whose overlap lies in the window."""
    distribution = overlap_distribution(inst, include_equal=include_equal)
    return sum(
        count
        for distance, count in distribution.items()
        if window.admits(inst.n - distance, inst.n)
    )


def count_overlap_pairs_bruteforce(
    sols: SolutionSet,
    window: OverlapWindow,
    include_equal: bool = False,  # noqa: FBT001, FBT002
) -> int:
    """Count pairs directly from an enumerated solution set."""
    histogram = _distance_histogram(sols.codes, sols.n)
    if not include_equal:
        histogram[0] -= len(sols)
    return sum(
        count
        for distance, count in enumerate(histogram)
        if count and window.admits(sols.n - distance, sols.n)
    )


def overlap_support(inst: EcInstance) -> set[Fraction]:
    """Return the overlaps realized by pairs of distinct solutions."""
    distribution = overlap_distribution(inst, include_equal=False)
    return {Fraction(inst.n - distance, inst.n) for distance in distribution}


def _neighbour_masks(n: int, l: int) -> np.ndarray:  # noqa: E741
    masks = [
        sum(1 << bit for bit in bits)
        for radius in range(1, l + 1)
        for bits in itertools.combinations(range(n), radius)
    ]
    return np.asarray(masks, dtype=np.int64)


def _cluster_edges(codes: np.ndarray, n: int, l: int) -> tuple[np.ndarray, np.ndarray]:  # noqa: E741
    size = codes.size
    neighbourhood = sum(math.comb(n, j) for j in range(1, l + 1))
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    if neighbourhood < size:
        for mask in _neighbour_masks(n, l):
            partner = codes ^ mask
            position = np.searchsorted(codes, partner)
            position = np.minimum(position, size - 1)
            hit = codes[position] == partner
            rows.append(np.flatnonzero(hit))
            cols.append(position[hit])
    else:
        if size * size > ORACLE_MAX_PAIRS:
            msg = f"{size} solutions at radius {l} give too many pairs"
            raise OverlapEcResourceLimitError(msg)
        for start in range(0, size, _chunk(size)):
            block = popcount(codes[start : start + _chunk(size), None] ^ codes[None, :])
            i, j = np.nonzero((block <= l) & (block > 0))
            rows.append(i + start)
            cols.append(j)
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def _diameter(codes: np.ndarray) -> int:
    best = 0
    for start in range(0, codes.size, _chunk(codes.size)):
        block = popcount(codes[start : start + _chunk(codes.size), None] ^ codes[None, :])
        best = max(best, int(block.max()))
    return best


def cluster_decomposition(
    sols: SolutionSet,
    l: int,  # noqa: E741
    with_diameters: bool = True,  # noqa: FBT001, FBT002
) -> ClusterReport:
    """Partition solutions into components joined by steps of Hamming distance <= l."""
    if l < 0:
        msg = f"Radius must be nonnegative, got l={l}"
        raise OverlapEcInvalidParametersError(msg)
    size = len(sols)
    if size == 0:
        return ClusterReport(l=l, components=(), diameters=() if with_diameters else None)

    codes = sols.codes
    if l >= sols.n:
        labels = np.zeros(size, dtype=np.int64)
    else:
        # Neighbour lookup needs ascending codes.
        order = np.argsort(codes, kind="stable")
        rows, cols = _cluster_edges(codes[order], sols.n, l)
        graph = sparse.coo_matrix(
            (np.ones(rows.size, dtype=np.int8), (order[rows], order[cols])), shape=(size, size)
        )
        _, labels = csgraph.connected_components(graph, directed=False)

    groups: dict[int, list[int]] = {}
    for index, label in enumerate(labels.tolist()):
        groups.setdefault(label, []).append(index)
    components = tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))
    diameters = (
        tuple(_diameter(codes[list(component)]) for component in components)
        if with_diameters
        else None
    )
    _LOGGER.debug("Radius %d splits %d solutions into %d clusters", l, size, len(components))
    return ClusterReport(l=l, components=components, diameters=diameters)


def build_solution_path(a: Assignment, b: Assignment, inst: EcInstance) -> list[Assignment]:
    """Walk from a to b by switching one hypergraph component at a time."""
    if not satisfies(a, inst) or not satisfies(b, inst):
        msg = "Both endpoints of a solution path must satisfy the instance"
        raise OverlapEcInvalidParametersError(msg)
    path = [a]
    current = list(a.values)
    for component in hypergraph_components(inst):
        if all(current[v - 1] == b.values[v - 1] for v in component):
            continue
        for v in component:
            current[v - 1] = b.values[v - 1]
        path.append(Assignment(tuple(current)))
    return path


def _check_expected_z(n: int, m: int, k: int) -> None:
    if n > EXPECTED_Z_MAX_VARIABLES:
        msg = f"expected_Z is capped at n={EXPECTED_Z_MAX_VARIABLES}, got n={n}"
        raise OverlapEcResourceLimitError(msg)
    if k > n or m < 0:
        msg = f"Invalid parameters n={n}, m={m}, k={k}"
        raise OverlapEcInvalidParametersError(msg)


def _profiles(n: int, window: OverlapWindow):  # noqa: ANN202
    """Yield every (a, b, c, d) with a + b + c + d = n and agreements a + d admitted."""
    for agreements in window.admitted_agreements(n).tolist():
        for a in range(agreements + 1):
            for b in range(n - agreements + 1):
                yield a, b, n - agreements - b, agreements - a


def expected_Z_exact(n: int, m: int, k: int, window: OverlapWindow) -> Fraction:  # noqa: N802
    """Return E[Z] exactly as a rational."""
    _check_expected_z(n, m, k)
    total = Fraction(0)
    n_factorial = math.factorial(n)
    for a, b, c, d in _profiles(n, window):
        multinomial = n_factorial // (
            math.factorial(a) * math.factorial(b) * math.factorial(c) * math.factorial(d)
        )
        total += multinomial * pstar_exact(a, b, c, d, n, k) ** m
    return total


def expected_Z(n: int, m: int, k: int, window: OverlapWindow) -> float:  # noqa: N802
    """Return ln E[Z(q, F)] over ordered pairs, equal pairs included."""
    _check_expected_z(n, m, k)
    if n <= EXACT_ARITHMETIC_MAX_VARIABLES:
        exact = expected_Z_exact(n, m, k, window)
        if exact == 0:
            return float("-inf")
        return math.log(exact.numerator) - math.log(exact.denominator)

    profiles = np.asarray(list(_profiles(n, window)), dtype=float)
    if profiles.size == 0:
        return float("-inf")
    a, b, c, d = profiles.T
    log_multinomial = special.gammaln(n + 1) - special.gammaln(profiles + 1).sum(axis=1)
    terms = log_multinomial
    if m:
        terms = terms + m * pstar_log_array(a, b, c, d, n, k)
    return float(special.logsumexp(terms))


def count_quadruples(n: int, window: OverlapWindow) -> int:
    """Return the number of profiles admitted by the window."""
    return sum((j + 1) * (n - j + 1) for j in window.admitted_agreements(n).tolist())


def quadruple_count_bound(n: int, q: float, epsilon: float) -> float:
    """Return the closed-form bound on the number of admitted quadruples."""
    return (
        (1.0 + 2.0 * epsilon)
        * (3.0 - epsilon - epsilon**2 + 3.0 * n + 3.0 * n * n * q - 3.0 * n * n * q * q)
        / 3.0
    )

