"""Tests for exhaustive enumeration, pair counts and cluster structure."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from overlap_ec.core import (
    OverlapEcInvalidParametersError,
    OverlapEcResourceLimitError,
    generate_instance,
    hypergraph_components,
    make_instance,
    overlap_and_distance,
    satisfies,
)
from overlap_ec.data import Assignment, OverlapWindow, RngSpec, SolutionSet
from overlap_ec.oracle import (
    build_solution_path,
    cluster_decomposition,
    count_overlap_pairs,
    count_overlap_pairs_bruteforce,
    count_quadruples,
    enumerate_solutions,
    expected_Z,
    expected_Z_exact,
    overlap_distribution,
    overlap_support,
    popcount,
    quadruple_count_bound,
)

THIRD = OverlapWindow(q=1 / 3, epsilon_n=0.0)
EVERYTHING = OverlapWindow(q=0.5, epsilon_n=1000.0)


def test_enumerate_single_clause(single_clause):
    solutions = enumerate_solutions(single_clause)
    assert [s.bits for s in solutions.solutions] == ["001", "010", "100"]
    assert solutions.codes.tolist() == [1, 2, 4]
    assert len(solutions) == 3


def test_enumerate_unsatisfiable(all_triples):
    assert len(enumerate_solutions(all_triples)) == 0
    assert overlap_distribution(all_triples) == {}
    assert count_overlap_pairs(all_triples, EVERYTHING) == 0


def test_enumerate_free_variables():
    inst = make_instance(2, 3, [])
    assert len(enumerate_solutions(inst)) == 4


def test_enumerate_cap():
    with pytest.raises(OverlapEcResourceLimitError):
        enumerate_solutions(make_instance(31, 3, []))


def test_enumerated_solutions_satisfy():
    inst = generate_instance(14, 6, 3, RngSpec(5))
    solutions = enumerate_solutions(inst)
    assert all(satisfies(s, inst) for s in solutions.solutions)
    assert list(solutions.solutions) == sorted(solutions.solutions)


def test_pairs_single_clause(single_clause):
    assert overlap_distribution(single_clause) == {2: 6}
    assert overlap_distribution(single_clause, include_equal=True) == {0: 3, 2: 6}
    assert count_overlap_pairs(single_clause, THIRD) == 6
    assert count_overlap_pairs(single_clause, THIRD, include_equal=True) == 6
    assert count_overlap_pairs(single_clause, EVERYTHING, include_equal=True) == 9


def test_support_without_clauses():
    inst = make_instance(2, 3, [])
    assert overlap_distribution(inst) == {1: 8, 2: 4}
    assert overlap_support(inst) == {Fraction(0), Fraction(1, 2)}


def test_support_single_clause(single_clause):
    assert overlap_support(single_clause) == {Fraction(1, 3)}


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
@pytest.mark.parametrize("q", [0.25, 0.5, 0.75])
def test_component_counts_match_bruteforce(seed, q):
    inst = generate_instance(12, 4, 3, RngSpec(seed))
    window = OverlapWindow(q=q, epsilon_n=1.5)
    solutions = enumerate_solutions(inst)
    for include_equal in (False, True):
        assert count_overlap_pairs(
            inst, window, include_equal=include_equal
        ) == count_overlap_pairs_bruteforce(solutions, window, include_equal=include_equal)


def test_popcount():
    values = np.array([0, 1, 3, 255, (1 << 40) - 1], dtype=np.int64)
    assert popcount(values).tolist() == [0, 1, 2, 8, 40]


def test_clusters_radius_zero():
    inst = make_instance(6, 3, [(1, 2, 3), (3, 4, 5)])
    solutions = enumerate_solutions(inst)
    report = cluster_decomposition(solutions, 0)
    assert len(report.components) == len(solutions)
    assert set(report.diameters) == {0}


def test_clusters_single_clause(single_clause):
    solutions = enumerate_solutions(single_clause)
    assert cluster_decomposition(solutions, 1).sizes == [1, 1, 1]
    joined = cluster_decomposition(solutions, 2)
    assert joined.components == ((0, 1, 2),)
    assert joined.diameters == (2,)


def test_clusters_full_radius():
    inst = generate_instance(10, 2, 3, RngSpec(4))
    solutions = enumerate_solutions(inst)
    report = cluster_decomposition(solutions, 10, with_diameters=False)
    assert report.sizes == [len(solutions)]
    assert report.diameters is None


def test_clusters_partition_solutions():
    inst = generate_instance(14, 5, 3, RngSpec(9))
    solutions = enumerate_solutions(inst)
    report = cluster_decomposition(solutions, 2)
    members = sorted(i for component in report.components for i in component)
    assert members == list(range(len(solutions)))


@pytest.mark.parametrize("l", [1, 2, 3])
def test_clusters_ignore_solution_order(l):  # noqa: E741
    inst = generate_instance(12, 4, 3, RngSpec(6))
    solutions = enumerate_solutions(inst)
    reversed_set = SolutionSet(
        solutions=solutions.solutions[::-1], instance_ref=solutions.instance_ref, n=solutions.n
    )

    def clusters(sols):
        report = cluster_decomposition(sols, l)
        return {frozenset(sols.solutions[i] for i in component) for component in report.components}

    assert clusters(reversed_set) == clusters(solutions)


def test_solution_path():
    inst = make_instance(6, 3, [(1, 2, 3), (4, 5, 6)])
    a = Assignment.from_bits("100100")
    b = Assignment.from_bits("001010")
    path = build_solution_path(a, b, inst)
    assert path[0] == a
    assert path[-1] == b
    assert len(path) == 3
    assert all(satisfies(step, inst) for step in path)


def test_solution_path_single_component():
    inst = make_instance(6, 3, [(1, 2, 3), (4, 5, 6)])
    a = Assignment.from_bits("100100")
    b = Assignment.from_bits("010100")
    assert build_solution_path(a, b, inst) == [a, b]
    assert build_solution_path(a, a, inst) == [a]


@pytest.mark.parametrize("bits", [("110100", "001010"), ("100100", "000000")])
def test_solution_path_rejects_non_solutions(bits):
    inst = make_instance(6, 3, [(1, 2, 3), (4, 5, 6)])
    with pytest.raises(OverlapEcInvalidParametersError):
        build_solution_path(Assignment.from_bits(bits[0]), Assignment.from_bits(bits[1]), inst)


@pytest.mark.parametrize("seed", [3, 8, 13])
def test_solution_path_steps_stay_within_components(seed):
    inst = generate_instance(14, 4, 3, RngSpec(seed))
    widest = max(len(component) for component in hypergraph_components(inst))
    solutions = enumerate_solutions(inst).solutions
    for a, b in itertools.islice(itertools.product(solutions, repeat=2), 200):
        path = build_solution_path(a, b, inst)
        assert path[0] == a
        assert path[-1] == b
        for before, after in itertools.pairwise(path):
            assert satisfies(after, inst)
            assert 0 < overlap_and_distance(before, after)[1] <= widest


def test_expected_z_single_clause():
    assert expected_Z_exact(3, 1, 3, THIRD) == 6
    assert expected_Z(3, 1, 3, THIRD) == pytest.approx(math.log(6))


def test_expected_z_without_clauses():
    assert expected_Z_exact(3, 0, 3, EVERYTHING) == 64
    assert expected_Z(70, 0, 3, EVERYTHING) == pytest.approx(70 * math.log(4), rel=1e-9)


def test_expected_z_matches_sampled_instances():
    n, m, k = 10, 3, 3
    window = OverlapWindow(q=0.5, epsilon_n=0.05 * n)
    exact = float(expected_Z_exact(n, m, k, window))
    instances = (generate_instance(n, m, k, RngSpec(31, i)) for i in range(4000))
    samples = np.array(
        [count_overlap_pairs(inst, window, include_equal=True) for inst in instances],
        dtype=float,
    )
    standard_error = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - exact) <= 3 * standard_error


def test_expected_z_cap():
    with pytest.raises(OverlapEcResourceLimitError):
        expected_Z(201, 10, 3, EVERYTHING)


def test_quadruple_counts():
    assert count_quadruples(10, EVERYTHING) == 286
    assert count_quadruples(10, OverlapWindow(q=0.5, epsilon_n=0.0)) == 36
    assert quadruple_count_bound(10, 0.5, 0.0) == pytest.approx(36.0)
