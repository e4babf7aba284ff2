"""Tests for the working formula, both algorithms and overlap tuning."""

import math

import numpy as np
import pytest
from scipy import stats

from overlap_ec.algo import (
    ComponentLimit,
    IndexedSet,
    LargestClause,
    LazyLargestClause,
    WorkingFormula,
    _Runner,
    endgame_2xor,
    run_largest_clause,
    run_lazy,
    set_variable_step,
    tune_overlap,
)
from overlap_ec.core import (
    OverlapEcContradictionError,
    OverlapEcInvalidParametersError,
    generate_instance,
    make_instance,
    satisfies,
)
from overlap_ec.data import (
    Assignment,
    Fail,
    OverlapWindow,
    Pair,
    RngSpec,
    RunResult,
    RunStats,
    TunedPair,
)
from overlap_ec.trajectory import closed_form_curve, make_schedule, sup_norm_distance


def test_indexed_set():
    items = IndexedSet([4, 7, 9])
    assert len(items) == 3
    assert not items.add(7)
    assert items.discard(4)
    assert not items.discard(4)
    assert sorted(items) == [7, 9]
    assert items.pick(0.0) in {7, 9}
    assert items.pick(0.999) in {7, 9}
    assert 9 in items


def test_true_removes_clause_and_queues_negatives():
    wf = WorkingFormula.from_clauses(3, [(1, 2, 3)])
    effects = set_variable_step(wf, 1, True)
    assert effects.removed == 1
    assert effects.neg_pushes == 2
    assert wf.counts() == {"P": 0, "N": 2, "C2": 0, "C3": 0}
    assert wf.free_count == 0


def test_false_shrinks_clause():
    wf = WorkingFormula.from_clauses(3, [(1, 2, 3)])
    effects = set_variable_step(wf, 1, False)
    assert effects.shrunk == 1
    assert wf.count(3) == 0
    assert wf.count(2) == 1
    assert wf.max_length() == 2


def test_false_on_two_clause_queues_positive():
    wf = WorkingFormula.from_clauses(2, [(1, 2)])
    effects = wf.set_variable(1, False)
    assert effects.pos_pushes == 1
    assert 2 in wf.pos_units
    assert wf.max_length() == 0


def test_unit_clause_is_queued():
    wf = WorkingFormula.from_clauses(3, [(2,), (1, 2, 3)])
    assert list(wf.pos_units) == [2]
    assert wf.free_count == 2


def test_opposite_pushes_contradict():
    wf = WorkingFormula.from_clauses(3, [(1, 2), (1, 3), (2, 3)])
    wf.set_variable(1, False)
    with pytest.raises(OverlapEcContradictionError) as excinfo:
        wf.set_variable(2, True)
    assert excinfo.value.variable == 3


def test_setting_twice_is_rejected():
    wf = WorkingFormula.from_clauses(3, [(1, 2, 3)])
    wf.set_variable(1, False)
    with pytest.raises(OverlapEcInvalidParametersError):
        wf.set_variable(1, True)


def test_component_limit():
    assert ComponentLimit()(100) == pytest.approx(math.log(100) ** 2)
    assert ComponentLimit("ln", 2.0)(100) == pytest.approx(2 * math.log(100))
    assert ComponentLimit("sqrt")(100) == pytest.approx(10.0)
    with pytest.raises(OverlapEcInvalidParametersError):
        ComponentLimit("cube")(100)


def test_component_limit_admits_singletons():
    assert ComponentLimit()(1) >= 2.0
    assert ComponentLimit("ln", 0.1)(3) >= 2.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_empty_instance_at_tiny_n(n):
    inst = make_instance(n, 3, [])
    result = run_lazy(inst, make_schedule(), ComponentLimit(), RngSpec(0))
    assert isinstance(result.outcome, Pair)
    assert result.outcome.components == tuple((v,) for v in range(1, n + 1))
    assert result.outcome.a == result.outcome.b.complement()


def test_endgame_colors_components_oppositely(permissive_limit):
    wf = WorkingFormula.from_clauses(4, [(1, 2), (2, 3)])
    a_partial, b_partial, components = endgame_2xor(wf, permissive_limit)
    assert components == ((1, 2, 3), (4,))
    assert a_partial == {1: 1, 2: 0, 3: 1, 4: 1}
    assert b_partial == {1: 0, 2: 1, 3: 0, 4: 0}


def test_endgame_colors_a_path(permissive_limit):
    wf = WorkingFormula.from_clauses(5, [(1, 2), (2, 3), (3, 4), (4, 5)])
    a_partial, b_partial, components = endgame_2xor(wf, permissive_limit)
    assert components == ((1, 2, 3, 4, 5),)
    assert a_partial == {1: 1, 2: 0, 3: 1, 4: 0, 5: 1}
    assert b_partial == {v: 1 - value for v, value in a_partial.items()}
    for x, y in ((1, 2), (2, 3), (3, 4), (4, 5)):
        assert a_partial[x] != a_partial[y]
        assert b_partial[x] != b_partial[y]


def test_endgame_odd_cycle(permissive_limit):
    wf = WorkingFormula.from_clauses(3, [(1, 2), (2, 3), (1, 3)])
    outcome = endgame_2xor(wf, permissive_limit)
    assert isinstance(outcome, Fail)
    assert outcome.reason == "non-bipartite"


def test_endgame_oversized_component():
    wf = WorkingFormula.from_clauses(4, [(1, 2), (2, 3)])
    outcome = endgame_2xor(wf, lambda n: 3.0)
    assert isinstance(outcome, Fail)
    assert outcome.reason == "oversized-component"


def test_endgame_needs_two_clauses_only(permissive_limit):
    wf = WorkingFormula.from_clauses(3, [(1, 2, 3)])
    with pytest.raises(OverlapEcInvalidParametersError):
        endgame_2xor(wf, permissive_limit)


@pytest.mark.parametrize("seed", range(8))
def test_largest_clause_hits_contradiction(all_triples, permissive_limit, seed):
    result = run_largest_clause(all_triples, permissive_limit, RngSpec(seed))
    assert isinstance(result.outcome, Fail)
    assert result.outcome.reason == "contradiction"


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("drain", ["drain", "keep-lazy"])
def test_lazy_never_solves_unsatisfiable(all_triples, permissive_limit, seed, drain):
    result = run_lazy(all_triples, make_schedule(), permissive_limit, RngSpec(seed), drain=drain)
    assert not result.ok


@pytest.mark.parametrize("seed", range(8))
def test_lazy_single_clause(single_clause, permissive_limit, seed):
    result = run_lazy(single_clause, make_schedule(), permissive_limit, RngSpec(seed))
    assert isinstance(result.outcome, Pair)
    assert satisfies(result.outcome.a, single_clause)
    assert satisfies(result.outcome.b, single_clause)
    assert result.stats.t2_emp is not None


@pytest.mark.parametrize("seed", range(5))
def test_largest_clause_serves_units_first(seed):
    inst = generate_instance(300, 90, 3, RngSpec(seed, 0))
    result = run_largest_clause(inst, ComponentLimit(), RngSpec(seed, 1), step_log=True)
    for entry in result.step_log:
        queued = entry["counts"]["P"] + entry["counts"]["N"]
        assert (entry["branch"] == "unit") == (queued > 0)


def test_largest_clause_log_has_unit_steps():
    branches = set()
    for seed in range(5):
        inst = generate_instance(300, 90, 3, RngSpec(seed, 0))
        result = run_largest_clause(inst, ComponentLimit(), RngSpec(seed, 1), step_log=True)
        branches.update(entry["branch"] for entry in result.step_log)
    assert branches == {"unit", "clause"}


def test_runner_is_abstract(single_clause, permissive_limit):
    with pytest.raises(TypeError):
        _Runner(single_clause, permissive_limit, RngSpec(0))
    assert issubclass(LargestClause, _Runner)


def test_residual_clauses_stay_uniform():
    n, m, steps = 20, 4, 4
    counts = np.zeros(n + 1, dtype=np.int64)
    for seed in range(1000):
        inst = generate_instance(n, m, 3, RngSpec(seed, 0))
        runner = LazyLargestClause(inst, make_schedule(), ComponentLimit(), RngSpec(seed, 1))
        try:
            for _ in range(steps):
                runner.step()
        except OverlapEcContradictionError:
            continue
        for cid in runner.wf.by_length[3]:
            for v in runner.wf.members[cid]:
                counts[v] += 1
    assert counts.sum() > 1000
    assert stats.chisquare(counts[1:]).pvalue > 1e-4


def test_lazy_is_deterministic():
    inst = generate_instance(500, 50, 3, RngSpec(1, 0))
    first = run_lazy(inst, make_schedule(), ComponentLimit(), RngSpec(1, 1))
    second = run_lazy(inst, make_schedule(), ComponentLimit(), RngSpec(1, 1))
    assert first == second


@pytest.mark.parametrize("seed", range(5))
def test_lazy_pairs_are_sound(seed):
    inst = generate_instance(2000, 200, 3, RngSpec(seed, 0))
    result = run_lazy(inst, make_schedule(), ComponentLimit(), RngSpec(seed, 1))
    if result.ok:
        pair = result.outcome
        assert satisfies(pair.a, inst)
        assert satisfies(pair.b, inst)
        assert all(
            pair.a.values[v - 1] != pair.b.values[v - 1]
            for component in pair.components
            for v in component
        )


@pytest.mark.parametrize("seed", range(5))
def test_largest_clause_pairs_are_sound(seed):
    inst = generate_instance(2000, 200, 3, RngSpec(seed, 0))
    result = run_largest_clause(inst, ComponentLimit(), RngSpec(seed, 1), record=True)
    assert result.trajectory is not None
    if result.ok:
        assert satisfies(result.outcome.a, inst)
        assert satisfies(result.outcome.b, inst)


def test_lazy_follows_closed_forms():
    n = 20000
    inst = generate_instance(n, 2000, 3, RngSpec(3, 0))
    result = run_lazy(inst, make_schedule(), ComponentLimit(), RngSpec(3, 1), record=True)
    assert result.stats.t2_emp == pytest.approx(0.209431, abs=0.03)
    curve = result.trajectory
    assert curve.samples[0].c3 == pytest.approx(0.1)
    assert curve.mode == "empirical"
    assert sup_norm_distance(curve, closed_form_curve(0.1), "c3") < 0.02


def test_step_log(single_clause, permissive_limit):
    result = run_lazy(
        single_clause, make_schedule(), permissive_limit, RngSpec(2), step_log=True
    )
    assert len(result.step_log) == result.stats.steps
    first = result.step_log[0]
    assert set(first) == {"step", "branch", "variable", "value", "counts"}
    assert first["step"] == 0
    assert first["counts"]["C3"] == 1


def test_unknown_drain_mode(single_clause, permissive_limit):
    with pytest.raises(OverlapEcInvalidParametersError):
        run_lazy(single_clause, make_schedule(), permissive_limit, RngSpec(0), drain="skip")


def _ten_variable_result() -> RunResult:
    a = Assignment.from_bits("1001101100")
    pair = Pair(a=a, b=a.complement(), components=((1, 2), (3, 4), (5, 6, 7), (8, 9, 10)))
    return RunResult(outcome=pair, trajectory=None, stats=RunStats())


def test_tune_overlap_largest_first():
    result = _ten_variable_result()
    tuned = tune_overlap(result, OverlapWindow(q=0.5, epsilon_n=0.0))
    assert isinstance(tuned, TunedPair)
    assert tuned.flipped == (0, 2)
    assert tuned.overlap == 0.5
    agreements = sum(x == y for x, y in zip(tuned.a.values, tuned.b.values, strict=True))
    assert agreements == 5


def test_tune_overlap_already_inside():
    result = _ten_variable_result()
    tuned = tune_overlap(result, OverlapWindow(q=0.0, epsilon_n=0.0))
    assert tuned.flipped == ()
    assert tuned.b == result.outcome.b


def test_tune_overlap_unreachable():
    outcome = tune_overlap(_ten_variable_result(), OverlapWindow(q=0.1, epsilon_n=0.0))
    assert isinstance(outcome, Fail)
    assert outcome.reason == "window-unreachable"


def _single_cluster_result() -> RunResult:
    a = Assignment.from_bits("101010101011")
    b = Assignment.from_bits("010101010111")
    pair = Pair(a=a, b=b, components=(tuple(range(1, 11)),))
    return RunResult(outcome=pair, trajectory=None, stats=RunStats())


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_tune_overlap_single_cluster_unreachable(q):
    outcome = tune_overlap(_single_cluster_result(), OverlapWindow(q=q, epsilon_n=0.0))
    assert isinstance(outcome, Fail)
    assert outcome.reason == "window-unreachable"


def test_tune_overlap_single_cluster_is_trivial_at_one():
    result = _single_cluster_result()
    tuned = tune_overlap(result, OverlapWindow(q=1.0, epsilon_n=0.0))
    assert tuned.flipped == (0,)
    assert tuned.overlap == 1.0
    assert tuned.b == result.outcome.a


def test_tune_overlap_needs_a_pair():
    failed = RunResult(outcome=Fail("contradiction", 3), trajectory=None, stats=RunStats())
    with pytest.raises(OverlapEcInvalidParametersError):
        tune_overlap(failed, OverlapWindow(q=0.5, epsilon_n=1.0))
