import numpy as np
import pytest

from propfair import (
    Instance,
    SearchLimitError,
    SearchLimits,
    Verdict,
    exists_proportional,
    exists_proportional_matching_case,
    is_proportional,
    remark1_instance,
    remark2_instance,
)

from oracles import naive_exists, random_instance


def test_one_good_two_agents():
    assert exists_proportional(Instance.from_rows([[1], [1]])).verdict is Verdict.NO


def test_identity():
    res = exists_proportional(Instance.from_rows([[1, 0], [0, 1]]))
    assert res.verdict is Verdict.YES
    assert res.allocation.owner == (0, 1)


def test_trivial_cases():
    assert exists_proportional(Instance(3, 0, np.zeros((3, 0)))).verdict is Verdict.YES
    assert exists_proportional(Instance.from_rows([[0.3, 0.2]])).verdict is Verdict.YES
    # everyone indifferent to everything: any allocation is fair
    assert exists_proportional(Instance(3, 2, np.zeros((3, 2)))).verdict is Verdict.YES


def test_limits():
    inst = Instance(7, 1, np.ones((7, 1)))
    with pytest.raises(SearchLimitError):
        exists_proportional(inst)
    inst = Instance(2, 21, np.ones((2, 21)))
    with pytest.raises(SearchLimitError):
        exists_proportional(inst)
    with pytest.raises(ValueError):
        SearchLimits(node_budget=0)


def test_budget_is_not_no():
    inst = remark1_instance(4, 0)
    res = exists_proportional(inst, SearchLimits(node_budget=5))
    assert res.verdict is Verdict.BUDGET_EXCEEDED
    assert exists_proportional(inst).verdict is Verdict.NO


@pytest.mark.parametrize("seed", range(50))
def test_remark1_family_has_no_fair_allocation(seed):
    inst = remark1_instance(3, seed)
    assert (inst.n, inst.m) == (3, 5)
    assert exists_proportional(inst).verdict is Verdict.NO


@pytest.mark.parametrize("seed", range(50))
def test_remark2_family_has_no_fair_allocation(seed):
    inst = remark2_instance(4, seed)
    assert exists_proportional(inst).verdict is Verdict.NO
    assert exists_proportional_matching_case(inst).verdict is Verdict.NO


def test_remark1_larger_n():
    for seed in range(5):
        assert exists_proportional(remark1_instance(4, seed)).verdict is Verdict.NO


def test_agrees_with_naive_enumeration():
    rng = np.random.default_rng(2)
    verdicts = set()
    for _ in range(200):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(0, 10))
        inst = random_instance(rng, n, m)
        res = exists_proportional(inst)
        assert res.verdict in (Verdict.YES, Verdict.NO)
        assert (res.verdict is Verdict.YES) == naive_exists(inst)
        if res.verdict is Verdict.YES:
            assert is_proportional(inst, res.allocation)
        verdicts.add(res.verdict)
    assert verdicts == {Verdict.YES, Verdict.NO}


def test_matching_case_examples():
    res = exists_proportional_matching_case(Instance.from_rows([[1, 0], [0, 1]]))
    assert res.verdict is Verdict.YES and res.allocation.owner == (0, 1)
    res = exists_proportional_matching_case(Instance.from_rows([[0.6, 0.6], [0.6, 0.6]]))
    assert res.verdict is Verdict.YES
    assert exists_proportional_matching_case(
        Instance.from_rows([[1, 0, 0], [0, 1, 0]])
    ).verdict is Verdict.NOT_APPLICABLE
    assert exists_proportional_matching_case(
        Instance.from_rows([[0, 0], [0, 1]])
    ).verdict is Verdict.NOT_APPLICABLE


def test_matching_case_agrees_with_search():
    rng = np.random.default_rng(4)
    applicable = 0
    for _ in range(300):
        n = int(rng.integers(2, 6))
        inst = random_instance(rng, n, n)
        fast = exists_proportional_matching_case(inst)
        if fast.verdict is Verdict.NOT_APPLICABLE:
            continue
        applicable += 1
        assert fast.verdict == exists_proportional(inst).verdict
        if fast.verdict is Verdict.YES:
            assert is_proportional(inst, fast.allocation)
    assert applicable > 200


def test_remark2_guard():
    with pytest.raises(ValueError):
        remark2_instance(3, 0)
    with pytest.raises(ValueError):
        remark1_instance(2, 0)
    u = remark2_instance(4, 1).utilities
    assert u.shape == (4, 4)
    assert u[:, :2].max() <= 0.1 and u[:, 2:].min() >= 0.9
