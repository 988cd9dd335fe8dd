from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tnnsim.plasticity import (PlasticityParams, Reward, StdpCase, apply_deltas, classify_case, classify_cases,
                               compute_reward, rstdp_delta, stabilization_prob, stdp_delta, weight_deltas)
from tnnsim.temporal import ABSENT, LfsrBank, RandomSource

TIMES = list(range(8)) + [ABSENT]
ONES = PlasticityParams(1.0, 1.0, 1.0, 1.0)


def test_classify_exhaustive():
    for x, z in product(TIMES, TIMES):
        case = classify_case(x, z)
        if x != ABSENT and z != ABSENT:
            assert case is (StdpCase.CAPTURE if x <= z else StdpCase.BACKOFF)
        elif x != ABSENT:
            assert case is StdpCase.SEARCH
        elif z != ABSENT:
            assert case is StdpCase.ABSENT_INPUT
        else:
            assert case is StdpCase.IDLE


def test_classify_array_matches_scalar():
    x = np.array(TIMES)
    cases = classify_cases(x, x)
    for i, j in product(range(9), range(9)):
        assert cases[i, j] == classify_case(TIMES[i], TIMES[j])


def test_stabilization_values():
    assert stabilization_prob(0) == 0 and stabilization_prob(7) == 0
    assert stabilization_prob(4) == pytest.approx(12 / 49)
    assert stabilization_prob(1) == pytest.approx(6 / 49)


def test_reward_bits():
    assert {r.name: r.bits for r in Reward} == {"PLUS": "01", "MINUS": "11", "ZERO": "00", "UNSUPERVISED": "10"}


def test_regime_table_with_all_gates_on():
    expected = {
        Reward.UNSUPERVISED: {StdpCase.CAPTURE: 1, StdpCase.BACKOFF: -1, StdpCase.SEARCH: 1,
                              StdpCase.ABSENT_INPUT: -1, StdpCase.IDLE: 0},
        Reward.PLUS: {StdpCase.CAPTURE: 1, StdpCase.BACKOFF: -1, StdpCase.SEARCH: 0,
                      StdpCase.ABSENT_INPUT: -1, StdpCase.IDLE: 0},
        Reward.MINUS: {StdpCase.CAPTURE: -1, StdpCase.BACKOFF: 0, StdpCase.SEARCH: 1,
                       StdpCase.ABSENT_INPUT: 0, StdpCase.IDLE: 0},
        Reward.ZERO: {StdpCase.CAPTURE: 0, StdpCase.BACKOFF: 0, StdpCase.SEARCH: 1,
                      StdpCase.ABSENT_INPUT: 0, StdpCase.IDLE: 0},
    }
    rng = RandomSource.seeded(9)
    for reward, row in expected.items():
        for case, delta in row.items():
            got, rng = rstdp_delta(case, 3, reward, ONES, rng)
            assert got == delta, (reward, case)


def test_unsupervised_equals_stdp():
    params = PlasticityParams(0.5, 0.5, 0.5, 0.5)
    a = b = RandomSource.seeded(321)
    for k in range(300):
        case = StdpCase(k % 5 + 1)
        da, a = stdp_delta(case, k % 8, params, a)
        db, b = rstdp_delta(case, k % 8, Reward.UNSUPERVISED, params, b)
        assert da == db


def test_zero_probabilities_freeze():
    rng = RandomSource.seeded(5)
    for case in StdpCase:
        d, rng = stdp_delta(case, 4, PlasticityParams.frozen(), rng)
        assert d == 0


def test_compute_reward():
    assert compute_reward(3, 3) is Reward.PLUS
    assert compute_reward(2, 3) is Reward.MINUS
    assert compute_reward(None, 3) is Reward.ZERO
    assert compute_reward(0, 7, mapping={7: 0}) is Reward.PLUS
    with pytest.raises(ValueError):
        compute_reward(0, 10, q=10)
    with pytest.raises(ValueError):
        compute_reward(0, 5, mapping={7: 0})


@pytest.mark.parametrize("reward", list(Reward))
def test_vectorised_matches_scalar(reward):
    params = PlasticityParams(0.6, 0.5, 0.3, 0.2)
    rng = np.random.default_rng(7)
    p, q = 6, 4
    bank = LfsrBank(rng.integers(1, 1 << 16, size=(p, q), dtype=np.uint64), width=16)
    scalars = [[RandomSource.seeded(int(s)) for s in row] for row in bank.snapshot()]
    for _ in range(30):
        weights = rng.integers(0, 8, (p, q)).astype(np.int16)
        cases = rng.integers(1, 6, (p, q)).astype(np.int8)
        deltas = weight_deltas(weights, cases, reward, params, bank)
        for i, j in product(range(p), range(q)):
            d, scalars[i][j] = rstdp_delta(StdpCase(int(cases[i, j])), int(weights[i, j]), reward, params,
                                           scalars[i][j])
            assert d == deltas[i, j]


def test_shared_bank_broadcasts():
    bank = LfsrBank.from_seed(1, (1, 1), width=32)
    weights = np.full((3, 2), 4, dtype=np.int16)
    cases = np.full((3, 2), int(StdpCase.SEARCH), dtype=np.int8)
    d = weight_deltas(weights, cases, Reward.UNSUPERVISED, ONES, bank)
    assert d.shape == (3, 2) and np.all(d == 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=20), st.lists(st.integers(-1, 1), min_size=20, max_size=20))
def test_apply_deltas_saturates(ws, ds):
    w = np.array(ws, dtype=np.int16)
    d = np.array(ds[:len(ws)], dtype=np.int8)
    out = apply_deltas(w, d)
    assert out.min() >= 0 and out.max() <= 7
    assert np.all(np.abs(out - w) <= 1)
