import numpy as np
import pytest

from tnnsim.column import (Column, ColumnConfig, Layer, LayerSpec, LearningMode, Network,
                           clamp_for_next_layer, wta_inhibit, winner_of)
from tnnsim.experiments import check_equivalence
from tnnsim.plasticity import PlasticityParams, Reward
from tnnsim.temporal import ABSENT

FROZEN = PlasticityParams.frozen()


def test_wta_examples():
    assert wta_inhibit([3, 1, 1, ABSENT]).tolist() == [ABSENT, 1, ABSENT, ABSENT]
    assert wta_inhibit([ABSENT] * 3).tolist() == [ABSENT] * 3
    assert winner_of([ABSENT, 5]) == 1 and winner_of([ABSENT]) is None


@pytest.mark.parametrize("engine", ["cycle", "functional"])
def test_tie_goes_to_lowest_index(engine):
    w = np.array([[3, 3], [0, 0], [7, 7], [2, 2]])
    col = Column(ColumnConfig(p=4, q=2, theta=5, params=FROZEN), w)
    res = col.step([0, 2, 1, ABSENT], engine=engine, learn=False)
    assert res.fire_times.tolist() == [2, 2]
    assert res.winner == 0 and res.output.tolist() == [2, ABSENT]


def test_rstdp_requires_label():
    col = Column(ColumnConfig(p=4, q=2, theta=5, mode=LearningMode.RSTDP))
    with pytest.raises(ValueError):
        col.step([0, 1, 2, 3])
    res = col.step([0, 1, 2, 3], label=1)
    assert res.reward in (Reward.PLUS, Reward.MINUS, Reward.ZERO)


def test_bad_volleys_rejected():
    col = Column(ColumnConfig(p=3, q=1, theta=2))
    with pytest.raises(ValueError):
        col.step([0, 1])
    with pytest.raises(ValueError):
        col.step(np.array([0, 9, 1]))
    with pytest.raises(ValueError):
        col.step([0, 1, 2], engine="analog")


def test_frozen_params_keep_weights():
    col = Column(ColumnConfig(p=8, q=3, theta=6, params=FROZEN, seed=4))
    before = col.weights.copy()
    rng = np.random.default_rng(0)
    for _ in range(30):
        res = col.step(rng.integers(0, 8, 8))
        assert res.mean_abs_dw == 0
    assert np.array_equal(before, col.weights)


def test_learning_changes_weights():
    col = Column(ColumnConfig(p=8, q=3, theta=6, params=PlasticityParams(1, 1, 1, 1), init_weights=3))
    res = col.step(list(range(8)))
    assert res.mean_abs_dw > 0 and not np.array_equal(col.weights, np.full((8, 3), 3))


def test_initial_weights():
    assert np.all(Column(ColumnConfig(p=2, q=2, theta=1, init_weights=5)).weights == 5)
    a = Column(ColumnConfig(p=5, q=3, theta=1, seed=9)).weights
    b = Column(ColumnConfig(p=5, q=3, theta=1, seed=9)).weights
    assert np.array_equal(a, b) and a.min() >= 0 and a.max() <= 7


def test_equivalence_trivial_absent_volley():
    rep = check_equivalence(4, 2, 1, volleys=[[ABSENT] * 4])
    assert rep.passed and rep.trials == 1


def test_equivalence_detects_perturbed_engine():
    def perturb(col):
        col._functional_forward = lambda x: (np.zeros(col.config.q, dtype=np.int16),) * 2 + (0,)

    rep = check_equivalence(16, 4, 50, perturb=perturb)
    assert not rep.passed and rep.first_divergence == 0 and rep.detail


def test_equivalence_shared_stream_small():
    assert check_equivalence(8, 3, 200, seed=11).passed


def test_clamp_for_next_layer():
    assert clamp_for_next_layer([3, 9, ABSENT, 7]).tolist() == [3, ABSENT, ABSENT, 7]


def _passthrough_layer(n):
    cfg = ColumnConfig(p=n, q=n, theta=1, params=FROZEN)
    return Layer(LayerSpec([cfg], [list(range(n))]), [np.diag([7] * n)])


def test_two_layer_cascade_passes_winner_through():
    first_cfg = ColumnConfig(p=4, q=3, theta=5, params=FROZEN)
    w1 = np.array([[3, 0, 1], [0, 0, 1], [7, 1, 1], [2, 0, 1]])
    first = Layer(LayerSpec([first_cfg], [[0, 1, 2, 3]]), [w1])
    net = Network([first, _passthrough_layer(3)])
    volley = np.array([0, 2, 1, ABSENT])
    hidden, _ = first.step(volley, learn=False)
    out, results = net.step(volley, learn=False)
    assert hidden.tolist() == [2, ABSENT, ABSENT]
    assert out.tolist() == hidden.tolist()
    assert len(results) == 2


def test_layer_concatenates_columns_and_checks_wiring():
    cfg = ColumnConfig(p=2, q=1, theta=1, params=FROZEN)
    layer = Layer(LayerSpec([cfg, cfg], [[0, 1], [2, 3]]), [np.array([[7], [7]])] * 2)
    out, _ = layer.step([1, 2, ABSENT, 4], learn=False)
    assert out.tolist() == [1, 4] and layer.width == 2
    bad = Layer(LayerSpec([cfg], [[0, 5]]))
    with pytest.raises(IndexError):
        bad.step([0, 1], learn=False)
    with pytest.raises(ValueError):
        LayerSpec([cfg], [[0]])
