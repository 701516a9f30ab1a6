import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zacf import (
    ChannelMismatch,
    DegenerateEyes,
    EmptyScores,
    MultiChannelSignal,
    ScoreSet,
    ZeroPlane,
    apply_filter,
    eer,
    localization_check,
    make_problem,
    mine_and_retrain,
    normalized_eye_distance,
    pce,
    psr,
    rank1,
    solve_zamace,
)


def test_eer_hand_enumeration():
    # one impostor (0.65) above one genuine (0.6): FAR = FRR = 1/4 at t = 0.65
    scores = ScoreSet(genuine=[0.6, 0.7, 0.8, 0.9], impostor=[0.1, 0.2, 0.3, 0.65])
    assert eer(scores) == pytest.approx(0.25)


def test_eer_separable_and_inverted():
    assert eer(ScoreSet([2.0, 3.0], [0.0, 1.0])) == 0.0
    assert eer(ScoreSet([0.0, 1.0], [2.0, 3.0])) == pytest.approx(1.0)
    with pytest.raises(EmptyScores):
        eer(ScoreSet([1.0], []))


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=20), st.lists(st.integers(-50, 50), min_size=1, max_size=20))
def test_eer_in_unit_interval_and_shift_invariant(g, i):
    e = eer(ScoreSet(g, i))
    assert 0.0 <= e <= 1.0
    assert eer(ScoreSet([v + 10 for v in g], [v + 10 for v in i])) == pytest.approx(e)


def test_score_set_add_and_merge():
    s = ScoreSet()
    s.add(1.0, True, probe=0)
    s.add(0.5, False, probe=0)
    merged = s.merge(ScoreSet([2.0], [0.1]))
    assert merged.genuine == [1.0, 2.0] and merged.impostor == [0.5, 0.1]
    assert s.metadata[0] == {"probe": 0, "genuine": True, "score": 1.0}


def test_rank1():
    scores = np.array([[3.0, 1.0], [0.5, 2.0], [1.0, 4.0]])
    assert rank1(scores, [0, 1, 0]) == pytest.approx(2 / 3)
    with pytest.raises(EmptyScores):
        rank1(np.zeros((0, 2)), [])


def test_pce_and_psr_by_hand():
    plane = np.ones((9, 9))
    plane[4, 4] = 3.0
    assert pce(plane) == pytest.approx(9.0)
    spike = np.zeros((9, 9))
    spike[0, 0] = 1.0
    assert pce(spike) == pytest.approx(1e30)
    rng = np.random.default_rng(0)
    noisy = rng.normal(size=(9, 9))
    noisy[4, 4] = 10.0
    mask = np.ones((9, 9), bool)
    mask[2:7, 2:7] = False
    assert psr(noisy) == pytest.approx((10 - noisy[mask].mean()) / noisy[mask].std())
    with pytest.raises(ZeroPlane):
        pce(np.zeros((3, 3)))


def test_localization_and_eye_distance():
    assert localization_check((3, 4), (5, 2), (2, 2))
    assert not localization_check((3, 4), (6, 4), (2, 2))
    assert normalized_eye_distance((0, 0), (3, 4), (0, 0), (0, 10)) == pytest.approx(0.5)
    with pytest.raises(DegenerateEyes):
        normalized_eye_distance((0, 0), (1, 1), (2, 2), (2, 2))


def chip_problem(rng):
    chip = MultiChannelSignal(rng.random((1, 4, 5)) + 0.5)
    other = MultiChannelSignal(rng.random((1, 4, 5)))
    return chip, make_problem([chip, other], [1, -1], pad=3)


def test_apply_filter_locates_target():
    rng = np.random.default_rng(1)
    chip, problem = chip_problem(rng)
    template = solve_zamace(problem)
    scene = 0.01 * rng.normal(size=(1, 16, 20))
    scene[:, 7:11, 12:17] += chip.data
    plane = apply_filter(MultiChannelSignal(scene), template)
    assert plane.peak_lag == (7, 12)
    assert plane.peak_value == pytest.approx(1.0, abs=0.1)
    assert plane.score > 1.0
    assert apply_filter(MultiChannelSignal(np.zeros((1, 8, 8))), template).score == 0.0
    with pytest.raises(ChannelMismatch):
        apply_filter(MultiChannelSignal(np.zeros((2, 8, 8))), template)


def test_mining_adds_the_planted_distractor():
    rng = np.random.default_rng(2)
    chip, problem = chip_problem(rng)
    template = solve_zamace(problem)
    frame = np.zeros((1, 15, 18))
    frame[:, 5:9, 9:14] = chip.data
    grown = mine_and_retrain(problem, [MultiChannelSignal(frame)], 0.5, template=template, max_per_frame=1)
    assert grown.count == problem.count + 1
    assert grown.labels[-1] == -1 and grown.peaks[-1] == 0.0
    assert np.array_equal(grown.training[-1].data, chip.data)


def test_mining_respects_threshold_and_exclusions():
    rng = np.random.default_rng(3)
    chip, problem = chip_problem(rng)
    template = solve_zamace(problem)
    frame = np.zeros((1, 15, 18))
    frame[:, 5:9, 9:14] = chip.data
    frames = [MultiChannelSignal(frame)]
    assert mine_and_retrain(problem, frames, 10.0, template=template) is problem
    excluded = mine_and_retrain(problem, frames, 0.5, template=template, exclusions=[[(4, 8, 7, 11)]], max_per_frame=1)
    assert excluded.count == problem.count
