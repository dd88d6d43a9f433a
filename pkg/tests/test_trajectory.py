import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillforge.errors import InvalidArgument, InvalidTrajectory
from skillforge.trajectory import (DemoSet, Trajectory, align, arc_length, resample,
                                   second_differences)


def test_construction_validates():
    with pytest.raises(InvalidTrajectory):
        Trajectory([[0.0], [1.0]], [0.0, 0.0])
    with pytest.raises(InvalidTrajectory):
        Trajectory([[0.0], [np.nan]], [0.0, 1.0])
    t = Trajectory.uniform([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        t.points[0, 0] = 5.0


def test_resample_midpoint():
    t = Trajectory.uniform([[0, 0], [1, 1]])
    r = resample(t, 3)
    np.testing.assert_array_equal(r.points, [[0, 0], [0.5, 0.5], [1, 1]])


def test_resample_identity_on_uniform():
    t = Trajectory.uniform(np.random.default_rng(0).normal(size=(17, 2)))
    assert resample(t, 17) == t


def test_resample_sine_accuracy():
    s = np.linspace(0, 1, 100)
    t = Trajectory(np.sin(2 * np.pi * s)[:, None], s)
    r = resample(t, 50)
    assert np.max(np.abs(r.points[:, 0] - np.sin(2 * np.pi * r.times))) < 0.002


def test_resample_rejects_small_n():
    with pytest.raises(InvalidArgument):
        resample(Trajectory.uniform([[0.0], [1.0]]), 1)


def test_arc_length_examples():
    assert arc_length(Trajectory.uniform([[0, 0], [1, 0], [1, 1]])) == 2.0
    assert arc_length(Trajectory.uniform([[3, 4], [3, 4]])) == 0.0
    th = np.linspace(0, 2 * np.pi, 1000)
    circle = Trajectory.uniform(np.c_[np.cos(th), np.sin(th)])
    assert abs(arc_length(circle) - 2 * np.pi) < 1e-4


def test_second_differences_examples():
    assert np.all(second_differences(Trajectory.uniform([[0, 0], [1, 1], [2, 2], [3, 3]])) == 0)
    np.testing.assert_array_equal(second_differences(Trajectory.uniform([[0, 0], [1, 0], [2, 1]])),
                                  [[0, 1]])
    t = np.arange(6.0)
    d2 = second_differences(Trajectory(np.c_[t, t ** 2], t))
    np.testing.assert_array_equal(d2, np.tile([0.0, 2.0], (4, 1)))
    with pytest.raises(InvalidArgument):
        second_differences(Trajectory.uniform([[0.0], [1.0]]))


def test_align_shapes_and_labels():
    a = Trajectory.uniform(np.random.default_rng(1).normal(size=(30, 2)))
    b = Trajectory.uniform(np.random.default_rng(2).normal(size=(70, 2)))
    out = align(DemoSet([a, b], ["success", "failure"]), 40)
    assert [len(d) for d in out.demos] == [40, 40]
    assert out.labels == ("success", "failure")
    c = Trajectory.uniform(np.random.default_rng(3).normal(size=(50, 2)))
    assert align(DemoSet([c]), 50).demos[0] == c
    with pytest.raises(InvalidArgument):
        align(DemoSet([]), 10)


curves = st.integers(3, 40).flatmap(
    lambda n: st.lists(st.floats(-10, 10), min_size=2 * n, max_size=2 * n)
    .map(lambda v: Trajectory.uniform(np.array(v).reshape(-1, 2))))


@settings(max_examples=60, deadline=None)
@given(curves, st.integers(2, 60))
def test_resample_idempotent_and_never_lengthens(traj, n):
    r = resample(traj, n)
    assert resample(r, n) == r
    assert arc_length(r) <= arc_length(traj) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5),
       st.integers(3, 30))
def test_affine_has_zero_second_differences(a, b, c, d, n):
    t = np.arange(float(n))
    traj = Trajectory(np.c_[a + b * t, c + d * t], t)
    assert np.allclose(second_differences(traj), 0.0, atol=1e-9 * (1 + abs(b) + abs(d)) * n)
