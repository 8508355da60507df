import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from kic.data import (SnapshotSet, Trajectory, build_derivative_pair, build_pair, build_trio, dumps_csv,
                      load_csv, loads_csv, save_csv)
from kic.errors import DimensionError, InsufficientDataError, MissingInputError, ParseError
from kic.estimators import fit_dmd


def test_trajectory_is_read_only():
    traj = Trajectory([[1.0, 2.0]], [[0.0, 1.0]])
    with pytest.raises(ValueError):
        traj.states[0, 0] = 5.0
    assert (traj.n_x, traj.n_u, traj.n_samples) == (1, 1, 2)


def test_trajectory_rejects_mismatched_inputs():
    with pytest.raises(DimensionError):
        Trajectory([[1.0, 2.0, 3.0]], [[0.0, 1.0]])


def test_trajectory_rejects_bad_dt():
    with pytest.raises(ValueError):
        Trajectory([[1.0, 2.0]], dt=0.0)


def test_snapshot_set_shapes_checked():
    with pytest.raises(DimensionError):
        SnapshotSet(np.ones((2, 3)), np.ones((2, 4)))
    with pytest.raises(DimensionError):
        SnapshotSet(np.ones((2, 3)), np.ones((2, 3)), np.ones((1, 2)))


def test_build_pair_shift():
    ss = build_pair(Trajectory([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(ss.Y, [[1.0, 2.0]])
    np.testing.assert_array_equal(ss.Z, [[2.0, 3.0]])
    assert ss.Upsilon is None and ss.n_gamma == 0


def test_build_pair_concatenates_without_straddling():
    a = Trajectory([[1.0, 2.0, 3.0, 4.0]])
    b = Trajectory([[10.0, 20.0, 30.0]])
    ss = build_pair([a, b])
    assert ss.m == 3 + 2
    pairs = set(zip(ss.Y[0], ss.Z[0]))
    assert pairs == {(1, 2), (2, 3), (3, 4), (10, 20), (20, 30)}


def test_build_pair_needs_two_samples():
    with pytest.raises(InsufficientDataError):
        build_pair(Trajectory([[1.0]]))


def test_build_pair_rejects_mixed_dimensions():
    with pytest.raises(DimensionError):
        build_pair([Trajectory([[1.0, 2.0]]), Trajectory([[1.0, 2.0], [3.0, 4.0]])])


def test_build_trio():
    traj = Trajectory([[1.0, 2.0]], [[7.0, 9.0]])
    ss = build_trio(traj, include_future_input=False)
    np.testing.assert_array_equal(ss.Y, [[1.0]])
    np.testing.assert_array_equal(ss.Z, [[2.0]])
    np.testing.assert_array_equal(ss.Upsilon, [[7.0]])
    assert ss.Xi is None
    np.testing.assert_array_equal(build_trio(traj, include_future_input=True).Xi, [[9.0]])


def test_build_trio_needs_inputs():
    with pytest.raises(MissingInputError):
        build_trio(Trajectory([[1.0, 2.0]]), include_future_input=False)


def test_build_derivative_pair():
    ss = build_derivative_pair(Trajectory([[1.0]]), [[2.0]])
    np.testing.assert_array_equal(ss.Y, [[1.0]])
    np.testing.assert_array_equal(ss.Z, [[2.0]])


def test_constant_trajectory_zero_derivatives_gives_zero_operator():
    traj = Trajectory(np.full((2, 5), 3.0))
    model = fit_dmd(build_derivative_pair(traj, np.zeros((2, 5))))
    np.testing.assert_array_equal(model.operator, np.zeros((2, 2)))


def test_csv_round_trip_is_bitwise(tmp_path, rng):
    traj = Trajectory(rng.standard_normal((3, 10)), rng.standard_normal((1, 10)), dt=0.01)
    path = tmp_path / "traj.csv"
    save_csv(traj, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.states, traj.states)
    np.testing.assert_array_equal(back.inputs, traj.inputs)
    assert back.dt == pytest.approx(0.01, rel=1e-12)
    assert back.id == "traj"


def test_csv_uses_lf_and_header(tmp_path):
    path = tmp_path / "t.csv"
    save_csv(Trajectory([[1.0, 2.0]], [[0.5, 0.25]], dt=0.5), path)
    assert path.read_bytes() == b"t,x1,u1\n0,1,0.5\n0.5,2,0.25\n"


def test_csv_handmade_file():
    text = "t,x1,x2,u1\n0,1,2,0\n0.1,1.1,2.1,0.5\n0.2,1.2,2.2,0.5\n0.3,1.3,2.3,0.5\n"
    traj = loads_csv(text)
    assert (traj.n_x, traj.n_u, traj.n_samples) == (2, 1, 4)
    assert traj.dt == pytest.approx(0.1)
    np.testing.assert_array_equal(traj.inputs, [[0.0, 0.5, 0.5, 0.5]])


def test_csv_without_inputs_is_autonomous():
    assert loads_csv("t,x1\n0,1\n1,2\n").inputs is None


@pytest.mark.parametrize("text, line", [
    ("t,x1,x2\n0,1,2\n1,3\n", 3),
    ("t,x1\n0,1\n1,abc\n", 3),
    ("t,x1\n0,1\n1,2\n2.5,3\n", 4),
    ("x1,t\n1,0\n", 1),
    ("t,u1,x1\n0,1,2\n", 1),
])
def test_csv_errors_name_the_line(text, line):
    with pytest.raises(ParseError, match=f"^line {line}:"):
        loads_csv(text)


def test_csv_crlf_accepted():
    traj = loads_csv("t,x1\r\n0,1\r\n1,2\r\n")
    np.testing.assert_array_equal(traj.states, [[1.0, 2.0]])


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(states=hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite),
       dt=st.floats(1e-4, 10.0))
def test_csv_round_trip_property(states, dt):
    traj = Trajectory(states, dt=dt)
    back = loads_csv(dumps_csv(traj))
    np.testing.assert_array_equal(back.states, traj.states)
