import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kic import bench
from kic.data import SnapshotSet, Trajectory, build_trio
from kic.errors import ClosureError, DimensionError, MissingInputError, ModelLoadError
from kic.estimators import FitOptions, KicMode, fit_dmd, fit_kic, fit_kic_lifted
from kic.models import (Diagnostics, KoopmanModel, ShapeKind, TimeMode, check_rebuildable, eigenfunction_eval,
                        load_model, model_from_dict, predict, reconstruct_residual, save_model,
                        spectral_predict)
from kic.observables import ObservableSpec


def square(G, n_gamma=0, **kw):
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    spec = ObservableSpec.identity(n - n_gamma, n_gamma)
    return KoopmanModel(G, spec, spec, n - n_gamma, n_gamma, **kw)


def example_one_decay_model():
    traj = bench.simulate_linear(bench.LinearExampleParams(), bench.InputPolicy.exp_decay(0.01, 1.0), steps=6)
    return fit_kic(build_trio(traj, True), KicMode.WITH_INPUT_DYNAMICS)


def test_model_validates_shapes():
    spec = ObservableSpec.identity(2)
    with pytest.raises(DimensionError):
        KoopmanModel(np.eye(3), spec, spec, 2, 0)
    with pytest.raises(DimensionError):
        KoopmanModel(np.eye(2), spec, spec, 1, 0)


def test_operator_is_read_only():
    with pytest.raises(ValueError):
        square(np.eye(2)).operator[0, 0] = 3.0


def test_eigenfunctions_of_diagonal_operator():
    model = square(np.diag([0.5, 0.2, 0.1]))
    phi = eigenfunction_eval(model, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(phi, [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_array_equal(eigenfunction_eval(model, np.zeros(3)), np.zeros(3))


def test_eigenfunction_length_checked():
    with pytest.raises(DimensionError):
        eigenfunction_eval(square(np.eye(2)), [1.0, 2.0, 3.0])


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 7))
def test_scaled_eigenfunctions_reconstruct_z(seed, n):
    r = np.random.default_rng(seed)
    model = square(r.standard_normal((n, n)))
    z = r.standard_normal(n)
    phi = eigenfunction_eval(model, z, scaled=True)
    recon = model.spectral.right_modes @ phi
    assert np.linalg.norm(recon - z) <= 1e-8 * max(np.linalg.norm(z), 1.0) * np.linalg.cond(
        model.spectral.right_modes)


def test_rectangular_eigenfunctions_use_right_singular_vectors():
    traj = bench.simulate_linear(policy=bench.InputPolicy.gaussian(0.01, 1), steps=6)
    spec_in = ObservableSpec.identity(2, 1)
    model = fit_kic_lifted(traj, spec_in, ObservableSpec.identity(2, 1, with_inputs=False))
    assert model.spectral.kind is ShapeKind.RECTANGULAR
    z = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(eigenfunction_eval(model, z), model.spectral.right_modes.conj().T @ z)
    with pytest.raises(DimensionError):
        spectral_predict(model, z, 3)


def test_identity_operator_predicts_constant():
    out = predict(square(np.eye(3)), [1.0, -2.0, 0.5], steps=3)
    np.testing.assert_array_equal(out, np.tile([[1.0], [-2.0], [0.5]], (1, 4)))


def test_zero_steps_returns_x0():
    np.testing.assert_array_equal(predict(square(np.eye(2)), [3.0, 4.0], steps=0), [[3.0], [4.0]])


def test_square_model_evolves_inputs_itself():
    model = example_one_decay_model()
    truth = bench.simulate_linear(bench.LinearExampleParams(), bench.InputPolicy.exp_decay(0.01, 1.0), steps=10)
    out = predict(model, [5.0, 2.0, 1.0], steps=10)
    expected = np.vstack([truth.states, truth.inputs])
    assert np.linalg.norm(out - expected) <= 1e-6 * np.linalg.norm(expected)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_spectral_expansion_agrees_with_stepping(seed, n):
    r = np.random.default_rng(seed)
    G = r.standard_normal((n, n))
    G /= 1.1 * max(np.max(np.abs(np.linalg.eigvals(G))), 1e-12)
    model = square(G)
    z0 = r.standard_normal(n)
    direct = predict(model, z0, steps=20)
    assert np.linalg.norm(spectral_predict(model, z0, 20) - direct) <= 1e-8 * np.linalg.norm(direct)


def test_continuous_spectral_expansion_uses_euler_multipliers():
    model = square(np.diag([-1.0, 0.5]), time_mode=TimeMode.CONTINUOUS, dt=0.1)
    np.testing.assert_allclose(spectral_predict(model, [1.0, 1.0], 2)[:, -1], [0.9**2, 1.05**2])
    np.testing.assert_allclose(predict(model, [1.0, 1.0], steps=2)[:, -1], [0.9**2, 1.05**2])


def test_sir_holdout_prediction():
    traj = bench.simulate_sir(steps=400)
    train = Trajectory(traj.states[:, :201], traj.inputs[:, :201], dt=traj.dt)
    spec_in, spec_out = bench.sir_specs()
    model = fit_kic_lifted(train, spec_in, spec_out)
    out = predict(model, traj.states[:, 200], traj.inputs[:, 200:400], 200)
    actual = traj.states[:, 200:]
    assert np.linalg.norm(out - actual) / np.linalg.norm(actual) <= 1e-4


def test_sir_model_rebuilds_si_from_outputs():
    spec_in, spec_out = bench.sir_specs()
    model = KoopmanModel(bench.sir_operator(), spec_in, spec_out, 3, 2)
    traj = bench.simulate_sir(steps=20)
    out = predict(model, traj.states[:, 0], traj.inputs, 20)
    np.testing.assert_allclose(out, traj.states, rtol=0, atol=1e-14)


def test_closure_error_when_outputs_miss_a_state():
    spec_in = ObservableSpec.parse("x1,x2", 2)
    model = KoopmanModel(np.ones((1, 2)), spec_in, ObservableSpec.parse("x1", 2), 1, 1)
    with pytest.raises(ClosureError, match="x2"):
        predict(model, [1.0], steps=1)


def test_missing_inputs_detected():
    spec_in, spec_out = bench.sir_specs()
    model = KoopmanModel(bench.sir_operator(), spec_in, spec_out, 3, 2)
    check_rebuildable(model, have_inputs=True)
    with pytest.raises(MissingInputError):
        predict(model, [0.99, 0.01, 0.0], steps=1)


def test_predict_checks_dimensions():
    model = square(np.eye(2))
    with pytest.raises(DimensionError):
        predict(model, [1.0], steps=1)
    spec_in, spec_out = bench.sir_specs()
    sir = KoopmanModel(bench.sir_operator(), spec_in, spec_out, 3, 2)
    with pytest.raises(DimensionError):
        predict(sir, [0.99, 0.01, 0.0], np.zeros((1, 2)), steps=5)


def test_residuals_exact_linear_data(rng):
    G = rng.standard_normal((3, 3))
    Y = rng.standard_normal((3, 10))
    model = square(G)
    assert np.max(reconstruct_residual(model, SnapshotSet(Y, G @ Y))) <= 1e-10


def test_residuals_zero_targets():
    model = square(np.zeros((2, 2)))
    np.testing.assert_array_equal(reconstruct_residual(model, SnapshotSet(np.ones((2, 3)), np.zeros((2, 3)))),
                                  [0.0, 0.0])


def test_spectral_radius():
    assert square(np.diag([0.5, -2.0])).spectral_radius == pytest.approx(2.0)
    assert example_one_decay_model().spectral_radius == pytest.approx(1.5, abs=1e-10)


def test_json_round_trip(tmp_path):
    model = example_one_decay_model()
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.operator, model.operator)
    assert back.to_dict() == model.to_dict()
    assert back.diagnostics == model.diagnostics


def test_json_rejects_unknown_field(tmp_path):
    d = square(np.eye(2)).to_dict()
    d["comment"] = "x"
    d["flavour"] = 1
    with pytest.raises(ModelLoadError, match="comment, flavour"):
        model_from_dict(d)


FIXTURE_V1 = {
    "schema_version": 1,
    "shape_kind": "rectangular",
    "operator": [[0.1, 0.0, 0.0], [0.0, 1.5, 1.0]],
    "dims": {"p": 2, "q": 3, "n_y": 2, "n_gamma": 1},
    "input_spec": {"n_x": 2, "n_u": 1, "terms": [
        {"kind": "state_identity", "state_powers": [1, 0], "input_powers": [0], "label": "x1"},
        {"kind": "state_identity", "state_powers": [0, 1], "input_powers": [0], "label": "x2"},
        {"kind": "input_identity", "state_powers": [0, 0], "input_powers": [1], "label": "u1"},
    ]},
    "output_spec": {"n_x": 2, "n_u": 1, "terms": [
        {"kind": "state_identity", "state_powers": [1, 0], "input_powers": [0], "label": "x1"},
        {"kind": "state_identity", "state_powers": [0, 1], "input_powers": [0], "label": "x2"},
    ]},
    "time_mode": "discrete",
    "dt": 1.0,
}


def test_json_fixture_without_optional_sections(tmp_path):
    path = tmp_path / "v1.json"
    path.write_text(json.dumps(FIXTURE_V1))
    model = load_model(path)
    assert model.diagnostics == Diagnostics()
    assert model.spectral.kind is ShapeKind.RECTANGULAR
    out = predict(model, [5.0, 2.0], [[1.0, 0.0]], 2)
    np.testing.assert_allclose(out, [[5.0, 0.5, 0.05], [2.0, 4.0, 6.0]])


@pytest.mark.parametrize("mutate, match", [
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d.pop("dt"), "dt"),
    (lambda d: d.update(shape_kind="square"), "shape_kind"),
    (lambda d: d["dims"].update(p=3), "shape"),
])
def test_json_schema_violations(mutate, match):
    d = json.loads(json.dumps(FIXTURE_V1))
    mutate(d)
    with pytest.raises(ModelLoadError, match=match):
        model_from_dict(d)


def test_json_invalid_text(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ModelLoadError):
        load_model(path)


def test_dmd_model_blocks_need_square():
    model = model_from_dict(FIXTURE_V1)
    with pytest.raises(DimensionError):
        model.blocks()
    np.testing.assert_array_equal(model.A, [[0.1, 0.0], [0.0, 1.5]])
    np.testing.assert_array_equal(model.B, [[0.0], [1.0]])
