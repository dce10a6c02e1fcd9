import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddforge import (BlochState, Line, Lorentzian, ProcessMatrix, SimulationConfig,
                     TOMOGRAPHY_STATES, build_cpmg, compute_overlaps, fit_process,
                     monte_carlo, noiseless_rotation, predict_process, rho_y_variance,
                     sphere_samples, with_pulse_duration)
from conftest import ctrl_spectrum, env_spectrum


def _forward(proc):
    return [(s, BlochState.from_vector(proc.apply(s.vector))) for s in TOMOGRAPHY_STATES]


def test_zero_spectra_predict_identity():
    proc = predict_process(build_cpmg(4, 67.0, 40))
    np.testing.assert_array_equal(proc.linear, np.eye(3))
    np.testing.assert_array_equal(proc.offset, 0)


def test_ctrl_only_structure(line50):
    seq = build_cpmg(4, 67.0, 40)
    proc = predict_process(seq, None, line50)
    lam = 1 - compute_overlaps(seq, None, line50).ctrl / 2
    np.testing.assert_allclose(proc.linear, np.diag([1, lam, lam]), rtol=0, atol=0)


def test_env_only_structure():
    seq = build_cpmg(4, 67.0, 40)
    env = env_spectrum(Lorentzian(20.0, 1e-2))
    proc = predict_process(seq, env)
    lx, ly, lz = np.diag(proc.linear)
    assert lx == ly < lz == 1
    assert np.count_nonzero(proc.linear - np.diag(np.diag(proc.linear))) == 0


def test_identity_outputs_give_identity():
    proc = fit_process([(s, s) for s in TOMOGRAPHY_STATES])
    np.testing.assert_allclose(proc.linear, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(proc.offset, 0, atol=1e-15)


def test_diagonal_round_trip():
    true = ProcessMatrix(np.diag([0.9, 0.8, 0.95]))
    fit = fit_process(_forward(true))
    np.testing.assert_allclose(fit.linear, true.linear, atol=1e-15)
    np.testing.assert_allclose(fit.offset, 0, atol=1e-15)


def test_predicted_round_trip(line50):
    env = env_spectrum(Lorentzian(20.0, 1e-2))
    true = predict_process(build_cpmg(4, 67.0, 40), env, line50)
    fit = fit_process(_forward(true))
    np.testing.assert_allclose(fit.linear, true.linear, atol=1e-15)


_entry = st.floats(-1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(lin=st.lists(_entry, min_size=9, max_size=9), off=st.lists(_entry, min_size=3, max_size=3))
def test_general_affine_round_trip(lin, off):
    true = ProcessMatrix(np.reshape(lin, (3, 3)), np.array(off))
    fit = fit_process(_forward(true))
    np.testing.assert_allclose(fit.linear, true.linear, atol=1e-14)
    np.testing.assert_allclose(fit.offset, true.offset, atol=1e-14)


def test_closed_form_for_protocol_states():
    rng = np.random.default_rng(5)
    true = ProcessMatrix(rng.uniform(-1, 1, (3, 3)), rng.uniform(-1, 1, 3))
    pairs = _forward(true)
    v = {k: p[1].vector for k, p in zip(("+z", "-z", "x", "y"), pairs)}
    o = (v["+z"] + v["-z"]) / 2
    fit = fit_process(pairs)
    np.testing.assert_allclose(fit.offset, o, atol=1e-15)
    np.testing.assert_allclose(fit.linear[:, 2], (v["+z"] - v["-z"]) / 2, atol=1e-15)
    np.testing.assert_allclose(fit.linear[:, 0], v["x"] - o, atol=1e-15)
    np.testing.assert_allclose(fit.linear[:, 1], v["y"] - o, atol=1e-15)


def test_degenerate_inputs_raise():
    s = BlochState(0, 0, 1)
    with pytest.raises(ValueError):
        fit_process([(s, s)] * 4)
    with pytest.raises(ValueError):
        fit_process([(t, t) for t in TOMOGRAPHY_STATES[:3]])
    coplanar = [BlochState(1, 0, 0), BlochState(-1, 0, 0), BlochState(0, 1, 0),
                BlochState(0, -1, 0)]
    with pytest.raises(ValueError):
        fit_process([(t, t) for t in coplanar])


def test_bad_shapes_raise():
    with pytest.raises(ValueError):
        ProcessMatrix(np.eye(2))
    with pytest.raises(ValueError):
        ProcessMatrix(np.eye(3), np.zeros(2))


def test_predicted_processes_are_contractive(line50):
    env = env_spectrum(Lorentzian(20.0, 1e-2))
    for n in (0, 2, 4, 8):
        for rate in (30.0, 50.0, 67.0, 120.0):
            proc = predict_process(build_cpmg(n, rate, 40), env, line50)
            assert proc.is_contractive()
    assert not ProcessMatrix(np.diag([1.01, 1, 1])).is_contractive()
    assert ProcessMatrix.identity().is_contractive()


def test_identity_maps_sphere_to_sphere():
    u, v = sphere_samples(ProcessMatrix.identity(), 12)
    assert u.shape == v.shape == (12 * 24, 3)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1, atol=1e-15)
    np.testing.assert_array_equal(u, v)


def test_y_collapse_gives_disk():
    u, v = sphere_samples(ProcessMatrix(np.diag([1.0, 0.0, 1.0])), 16)
    np.testing.assert_array_equal(v[:, 1], 0)
    assert np.max(np.hypot(v[:, 0], v[:, 2])) == pytest.approx(1.0)


def test_resolution_check():
    with pytest.raises(ValueError):
        sphere_samples(ProcessMatrix.identity(), 1)


def test_line_at_67hz_shortens_y_and_z(line50):
    proc = predict_process(build_cpmg(4, 67.0, 40), None, line50)
    u, v = sphere_samples(proc, 20)
    ext = np.max(np.abs(v), axis=0) / np.max(np.abs(u), axis=0)
    assert ext[0] == 1.0
    assert ext[1] < 1 and ext[2] < 1
    assert ext[1] == pytest.approx(ext[2])


def test_fit_of_simulated_outputs_matches_prediction():
    seq = build_cpmg(4, 67.0, 40)
    unit = ctrl_spectrum(Line(50.0, 1.0))
    ctrl = ctrl_spectrum(Line(50.0, 0.02 / rho_y_variance(with_pulse_duration(seq, 1e-3), unit)))
    cfg = SimulationConfig(dt=5e-5, realizations=2000, seed=11)
    sim_seq = with_pulse_duration(seq, cfg.pulse_duration)
    rot = noiseless_rotation(sim_seq, cfg.dt)
    pairs, errs = [], []
    for s in TOMOGRAPHY_STATES:
        res = monte_carlo(sim_seq, None, ctrl, s, cfg)
        # undo the noiseless rotation so the fit sees the noise channel only
        pairs.append((s, BlochState.from_vector(rot.T @ res.mean_bloch.vector)))
        errs.append(res.stderr)
    fit = fit_process(pairs)
    pred = predict_process(sim_seq, None, ctrl)
    # worst entry is v_x - (v_+z + v_-z) / 2, stderr sqrt(1 + 1/2) times one output's
    sigma = np.sqrt(1.5) * max(np.max(e) for e in errs)
    dev = np.abs(fit.linear - pred.linear)
    allowed = np.maximum(0.1 * np.abs(np.eye(3) - pred.linear), 3 * sigma)
    assert np.all(dev <= allowed)
