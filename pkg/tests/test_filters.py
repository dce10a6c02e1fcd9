import numpy as np
import pytest
from dataclasses import replace
from scipy.signal import argrelmax

from ddforge import (FilterKind, FilterSamples, Pulse, PulseSequence, build_cpmg,
                     filter_control, filter_dephasing, filter_grid, filter_norm, filter_value,
                     free_evolution, predicted_peaks, spin_echo)
from reference import (control_by_quadrature, control_ideal_by_sum,
                       dephasing_by_quadrature)

D, C = FilterKind.DEPHASING, FilterKind.CONTROL


def test_free_evolution_dc():
    assert filter_dephasing(free_evolution(1.0), 0.0) == pytest.approx(1.0, rel=1e-14)


def test_echo_dc_is_zero():
    assert filter_dephasing(spin_echo(0.02), 0.0) == pytest.approx(0.0, abs=1e-20)


def test_cpmg4_25hz_against_quadrature():
    seq = build_cpmg(4, 50.0, 40)
    ref = dephasing_by_quadrature(seq, 25.0)[0]
    assert filter_dephasing(seq, 25.0) == pytest.approx(ref, rel=1e-9)


def test_closed_form_vs_quadrature_100_frequencies(rng):
    seq = build_cpmg(4, 50.0, 40)
    f = rng.uniform(0.1, 500.0, 100)
    np.testing.assert_allclose(filter_dephasing(seq, f), dephasing_by_quadrature(seq, f),
                               rtol=1e-9, atol=0)
    np.testing.assert_allclose(filter_control(seq, f), control_ideal_by_sum(seq, f),
                               rtol=1e-9, atol=0)


@pytest.mark.parametrize("n,rate,num,width", [(2, 67.0, 13, 0.0), (4, 50.0, 8, 2e-3),
                                              (0, 120.0, 9, 1e-3)])
def test_closed_form_vs_quadrature_other_sequences(rng, n, rate, num, width):
    seq = build_cpmg(n, rate, num, width)
    f = np.concatenate([[1e-3], rng.uniform(0.1, 500.0, 20)])
    # finite pulses are summed segment by segment; at deep zeros that sum
    # cancels to ~1e-16 T**2 in absolute terms
    atol = 0.0 if width == 0 else 1e-16 * seq.total_duration ** 2
    np.testing.assert_allclose(filter_dephasing(seq, f), dephasing_by_quadrature(seq, f),
                               rtol=1e-9, atol=atol)
    ref_c = control_ideal_by_sum(seq, f) if width == 0 else control_by_quadrature(seq, f)
    np.testing.assert_allclose(filter_control(seq, f), ref_c, rtol=1e-9, atol=0)
    # at f = 0 these symmetric sequences have exact zeros; compare on the scale T**2
    T2 = seq.total_duration ** 2
    assert abs(filter_dephasing(seq, 0.0) - dephasing_by_quadrature(seq, 0.0)[0]) <= 1e-15 * T2


def test_control_dc_limits():
    assert filter_control(build_cpmg(0, 50.0, 40), 0.0) == pytest.approx((40 * np.pi) ** 2)
    assert filter_control(build_cpmg(4, 50.0, 40), 0.0) == pytest.approx(0.0, abs=1e-20)


def test_cpmg4_67hz_control_peak_near_50hz():
    seq = build_cpmg(4, 67.0, 40)
    s = filter_grid(seq, C, 0.0, 200.0, 2001)
    step = s.frequencies[1] - s.frequencies[0]
    band = np.abs(s.frequencies - 50.25) <= 5.0
    assert abs(s.frequencies[band][np.argmax(s.values[band])] - 50.25) <= step
    # ideal pulses: every odd harmonic of f_DD/4 is an equally tall peak
    assert filter_control(seq, 16.75) == pytest.approx(filter_control(seq, 50.25), rel=1e-9)


def test_finite_pulses_favor_low_harmonics():
    seq = build_cpmg(4, 67.0, 40, 2e-3)
    assert filter_control(seq, 16.75) > filter_control(seq, 50.25) > filter_control(seq, 83.75)


def test_filter_grid_examples():
    s = filter_grid(spin_echo(0.02), D, 0.0, 100.0, 3)
    assert s.values.shape == (3,) and s.values[0] == pytest.approx(0.0, abs=1e-20)
    T = 0.7
    s = filter_grid(free_evolution(T), D, 0.0, 10.0, 11)
    np.testing.assert_allclose(s.values, T ** 2 * np.sinc(s.frequencies * T) ** 2,
                               rtol=1e-12, atol=1e-18)
    assert s.sequence_label == "free 0.7 s"
    with pytest.raises(ValueError):
        filter_grid(spin_echo(0.02), D, 5.0, 5.0, 10)
    with pytest.raises(ValueError):
        filter_grid(spin_echo(0.02), D, 0.0, 5.0, 1)


def test_predicted_peaks_examples():
    np.testing.assert_allclose(predicted_peaks(build_cpmg(4, 67.0, 40), C, 2), [16.75, 50.25])
    peaks = predicted_peaks(build_cpmg(4, 50.0, 40), C, 2)
    np.testing.assert_allclose(peaks, [12.5, 37.5])
    assert not np.any(np.isclose(peaks, 50.0))
    np.testing.assert_allclose(predicted_peaks(build_cpmg(2, 80.0, 16), D, 1), [40.0])
    np.testing.assert_allclose(predicted_peaks(build_cpmg(0, 80.0, 16), C, 3), [0.0, 80.0, 160.0])
    with pytest.raises(ValueError):
        predicted_peaks(PulseSequence((Pulse(0.5),), 1.0), D, 1)


@pytest.mark.parametrize("kind,n", [(D, 4), (D, 2), (C, 4), (C, 6)])
def test_predicted_peaks_match_grid_maxima(kind, n):
    seq = build_cpmg(n, 60.0, 48)
    s = filter_grid(seq, kind, 1.0, 100.0, 99001)
    maxima = s.frequencies[argrelmax(s.values)[0]]
    # the finite comb shifts peaks by a small fraction of the linewidth 1/T
    tol = 0.1 / seq.total_duration
    expect = predicted_peaks(seq, kind, 20)
    for p in expect[(expect > 1.0) & (expect < 100.0)]:
        assert np.min(np.abs(maxima - p)) <= tol
    if kind is D:
        # control peaks of ideal pulses are all equally tall
        assert abs(s.frequencies[np.argmax(s.values)] - expect[0]) <= tol


def test_dephasing_peak_is_argmax():
    seq = build_cpmg(4, 50.0, 40)
    s = filter_grid(seq, D, 0.0, 60.0, 6001)
    assert s.frequencies[np.argmax(s.values)] == pytest.approx(25.0, abs=0.1 / seq.total_duration)


@pytest.mark.parametrize("width", [0.0, 1e-3])
def test_evenness(rng, width):
    seq = build_cpmg(4, 67.0, 40, width)
    f = rng.uniform(0.0, 1000.0, 100)
    for kind in (D, C):
        np.testing.assert_allclose(filter_value(seq, kind, -f), filter_value(seq, kind, f),
                                   rtol=1e-12, atol=0)


def test_sign_flip_invariance(rng):
    seq = build_cpmg(4, 50.0, 12, 1e-3)
    flipped = replace(seq, pulses=tuple(replace(p, sign=-p.sign) for p in seq.pulses))
    f = rng.uniform(0, 300, 50)
    np.testing.assert_allclose(filter_control(flipped, f), filter_control(seq, f), rtol=1e-12)
    np.testing.assert_allclose(filter_dephasing(flipped, f), filter_dephasing(seq, f), rtol=1e-12)


def _band_integral(seq, kind, fmax=2e4, df=0.5):
    f = np.arange(-fmax, fmax + df / 2, df)
    return np.trapezoid(filter_value(seq, kind, f), f)


def test_parseval_dephasing_ideal():
    seq = build_cpmg(4, 50.0, 4)
    assert _band_integral(seq, D) == pytest.approx(seq.total_duration, rel=0.01)
    assert filter_norm(seq, D) == pytest.approx(seq.total_duration, rel=1e-14)


def test_parseval_control_rectangular():
    seq = build_cpmg(4, 50.0, 4, 5e-3)
    expect = 4 * np.pi ** 2 / 5e-3
    assert _band_integral(seq, C) == pytest.approx(expect, rel=0.01)
    assert filter_norm(seq, C) == pytest.approx(expect, rel=1e-14)


def test_parseval_dephasing_finite_pulses():
    seq = build_cpmg(4, 50.0, 4, 5e-3)
    t = np.linspace(0, seq.total_duration, 400001)
    from ddforge import toggling_function
    direct = np.trapezoid(toggling_function(seq, t) ** 2, t)
    assert filter_norm(seq, D) == pytest.approx(direct, rel=1e-6)
    assert _band_integral(seq, D) == pytest.approx(direct, rel=0.01)


def test_control_norm_of_delta_pulses_is_infinite():
    assert filter_norm(build_cpmg(4, 50.0, 4), C) == np.inf


def test_filter_samples_validation():
    with pytest.raises(ValueError):
        FilterSamples(D, [0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        FilterSamples(D, [1.0, 0.0], [1.0, 1.0])
    assert FilterSamples("control", [0.0], [1.0]).kind is C
