import math

import numpy as np
import pytest
from scipy.optimize import brentq

from colorent.interference import (
    SINC2_FWHM,
    BeatingModelParams,
    BeatingTrace,
    Spectrum,
    beating_probability,
    simulate_trace,
    sinc2_line,
    synth_spectra,
)

FIG2 = BeatingModelParams(V=0.782, phi=math.radians(179.2), detuning_thz=2.1, tau_c_ps=2.95)


def test_peak_value_at_envelope_centre():
    # 0.5 - 0.391 cos(179.2 deg)
    expected = 0.5 - 0.391 * math.cos(math.radians(179.2))
    assert expected == pytest.approx(0.8909, abs=1e-4)
    assert beating_probability(0.0, FIG2) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("t", [1.475, 1.5, -1.475, -3.0, 10.0])
def test_outside_envelope_is_baseline(t):
    assert beating_probability(t, FIG2) == 0.5


def test_zero_visibility_flat():
    p = BeatingModelParams(0.0, 1.0, 2.1, 2.95)
    tau = np.linspace(-3, 3, 101)
    assert np.all(beating_probability(tau, p) == 0.5)


def test_envelope_continuity():
    edge = FIG2.tau_c_ps / 2
    for eps in (1e-6, 1e-9):
        assert abs(beating_probability(edge - eps, FIG2) - 0.5) < 1e-5


def test_delay_offset_shifts_curve():
    shifted = BeatingModelParams(0.782, 0.3, 2.1, 2.95, tau0_ps=0.4)
    unshifted = BeatingModelParams(0.782, 0.3, 2.1, 2.95)
    tau = np.linspace(-2, 2, 41)
    np.testing.assert_allclose(beating_probability(tau + 0.4, shifted), beating_probability(tau, unshifted))


def test_result_clamped():
    p = BeatingModelParams(1.0, math.pi, 2.1, 2.95, baseline=0.9)
    assert beating_probability(0.0, p) == 1.0


def test_fringe_period_is_inverse_detuning():
    p = BeatingModelParams(0.782, 0.0, 2.1, 20.0)
    tau = np.linspace(-2, 2, 400001)
    y = beating_probability(tau, p)
    # interior maxima located numerically
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    spacing = np.diff(tau[idx])
    assert np.median(spacing) == pytest.approx(1 / 2.1, rel=2e-3)
    assert 1 / 2.1 == pytest.approx(0.476, abs=1e-3)


def test_params_validation():
    with pytest.raises(ValueError):
        BeatingModelParams(1.2, 0, 2, 3)
    with pytest.raises(ValueError):
        BeatingModelParams(0.5, 0, 2, 0)
    with pytest.raises(ValueError):
        BeatingModelParams(0.5, 0, 2, 3, baseline=1.0)


# --- simulation


def test_flat_trace_within_poisson_band():
    p = BeatingModelParams(0.0, 0.0, 2.1, 2.95)
    tr = simulate_trace(p, 200, 5.0, 2000.0, 10.0, seed=3)
    mean = 1e4
    assert np.all(np.abs(tr.coincidences - mean) < 5 * math.sqrt(mean))


def test_simulation_deterministic():
    a = simulate_trace(FIG2, 200, 5.0, 2000.0, 10.0, seed=9)
    b = simulate_trace(FIG2, 200, 5.0, 2000.0, 10.0, seed=9)
    assert a.to_csv() == b.to_csv()
    c = simulate_trace(FIG2, 200, 5.0, 2000.0, 10.0, seed=10)
    assert a.to_csv() != c.to_csv()


def test_trace_metadata_records_rng_and_seed():
    tr = simulate_trace(FIG2, 50, 5.0, 2000.0, 10.0, seed=123)
    assert tr.metadata["seed"] == 123
    assert tr.metadata["rng"] == "numpy.random.PCG64"
    assert tr.metadata["pair_rate_hz"] == 2000.0


def test_counts_are_integers():
    tr = simulate_trace(FIG2, 50, 5.0, 2000.0, 10.0, seed=1)
    for col in (tr.coincidences, tr.singles3, tr.singles4):
        assert np.all(col == np.round(col)) and np.all(col >= 0)


def test_law_of_large_numbers():
    n_seeds = 400
    tau_grid = None
    acc = 0.0
    for s in range(n_seeds):
        tr = simulate_trace(FIG2, 41, 4.0, 200.0, 1.0, seed=s)
        acc = acc + tr.coincidences
        tau_grid = tr.delay_ps
    mean = acc / n_seeds
    expected = 200.0 * beating_probability(tau_grid, FIG2)
    bound = 3 * np.sqrt(expected) / math.sqrt(n_seeds)
    # 3 sigma per point; allow the statistically expected couple of excursions
    assert np.sum(np.abs(mean - expected) > bound) <= 2
    assert np.all(np.abs(mean - expected) < 4.5 * np.sqrt(expected) / math.sqrt(n_seeds))


def test_singles_delay_independent():
    tr = simulate_trace(FIG2, 200, 5.0, 2000.0, 10.0, seed=4, noise=False)
    assert np.ptp(tr.singles3) == 0 and np.ptp(tr.singles4) == 0


def test_noiseless_trace_is_expectation():
    tr = simulate_trace(FIG2, 30, 5.0, 2000.0, 10.0, seed=0, noise=False)
    np.testing.assert_allclose(tr.coincidences, 2e4 * beating_probability(tr.delay_ps, FIG2))


def test_trace_csv_roundtrip():
    tr = simulate_trace(FIG2, 20, 5.0, 2000.0, 10.0, seed=2)
    text = tr.to_csv()
    assert "delay_ps,coincidences,singles3,singles4,integration_s" in text
    assert text.startswith("#")
    back = BeatingTrace.from_csv(text)
    np.testing.assert_array_equal(back.coincidences, tr.coincidences)
    np.testing.assert_array_equal(back.delay_ps, tr.delay_ps)
    assert back.metadata["seed"] == 2
    assert back.pair_rate_hz == 2000.0


def test_trace_csv_malformed_row_names_line():
    text = "delay_ps,coincidences,singles3,singles4,integration_s\n0,1,2,3,1\n0.1,abc,2,3,1\n"
    with pytest.raises(ValueError, match="line 3"):
        BeatingTrace.from_csv(text)
    with pytest.raises(ValueError, match="line 2"):
        BeatingTrace.from_csv("delay_ps,coincidences,singles3,singles4,integration_s\n0,1,2\n")


def test_trace_rejects_nonincreasing_delays():
    with pytest.raises(ValueError):
        BeatingTrace([0, 0, 0], [1, 1, 1], [1, 1, 1], [1, 1, 1], [1, 1, 1])


# --- spectra


def test_sinc2_fwhm_constant():
    half = brentq(lambda x: np.sinc(x) ** 2 - 0.5, 0.1, 0.9)
    assert 2 * half == pytest.approx(SINC2_FWHM, abs=1e-6)
    assert SINC2_FWHM == pytest.approx(0.886, abs=1e-3)


def test_raw_line_first_zero():
    fwhm = 0.66
    # locate the first minimum numerically on a fine grid
    x = np.linspace(0.01, 1.2, 200001)
    y = sinc2_line(x, 0.0, fwhm)
    first_min = x[np.argmin(y[: np.searchsorted(x, 1.0)])]
    assert first_min == pytest.approx(fwhm / SINC2_FWHM, abs=1e-4)
    half = x[np.argmin(np.abs(y[: np.searchsorted(x, 0.5)] - 0.5))]
    assert 2 * half == pytest.approx(fwhm, abs=1e-4)


def test_degenerate_spectrum_single_peak():
    sp = synth_spectra(809.6, 809.6, 0.66, 1.0)
    y = sp.mode3
    peaks = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (y[1:-1] > 0.05 * y.max()))
    assert peaks.size == 1


def test_fig2_spectrum_two_resolved_peaks():
    sp = synth_spectra(811.9, 807.3, 0.66, 1.0)
    hi, lo = sp.peak_wavelengths(split_nm=809.6)
    assert hi - lo == pytest.approx(4.6, abs=0.05)
    np.testing.assert_array_equal(sp.mode3, sp.mode4)
    mid = np.argmin(np.abs(sp.wavelength_nm - 809.6))
    assert sp.mode3[mid] < 0.05 * sp.mode3.max()


def _midpoint_fraction(sep_nm, bin_fwhm=0.66, blur=0.0):
    l1, l2 = 809.6 + sep_nm / 2, 809.6 - sep_nm / 2
    sp = synth_spectra(l1, l2, bin_fwhm, blur)
    mid = np.argmin(np.abs(sp.wavelength_nm - 809.6))
    return sp.mode3[mid] / sp.mode3.max()


def test_fig2_intrinsic_spectrum_dark_at_midpoint():
    sp = synth_spectra(811.9, 807.3, 0.66, 0.0)
    mid = np.argmin(np.abs(sp.wavelength_nm - 809.6))
    assert sp.mode3[mid] < 0.01 * sp.mode3.max()


def test_midpoint_leakage_bounded_by_sidelobes():
    # sinc^2 sidelobes decay as 1/x^2, so 1% is reached near 11 bin widths
    seps = np.arange(5.0, 11.0, 0.1) * 0.66
    assert max(_midpoint_fraction(s) for s in seps) < 0.035
    wide = np.arange(11.0, 30.0, 0.25) * 0.66
    assert max(_midpoint_fraction(s) for s in wide) < 0.01


def test_spectrum_modes_integrate_equally():
    sp = synth_spectra(818.8, 800.5, 0.66, 1.0)
    assert np.trapezoid(sp.mode3, sp.wavelength_nm) == pytest.approx(np.trapezoid(sp.mode4, sp.wavelength_nm), rel=0.01)


def test_blur_preserves_area():
    raw = synth_spectra(811.9, 807.3, 0.66, 0.0)
    blurred = synth_spectra(811.9, 807.3, 0.66, 1.0)
    assert np.trapezoid(blurred.mode3, blurred.wavelength_nm) == pytest.approx(
        np.trapezoid(raw.mode3, raw.wavelength_nm), rel=0.01)


def test_spectrum_csv_roundtrip():
    sp = synth_spectra(811.9, 807.3, 0.66, 1.0)
    text = sp.to_csv()
    assert text.splitlines()[0] == "wavelength_nm,mode3,mode4"
    back = Spectrum.from_csv(text)
    np.testing.assert_allclose(back.mode3, sp.mode3, rtol=1e-9)


def test_spectrum_csv_malformed_line():
    with pytest.raises(ValueError, match="line 3"):
        Spectrum.from_csv("wavelength_nm,mode3,mode4\n809,1,1\n810,x,1\n")


def test_save_creates_directories(tmp_path):
    sp = synth_spectra(811.9, 807.3, 0.66, 1.0)
    sp.save(tmp_path / "a" / "b" / "s.csv")
    np.testing.assert_allclose(Spectrum.load(tmp_path / "a" / "b" / "s.csv").mode4, sp.mode4, rtol=1e-9)
    tr = simulate_trace(FIG2, 20, 5.0, 2000.0, 10.0, seed=2)
    tr.save(tmp_path / "c" / "t.csv")
    assert BeatingTrace.load(tmp_path / "c" / "t.csv").to_csv() == tr.to_csv()
