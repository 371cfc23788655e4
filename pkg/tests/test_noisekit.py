import dataclasses
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import welch

from iongates.noisekit import (AliasingError, Bump, CavityParams, Line, NoisePsd,
                               calibrate_bump_power, cavity_filter, incoherent_rate,
                               linewidth_for_white_level, lorentzian_transfer,
                               periodogram, rabi_spectroscopy, saturation_curve,
                               seed_sequence, servo_bump_psd, synthesize,
                               synthesize_batch, white_level_for_linewidth)
from iongates.seqlab import contrast_curve, fit_contrast

TWO_PI = 2 * np.pi
OMEGA = TWO_PI * 100e3
BUMP_DT = 1 / (8 * 2.1e6)


def rabi_oracle(omega, detuning, t):
    """Closed-form excitation of a square pulse (rad/s, rad/s, s)."""
    w = np.hypot(omega, detuning)
    return (omega / w) ** 2 * np.sin(w * t / 2) ** 2


@pytest.fixture(scope="module")
def calibrated():
    return calibrate_bump_power(servo_bump_psd(), OMEGA, 1.1e6)


# -- cavity --------------------------------------------------------------------

def test_cavity_transfer_values():
    cav = CavityParams()
    assert cav.transfer(0.0) == 1.0
    assert cav.transfer(1.1e6) == pytest.approx(1 / (1 + 100 ** 2), rel=1e-12)
    assert cav.transfer(11e3) == pytest.approx(0.5)


@settings(max_examples=50)
@given(st.floats(0, 1e7), st.floats(1e-3, 1e6))
def test_transfer_strictly_decreasing(f, df):
    assert lorentzian_transfer(f + df, 22e3) < lorentzian_transfer(f, 22e3)


def test_cavity_consistency_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        CavityParams()
    with pytest.warns(UserWarning):
        CavityParams(linewidth=50e3)


def test_cavity_filter_scales_components():
    psd = NoisePsd(white_level=10.0, lines=(Line(1e6, 2.0),),
                   bumps=(Bump(1.1e6, 1e6, 0.1),))
    filt = cavity_filter(psd, CavityParams())
    f = np.array([1e3, 1e5, 1.1e6])
    h = CavityParams().transfer(f)
    assert np.allclose(filt.frequency_psd(f), psd.frequency_psd(f) * h, rtol=1e-12)
    line = filt.effective_lines()[0]
    assert line.rms ** 2 == pytest.approx(4.0 * CavityParams().transfer(1e6))


# -- types and conventions -----------------------------------------------------

def test_invalid_levels_rejected():
    with pytest.raises(ValueError):
        NoisePsd(white_level=-1)
    with pytest.raises(ValueError):
        Bump(1e6, 0.0, 1.0)


def test_linewidth_conversion_roundtrip():
    assert white_level_for_linewidth(11.0) == pytest.approx(4 * np.pi * 11)
    assert linewidth_for_white_level(white_level_for_linewidth(65.0)) == pytest.approx(65.0)


def test_bump_phase_power_integrates_to_power():
    psd = servo_bump_psd(power=0.3)
    f = np.linspace(0, 5e6, 200001)
    assert np.trapezoid(psd.bump_phase_psd(f), f) == pytest.approx(0.3, rel=1e-3)


def test_dict_roundtrip():
    psd = NoisePsd(1.0, 2.0, (Line(50.0, 1e-3, 0.2),), (Bump(1e6, 5e5, 0.1),), 0.5,
                   (CavityParams(),))
    assert NoisePsd.from_dict(psd.to_dict()) == psd


def test_seed_sequence_accepts_all_forms():
    ss = np.random.SeedSequence(5)
    assert seed_sequence(ss) is ss
    assert seed_sequence(5).entropy == 5


# -- synthesis -----------------------------------------------------------------

def test_zero_psd_gives_zero_trajectory():
    traj = synthesize(NoisePsd(), 1e-3, 1e-6, seed=1)
    assert traj.samples.size == 1000
    assert not np.any(traj.samples)


def test_aliasing_guard():
    psd = NoisePsd(lines=(Line(1e3, 1.0),))
    with pytest.raises(AliasingError):
        synthesize(psd, 1e-2, 1 / 4e3)
    synthesize(psd, 1e-2, 1 / 4.1e3)


def test_reproducible_and_independent():
    psd = NoisePsd(white_level=5.0)
    a = synthesize_batch(psd, 1e-2, 1e-5, 3, seed=9)
    b = synthesize_batch(psd, 1e-2, 1e-5, 3, seed=9)
    assert np.array_equal(a, b)
    assert not np.array_equal(a[0], a[1])


def test_white_periodogram_flat_over_two_decades():
    level = 100.0
    x = synthesize_batch(NoisePsd(white_level=level), 1.0, 1e-4, 50, seed=1)
    f, p = welch(x, fs=1e4, nperseg=2048, axis=-1)
    sel = (f >= 10) & (f <= 1000)
    db = 10 * np.log10(p.mean(axis=0)[sel] / level)
    assert np.all(np.abs(db) <= 1.0)


def test_bump_band_roundtrip():
    psd = servo_bump_psd(power=0.05)
    x = synthesize_batch(psd, 200e-6, BUMP_DT, 50, seed=2)
    f, p = periodogram(x, BUMP_DT)
    for lo, hi in [(0.6e6, 1.1e6), (1.1e6, 1.6e6)]:
        band = (f > lo) & (f < hi)
        ratio_db = 10 * np.log10(p[band].sum() / psd.frequency_psd(f[band]).sum())
        assert abs(ratio_db) <= 1.5


def test_tone_variance_parseval():
    rms = 3e-3
    x = synthesize_batch(NoisePsd(lines=(Line(50.0, rms),)), 0.2, 1e-4, 20, seed=4)
    assert np.var(x, axis=1) == pytest.approx(np.full(20, rms ** 2), rel=0.05)


def test_static_offset_spread():
    x = synthesize_batch(NoisePsd(static_sigma=2.0), 1e-3, 1e-4, 4000, seed=5)
    assert np.ptp(x, axis=1).max() == 0.0
    assert np.std(x[:, 0]) == pytest.approx(2.0, rel=0.05)


def test_white_noise_phase_diffusion():
    # one-sided level S gives phase variance S t / 2 after time t
    level, t = 200.0, 0.05
    x = synthesize_batch(NoisePsd(white_level=level), t, 1e-4, 2000, seed=6)
    phi = x.sum(axis=1) * 1e-4
    assert np.var(phi) == pytest.approx(level * t / 2, rel=0.1)


# -- two-level diagnostics -----------------------------------------------------

def test_noise_free_pi_pulse():
    spec = rabi_spectroscopy(NoisePsd(), OMEGA, np.pi / OMEGA, [0.0], realizations=1)
    assert spec.excitation[0] == pytest.approx(1.0, abs=1e-12)


def test_noise_free_matches_rabi_formula():
    det = np.array([-2e6, -3e5, 5e4, 1.1e6])
    spec = rabi_spectroscopy(NoisePsd(), OMEGA, 100e-6, det, realizations=1)
    assert np.allclose(spec.excitation, rabi_oracle(OMEGA, TWO_PI * det, 100e-6),
                       atol=1e-6)


def test_realizations_required():
    with pytest.raises(ValueError):
        rabi_spectroscopy(NoisePsd(), OMEGA, 1e-4, [0.0], realizations=0)


def test_far_detuned_saturation_stays_low():
    curve = saturation_curve(NoisePsd(), 1.1e6, np.linspace(0, 400e-6, 41),
                             realizations=2, omega=TWO_PI * 10e3)
    assert curve.excitation.max() < 1e-3


def test_filtered_shoulders_suppressed(calibrated):
    det = np.linspace(0.9e6, 1.3e6, 41)
    bare = rabi_spectroscopy(NoisePsd(), OMEGA, 100e-6, det, 1, seed=3).excitation
    raw = rabi_spectroscopy(calibrated, OMEGA, 100e-6, det, 20, seed=3).excitation
    filt = rabi_spectroscopy(cavity_filter(calibrated, CavityParams()), OMEGA, 100e-6,
                             det, 20, seed=3).excitation
    excess_raw = np.mean(raw - bare)
    excess_filt = abs(np.mean(filt - bare))
    assert excess_raw > 0.1
    assert 10 * np.log10(excess_raw / excess_filt) >= 25


def test_golden_rule_calibration(calibrated):
    rate = incoherent_rate(calibrated, OMEGA, 1.1e6)
    assert 0.5 * (1 - np.exp(-2 * rate * 400e-6)) == pytest.approx(0.49, rel=1e-9)
    with pytest.raises(ValueError):
        calibrate_bump_power(NoisePsd(), OMEGA, 1.1e6)


def test_slope_proportional_to_power(calibrated):
    d = np.arange(0, 5.01e-6, 0.1e-6)
    base = saturation_curve(NoisePsd(), 1.1e6, d, 2, omega=OMEGA, dt=BUMP_DT).excitation
    half = dataclasses.replace(calibrated, bumps=(Bump(1.1e6, 1e6,
                                                       calibrated.bumps[0].power / 2),))
    slopes = []
    for psd in (calibrated, half):
        curve = saturation_curve(psd, 1.1e6, d, 200, seed=4, omega=OMEGA)
        slopes.append(np.polyfit(d, curve.excitation - base, 1)[0])
    # the bump carries ~0.1 rad^2, so first-order scaling holds to a few percent
    assert slopes[0] / slopes[1] == pytest.approx(2.0, rel=0.1)


def test_white_noise_ramsey_linewidth():
    width = 11.0
    times = np.linspace(2e-3, 60e-3, 20)
    curve = contrast_curve("ramsey", times,
                           laser=NoisePsd(white_level=white_level_for_linewidth(width)),
                           realizations=600, seed=8)
    tau = fit_contrast(curve, "exponential").params["tau"]
    assert tau == pytest.approx(1 / (np.pi * width), rel=0.1)
