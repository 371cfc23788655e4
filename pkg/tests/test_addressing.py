import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j1

from iongates.addressing import (AddressingParams, composite_pi, composite_pi_matrix,
                                 fit_flop_envelope, infidelity_exponents,
                                 jittered_transfer, mm_rabi, pi_time,
                                 simulate_register_flops, small_angle_error)

TWO_PI = 2 * np.pi


def test_mm_rabi_values():
    assert mm_rabi(1.0, 0.0) == (0.0, 1.0)
    omega_mm, scale = mm_rabi(1.0, 0.1)
    assert omega_mm == pytest.approx(0.049938, abs=1e-6)
    assert abs(omega_mm - 0.05) / 0.05 < 0.0013
    assert scale == pytest.approx(0.9975016, abs=1e-7)
    with pytest.raises(ValueError):
        mm_rabi(1.0, -0.1)


def test_twenty_khz_sideband_flop():
    p = AddressingParams.for_mm_rabi(TWO_PI * 20e3)
    assert p.rates("mm")[1] == pytest.approx(TWO_PI * 20e3)
    assert pi_time(p.rates("mm")[1]) == pytest.approx(25e-6)
    assert p.omega_c == pytest.approx(TWO_PI * 20e3 / j1(0.1))


def test_params_validation():
    with pytest.raises(ValueError):
        AddressingParams(1.0, (0.1,))
    with pytest.raises(ValueError):
        AddressingParams(1.0, (0.1, 0.1), null_ion=0)
    with pytest.raises(ValueError):
        AddressingParams(1.0, (-0.1, 0.1))
    with pytest.raises(ValueError):
        AddressingParams(1.0).rates("rsb")


def test_from_positions():
    p = AddressingParams.from_positions(1.0, [0.0, 2e-6], kappa=5e4)
    assert p.k_dot_x == (0.0, pytest.approx(0.1))
    assert p.null_ion == 0


def test_carrier_pi_flips_both():
    omega = TWO_PI * 100e3
    trace = simulate_register_flops(AddressingParams(omega, (0.0, 0.0)), "carrier",
                                    times=[np.pi / omega])
    assert trace.p0[0] == pytest.approx(1.0, abs=1e-12)


def test_mm_drive_antiphase():
    p = AddressingParams.for_mm_rabi(TWO_PI * 20e3)
    trace = simulate_register_flops(p, "mm_sideband", duration=200e-6, points=801)
    assert np.all(trace.p0 == 0.0)
    assert np.max(np.abs(trace.p1 + trace.p2 - 1)) < 1e-12
    assert trace.p1.max() > 0.99 and trace.p2.min() < 0.01


@settings(max_examples=30)
@given(st.floats(0, 1e-2), st.floats(1e3, 1e7), st.floats(0.01, 2.0))
def test_null_ion_untouched(t, omega_c, kx):
    p = AddressingParams(omega_c, (0.0, kx), null_ion=0)
    trace = simulate_register_flops(p, "mm_sideband", times=[t])
    # ion 1 stays in S, so no population ever reaches P0
    assert trace.p0[0] == 0.0


@settings(max_examples=50)
@given(st.floats(1e-4, 0.283))
def test_small_angle_domain(x):
    assert small_angle_error(x) < 0.01


def test_shot_mode_reproducible():
    p = AddressingParams.for_mm_rabi(TWO_PI * 20e3, rabi_jitter=0.01)
    a = simulate_register_flops(p, "mm", duration=50e-6, points=11, shots=100, seed=3)
    b = simulate_register_flops(p, "mm", duration=50e-6, points=11, shots=100, seed=3)
    assert np.array_equal(a.as_array(), b.as_array())
    assert np.allclose(a.as_array().sum(axis=1), 1)


def test_flop_trace_csv(tmp_path):
    p = AddressingParams.for_mm_rabi(TWO_PI * 20e3)
    simulate_register_flops(p, "mm", duration=50e-6, points=5).to_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,p0,p1,p2"


def test_jittered_flops_fidelity():
    omega = TWO_PI * 193e3
    p = AddressingParams(omega, (0.0, 0.0), rabi_jitter=0.01)
    times = np.linspace(0, 20 * TWO_PI / omega, 801)
    exact = simulate_register_flops(p, "carrier", times=times)
    fit = fit_flop_envelope(times, 1 - np.sqrt(exact.p2), omega)
    assert fit.omega == pytest.approx(omega, rel=1e-3)
    assert fit.flip_fidelity >= 0.997
    sampled = simulate_register_flops(p, "carrier", times=times, shots=200, seed=5)
    flip = sampled.p0 + sampled.p1 / 2
    assert fit_flop_envelope(times, flip, omega).flip_fidelity >= 0.997


# -- composite pulses ----------------------------------------------------------

def test_composite_ideal():
    assert composite_pi(0.0) == (pytest.approx(1.0), pytest.approx(1.0))


def test_composite_matches_matrix_product():
    for eps in (-0.3, -0.05, 0.0, 0.01, 0.05, 0.2, 0.45):
        assert np.allclose(composite_pi(eps), composite_pi_matrix(eps), atol=1e-12)


def test_composite_at_five_percent():
    plain, comp = composite_pi(0.05)
    assert 1 - plain == pytest.approx(6.1558e-3, abs=1e-7)
    assert 1 - comp == pytest.approx(3.7894e-5, abs=1e-9)


def test_composite_exponents():
    a, b = infidelity_exponents()
    assert a == pytest.approx(2.0, abs=0.05)
    assert b == pytest.approx(4.0, abs=0.05)


@settings(max_examples=100)
@given(st.floats(1e-4, 0.3) | st.floats(-0.3, -1e-4))
def test_composite_superior(eps):
    plain, comp = composite_pi(eps)
    assert 1 - comp < 1 - plain


def test_composite_domain():
    with pytest.raises(ValueError):
        composite_pi(0.5)


def test_composite_reduces_jitter_error():
    assert jittered_transfer(0.05, composite=True) > jittered_transfer(0.05)
    assert jittered_transfer(0.0) == pytest.approx(1.0)
