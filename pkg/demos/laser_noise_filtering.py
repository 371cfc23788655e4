"""
Servo bumps and cavity filtering
================================

A laser locked to a reference cavity carries a noise bump near the lock's
unity-gain frequency, here 1.1 MHz. Driving a narrow transition, that bump
excites the ion off resonance. Transmitting the light through the cavity
suppresses it by |H|^2 = 1 / (1 + (2 f / Gamma)^2).
"""
import numpy as np

from iongates.noisekit import (CavityParams, calibrate_bump_power, cavity_filter,
                               rabi_spectroscopy, saturation_curve, servo_bump_psd)

cavity = CavityParams()
print(f"|H(1.1 MHz)|^2 = {cavity.transfer(1.1e6):.4e}")

omega = 2 * np.pi * 100e3
# scale the bump so that a 400 us pulse at the bump peak half-saturates the ion
raw = calibrate_bump_power(servo_bump_psd(), omega, 1.1e6)
filtered = cavity_filter(raw, cavity)

durations = np.arange(0, 400e-6 + 1e-12, 2e-6)
a = saturation_curve(raw, 1.1e6, durations, 100, seed=2, omega=omega,
                     linear_window=(0, 20e-6))
b = saturation_curve(filtered, 1.1e6, durations, 100, seed=2, omega=omega)
for t in (20e-6, 100e-6, 400e-6):
    i = int(np.argmin(np.abs(durations - t)))
    print(f"{t * 1e6:5.0f} us  unfiltered {a.excitation[i]:.3f}  filtered {b.excitation[i]:.4f}")
print(f"initial slope ratio unfiltered / filtered: {a.slope / abs(b.slope):.0f}")

# the same story as a spectrum: shoulders at +-1.1 MHz vanish after the cavity
det = np.linspace(-1.5e6, 1.5e6, 13)
s_raw = rabi_spectroscopy(raw, omega, 100e-6, det, 20, seed=3).excitation
s_filt = rabi_spectroscopy(filtered, omega, 100e-6, det, 20, seed=3).excitation
for d, x, y in zip(det, s_raw, s_filt):
    print(f"{d / 1e6:+5.2f} MHz  {x:.3f}  {y:.3f}")
