"""
Separating laser noise from magnetic noise
==========================================

Ramsey fringes on the S -> D transition lose contrast to both laser phase
noise and Zeeman shifts. Radio-frequency pi pulses inside the ground manifold
(the MFDD sequence) flip the sign of the magnetic phase while the laser phase
keeps accumulating, so the surviving decay measures the laser alone.
"""
import numpy as np

from iongates.noisekit import Line, NoisePsd, white_level_for_linewidth
from iongates.seqlab import (build_mfdd, coherence_curve, contrast_curve, fit_contrast,
                             gaussian_sigma_for_fwhm, ramsey, tune_tone_rms)

# quasi-static field noise plus a 50 Hz line, tuned to halve Ramsey contrast at 1.7 ms
rms = tune_tone_rms(0.5, 1.7e-3, 50.0, 2e-10)
field = NoisePsd(lines=(Line(50.0, rms),), static_sigma=2e-10)
plain, mfdd = coherence_curve([ramsey(1.7e-3), build_mfdd(1.7e-3, 4)], field=field,
                              realizations=1000, seed=1)
print(f"at 1.7 ms: Ramsey contrast {plain.contrast:.3f}, MFDD (N=4) {mfdd.contrast:.4f}")
print("MFDD rf flips (ms):", [round(t * 1e3, 3) for t in build_mfdd(1.7e-3, 4).rf_flip_times])

# now add 65 Hz (FWHM, Gaussian) of laser noise: MFDD keeps it
laser = NoisePsd(static_sigma=gaussian_sigma_for_fwhm(65.0))
times = np.linspace(0.5e-3, 16e-3, 24)
for n in (4, 8):
    curve = contrast_curve("mfdd", times, N=n, laser=laser, field=field,
                           realizations=2000, seed=2)
    fit = fit_contrast(curve, "gaussian")
    print(f"MFDD N={n}: 50% contrast at {fit.half_time * 1e3:.2f} ms, "
          f"linewidth {fit.linewidth:.1f} Hz")

# a white-noise laser of 11 Hz decays exponentially, echo or not
white = NoisePsd(white_level=white_level_for_linewidth(11.0))
echo = contrast_curve("echo", np.linspace(2e-3, 60e-3, 30), laser=white,
                      realizations=1000, seed=3)
fit = fit_contrast(echo, "exponential")
print(f"echo on an 11 Hz white-noise laser: {fit.linewidth:.1f} +- "
      f"{fit.linewidth_stderr:.1f} Hz")
