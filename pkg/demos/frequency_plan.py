"""
Frequency plan, drift compensation and the phase ledger
=======================================================

All laser tones derive from a double-passed base AOM plus per-path and
per-sideband sources. Drift of the reference cavity is absorbed by the base
tone, which moves every tone together and leaves the red/blue sideband phase
difference untouched.
"""
import numpy as np

from iongates.freqplan import (DriftModel, FrequencyPlan, FrequencyUpdate, Pulse,
                               compensate_drift, phase_ledger)

plan = FrequencyPlan.standard(carrier=80e6, f1=80e6, f2=75e6).configure_ms(0.98e6, 10.5e3)
print(plan.format_table())

# cavity drift logged every 3 minutes, with a bound on its curvature (Hz/s^2)
log = [(0.0, 0.0), (180.0, 900.0), (360.0, 1850.0), (540.0, 2700.0)]
model = DriftModel(log, max_curvature=0.01)
for t in (90.0, 400.0, 600.0):
    c = compensate_drift(model, t)
    print(f"t = {t:5.0f} s  offset {c.offset:7.1f} Hz  base change {c.base_correction:7.1f} Hz"
          f"  bound {c.residual_bound:6.1f} Hz  extrapolated={c.extrapolated}")

pulses = [Pulse(t, "carrier", "ms") for t in (1e-4, 2.5e-3, 7e-3)]
ramp = [FrequencyUpdate(t, "base", 1e3 * k)
        for k, t in enumerate(np.linspace(5e-5, 6e-3, 25), start=1)]
for a, b in zip(phase_ledger(plan, pulses), phase_ledger(plan, pulses, ramp)):
    print(f"t = {a.t * 1e3:4.1f} ms  rsb-bsb phase {a.relative_phase:+.6f} rad, "
          f"with base ramp {b.relative_phase:+.6f} rad")
