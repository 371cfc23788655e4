import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iongates.freqplan import (DOUBLE_PASS, SIDEBANDS, ChannelError, DriftModel,
                               FrequencyPlan, FrequencyUpdate, Pulse, compensate_drift,
                               ledger_json, phase_ledger)

NU = 0.98e6


@pytest.fixture
def plan():
    p = FrequencyPlan.standard(carrier=80e6, f1=80e6, f2=75e6)
    return p.configure_ms(NU, 10.5e3)


def test_sum_rule(plan):
    for path in DOUBLE_PASS:
        for sb in SIDEBANDS:
            dp = getattr(plan, path)
            sp = 0.0 if sb == "none" else getattr(plan, sb)
            assert plan.pulse_frequency(path, sb) == 2 * (plan.base + dp) + sp
    assert len(plan.table()) == 2 * len(SIDEBANDS)


def test_micromotion_switch(plan):
    for sb in SIDEBANDS:
        diff = plan.pulse_frequency("mm", sb) - plan.pulse_frequency("carrier", sb)
        assert diff == 21.75e6


@settings(max_examples=50)
@given(st.floats(-1e5, 1e5))
def test_base_shift_doubles(x):
    a = FrequencyPlan.standard(f2=75e6).configure_ms(NU, 10.5e3)
    b = FrequencyPlan.standard(base=x, f2=75e6).configure_ms(NU, 10.5e3)
    for row_a, row_b in zip(a.table(), b.table()):
        assert row_b["offset"] - row_a["offset"] == pytest.approx(2 * x, abs=1e-6)


def test_sidebands_symmetric(plan):
    rsb = plan.pulse_frequency("carrier", "rsb")
    bsb = plan.pulse_frequency("carrier", "bsb")
    centre = plan.pulse_frequency("carrier", "f1")
    assert bsb - centre == centre - rsb == NU + 10.5e3
    assert plan.check() == []


def test_unconfigured_channel():
    p = FrequencyPlan.standard()
    with pytest.raises(ChannelError):
        p.pulse_frequency("carrier", "f2")
    with pytest.raises(ValueError):
        p.pulse_frequency("rsb")
    with pytest.raises(ChannelError):
        FrequencyPlan().configure_ms(NU, 1e3)


def test_check_reports_broken_switch(plan):
    plan.mm += 1.0
    assert plan.check()


def test_plan_roundtrip(plan):
    back = FrequencyPlan.from_dict(json.loads(plan.to_json()))
    assert back.table() == plan.table()


# -- drift ---------------------------------------------------------------------

def test_linear_drift_exact():
    times = np.arange(0, 1800.1, 180.0)
    model = DriftModel([(t, 5.0 + 30.0 * t) for t in times], max_slope=40.0,
                       max_curvature=0.0)
    for t in np.linspace(0, 1800, 97):
        c = compensate_drift(model, t)
        assert c.offset == pytest.approx(5.0 + 30.0 * t, rel=1e-12)
        assert c.residual_bound == 0.0
        assert c.base_correction == pytest.approx(-c.offset / 2)


def test_step_per_interval():
    model = DriftModel([(0.0, 0.0), (180.0, 6e3)])
    assert model.max_step() == pytest.approx(6e3)


def test_quadratic_drift_bound():
    c = 1.0
    times = np.arange(0, 1800.1, 180.0)
    model = DriftModel([(t, 0.5 * c * t ** 2) for t in times], max_slope=np.inf,
                       max_curvature=c)
    dense = np.linspace(0, 1800, 18001)
    resid = np.array([abs(compensate_drift(model, t).offset - 0.5 * c * t ** 2)
                      for t in dense])
    bound = compensate_drift(model, 90.0).residual_bound
    assert bound == pytest.approx(4050.0)
    assert resid.max() <= bound
    assert resid.max() == pytest.approx(4050.0, rel=0.01)


@settings(max_examples=30)
@given(st.floats(-2.0, 2.0), st.floats(-50.0, 50.0), st.floats(0.0, 360.0))
def test_curvature_bound_holds(c, slope, t):
    times = np.arange(0, 360.1, 120.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = DriftModel([(s, slope * s + 0.5 * c * s ** 2) for s in times],
                           max_curvature=abs(c))
    corr = compensate_drift(model, t)
    truth = slope * t + 0.5 * c * t ** 2
    assert abs(corr.offset - truth) <= corr.residual_bound * (1 + 1e-9) + 1e-9


def test_extrapolation_flag_and_limit():
    model = DriftModel([(0.0, 0.0), (180.0, 10.0)], max_curvature=1e-3)
    c = compensate_drift(model, 270.0)
    assert c.extrapolated and c.offset == pytest.approx(15.0)
    assert c.residual_bound == pytest.approx(1e-3 * 90 * 270 / 2)
    with pytest.raises(ValueError):
        compensate_drift(model, 400.0)


def test_drift_model_errors():
    with pytest.raises(ValueError):
        DriftModel([])
    with pytest.raises(ValueError):
        DriftModel([(10.0, 0.0), (5.0, 0.0)])
    with pytest.warns(UserWarning):
        DriftModel([(0.0, 0.0), (60.0, 5e3)])


# -- phase ledger ----------------------------------------------------------------

def wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def test_integer_periods_equal_phase(plan):
    f = plan.f1
    t0 = 1.234567e-3
    rows = phase_ledger(plan, [Pulse(t0, "carrier", "f1"),
                               Pulse(t0 + 1000 / f, "carrier", "f1")])
    assert abs(wrap(rows[0].channel_phases["f1"] - rows[1].channel_phases["f1"])) < 1e-9


def test_ms_relative_phase_from_origins():
    plan = FrequencyPlan.standard(phases={"rsb": 0.3, "bsb": -0.2}).configure_ms(NU, 10e3)
    rows = phase_ledger(plan, [Pulse(0.0, "carrier", "ms")])
    assert rows[0].relative_phase == pytest.approx(0.5)


def test_relative_phase_immune_to_base_updates(plan):
    pulses = [Pulse(t, "carrier", "ms") for t in (1e-4, 2.5e-3, 7e-3)]
    plain = phase_ledger(plan, pulses)
    ramp = [FrequencyUpdate(t, "base", 1e3 * k) for k, t in
            enumerate(np.linspace(5e-5, 6e-3, 25), start=1)]
    moved = phase_ledger(plan, pulses, ramp)
    for a, b in zip(plain, moved):
        assert abs(wrap(a.relative_phase - b.relative_phase)) < 1e-9
        assert b.coherent and not b.flagged


def test_f2_update_flags_later_pulses(plan):
    pulses = [Pulse(1e-3, "carrier", "f2"), Pulse(3e-3, "carrier", "f2"),
              Pulse(4e-3, "carrier", "f2", phase_sensitive=False),
              Pulse(5e-3, "carrier", "f1")]
    rows = phase_ledger(plan, pulses, [FrequencyUpdate(2e-3, "f2", 76e6)])
    assert [r.flagged for r in rows] == [False, True, False, False]
    assert rows[1].frequency == 2 * 80e6 + 76e6


def test_update_is_phase_continuous(plan):
    rows = phase_ledger(plan, [Pulse(2e-3, "carrier", "f2")],
                        [FrequencyUpdate(1e-3, "f2", 76e6)])
    expected = 2 * np.pi * ((75e6 * 1e-3 + 76e6 * 1e-3) % 1.0)
    assert abs(wrap(rows[0].channel_phases["f2"] - expected)) < 1e-9


def test_ledger_errors(plan):
    with pytest.raises(ValueError):
        phase_ledger(plan, [Pulse(1e-3, "carrier"), Pulse(1e-3, "mm")])
    with pytest.raises(ChannelError):
        phase_ledger(FrequencyPlan.standard(), [Pulse(1e-3, "carrier", "rsb")])


def test_ledger_json(plan):
    rows = phase_ledger(plan, [Pulse(1e-3, "mm", "ms")])
    data = json.loads(ledger_json(rows))
    assert data[0]["sideband"] == "ms" and "relative_phase" in data[0]
