"""Frequency and phase bookkeeping for the AOM chain in front of the qubit.

The 729 nm light passes a double-pass AOM driven by the sum of a base tone
(used for cavity-drift correction) and either the carrier or the
micromotion tone, then a single-pass AOM driven by one of the single-pass
sources. The optical offset of a pulse is::

    offset = 2 * (base + double_pass) + single_pass

All frequencies are in Hz. Phases are tracked in turns internally and
reported in radians.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

TRAP_DRIVE = 21.75e6

DOUBLE_PASS = ("carrier", "mm")
SINGLE_PASS = ("rsb", "bsb", "f1", "f2")
CHANNELS = ("base",) + DOUBLE_PASS + SINGLE_PASS
SIDEBANDS = ("none",) + SINGLE_PASS
#: bichromatic MS drive: rsb and bsb applied together
MS = "ms"


class ChannelError(KeyError):
    """A pulse referenced a channel that has no frequency configured."""


@dataclass
class SourceChannel:
    name: str
    frequency: float
    phase: float = 0.0     # phase origin, rad

    def __post_init__(self):
        if self.name not in CHANNELS:
            raise ValueError(f"unknown channel {self.name!r}")

    @property
    def pass_multiplier(self) -> int:
        return 1 if self.name in SINGLE_PASS else 2


@dataclass
class FrequencyPlan:
    """Channel frequencies of the chain; unset channels are ``None``."""

    base: float = 0.0
    carrier: float | None = None
    mm: float | None = None
    rsb: float | None = None
    bsb: float | None = None
    f1: float | None = None
    f2: float | None = None
    trap_drive: float = TRAP_DRIVE
    phases: dict = field(default_factory=dict)

    @classmethod
    def standard(cls, carrier: float = 80e6, base: float = 0.0, f1: float = 80e6,
                 trap_drive: float = TRAP_DRIVE, **kw) -> "FrequencyPlan":
        """Plan with the micromotion tone placed ``trap_drive/2`` above the
        carrier tone, so the double pass moves the light by ``trap_drive``."""
        return cls(base=base, carrier=carrier, mm=carrier + trap_drive / 2, f1=f1,
                   trap_drive=trap_drive, **kw)

    def configure_ms(self, trap_frequency: float, detuning: float,
                     f1: float | None = None) -> "FrequencyPlan":
        """Set ``rsb``/``bsb`` to ``f1 -+ (trap_frequency + detuning)`` (Hz)."""
        f1 = self.f1 if f1 is None else f1
        if f1 is None:
            raise ChannelError("f1")
        self.f1 = f1
        self.rsb = f1 - (trap_frequency + detuning)
        self.bsb = f1 + (trap_frequency + detuning)
        return self

    def channel(self, name: str) -> SourceChannel:
        f = getattr(self, name) if name in CHANNELS else None
        if f is None:
            raise ChannelError(name)
        return SourceChannel(name, float(f), float(self.phases.get(name, 0.0)))

    def check(self) -> list[str]:
        """Human-readable violations of the chain invariants."""
        issues = []
        if self.carrier is not None and self.mm is not None:
            if self.mm - self.carrier != self.trap_drive / 2:
                issues.append(f"mm - carrier = {self.mm - self.carrier!r} Hz, "
                              f"expected {self.trap_drive / 2!r}")
        if None not in (self.rsb, self.bsb, self.f1):
            if not np.isclose(self.rsb + self.bsb, 2 * self.f1, rtol=0, atol=1e-6):
                issues.append("rsb and bsb are not symmetric about f1")
        return issues

    def pulse_frequency(self, path: str, sideband: str = "none") -> float:
        """Optical offset of a pulse on ``path`` with single-pass ``sideband``."""
        if path not in DOUBLE_PASS:
            raise ValueError(f"path must be one of {DOUBLE_PASS}")
        if sideband not in SIDEBANDS:
            raise ValueError(f"sideband must be one of {SIDEBANDS}")
        dp = self.channel(path).frequency
        sp = 0.0 if sideband == "none" else self.channel(sideband).frequency
        return 2 * (self.base + dp) + sp

    def table(self) -> list[dict]:
        """Every configured (path, sideband) combination with its offset."""
        rows = []
        for path in DOUBLE_PASS:
            for sb in SIDEBANDS:
                try:
                    rows.append({"path": path, "sideband": sb,
                                 "offset": self.pulse_frequency(path, sb)})
                except ChannelError:
                    continue
        return rows

    def format_table(self) -> str:
        lines = [f"{'path':<8}{'sideband':<10}{'offset / MHz':>18}"]
        for r in self.table():
            lines.append(f"{r['path']:<8}{r['sideband']:<10}{r['offset'] / 1e6:>18.6f}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in CHANNELS}
        d["trap_drive"] = self.trap_drive
        d["phases"] = dict(self.phases)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyPlan":
        return cls(**d)


# -- drift compensation ------------------------------------------------------

@dataclass
class DriftModel:
    """Calibration points ``(t, offset)`` of the cavity against the atoms.

    :param max_slope: expected drift bound in Hz/s (2 kHz/min by default)
    :param max_curvature: bound on the second derivative of the drift in
        Hz/s^2, used for the interpolation residual bound
    """

    points: list
    max_slope: float = 2e3 / 60
    max_curvature: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            raise ValueError("empty calibration set")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("calibration times must be strictly increasing")
        self.points = [tuple(p) for p in pts]
        slopes = self.slopes()
        if slopes.size and np.max(np.abs(slopes)) > self.max_slope:
            warnings.warn(f"calibration slope {np.max(np.abs(slopes)):.4g} Hz/s exceeds "
                          f"the expected bound {self.max_slope:.4g} Hz/s")

    @property
    def times(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def slopes(self) -> np.ndarray:
        return np.diff(self.offsets) / np.diff(self.times)

    def max_step(self) -> float:
        """Largest correction change expected within one calibration interval."""
        t = self.times
        return float(self.max_slope * np.max(np.diff(t))) if t.size > 1 else 0.0


@dataclass
class DriftCorrection:
    t: float
    offset: float            # estimated optical offset, Hz
    base_correction: float   # change of the base tone cancelling it, Hz
    residual_bound: float | None
    extrapolated: bool


def compensate_drift(model: DriftModel, t: float) -> DriftCorrection:
    """Linear interpolation of the calibrated offset at wall-clock ``t``.

    Inside an interval of length ``h`` a drift whose second derivative is
    bounded by ``c`` deviates from the chord by at most ``c*h^2/8``. Beyond
    the last point, extrapolating the last chord a distance ``d`` gives at
    most ``c*d*(h+d)/2``. Extrapolation is allowed for one interval and is
    flagged. The double pass doubles the base tone, hence the base correction
    is minus half the optical offset.
    """
    tp, yp = model.times, model.offsets
    c = model.max_curvature
    if tp.size == 1:
        if t != tp[0]:
            raise ValueError("a single calibration point only covers its own time")
        return DriftCorrection(t, float(yp[0]), -float(yp[0]) / 2, 0.0, False)
    if tp[0] <= t <= tp[-1]:
        i = min(int(np.searchsorted(tp, t, side="right")) - 1, tp.size - 2)
        h = tp[i + 1] - tp[i]
        y = float(np.interp(t, tp, yp))
        bound = None if c is None else c * h ** 2 / 8
        extrapolated = False
    else:
        if t > tp[-1]:
            i, d = tp.size - 2, t - tp[-1]
        else:
            i, d = 0, tp[0] - t
        h = tp[i + 1] - tp[i]
        if d > h:
            raise ValueError("extrapolation beyond one calibration interval")
        slope = (yp[i + 1] - yp[i]) / h
        anchor = tp[-1] if t > tp[-1] else tp[0]
        y = float(yp[-1 if t > tp[-1] else 0] + slope * (t - anchor))
        bound = None if c is None else c * d * (h + d) / 2
        extrapolated = True
    return DriftCorrection(float(t), y, -y / 2, bound, extrapolated)


# -- phase ledger ------------------------------------------------------------

@dataclass(frozen=True)
class Pulse:
    t: float
    path: str
    sideband: str = "none"
    phase_sensitive: bool = True


@dataclass(frozen=True)
class FrequencyUpdate:
    t: float
    channel: str
    frequency: float


@dataclass
class LedgerRow:
    t: float
    path: str
    sideband: str
    frequency: float
    channel_phases: dict
    optical_phase: float
    coherent: bool
    flagged: bool
    relative_phase: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class _Accumulator:
    """Phase of one channel in turns, continuous across frequency updates."""

    def __init__(self, frequency, origin_turns):
        self.f = frequency
        self.t0 = 0.0
        self.turns = origin_turns % 1.0
        self.coherent = True

    def at(self, t):
        return (self.turns + self.f * (t - self.t0)) % 1.0

    def update(self, t, frequency, reset):
        self.turns = self.at(t)
        self.t0 = t
        self.f = frequency
        if reset:
            self.coherent = False


def phase_ledger(plan: FrequencyPlan, pulses, updates=()) -> list[LedgerRow]:
    """Per-pulse phase table.

    ``sideband="ms"`` denotes the bichromatic pulse; its row carries the
    ``rsb - bsb`` phase difference in ``relative_phase``.

    Every channel accrues ``2*pi*f*t`` from its configured origin at ``t = 0``.
    Frequency updates are phase continuous. Updating the base keeps every
    channel coherent (it is common to all outputs); updating any other
    channel marks it incoherent, and phase-sensitive pulses using it later
    are flagged. An update and a pulse at the same instant apply the update
    first.
    """
    pulses = list(pulses)
    times = [p.t for p in pulses]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("pulse times must be strictly increasing")
    acc = {}
    for name in CHANNELS:
        f = getattr(plan, name)
        if f is not None:
            acc[name] = _Accumulator(float(f), plan.phases.get(name, 0.0) / (2 * np.pi))
    events = sorted([(u.t, 0, i, u) for i, u in enumerate(updates)]
                    + [(p.t, 1, i, p) for i, p in enumerate(pulses)],
                    key=lambda e: e[:3])
    rows = []
    for t, kind, _, ev in events:
        if kind == 0:
            if ev.channel not in acc:
                raise ChannelError(ev.channel)
            acc[ev.channel].update(t, float(ev.frequency), reset=ev.channel != "base")
            continue
        if ev.sideband == MS:
            sp = ["rsb", "bsb"]
        else:
            sp = [] if ev.sideband == "none" else [ev.sideband]
        used = ["base", ev.path] + sp
        for name in used:
            if name not in acc:
                raise ChannelError(name)
        ph = {name: acc[name].at(t) for name in used}
        # a bichromatic pulse reports the mean of its two tones
        weight = {n: (2 if n in ("base", ev.path) else 1 / len(sp)) for n in used}
        optical = sum(weight[n] * ph[n] for n in used) % 1.0
        freq = sum(weight[n] * acc[n].f for n in used)
        coherent = all(acc[n].coherent for n in used)
        rel = None
        if ev.sideband == MS:
            # the double-pass channels are common to both tones and drop out
            rel = float(2 * np.pi * (((ph["rsb"] - ph["bsb"]) + 0.5) % 1.0 - 0.5))
        rows.append(LedgerRow(t, ev.path, ev.sideband, freq,
                              {n: 2 * np.pi * v for n, v in ph.items()},
                              2 * np.pi * optical, coherent,
                              ev.phase_sensitive and not coherent, rel))
    return rows


def ledger_json(rows) -> str:
    return json.dumps([r.to_dict() for r in rows], sort_keys=True, indent=2)
