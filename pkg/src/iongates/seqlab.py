"""Ramsey, Hahn-echo and magnetic-field dynamical decoupling (MFDD) on the
optical qubit, with fringe-contrast extraction and contrast-curve fits.

Phase model
-----------
For one experimental run the optical superposition acquires the phase::

    Phi = integral l(t) * laser(t) dt + mu_B/hbar * integral m(t) * B(t) dt

where ``laser(t)`` is the laser frequency offset (rad/s), ``B(t)`` the field
(T), ``l(t) = +-1`` flips at optical pi pulses and ``m(t)`` is the Zeeman
sensitivity of the transition currently occupied in units of ``mu_B/hbar``.
Starting in ``S(-1/2) <-> D(-1/2)`` ``m = +2/5``; an rf pi pulse inside the
S manifold moves to ``S(+1/2) <-> D(-1/2)`` with ``m = -8/5``. Both
functions are piecewise constant and are integrated exactly against the
piecewise-constant noise realisations.

Linewidth conventions
---------------------
* exponential ``C = A exp(-t/tau)``: Lorentzian FWHM ``1 / (pi tau)``.
* Gaussian ``C = A exp(-(t/tau_g)^2)``: ``sigma_nu = sqrt(2)/(2 pi tau_g)``
  and FWHM ``sqrt(8 ln 2) sigma_nu``. The 50% point ``T_half`` then gives
  FWHM ``= 2 ln 2 / (pi T_half)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, curve_fit
from scipy.special import j0

from .noisekit import NoisePsd, seed_sequence, synthesize_batch

TWO_PI = 2 * np.pi
#: Bohr magneton over hbar, rad/s per tesla.
MU_B_OVER_HBAR = 9.2740100783e-24 / 1.054571817e-34

#: Zeeman sensitivity (units of mu_B/hbar) of S(-1/2)<->D(-1/2).
M_LOWER = 2 / 5
#: Zeeman sensitivity (units of mu_B/hbar) of S(+1/2)<->D(-1/2).
M_UPPER = -8 / 5


class FitError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class ZeemanModel:
    """Transition shift coefficients in rad/s per tesla."""

    lower: float = M_LOWER * MU_B_OVER_HBAR
    upper: float = M_UPPER * MU_B_OVER_HBAR

    def __post_init__(self):
        if np.sign(self.lower) == np.sign(self.upper):
            raise ValueError("the two transitions must shift in opposite directions")

    @property
    def ratio(self) -> float:
        return abs(self.upper / self.lower)


@dataclass
class DDSequence:
    """Optical Ramsey-type sequence with its sensitivity functions.

    ``events`` holds ``(time, action, phase)`` with ``action`` one of
    ``"pi_half"``, ``"optical_pi"`` or ``"rf_pi_flip"``; the closing
    ``pi_half`` has phase ``None`` (scanned). ``mag_edges``/``mag_values``
    and ``laser_edges``/``laser_values`` define the piecewise-constant
    sensitivity functions on ``[0, T]``.
    """

    kind: str
    T: float
    N: int
    events: list
    mag_edges: np.ndarray
    mag_values: np.ndarray
    laser_edges: np.ndarray
    laser_values: np.ndarray

    def switch(self, t):
        """Magnetic sensitivity ``m(t)`` in units of mu_B/hbar."""
        return _piecewise(self.mag_edges, self.mag_values, t)

    def laser_sign(self, t):
        return _piecewise(self.laser_edges, self.laser_values, t)

    def switch_integral(self) -> float:
        return float(np.sum(np.diff(self.mag_edges) * self.mag_values))

    def mag_weights(self, edges) -> np.ndarray:
        """Exact integral of ``m(t)`` over each bin of ``edges``."""
        return np.diff(_cumulative(self.mag_edges, self.mag_values, edges))

    def laser_weights(self, edges) -> np.ndarray:
        return np.diff(_cumulative(self.laser_edges, self.laser_values, edges))

    @property
    def rf_flip_times(self) -> list[float]:
        return [t for t, a, _ in self.events if a == "rf_pi_flip"]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "T": self.T, "N": self.N,
                "events": [[t, a, p] for t, a, p in self.events]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "DDSequence":
        builders = {"ramsey": lambda: ramsey(d["T"]),
                    "mfdd": lambda: build_mfdd(d["T"], d["N"]),
                    "echo": lambda: hahn_echo(d["T"])}
        return builders[d["kind"]]()


def _piecewise(edges, values, t):
    t = np.asarray(t, dtype=float)
    idx = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(values) - 1)
    return np.asarray(values)[idx]


def _cumulative(edges, values, x):
    cum = np.concatenate([[0.0], np.cumsum(np.diff(edges) * values)])
    x = np.clip(np.asarray(x, dtype=float), edges[0], edges[-1])
    return np.interp(x, edges, cum)


def ramsey(T: float) -> DDSequence:
    """Plain Ramsey: pi/2 - wait T - pi/2(phase)."""
    if T <= 0:
        raise ValueError("T must be positive")
    events = [(0.0, "pi_half", 0.0), (T, "pi_half", None)]
    edges = np.array([0.0, T])
    return DDSequence("ramsey", T, 0, events, edges, np.array([M_LOWER]),
                      edges.copy(), np.array([1.0]))


def build_mfdd(T: float, N: int) -> DDSequence:
    """Ramsey sequence with ``N`` rf echo blocks inside the S manifold.

    Each block of length ``T/N`` has two rf pi pulses ``T/(5N)`` apart,
    centred on the block midpoint, so the time spent with sensitivity
    ``+2/5`` and ``-8/5`` cancels the field phase exactly.
    """
    if N < 1 or T <= 0:
        raise ValueError("need N >= 1 and T > 0")
    tn = T / N
    events = [(0.0, "pi_half", 0.0)]
    edges = [0.0]
    values = []
    for k in range(N):
        mid = (k + 0.5) * tn
        a, b = mid - tn / 10, mid + tn / 10
        if not edges[-1] < a < b < T:
            raise ValueError("rf pulses do not fit in the block")
        events += [(a, "rf_pi_flip", None), (b, "rf_pi_flip", None)]
        edges += [a, b]
        values += [M_LOWER, M_UPPER]
    edges.append(T)
    values.append(M_LOWER)
    edges = np.array(edges)
    values = np.array(values)
    events.append((T, "pi_half", None))
    laser_edges = np.array([0.0, T])
    return DDSequence("mfdd", T, N, events, edges, values, laser_edges, np.array([1.0]))


def hahn_echo(T: float) -> DDSequence:
    """pi/2 - T/2 - optical pi - T/2 - pi/2(phase); refocuses laser and field."""
    if T <= 0:
        raise ValueError("T must be positive")
    events = [(0.0, "pi_half", 0.0), (T / 2, "optical_pi", 0.0), (T, "pi_half", None)]
    edges = np.array([0.0, T / 2, T])
    return DDSequence("echo", T, 1, events, edges, np.array([M_LOWER, -M_LOWER]),
                      edges.copy(), np.array([1.0, -1.0]))


def make_sequence(kind: str, T: float, N: int = 4) -> DDSequence:
    if kind == "ramsey":
        return ramsey(T)
    if kind == "mfdd":
        return build_mfdd(T, N)
    if kind == "echo":
        return hahn_echo(T)
    raise ValueError(f"unknown sequence kind {kind!r}")


# -- simulation --------------------------------------------------------------

def sinusoid_contrast(phases, signal):
    """Fit ``c + a cos(phi) + b sin(phi)``; return (contrast, fringe phase).

    Contrast is the full fringe amplitude ``2*hypot(a, b)`` of an excitation
    probability ``(1 + C cos(Phi - phi))/2``.
    """
    phases = np.asarray(phases, dtype=float)
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    (c, a, b), *_ = np.linalg.lstsq(design, np.asarray(signal, dtype=float), rcond=None)
    return 2 * float(np.hypot(a, b)), float(np.arctan2(b, a))


@dataclass
class CoherenceResult:
    T: float
    contrast: float
    fringe_phase: float
    phases: np.ndarray
    signal: np.ndarray
    seed: object = None


def _accumulated_phases(seqs, laser, field_psd, zeeman, realizations, seed, dt,
                        static_laser=0.0, static_field=0.0):
    """Phase per (sequence, realisation) using shared noise realisations."""
    tmax = max(s.T for s in seqs)
    if dt is None:
        dt = tmax / 4000
        for psd in (laser, field_psd):
            if psd is not None and psd.max_frequency() > 0:
                dt = min(dt, 1 / (8 * psd.max_frequency()))
    n = max(int(np.ceil(tmax / dt - 1e-9)), 2)
    edges = np.arange(n + 1) * dt
    ss = seed_sequence(seed)
    laser_seed, field_seed = ss.spawn(2)
    if laser is not None and not laser.is_zero():
        lnoise = synthesize_batch(laser, n * dt, dt, realizations, laser_seed)
    else:
        lnoise = np.zeros((realizations, n))
    if field_psd is not None and not field_psd.is_zero():
        bnoise = synthesize_batch(field_psd, n * dt, dt, realizations, field_seed)
    else:
        bnoise = np.zeros((realizations, n))
    bnoise = bnoise + static_field
    lnoise = lnoise + static_laser
    # the Zeeman model fixes the lower-transition coefficient; m(t) is relative
    unit = zeeman.lower / M_LOWER
    out = np.empty((len(seqs), realizations))
    for i, s in enumerate(seqs):
        wl = s.laser_weights(edges)
        wm = s.mag_weights(edges)
        out[i] = lnoise @ wl + unit * (bnoise @ wm)
    return out


def simulate_coherence(seq: DDSequence, laser: NoisePsd | None = None,
                       field: NoisePsd | None = None,
                       zeeman: ZeemanModel = ZeemanModel(),
                       realizations: int = 200, phases=None, seed=None,
                       shots: int | None = None, dt: float | None = None,
                       static_laser: float = 0.0, static_field: float = 0.0
                       ) -> CoherenceResult:
    """Fringe contrast of ``seq`` under laser and magnetic noise.

    For every analysis phase the excitation probability is averaged over
    realisations (exact mode) or sampled with ``shots`` Bernoulli trials per
    phase; the contrast is the amplitude of a sinusoid fitted across the
    phase grid. ``static_laser`` (rad/s) and ``static_field`` (T) are
    deterministic offsets common to all realisations.
    """
    return coherence_curve([seq], laser, field, zeeman, realizations, phases, seed,
                           shots, dt, static_laser, static_field)[0]


def coherence_curve(seqs, laser=None, field=None, zeeman=ZeemanModel(),
                    realizations=200, phases=None, seed=None, shots=None, dt=None,
                    static_laser=0.0, static_field=0.0) -> list[CoherenceResult]:
    """:func:`simulate_coherence` for several sequences on shared realisations."""
    phases = np.linspace(0, TWO_PI, 12, endpoint=False) if phases is None \
        else np.asarray(phases, dtype=float)
    phi = _accumulated_phases(seqs, laser, field, zeeman, realizations, seed, dt,
                              static_laser, static_field)
    rng = np.random.default_rng(seed_sequence(seed).spawn(3)[2])
    results = []
    for s, ph in zip(seqs, phi):
        coh = np.mean(np.exp(1j * ph))
        signal = 0.5 * (1 + np.real(coh * np.exp(-1j * phases)))
        if shots is not None:
            signal = rng.binomial(shots, np.clip(signal, 0, 1)) / shots
        c, fp = sinusoid_contrast(phases, signal)
        results.append(CoherenceResult(s.T, c, fp, phases, signal, seed))
    return results


@dataclass
class ContrastCurve:
    times: np.ndarray
    contrast: np.ndarray
    model: str | None = None
    params: dict = field(default_factory=dict)

    def to_csv(self, path):
        from .io import write_csv
        write_csv(path, ["time", "contrast"], [self.times, self.contrast])


def contrast_curve(kind: str, times, N: int = 4, **kwargs) -> ContrastCurve:
    seqs = [make_sequence(kind, T, N) for T in times]
    res = coherence_curve(seqs, **kwargs)
    return ContrastCurve(np.asarray(times, dtype=float),
                         np.array([r.contrast for r in res]))


# -- fitting -----------------------------------------------------------------

def exponential_model(t, amp, tau):
    return amp * np.exp(-t / tau)


def gaussian_model(t, amp, tau):
    return amp * np.exp(-(t / tau) ** 2)


def bessel_model(t, amp, b, f):
    """``amp*|J0(2 b sin(pi f t)/(2 pi f))|`` for a single field tone.

    ``b`` is the peak phase-rate amplitude of the tone (rad/s).
    """
    return amp * np.abs(j0(2 * b * np.sin(np.pi * f * t) / (TWO_PI * f)))


def gaussian_fwhm(tau_g: float) -> float:
    """Gaussian-lineshape FWHM (Hz) for a 1/e contrast time ``tau_g``."""
    return np.sqrt(8 * np.log(2)) * np.sqrt(2) / (TWO_PI * tau_g)


def lorentzian_fwhm(tau: float) -> float:
    return 1 / (np.pi * tau)


@dataclass
class ContrastFit:
    model: str
    params: dict
    stderr: dict
    linewidth: float | None
    linewidth_stderr: float | None
    half_time: float | None
    half_time_stderr: float | None
    r_squared: float
    residuals: np.ndarray


def fit_contrast(curve: ContrastCurve, model: str) -> ContrastFit:
    """Least-squares fit of ``model`` in {``exponential``, ``gaussian``, ``bessel``}.

    Reports the linewidth under the module conventions (none for the Bessel
    model, which reports the tone frequency ``f`` instead) and the time at
    which the fitted contrast falls to half its amplitude.
    """
    t = np.asarray(curve.times, dtype=float)
    y = np.asarray(curve.contrast, dtype=float)
    if t.size < 6:
        raise FitError("need at least six time points")
    try:
        if model == "exponential":
            p0 = [max(y[0], 1e-3), _guess_decay(t, y)]
            popt, pcov = curve_fit(exponential_model, t, y, p0=p0, maxfev=10000)
            fn = exponential_model
        elif model == "gaussian":
            p0 = [max(y[0], 1e-3), _guess_decay(t, y)]
            popt, pcov = curve_fit(gaussian_model, t, y, p0=p0, maxfev=10000)
            fn = gaussian_model
        elif model == "bessel":
            p0 = _guess_bessel(t, y)
            popt, pcov = curve_fit(bessel_model, t, y, p0=p0, maxfev=20000)
            fn = bessel_model
        else:
            raise ValueError(f"unknown model {model!r}")
    except RuntimeError as exc:
        raise FitError(f"{model} fit did not converge: {exc}") from exc
    resid = y - fn(t, *popt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    perr = np.sqrt(np.abs(np.diag(pcov))) if np.all(np.isfinite(pcov)) \
        else np.full(len(popt), np.nan)
    names = {"exponential": ("amp", "tau"), "gaussian": ("amp", "tau"),
             "bessel": ("amp", "b", "f")}[model]
    params = dict(zip(names, map(float, popt)))
    stderr = dict(zip(names, map(float, perr)))
    popt = [abs(x) for x in popt]
    lw = lw_err = half = half_err = None
    if model == "exponential":
        tau, dtau = popt[1], perr[1]
        lw, lw_err = lorentzian_fwhm(tau), lorentzian_fwhm(tau) * dtau / tau
        half, half_err = tau * np.log(2), dtau * np.log(2)
    elif model == "gaussian":
        tau, dtau = popt[1], perr[1]
        lw, lw_err = gaussian_fwhm(tau), gaussian_fwhm(tau) * dtau / tau
        half, half_err = tau * np.sqrt(np.log(2)), dtau * np.sqrt(np.log(2))
    else:
        amp, b, f = popt
        x_half = brentq(lambda x: j0(x) - 0.5, 0.0, 2.4)
        arg = x_half * TWO_PI * f / (2 * b)
        if arg <= 1:
            half = float(np.arcsin(arg) / (np.pi * f))
    return ContrastFit(model, params, stderr, lw, lw_err, half, half_err, r2, resid)


def _guess_decay(t, y):
    y0 = max(y[0], 1e-9)
    below = np.nonzero(y < y0 / np.e)[0]
    return float(t[below[0]]) if below.size else float(t[-1] * 2)


def _guess_bessel(t, y):
    amp = max(float(np.max(y)), 1e-3)
    best = None
    for f in np.linspace(5, 500, 100):
        for b in np.geomspace(10, 1e5, 60):
            r = np.sum((y - bessel_model(t, amp, b, f)) ** 2)
            if best is None or r < best[0]:
                best = (r, b, f)
    return [amp, best[1], best[2]]


# -- noise tuning helpers ----------------------------------------------------

def ramsey_line_contrast(T, tone_rms: float, frequency: float,
                         static_sigma: float = 0.0, coefficient: float = None):
    """Ensemble plain-Ramsey contrast for a random-phase field tone plus a
    static Gaussian field spread (both in T)."""
    k = ZeemanModel().lower if coefficient is None else coefficient
    b = k * np.sqrt(2) * tone_rms
    T = np.asarray(T, dtype=float)
    tone = np.abs(j0(2 * b * np.sin(np.pi * frequency * T) / (TWO_PI * frequency)))
    return tone * np.exp(-0.5 * (k * static_sigma * T) ** 2)


def tune_tone_rms(target: float, T: float, frequency: float = 50.0,
                  static_sigma: float = 0.0) -> float:
    """Field tone rms (T) that brings plain-Ramsey contrast to ``target`` at ``T``."""
    hi = 1e-9
    while ramsey_line_contrast(T, hi, frequency, static_sigma) > target:
        hi *= 2
        if hi > 1:
            raise ValueError("target contrast not reachable")
    return brentq(lambda x: ramsey_line_contrast(T, x, frequency, static_sigma) - target,
                  0.0, hi, xtol=1e-18)


def gaussian_sigma_for_fwhm(fwhm_hz: float) -> float:
    """Static laser frequency spread (rad/s) for a Gaussian line of given FWHM."""
    return TWO_PI * fwhm_hz / np.sqrt(8 * np.log(2))
