"""Laser and magnetic-field noise: spectral models, realisations, cavity
filtering and the two ion-based diagnostics (Rabi excitation spectroscopy and
servo-bump saturation curves).

Conventions
-----------
* Every spectral density is **one-sided** (``f >= 0``) in units of
  ``value**2 / Hz``. The two-sided density is half of it on ``+-f``.
* For laser noise the trajectory value is the instantaneous frequency offset
  in rad/s, so ``white_level`` is in (rad/s)^2/Hz. A white level ``S`` gives a
  Lorentzian line of FWHM ``S / (4 pi)`` Hz.
* Servo bumps are specified in *phase* noise: ``power`` is the integrated
  phase variance (rad^2) of a Gaussian band of the given centre and FWHM,
  folded about ``f = 0`` so that it appears at ``+-center``. Their frequency
  noise density is ``(2 pi f)^2`` times the phase density, so they never add
  low-frequency phase diffusion.
* The same container describes magnetic-field noise when values are read as
  tesla (``lines`` rms in T, ``static_sigma`` in T).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2 * np.pi


class AliasingError(ValueError):
    """Raised when the sample interval cannot represent the modelled spectrum."""


@dataclass(frozen=True)
class Line:
    """A discrete tone of given rms amplitude; ``phase=None`` draws it uniformly."""

    frequency: float
    rms: float
    phase: float | None = None


@dataclass(frozen=True)
class Bump:
    """Gaussian phase-noise band at ``+-center`` carrying ``power`` rad^2."""

    center: float
    fwhm: float
    power: float

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValueError("bump FWHM must be positive")
        if self.power < 0:
            raise ValueError("bump power must be non-negative")


@dataclass(frozen=True)
class CavityParams:
    linewidth: float = 22e3
    finesse: float = 1e5
    fsr: float = 1.93e9

    def __post_init__(self):
        expected = self.fsr / self.finesse
        if abs(self.linewidth - expected) > 0.2 * expected:
            warnings.warn(f"cavity linewidth {self.linewidth:g} Hz differs from "
                          f"fsr/finesse = {expected:g} Hz by more than 20%")

    def transfer(self, f):
        return lorentzian_transfer(f, self.linewidth)


def lorentzian_transfer(f, linewidth):
    """Power transfer ``1/(1 + (2f/linewidth)^2)`` of a cavity at offset ``f``."""
    f = np.asarray(f, dtype=float)
    return 1.0 / (1.0 + (2 * f / linewidth) ** 2)


@dataclass(frozen=True)
class NoisePsd:
    """Parametric one-sided noise spectrum (see module conventions)."""

    white_level: float = 0.0
    flicker_level: float = 0.0
    lines: tuple[Line, ...] = ()
    bumps: tuple[Bump, ...] = ()
    static_sigma: float = 0.0
    filters: tuple[CavityParams, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(
            x if isinstance(x, Line) else Line(*x) for x in self.lines))
        object.__setattr__(self, "bumps", tuple(
            x if isinstance(x, Bump) else Bump(*x) for x in self.bumps))
        for name in ("white_level", "flicker_level", "static_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for line in self.lines:
            if line.rms < 0 or line.frequency < 0:
                raise ValueError("line frequency and rms must be non-negative")

    def transfer(self, f):
        out = np.ones_like(np.asarray(f, dtype=float))
        for cav in self.filters:
            out = out * cav.transfer(f)
        return out

    def bump_phase_psd(self, f):
        """Phase density (rad^2/Hz) of the bumps, before filtering."""
        f = np.asarray(f, dtype=float)
        out = np.zeros_like(f)
        for b in self.bumps:
            sigma = b.fwhm / np.sqrt(8 * np.log(2))
            norm = b.power / (sigma * np.sqrt(TWO_PI))
            out = out + norm * (np.exp(-0.5 * ((f - b.center) / sigma) ** 2)
                                + np.exp(-0.5 * ((f + b.center) / sigma) ** 2))
        return out

    def frequency_psd(self, f):
        """Continuous one-sided frequency-noise density at ``f`` (filtered)."""
        f = np.abs(np.asarray(f, dtype=float))
        with np.errstate(divide="ignore"):
            flicker = np.where(f > 0, self.flicker_level / np.where(f > 0, f, 1), 0.0)
        out = self.white_level + flicker + (TWO_PI * f) ** 2 * self.bump_phase_psd(f)
        return out * self.transfer(f)

    def phase_psd(self, f):
        """One-sided phase density ``S_freq / (2 pi f)^2`` (rad^2/Hz)."""
        f = np.abs(np.asarray(f, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.frequency_psd(f) / (TWO_PI * f) ** 2

    def effective_lines(self) -> list[Line]:
        """Lines with their rms scaled by the filter amplitude transfer."""
        return [Line(x.frequency, x.rms * float(np.sqrt(self.transfer(x.frequency))),
                     x.phase) for x in self.lines]

    def max_frequency(self) -> float:
        """Highest discrete feature: line frequencies and bump ``center + fwhm``."""
        fs = [x.frequency for x in self.lines if x.rms > 0]
        fs += [b.center + b.fwhm for b in self.bumps if b.power > 0]
        return max(fs, default=0.0)

    def is_zero(self) -> bool:
        return (self.white_level == 0 and self.flicker_level == 0
                and self.static_sigma == 0
                and all(x.rms == 0 for x in self.lines)
                and all(b.power == 0 for b in self.bumps))

    def to_dict(self) -> dict:
        return {
            "white_level": self.white_level,
            "flicker_level": self.flicker_level,
            "lines": [[x.frequency, x.rms, x.phase] for x in self.lines],
            "bumps": [[b.center, b.fwhm, b.power] for b in self.bumps],
            "static_sigma": self.static_sigma,
            "filters": [[c.linewidth, c.finesse, c.fsr] for c in self.filters],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoisePsd":
        d = dict(d)
        d["lines"] = tuple(Line(*x) for x in d.get("lines", ()))
        d["bumps"] = tuple(Bump(*x) for x in d.get("bumps", ()))
        d["filters"] = tuple(CavityParams(*x) for x in d.get("filters", ()))
        return cls(**d)


def white_level_for_linewidth(linewidth_hz: float) -> float:
    """White frequency-noise level (rad/s)^2/Hz for a Lorentzian FWHM in Hz."""
    return 4 * np.pi * linewidth_hz


def linewidth_for_white_level(level: float) -> float:
    return level / (4 * np.pi)


def cavity_filter(psd: NoisePsd, cavity: CavityParams) -> NoisePsd:
    """Return ``psd`` as transmitted through ``cavity``.

    Continuous components are multiplied by the Lorentzian power transfer at
    each offset frequency, tones by its value at the tone frequency. The
    static offset is common to laser and cavity and passes unchanged.
    """
    return replace(psd, filters=psd.filters + (cavity,))


@dataclass
class NoiseTrajectory:
    """Piecewise-constant realisation: ``samples[k]`` is the mean value over
    ``[k*dt, (k+1)*dt)``."""

    dt: float
    samples: np.ndarray
    seed: object = None

    @property
    def duration(self) -> float:
        return self.samples.shape[-1] * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.samples.shape[-1]) * self.dt

    def integral(self) -> np.ndarray:
        """Running integral at the bin edges (length ``n + 1``)."""
        return np.concatenate([np.zeros(self.samples.shape[:-1] + (1,)),
                               np.cumsum(self.samples, axis=-1) * self.dt], axis=-1)


def seed_sequence(seed) -> np.random.SeedSequence:
    """Root of the seed tree: ints, ``None`` and existing sequences accepted."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _check_dt(psd: NoisePsd, dt: float) -> None:
    fmax = psd.max_frequency()
    if fmax > 0 and dt >= 1 / (4 * fmax):
        raise AliasingError(f"dt={dt:g} s is not below 1/(4*{fmax:g} Hz)")


def _draw(psd: NoisePsd, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros(n)
    freqs = np.fft.rfftfreq(n, dt)
    df = 1.0 / (n * dt)
    level = psd.frequency_psd(freqs[1:])
    # the DC bin stands for the band [0, df/2), density taken at its midpoint
    level_dc = float(psd.frequency_psd(df / 4))
    if np.any(level > 0) or level_dc > 0:
        amp = np.sqrt(level * df)
        spec = np.zeros(freqs.size, dtype=complex)
        coeff = rng.standard_normal(freqs.size - 1) + 1j * rng.standard_normal(freqs.size - 1)
        spec[0] = n * np.sqrt(level_dc * df / 2) * rng.standard_normal()
        spec[1:] = 0.5 * n * amp * coeff
        if n % 2 == 0:
            # the Nyquist bin is real and enters irfft with unit weight
            spec[-1] = n * amp[-1] * rng.standard_normal()
        out += np.fft.irfft(spec, n)
    if psd.lines:
        edges = np.arange(n + 1) * dt
        for line in psd.effective_lines():
            phase = rng.uniform(0, TWO_PI) if line.phase is None else line.phase
            if line.rms == 0:
                continue
            w = TWO_PI * line.frequency
            a = np.sqrt(2) * line.rms
            if w == 0:
                out += a * np.sin(phase)
                continue
            # exact bin average of a*sin(w t + phase)
            c = np.cos(w * edges + phase)
            out += a * (c[:-1] - c[1:]) / (w * dt)
    if psd.static_sigma > 0:
        out += psd.static_sigma * rng.standard_normal()
    return out


def synthesize(psd: NoisePsd, duration: float, dt: float, seed=None) -> NoiseTrajectory:
    """Draw one realisation of ``psd`` lasting at least ``duration``.

    The continuous part is shaped Gaussian noise synthesised by inverse FFT
    on the ``1/duration`` frequency lattice. The DC bin carries the band below
    half a lattice step, so white noise comes out exactly uncorrelated from
    sample to sample; for 1/f noise the record length acts as the low
    frequency cutoff. Tones have deterministic amplitude and random (or
    fixed) phase, and the static offset is one Gaussian draw per realisation.

    :raises AliasingError: if ``dt >= 1/(4 * psd.max_frequency())``.
    """
    _check_dt(psd, dt)
    n = int(np.ceil(duration / dt - 1e-9))
    n = max(n, 2)
    rng = np.random.default_rng(seed)
    return NoiseTrajectory(dt, _draw(psd, n, dt, rng), seed)


def synthesize_batch(psd: NoisePsd, duration: float, dt: float, count: int,
                     seed=None) -> np.ndarray:
    """``count`` independent realisations, shape ``(count, n)``.

    Row ``i`` uses the ``i``-th child of ``SeedSequence(seed)``.
    """
    _check_dt(psd, dt)
    n = max(int(np.ceil(duration / dt - 1e-9)), 2)
    children = seed_sequence(seed).spawn(count)
    out = np.empty((count, n))
    if psd.is_zero():
        out[:] = 0.0
        return out
    for i, child in enumerate(children):
        out[i] = _draw(psd, n, dt, np.random.default_rng(child))
    return out


def periodogram(samples: np.ndarray, dt: float):
    """One-sided periodogram averaged over leading axes: ``(freqs, psd)``."""
    samples = np.atleast_2d(samples)
    n = samples.shape[-1]
    spec = np.fft.rfft(samples, axis=-1)
    p = np.abs(spec) ** 2 * dt / n
    p[..., 1:] *= 2
    if n % 2 == 0:
        p[..., -1] /= 2
    return np.fft.rfftfreq(n, dt), p.mean(axis=0)


# -- two-level dynamics with a noisy drive ---------------------------------

def _two_level(omega, detunings, noise, dt_noise, checkpoints, dt_max):
    """Evolve |g> under ``H = omega/2 sx - (det + noise(t))/2 sz``.

    ``detunings`` (rad/s) has shape (D,), ``noise`` shape (R, n) sampled at
    ``dt_noise``. Returns excited population at each checkpoint, shape
    (len(checkpoints), R, D). Each step is exact for a constant generator.
    """
    det = np.asarray(detunings, dtype=float)[None, :]
    R = noise.shape[0]
    cg = np.ones((R, det.shape[1]), dtype=complex)
    ce = np.zeros_like(cg)
    out = np.empty((len(checkpoints), R, det.shape[1]))
    t = 0.0
    for k, tc in enumerate(checkpoints):
        span = tc - t
        nsteps = int(np.ceil(span / dt_max - 1e-9)) if span > 0 else 0
        h = span / nsteps if nsteps else 0.0
        for _ in range(nsteps):
            idx = min(int((t + h / 2) / dt_noise), noise.shape[1] - 1)
            d = det + noise[:, idx:idx + 1]
            wg = np.sqrt(omega ** 2 + d ** 2)
            c = np.cos(wg * h / 2)
            s = np.sin(wg * h / 2)
            with np.errstate(invalid="ignore", divide="ignore"):
                nx = np.where(wg > 0, omega / wg, 0.0)
                nz = np.where(wg > 0, -d / wg, 0.0)
            # U = c - i s (nx sx + nz sz)
            g_new = (c - 1j * s * nz) * cg - 1j * s * nx * ce
            e_new = -1j * s * nx * cg + (c + 1j * s * nz) * ce
            cg, ce = g_new, e_new
            t += h
        t = tc
        out[k] = np.abs(ce) ** 2
    return out


def _default_dt(psd: NoisePsd, duration: float) -> float:
    fmax = psd.max_frequency()
    dt = duration / 200
    if fmax > 0:
        dt = min(dt, 1 / (8 * fmax))
    return dt


@dataclass
class RabiSpectrum:
    detunings: np.ndarray
    excitation: np.ndarray
    stderr: np.ndarray
    seed: object = None


def rabi_spectroscopy(psd: NoisePsd, omega: float, pulse: float, detunings,
                      realizations: int = 20, seed=None, dt: float | None = None
                      ) -> RabiSpectrum:
    """Mean D population after a square pulse vs laser detuning (Hz).

    The same set of noise realisations is used at every detuning.
    """
    if realizations < 1:
        raise ValueError("need at least one realisation")
    detunings = np.asarray(detunings, dtype=float)
    dt = _default_dt(psd, pulse) if dt is None else dt
    noise = synthesize_batch(psd, pulse, dt, realizations, seed)
    exc = _two_level(omega, TWO_PI * detunings, noise, dt, [pulse], dt)[0]
    stderr = exc.std(axis=0, ddof=1) / np.sqrt(realizations) if realizations > 1 \
        else np.zeros(detunings.size)
    return RabiSpectrum(detunings, exc.mean(axis=0), stderr, seed)


@dataclass
class SaturationCurve:
    durations: np.ndarray
    excitation: np.ndarray
    stderr: np.ndarray
    slope: float
    slope_stderr: float
    intercept: float
    window: tuple[float, float]
    seed: object = None


def saturation_curve(psd: NoisePsd, detuning: float, durations,
                     realizations: int = 50, seed=None,
                     omega: float = TWO_PI * 100e3,
                     linear_window: tuple[float, float] | None = None,
                     dt: float | None = None) -> SaturationCurve:
    """Mean excitation vs pulse length at a fixed detuning (Hz).

    The initial slope is an ordinary least-squares line (with intercept)
    through the points inside ``linear_window`` (default: all points).
    """
    durations = np.asarray(durations, dtype=float)
    if np.any(np.diff(durations) <= 0) or durations[0] < 0:
        raise ValueError("durations must be increasing and non-negative")
    tmax = durations[-1]
    dt = _default_dt(psd, tmax) if dt is None else dt
    noise = synthesize_batch(psd, tmax, dt, realizations, seed)
    exc = _two_level(omega, [TWO_PI * detuning], noise, dt, list(durations), dt)[:, :, 0]
    mean = exc.mean(axis=1)
    stderr = exc.std(axis=1, ddof=1) / np.sqrt(realizations) if realizations > 1 \
        else np.zeros(durations.size)
    window = (durations[0], durations[-1]) if linear_window is None else linear_window
    sel = (durations >= window[0]) & (durations <= window[1])
    if sel.sum() < 2:
        raise ValueError("linear window holds fewer than two durations")
    x = durations[sel]
    y = mean[sel]
    coef, cov = np.polyfit(x, y, 1, cov="unscaled") if sel.sum() > 2 else \
        (np.polyfit(x, y, 1), np.zeros((2, 2)))
    resid = y - np.polyval(coef, x)
    dof = max(sel.sum() - 2, 1)
    slope_err = float(np.sqrt(cov[0, 0] * np.sum(resid ** 2) / dof))
    return SaturationCurve(durations, mean, stderr, float(coef[0]), slope_err,
                           float(coef[1]), tuple(window), seed)


def incoherent_rate(psd: NoisePsd, omega: float, detuning: float) -> float:
    """Golden-rule transfer rate (1/s) driven by phase noise at ``detuning`` Hz.

    ``rate = omega^2 / 4 * S_phase_two_sided(f) = omega^2 / 8 * S_phase(f)``;
    the resulting excitation is ``(1 - exp(-2 rate t)) / 2``.
    """
    return float(omega ** 2 / 8 * psd.phase_psd(abs(detuning)))


def calibrate_bump_power(psd: NoisePsd, omega: float, detuning: float,
                         duration: float = 400e-6, target: float = 0.49) -> NoisePsd:
    """Rescale all bump powers so that incoherent excitation at ``detuning``
    reaches ``target`` after ``duration`` (golden-rule estimate).

    ``target`` must lie below the incoherent ceiling of one half.
    """
    if not 0 < target < 0.5:
        raise ValueError("target excitation must lie in (0, 0.5)")
    if not psd.bumps or all(b.power == 0 for b in psd.bumps):
        raise ValueError("psd has no bump to calibrate")
    needed = -np.log(1 - 2 * target) / (2 * duration)
    bare = replace(psd, white_level=0.0, flicker_level=0.0, lines=(), static_sigma=0.0)
    current = incoherent_rate(bare, omega, detuning)
    scale = needed / current
    bumps = tuple(Bump(b.center, b.fwhm, b.power * scale) for b in psd.bumps)
    return replace(psd, bumps=bumps)


def servo_bump_psd(center: float = 1.1e6, fwhm: float = 1e6, power: float = 0.05,
                   **kwargs) -> NoisePsd:
    """Laser spectrum with symmetric servo bumps (defaults: 1.1 MHz, 1 MHz FWHM)."""
    return NoisePsd(bumps=(Bump(center, fwhm, power),), **kwargs)
