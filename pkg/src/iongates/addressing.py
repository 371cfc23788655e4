"""Individual addressing of a two-ion register on the micromotion sideband.

An ion sitting a distance from the rf null sees the laser phase modulated at
the trap drive frequency with depth ``k.x_MM``. Driving the first micromotion
sideband then couples it with ``Omega_c*J1(k.x)`` while an ion at the null
(``k.x = 0``) is untouched. The carrier rate of a displaced ion drops to
``Omega_c*J0(k.x)``. Each ion is treated as an independent two-level system;
no motional sidebands enter here.

Population convention follows :mod:`iongates.qcore`: ``P_k`` is the
probability of finding ``k`` ions in ``S``. Both ions start in ``S``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import j0, j1

from .qcore import Populations, rotation_matrix

TWO_PI = 2 * np.pi
TRAP_DRIVE = 21.75e6

DRIVES = ("carrier", "mm_sideband")


@dataclass(frozen=True)
class AddressingParams:
    """Two-ion addressing configuration.

    :param omega_c: carrier Rabi frequency (rad/s)
    :param k_dot_x: modulation depth ``k.x_MM`` for each ion
    :param trap_drive: rf drive frequency in Hz
    :param rabi_jitter: fractional rms of a per-shot common Rabi-rate error
    :param null_ion: index of the ion parked at the rf null, or ``None``
    """

    omega_c: float
    k_dot_x: tuple = (0.0, 0.1)
    trap_drive: float = TRAP_DRIVE
    rabi_jitter: float = 0.0
    null_ion: int | None = None

    def __post_init__(self):
        kx = tuple(float(x) for x in self.k_dot_x)
        object.__setattr__(self, "k_dot_x", kx)
        if len(kx) != 2:
            raise ValueError("k_dot_x needs one entry per ion")
        if any(x < 0 for x in kx):
            raise ValueError("k_dot_x must be non-negative")
        if self.omega_c < 0 or self.rabi_jitter < 0:
            raise ValueError("omega_c and rabi_jitter must be non-negative")
        if self.null_ion is not None:
            if self.null_ion not in (0, 1):
                raise ValueError("null_ion must be 0, 1 or None")
            if kx[self.null_ion] != 0:
                raise ValueError("the null ion must have k_dot_x = 0")

    @classmethod
    def from_positions(cls, omega_c, positions, kappa, **kw) -> "AddressingParams":
        """Use the linear map ``k.x_MM = |kappa * z|`` for ion positions ``z``
        (measured from the rf null)."""
        kx = tuple(abs(kappa * z) for z in positions)
        null = [i for i, z in enumerate(positions) if z == 0]
        kw.setdefault("null_ion", null[0] if len(null) == 1 else None)
        return cls(omega_c, kx, **kw)

    @classmethod
    def for_mm_rabi(cls, omega_mm, k_dot_x=0.1, **kw) -> "AddressingParams":
        """Pick ``omega_c`` so ion 2 flops at ``omega_mm`` on the sideband; ion 1
        is placed at the null."""
        omega_c = omega_mm / j1(k_dot_x)
        kw.setdefault("null_ion", 0)
        return cls(omega_c, (0.0, k_dot_x), **kw)

    def rates(self, drive: str) -> np.ndarray:
        """Effective Rabi rate of each ion for ``drive``."""
        kx = np.array(self.k_dot_x)
        if drive == "carrier":
            return self.omega_c * j0(kx)
        if drive in ("mm_sideband", "mm"):
            return self.omega_c * j1(kx)
        raise ValueError(f"unknown drive {drive!r}; expected one of {DRIVES}")

    def sideband_frequency(self) -> float:
        """Offset (Hz) of the first micromotion sideband from the carrier."""
        return self.trap_drive


def mm_rabi(omega_c: float, k_dot_x: float):
    """Micromotion-sideband Rabi rate and the carrier reduction factor.

    :returns: ``(omega_c*J1(k_dot_x), J0(k_dot_x))``
    """
    if np.any(np.asarray(k_dot_x) < 0):
        raise ValueError("k_dot_x must be non-negative")
    return omega_c * j1(k_dot_x), j0(k_dot_x)


def small_angle_error(k_dot_x):
    """Relative error of the small-depth form ``x/2`` against ``J1(x)``."""
    x = np.asarray(k_dot_x, dtype=float)
    return np.abs(j1(x) - x / 2) / (x / 2)


def pi_time(omega: float) -> float:
    """Duration of a full ``S -> D`` transfer at Rabi rate ``omega``."""
    return np.pi / omega


@dataclass
class FlopTrace:
    times: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    drive: str = "carrier"
    seed: object = None
    shots: int | None = None
    meta: dict = field(default_factory=dict)

    def populations(self, i: int) -> Populations:
        return Populations(float(self.p0[i]), float(self.p1[i]), float(self.p2[i]))

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.p0, self.p1, self.p2])

    def to_csv(self, path):
        from .io import write_csv
        write_csv(path, ["t", "p0", "p1", "p2"], [self.times, self.p0, self.p1, self.p2])


def _register_from_s(s1, s2):
    """Product-state populations from each ion's probability to be in ``S``."""
    p2 = s1 * s2
    p0 = (1 - s1) * (1 - s2)
    return p0, 1 - p0 - p2, p2


def simulate_register_flops(params: AddressingParams, drive: str, duration=None,
                            times=None, shots: int | None = None, seed=None,
                            points: int = 201, quadrature: int = 40) -> FlopTrace:
    """Rabi flopping of both ions under a carrier or micromotion-sideband drive.

    The Rabi-rate jitter is a Gaussian fractional error common to both ions
    and drawn once per shot. Without ``shots`` the jitter average is done by
    Gauss-Hermite quadrature with ``quadrature`` nodes; with ``shots`` every
    time point gets its own shots, each with a fresh jitter draw and Bernoulli
    outcomes for the two ions.

    :param duration: end of a uniform time grid with ``points`` samples
    :param times: explicit time grid (overrides ``duration``)
    """
    if times is None:
        if duration is None:
            raise ValueError("give either duration or times")
        times = np.linspace(0.0, duration, points)
    times = np.asarray(times, dtype=float)
    rates = params.rates(drive)
    sigma = params.rabi_jitter

    if shots is None:
        if sigma > 0:
            nodes, weights = hermegauss(quadrature)
            weights = weights / weights.sum()
        else:
            nodes, weights = np.zeros(1), np.ones(1)
        scale = 1 + sigma * nodes[:, None]                # (q, 1)
        s1 = np.cos(rates[0] * scale * times / 2) ** 2      # (q, t)
        s2 = np.cos(rates[1] * scale * times / 2) ** 2
        p0, p1, p2 = (weights @ p for p in _register_from_s(s1, s2))
    else:
        rng = np.random.default_rng(seed)
        scale = 1 + sigma * rng.standard_normal((shots, times.size))
        s1 = np.cos(rates[0] * scale * times / 2) ** 2
        s2 = np.cos(rates[1] * scale * times / 2) ** 2
        in_s = (rng.random((2, shots, times.size)) < np.stack([s1, s2]))
        k = in_s.sum(axis=0)
        p0, p1, p2 = ((k == j).mean(axis=0) for j in range(3))
    return FlopTrace(times, np.asarray(p0), np.asarray(p1), np.asarray(p2), drive,
                     seed, shots, {"rates": rates.tolist(), "rabi_jitter": sigma})


@dataclass
class EnvelopeFit:
    omega: float
    tau: float
    flip_fidelity: float
    residual_rms: float


def fit_flop_envelope(times, p_flip, omega_guess: float) -> EnvelopeFit:
    """Fit ``(1 - exp(-(t/tau)^2) cos(omega t))/2`` to a single-ion flip
    probability and report the implied fidelity of one pi flip,
    ``(1 + exp(-(t_pi/tau)^2))/2``.

    A Gaussian envelope is what a Gaussian spread of Rabi rates produces.
    """
    from scipy.optimize import curve_fit

    t = np.asarray(times, dtype=float)
    y = np.asarray(p_flip, dtype=float)

    def model(t, omega, inv_tau):
        return 0.5 * (1 - np.exp(-(t * inv_tau) ** 2) * np.cos(omega * t))

    popt, _ = curve_fit(model, t, y, p0=[omega_guess, 1 / (10 * t[-1])], maxfev=20000)
    omega, inv_tau = popt[0], abs(popt[1])
    tpi = np.pi / omega
    fid = 0.5 * (1 + np.exp(-(tpi * inv_tau) ** 2))
    tau = np.inf if inv_tau == 0 else 1 / inv_tau
    resid = float(np.sqrt(np.mean((y - model(t, *popt)) ** 2)))
    return EnvelopeFit(float(omega), float(tau), float(fid), resid)


# -- composite pulses --------------------------------------------------------

def composite_pi(epsilon):
    """Transfer probability of a plain pi pulse and of ``X(pi/2) Y(pi) X(pi/2)``
    with every rotation angle scaled by ``1 + epsilon``.

    :returns: ``(plain, composite)``
    """
    eps = np.asarray(epsilon, dtype=float)
    if np.any(np.abs(eps) >= 0.5):
        raise ValueError("|epsilon| must be below 0.5")
    a = (1 + eps) * np.pi / 2
    s, c = np.sin(a), np.cos(a)
    return s ** 2, s ** 2 * (1 + c ** 2)


def composite_pi_matrix(epsilon: float):
    """Same quantities as :func:`composite_pi` from explicit 2x2 unitaries."""
    k = 1 + epsilon
    plain = rotation_matrix(k * np.pi, 0.0)
    x_half = rotation_matrix(k * np.pi / 2, 0.0)
    y_pi = rotation_matrix(k * np.pi, np.pi / 2)
    comp = x_half @ y_pi @ x_half
    return float(abs(plain[1, 0]) ** 2), float(abs(comp[1, 0]) ** 2)


def infidelity_exponents(epsilons=None):
    """Log-log slopes of plain and composite infidelity against ``epsilon``."""
    eps = np.geomspace(1e-3, 1e-1, 41) if epsilons is None else np.asarray(epsilons)
    plain, comp = composite_pi(eps)
    lx = np.log(eps)
    return (float(np.polyfit(lx, np.log(1 - plain), 1)[0]),
            float(np.polyfit(lx, np.log(1 - comp), 1)[0]))


def jittered_transfer(sigma: float, composite: bool = False, quadrature: int = 60):
    """Mean transfer probability under Gaussian fractional Rabi jitter."""
    nodes, weights = hermegauss(quadrature)
    weights = weights / weights.sum()
    eps = np.clip(sigma * nodes, -0.499, 0.499)
    plain, comp = composite_pi(eps)
    return float(weights @ (comp if composite else plain))
