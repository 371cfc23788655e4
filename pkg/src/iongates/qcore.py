"""Two optical qubits coupled to one vibrational mode.

The register basis is ``|q1, q2, n>`` with ``q = 0`` for ``S`` and ``q = 1``
for ``D`` and ``n`` the Fock number of the gate mode, flattened as
``index = (2*q1 + q2) * (n_max + 1) + n``.

Internally every frequency is angular (rad/s). The spin ladder convention is
``sigma_minus = |D><S|`` so that the bichromatic interaction term
``i*eta*(a^dag ...)*sigma_minus`` carries ``|SS,0>`` into ``|SD,1>`` with
matrix element ``+i*eta*Omega/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

S, D = 0, 1
TWO_PI = 2 * np.pi

#: Lifetime of the D5/2 level in seconds.
D_LIFETIME = 0.390


class CutoffError(ValueError):
    """Raised when the Fock cutoff cannot hold the coherent excursion."""


class PropagationError(RuntimeError):
    """Raised when a numerical propagation cannot be trusted."""


class LeakageError(PropagationError):
    """Raised when population reaches the top of the truncated Fock space."""


@dataclass(frozen=True)
class GateParams:
    """Parameters of the bichromatic (Molmer-Sorensen) interaction.

    All rates are angular frequencies in rad/s. Use :meth:`from_hz` to build
    from ordinary frequencies.
    """

    omega: float
    eta: float
    delta: float
    delta_asym: float = 0.0
    nu: float = TWO_PI * 0.98e6
    n_max: int = 20
    initial_n: int = 0

    @classmethod
    def from_hz(cls, omega_hz, eta, delta_hz, delta_asym_hz=0.0, nu_hz=0.98e6,
                n_max=20, initial_n=0):
        return cls(TWO_PI * omega_hz, eta, TWO_PI * delta_hz, TWO_PI * delta_asym_hz,
                   TWO_PI * nu_hz, n_max, initial_n)

    @property
    def alpha_max(self) -> float:
        """Largest coherent excursion ``2*eta*omega/|delta|`` over a loop."""
        if self.omega == 0:
            return 0.0
        if self.delta == 0:
            return np.inf
        return 2 * self.eta * abs(self.omega) / abs(self.delta)

    def validate(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.n_max < 8:
            raise CutoffError(f"n_max must be >= 8, got {self.n_max}")
        if not 0 <= self.initial_n <= self.n_max:
            raise CutoffError(f"initial_n={self.initial_n} outside Fock space")
        if self.alpha_max ** 2 + self.initial_n >= self.n_max / 2:
            raise CutoffError(
                f"coherent excursion |alpha|^2={self.alpha_max ** 2:.3g} plus "
                f"initial_n={self.initial_n} does not fit n_max={self.n_max}")

    def replace(self, **changes) -> "GateParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return GateParams(**values)


@dataclass(frozen=True)
class Populations:
    """Probabilities of finding zero, one and two qubits in ``S``."""

    p0: float
    p1: float
    p2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2])

    @property
    def parity(self) -> float:
        return self.p0 + self.p2 - self.p1

    @property
    def total(self) -> float:
        return self.p0 + self.p1 + self.p2


@dataclass(frozen=True, eq=False)
class RegisterState:
    """Amplitude vector over the (qubit, qubit, Fock) product basis."""

    amplitudes: np.ndarray
    n_max: int
    valid: bool = field(default=True)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (4 * (self.n_max + 1),):
            raise ValueError(f"amplitude vector of shape {amps.shape} does not "
                             f"match n_max={self.n_max}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, q1: int = S, q2: int = S, n: int = 0, n_max: int = 20):
        amps = np.zeros(4 * (n_max + 1), dtype=complex)
        amps[_index(q1, q2, n, n_max)] = 1.0
        return cls(amps, n_max)

    @classmethod
    def from_spin(cls, spin: Sequence[complex], n: int = 0, n_max: int = 20):
        """Product of a 4-component spin vector (SS, SD, DS, DD) and ``|n>``."""
        spin = np.asarray(spin, dtype=complex)
        motion = np.zeros(n_max + 1, dtype=complex)
        motion[n] = 1.0
        return cls(np.kron(spin, motion), n_max)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (spin index, Fock number)."""
        return self.amplitudes.reshape(4, self.n_max + 1)

    def fock_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.as_matrix()) ** 2, axis=0)

    def spin_density(self) -> np.ndarray:
        """Reduced 4x4 spin density matrix with the motion traced out."""
        m = self.as_matrix()
        return m @ m.conj().T

    def mean_a(self) -> complex:
        """Expectation value of the annihilation operator."""
        m = self.as_matrix()
        n = np.arange(1, self.n_max + 1)
        return complex(np.sum(m[:, :-1].conj() * m[:, 1:] * np.sqrt(n)))

    def __add__(self, other):
        return RegisterState(self.amplitudes + other.amplitudes, self.n_max)

    def __rmul__(self, scalar):
        return RegisterState(scalar * self.amplitudes, self.n_max)


def _index(q1, q2, n, n_max):
    return (2 * q1 + q2) * (n_max + 1) + n


@lru_cache(maxsize=32)
def _operators(n_max: int):
    """Spin and motion operators on the full register (cached per cutoff)."""
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)
    n_op = np.diag(np.arange(n_max + 1)).astype(complex)
    eye_m = np.eye(n_max + 1)
    sm = np.zeros((2, 2), dtype=complex)
    sm[D, S] = 1.0
    eye2 = np.eye(2)
    j_minus = np.kron(sm, eye2) + np.kron(eye2, sm)
    k_exc = np.diag([0.0, 1.0, 1.0, 2.0]).astype(complex)
    ops = {
        "a_jm": np.kron(j_minus, a),
        "ad_jm": np.kron(j_minus, a.conj().T),
        "num": np.kron(np.eye(4), n_op),
        "exc": np.kron(k_exc, eye_m),
    }
    for value in ops.values():
        value.setflags(write=False)
    return ops


def build_ms_generator(params: GateParams, t: float) -> np.ndarray:
    """Interaction Hamiltonian ``H(t)/hbar`` in rad/s.

    ``(Omega/2) * (i*eta*exp(-i*Delta*t) * (a^dag exp(-i*delta*t)
    + a exp(i*delta*t)) * (sigma1_- + sigma2_-) + h.c.)``, truncated at
    ``params.n_max``.

    :raises CutoffError: if the excursion does not fit the Fock cutoff.
    """
    params.validate()
    ops = _operators(params.n_max)
    pref = 0.5 * params.omega * 1j * params.eta
    h = pref * (np.exp(-1j * (params.delta_asym + params.delta) * t) * ops["ad_jm"]
                + np.exp(-1j * (params.delta_asym - params.delta) * t) * ops["a_jm"])
    return h + h.conj().T


def _frame_generator(params: GateParams) -> np.ndarray:
    """Time-independent generator in the frame co-rotating with the drive.

    ``H(t) = W(t)^dag H' W(t) + ...`` with ``W(t) = exp(i t (delta*N + Delta*K))``
    where ``N`` counts phonons and ``K`` counts D excitations.
    """
    ops = _operators(params.n_max)
    h0 = build_ms_generator(params, 0.0)
    return h0 - params.delta * ops["num"] - params.delta_asym * ops["exc"]


def _frame_phase(params: GateParams, t: float) -> np.ndarray:
    ops = _operators(params.n_max)
    diag = params.delta * np.real(np.diag(ops["num"])) \
        + params.delta_asym * np.real(np.diag(ops["exc"]))
    return np.exp(1j * diag * t)


def evolve(state: RegisterState, params: GateParams, times, tol: float = 1e-8,
           method: str = "ode", leak_tol: float = 1e-6) -> np.ndarray:
    """Propagate ``state`` from ``times[0]`` and return amplitudes at ``times``.

    :param method: ``"ode"`` integrates the time-dependent Schrodinger
        equation with an adaptive 8th order Runge-Kutta scheme whose local
        error per step is controlled by ``tol``. ``"frame"`` exponentiates the
        time-independent co-rotating generator exactly; it is used as an
        independent cross-check and for dense parameter scans.
    :returns: complex array of shape ``(len(times), dim)``.
    :raises LeakageError: if the top two Fock levels hold more than
        ``leak_tol`` of the population at any returned time.
    """
    params.validate()
    if state.n_max != params.n_max:
        raise ValueError("state and params use different Fock cutoffs")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    psi0 = np.array(state.amplitudes)
    t0 = times[0]

    if params.omega == 0:
        out = np.tile(psi0, (times.size, 1))
    elif method == "frame":
        evals, evecs = np.linalg.eigh(_frame_generator(params))
        chi0 = evecs.conj().T @ (_frame_phase(params, t0) * psi0)
        out = np.empty((times.size, psi0.size), dtype=complex)
        for i, t in enumerate(times):
            chi = evecs @ (np.exp(-1j * evals * (t - t0)) * chi0)
            out[i] = _frame_phase(params, t).conj() * chi
    elif method == "ode":
        out = _evolve_ode(psi0, params, times, tol)
    else:
        raise ValueError(f"unknown method {method!r}")

    _check_leakage(out, params.n_max, leak_tol)
    return out


def _evolve_ode(psi0, params, times, tol):
    ops = _operators(params.n_max)
    pref = 0.5 * params.omega * 1j * params.eta
    up = pref * ops["ad_jm"]
    down = pref * ops["a_jm"]
    w_up = params.delta_asym + params.delta
    w_down = params.delta_asym - params.delta

    def rhs(t, y):
        c_up = np.exp(-1j * w_up * t)
        c_down = np.exp(-1j * w_down * t)
        # H = c_up*up + c_down*down + h.c.
        fwd = c_up * (up @ y) + c_down * (down @ y)
        back = np.conj(c_up) * (up.conj().T @ y) + np.conj(c_down) * (down.conj().T @ y)
        return -1j * (fwd + back)

    if times[-1] == times[0]:
        return np.tile(psi0, (times.size, 1))
    t_unique, inverse = np.unique(times, return_inverse=True)
    sol = solve_ivp(rhs, (times[0], times[-1]), psi0, method="DOP853",
                    t_eval=t_unique, rtol=tol, atol=tol * 1e-2)
    if sol.status != 0:
        raise PropagationError(f"integration failed: {sol.message}")
    return sol.y.T[inverse]


def _check_leakage(amps, n_max, leak_tol):
    m = np.abs(amps.reshape(amps.shape[0], 4, n_max + 1)) ** 2
    leak = np.max(np.sum(m[:, :, -2:], axis=(1, 2)))
    if leak >= leak_tol:
        raise LeakageError(f"population {leak:.3g} in the top two Fock levels "
                           f"exceeds leak_tol={leak_tol:g}")


def propagate(state: RegisterState, params: GateParams, t0: float, t1: float,
              tol: float = 1e-8, method: str = "ode",
              leak_tol: float = 1e-6) -> RegisterState:
    """Time-ordered evolution of ``state`` from ``t0`` to ``t1``.

    The norm is never renormalised; its drift is a quality diagnostic.
    """
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    amps = evolve(state, params, [t0, t1], tol=tol, method=method, leak_tol=leak_tol)
    return RegisterState(amps[-1], params.n_max)


def rotation_matrix(angle: float, phase: float) -> np.ndarray:
    """Single-qubit carrier rotation ``exp(-i*angle/2*(cos(phase)X + sin(phase)Y))``."""
    c = np.cos(angle / 2)
    s = np.sin(angle / 2)
    return np.array([[c, -1j * s * np.exp(-1j * phase)],
                     [-1j * s * np.exp(1j * phase), c]])


def apply_rotation(state: RegisterState, target: str, angle: float,
                   phase: float = 0.0) -> RegisterState:
    """Ideal carrier rotation on ``"qubit1"``, ``"qubit2"`` or ``"both"``."""
    r = rotation_matrix(angle, phase)
    eye = np.eye(2)
    if target == "qubit1":
        spin = np.kron(r, eye)
    elif target == "qubit2":
        spin = np.kron(eye, r)
    elif target == "both":
        spin = np.kron(r, r)
    else:
        raise ValueError(f"unknown rotation target {target!r}")
    amps = spin @ state.as_matrix()
    return RegisterState(amps.ravel(), state.n_max)


# number of qubits in S for the spin basis SS, SD, DS, DD
_S_COUNT = np.array([2, 1, 1, 0])


def spin_populations(spin_diag) -> Populations:
    """Populations from the diagonal (SS, SD, DS, DD) of a spin density."""
    diag = np.real(np.asarray(spin_diag))
    p = np.bincount(_S_COUNT, weights=diag, minlength=3)
    return Populations(float(p[0]), float(p[1]), float(p[2]))


def measure_populations(state: RegisterState) -> Populations:
    """Trace out motion and return (P0, P1, P2)."""
    probs = np.sum(np.abs(state.as_matrix()) ** 2, axis=1)
    return spin_populations(probs)


def thermal_weights(nbar: float, n_max: int, cutoff: float = 1e-10) -> np.ndarray:
    """Thermal occupation of Fock states ``0..n_max`` (renormalised on the cut)."""
    n = np.arange(n_max + 1)
    if nbar == 0:
        w = (n == 0).astype(float)
    else:
        w = (nbar / (1 + nbar)) ** n / (1 + nbar)
    w[w < cutoff] = 0.0
    return w / w.sum()


def thermal_populations(params: GateParams, times, nbar: float, spin=None,
                        tol: float = 1e-8, method: str = "ode") -> np.ndarray:
    """Incoherent average over thermally weighted Fock initial states.

    :returns: array of shape ``(len(times), 3)`` with P0, P1, P2.
    """
    spin = np.array([1, 0, 0, 0]) if spin is None else spin
    times = np.atleast_1d(times)
    weights = thermal_weights(nbar, params.n_max)
    out = np.zeros((times.size, 3))
    for n, w in enumerate(weights):
        if w == 0:
            continue
        p = params.replace(initial_n=n)
        amps = evolve(RegisterState.from_spin(spin, n, p.n_max), p, times,
                      tol=tol, method=method)
        for i, a in enumerate(amps):
            out[i] += w * measure_populations(RegisterState(a, p.n_max)).as_array()
    return out


def decay_populations(pops: Populations, duration: float,
                      lifetime: float = D_LIFETIME) -> Populations:
    """Apply independent D -> S decay over ``duration`` to each ion."""
    p = 1 - np.exp(-duration / lifetime)
    q = 1 - p
    # k ions in S, 2-k in D; each D ion independently decays to S
    p0 = pops.p0 * q * q
    p1 = pops.p0 * 2 * p * q + pops.p1 * q
    p2 = pops.p0 * p * p + pops.p1 * p + pops.p2
    return Populations(p0, p1, p2)
