"""Molmer-Sorensen gate: closed-form dynamics, 2D scans, map registration,
parity scans and maximum-likelihood Bell-state fidelity.

Frequency axes of :class:`PopulationMap` are in Hz; the time axis is in
seconds. Everything passed to :mod:`iongates.qcore` is converted to rad/s.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import xlogy
from scipy.stats import chi2

from . import qcore
from .qcore import TWO_PI, GateParams, Populations, RegisterState

AXES = ("time", "delta", "delta_asym")


class FitError(RuntimeError):
    """Raised when a fit is unidentifiable or does not converge."""


class ScanError(RuntimeError):
    """A propagation failure inside a scan, tagged with the cell coordinates."""

    def __init__(self, message, coords):
        super().__init__(f"{message} at {coords}")
        self.coords = coords


class RegistrationError(ValueError):
    pass


# -- closed form -------------------------------------------------------------

def alpha_theta(params: GateParams, t):
    """Coherent displacement and geometric phase of the MS loop.

    ``alpha = eta*Omega/delta * (exp(i delta t) - 1)`` and
    ``theta = eta^2 Omega^2 t / (2 delta) * (1 - sinc(delta t))``, with the
    ``delta -> 0`` limits ``alpha = i eta Omega t`` and ``theta = 0``.
    """
    t = np.asarray(t, dtype=float)
    g = params.eta * params.omega
    x = params.delta * t
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    # (exp(ix)-1)/x and (1 - sin(x)/x)/x with their series near zero
    e1 = np.where(small, 1j - x / 2 - 1j * x ** 2 / 6, np.expm1(1j * xs) / xs)
    s1 = np.where(small, x / 6 - x ** 3 / 120, (1 - np.sin(xs) / xs) / xs)
    alpha = g * t * e1
    theta = 0.5 * g ** 2 * t ** 2 * s1
    if alpha.ndim == 0:
        return complex(alpha), float(theta)
    return alpha, theta


@dataclass(frozen=True)
class MSAnalyticPoint:
    alpha: complex
    theta: float
    populations: Populations


def analytic_populations(params: GateParams, t) -> Populations | np.ndarray:
    """Populations for ``Delta = 0`` starting from ``|SS, n=0>``.

    Uses the displacement-operator solution:
    ``P0 = (3 + exp(-2|a|^2) - 4 exp(-|a|^2/2))/8 + sin^2(theta) exp(-|a|^2/2)``,
    ``P1 = (1 - exp(-2|a|^2))/4`` and ``P2`` with ``cos^2`` in place of ``sin^2``.
    For array ``t`` returns an array of shape ``t.shape + (3,)``.
    """
    if params.delta_asym != 0:
        raise ValueError("closed form requires delta_asym = 0; use qcore.propagate")
    if params.initial_n != 0:
        raise ValueError("closed form requires the motional ground state")
    alpha, theta = alpha_theta(params, t)
    a2 = np.abs(alpha) ** 2
    half = np.exp(-a2 / 2)
    lead = (3 + np.exp(-2 * a2) - 4 * half) / 8
    p0 = lead + np.sin(theta) ** 2 * half
    p1 = (1 - np.exp(-2 * a2)) / 4
    p2 = lead + np.cos(theta) ** 2 * half
    if np.ndim(t) == 0:
        return Populations(float(p0), float(p1), float(p2))
    return np.stack([p0, p1, p2], axis=-1)


def analytic_point(params: GateParams, t: float) -> MSAnalyticPoint:
    alpha, theta = alpha_theta(params, t)
    return MSAnalyticPoint(alpha, theta, analytic_populations(params, t))


def gate_point(omega: float, eta: float) -> tuple[float, float]:
    """Detuning ``2*eta*omega`` and loop-closing time ``2*pi/delta``."""
    if omega <= 0 or eta <= 0:
        raise ValueError("omega and eta must be positive")
    delta = 2 * eta * omega
    return delta, TWO_PI / delta


def gate_params(delta_hz: float, eta: float = 0.05, **kwargs) -> GateParams:
    """GateParams whose carrier Rabi rate puts ``delta_hz`` at the gate point."""
    delta = TWO_PI * delta_hz
    return GateParams(omega=delta / (2 * eta), eta=eta, delta=delta, **kwargs)


def bell_fidelity(state, phase: float | None = None) -> float:
    """Overlap with ``(|SS> + e^{i phase}|DD>)/sqrt(2)``.

    With ``phase=None`` the Bell phase is optimised, which gives
    ``(P_SS + P_DD)/2 + |rho_SS,DD|``, the quantity the parity method
    measures.
    """
    rho = _spin_density(state)
    if phase is None:
        return float(np.real(rho[0, 0] + rho[3, 3]) / 2 + abs(rho[0, 3]))
    bell = np.array([1, 0, 0, np.exp(1j * phase)]) / np.sqrt(2)
    return float(np.real(bell.conj() @ rho @ bell))


def _spin_density(state) -> np.ndarray:
    if isinstance(state, RegisterState):
        return state.spin_density()
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("expected a RegisterState or a 4x4 spin density matrix")
    return rho


# -- population maps ---------------------------------------------------------

@dataclass
class PopulationMap:
    """Gridded P0/P1/P2 over two scan axes; arrays have shape (len1, len2)."""

    axis1: str
    grid1: np.ndarray
    axis2: str
    grid2: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    meta: dict = field(default_factory=dict)

    def populations(self) -> np.ndarray:
        return np.stack([self.p0, self.p1, self.p2], axis=-1)

    def grid(self, axis: str) -> np.ndarray:
        if axis == self.axis1:
            return self.grid1
        if axis == self.axis2:
            return self.grid2
        raise KeyError(axis)

    def to_csv(self, path) -> None:
        from .io import write_csv
        g1, g2 = np.meshgrid(self.grid1, self.grid2, indexing="ij")
        write_csv(path, [self.axis1, self.axis2, "p0", "p1", "p2"],
                  [g1.ravel(), g2.ravel(), self.p0.ravel(), self.p1.ravel(),
                   self.p2.ravel()])

    def to_json(self) -> str:
        meta = dict(self.meta)
        meta.update(axis1=self.axis1, axis2=self.axis2,
                    grid1=list(map(float, self.grid1)),
                    grid2=list(map(float, self.grid2)))
        return json.dumps(meta, sort_keys=True, indent=2)

    @classmethod
    def from_csv(cls, path, meta=None):
        from .io import read_csv
        header, cols = read_csv(path)
        a1, a2 = header[0], header[1]
        g1 = np.unique(cols[0])
        g2 = np.unique(cols[1])
        shape = (g1.size, g2.size)
        if cols[0].size != g1.size * g2.size:
            raise ValueError("CSV does not hold a full rectangular grid")
        order = np.lexsort((cols[1], cols[0]))
        arrays = [c[order].reshape(shape) for c in cols[2:5]]
        return cls(a1, g1, a2, g2, *arrays, meta=dict(meta or {}))


def _cell_params(params, assignments):
    changes = {}
    for axis, value in assignments.items():
        if axis == "delta":
            changes["delta"] = TWO_PI * value
        elif axis == "delta_asym":
            changes["delta_asym"] = TWO_PI * value
    return params.replace(**changes)


def scan_map(params: GateParams, axis1: str, grid1, axis2: str, grid2,
             shots: int | None = None, seed=None, t: float | None = None,
             spin=None, method: str = "ode", tol: float = 1e-8,
             threads: int = 1) -> PopulationMap:
    """Populations over a 2D grid of (time, delta, delta_asym).

    Each cell is propagated with :func:`qcore.evolve`; when one axis is time
    a single integration per value of the other axis yields the full row.
    If neither axis is time, every cell is evaluated at time ``t``
    (default: the gate time of ``params``). With ``shots`` each cell is
    replaced by a trinomial sample from its exact populations, drawn from a
    generator seeded by ``seed``.
    """
    if axis1 == axis2 or axis1 not in AXES or axis2 not in AXES:
        raise ValueError(f"axes must be two distinct names from {AXES}")
    grid1 = np.asarray(grid1, dtype=float)
    grid2 = np.asarray(grid2, dtype=float)
    for g in (grid1, grid2):
        if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ValueError("grids must be strictly monotone")
    spin = np.array([1, 0, 0, 0]) if spin is None else np.asarray(spin)
    pops = np.empty((grid1.size, grid2.size, 3))

    if "time" in (axis1, axis2):
        time_first = axis1 == "time"
        tgrid = grid1 if time_first else grid2
        other_axis = axis2 if time_first else axis1
        other = grid2 if time_first else grid1
        if np.any(tgrid < 0):
            raise ValueError("times must be non-negative")
        order = np.argsort(tgrid)
        times = np.concatenate([[0.0], tgrid[order]])

        def row(value):
            p = _cell_params(params, {other_axis: value})
            try:
                psi0 = RegisterState.from_spin(spin, p.initial_n, p.n_max)
                amps = qcore.evolve(psi0, p, times, tol=tol, method=method)[1:]
            except (qcore.CutoffError, qcore.PropagationError) as exc:
                raise ScanError(str(exc), {other_axis: float(value)}) from exc
            out = np.empty((tgrid.size, 3))
            for k, a in zip(order, amps):
                out[k] = qcore.measure_populations(RegisterState(a, p.n_max)).as_array()
            return out

        rows = _map(row, other, threads)
        for j, r in enumerate(rows):
            if time_first:
                pops[:, j] = r
            else:
                pops[j, :] = r
    else:
        t_cell = qcore.TWO_PI / params.delta if t is None else t

        def cell(ij):
            i, j = ij
            p = _cell_params(params, {axis1: grid1[i], axis2: grid2[j]})
            try:
                psi0 = RegisterState.from_spin(spin, p.initial_n, p.n_max)
                psi = qcore.propagate(psi0, p, 0.0, t_cell, tol=tol, method=method)
            except (qcore.CutoffError, qcore.PropagationError) as exc:
                raise ScanError(str(exc), {axis1: float(grid1[i]),
                                           axis2: float(grid2[j])}) from exc
            return qcore.measure_populations(psi).as_array()

        idx = [(i, j) for i in range(grid1.size) for j in range(grid2.size)]
        for (i, j), v in zip(idx, _map(cell, idx, threads)):
            pops[i, j] = v

    meta = {"params": _params_dict(params), "method": method, "tol": tol,
            "shots": shots, "seed": seed}
    if shots is not None:
        rng = np.random.default_rng(seed)
        clipped = np.clip(pops, 0, None)
        clipped /= clipped.sum(axis=-1, keepdims=True)
        counts = rng.multinomial(shots, clipped)
        pops = counts / shots
    return PopulationMap(axis1, grid1, axis2, grid2, pops[..., 0], pops[..., 1],
                         pops[..., 2], meta=meta)


def analytic_map(params: GateParams, times, deltas_hz) -> PopulationMap:
    """Time x delta map from the closed form (``Delta = 0``, ground state).

    Cheap enough for detunings near the sideband, where the propagator would
    need a very large Fock cutoff.
    """
    times = np.asarray(times, dtype=float)
    deltas_hz = np.asarray(deltas_hz, dtype=float)
    pops = np.empty((times.size, deltas_hz.size, 3))
    for j, d in enumerate(deltas_hz):
        pops[:, j] = analytic_populations(params.replace(delta=TWO_PI * d), times)
    meta = {"params": _params_dict(params), "method": "analytic"}
    return PopulationMap("time", times, "delta", deltas_hz, pops[..., 0], pops[..., 1],
                         pops[..., 2], meta=meta)


def _map(fn, items, threads):
    items = list(items)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _params_dict(params: GateParams) -> dict:
    return {
        "omega_hz": params.omega / TWO_PI,
        "eta": params.eta,
        "delta_hz": params.delta / TWO_PI,
        "delta_asym_hz": params.delta_asym / TWO_PI,
        "nu_hz": params.nu / TWO_PI,
        "n_max": params.n_max,
        "initial_n": params.initial_n,
    }


def register_maps(measured: PopulationMap, calculated: PopulationMap,
                  axis: str = "delta", min_overlap: float = 0.25) -> float:
    """Rigid offset along ``axis`` (Hz) aligning ``calculated`` to ``measured``.

    Finds ``s`` minimising the mean squared population difference between
    ``measured(x)`` and ``calculated(x - s)``, first on the lattice of the
    calculated grid step over +-half the measured grid span, then by a
    parabolic fit through the best lattice point and its neighbours.
    Off-lattice positions of the calculated map are linearly interpolated.
    """
    other = _other_axis(measured, axis)
    if _other_axis(calculated, axis) != other:
        raise RegistrationError("maps do not share the same pair of axes")
    m_grid = np.asarray(measured.grid(axis), dtype=float)
    c_grid = np.asarray(calculated.grid(axis), dtype=float)
    if not np.allclose(measured.grid(other), calculated.grid(other)):
        raise RegistrationError(f"the {other!r} grids differ")
    m = _along(measured, axis)
    c = _along(calculated, axis)
    if c_grid[0] > c_grid[-1]:
        c_grid, c = c_grid[::-1], c[::-1]
    step = float(np.median(np.abs(np.diff(c_grid))))
    half_span = float(np.ptp(m_grid)) / 2
    # candidate shifts put measured points exactly on calculated grid points
    d0 = float(np.min(m_grid) - c_grid[0])
    k_lo = int(np.ceil((-half_span - d0) / step - 1e-9))
    k_hi = int(np.floor((half_span - d0) / step + 1e-9))
    shifts = d0 + np.arange(k_lo, k_hi + 1) * step
    if shifts.size == 0:
        raise RegistrationError("no lattice shift within +-half the grid span")
    costs = np.array([_registration_cost(s, m_grid, m, c_grid, c, min_overlap)
                      for s in shifts])
    if not np.any(np.isfinite(costs)):
        raise RegistrationError("no shift within bounds leaves enough overlap")
    k = int(np.nanargmin(costs))
    best = shifts[k]
    if costs[k] <= 1e-24:
        return float(best)
    if 0 < k < len(shifts) - 1 and np.all(np.isfinite(costs[k - 1:k + 2])):
        y0, y1, y2 = costs[k - 1:k + 2]
        curv = y0 - 2 * y1 + y2
        if curv > 0:
            best += 0.5 * step * (y0 - y2) / curv
    return float(best)


def _other_axis(pm: PopulationMap, axis: str) -> str:
    if axis == pm.axis1:
        return pm.axis2
    if axis == pm.axis2:
        return pm.axis1
    raise RegistrationError(f"map has no axis {axis!r}")


def _along(pm: PopulationMap, axis: str) -> np.ndarray:
    """Populations with the registration axis first: shape (n_axis, n_other, 3)."""
    pops = pm.populations()
    return pops if axis == pm.axis1 else np.swapaxes(pops, 0, 1)


def _registration_cost(shift, m_grid, m, c_grid, c, min_overlap):
    x = m_grid - shift
    inside = (x >= c_grid[0] - 1e-9 * abs(c_grid[0] + 1)) & \
             (x <= c_grid[-1] + 1e-9 * abs(c_grid[-1] + 1))
    if inside.sum() < max(2, min_overlap * m_grid.size):
        return np.inf
    xi = np.clip(x[inside], c_grid[0], c_grid[-1])
    pos = np.interp(xi, c_grid, np.arange(c_grid.size))
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    hi = np.minimum(lo + 1, c_grid.size - 1)
    interp = c[lo] * (1 - frac)[:, None, None] + c[hi] * frac[:, None, None]
    return float(np.mean((m[inside] - interp) ** 2))


# -- parity and fidelity -----------------------------------------------------

@dataclass
class ParityData:
    """Empirical parity after an analysis pi/2 pulse of phase ``phases[i]``.

    ``shots_per_phase`` is ``None`` for exact expectation values.
    ``p_even`` is P0+P2 of the gate output without the analysis pulse.
    """

    phases: np.ndarray
    shots_per_phase: int | None
    parity_samples: np.ndarray
    p_even: float | None = None
    p_even_std: float = 0.0
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"phases": list(map(float, self.phases)),
                "shots_per_phase": self.shots_per_phase,
                "parity_samples": list(map(float, self.parity_samples)),
                "p_even": self.p_even, "p_even_std": self.p_even_std,
                "seed": self.seed}


@dataclass
class ParityFit:
    amplitude: float
    phase: float
    fidelity: float
    confidence: tuple[float, float]
    fidelity_std: float
    amplitude_interval: tuple[float, float]
    p_even: float
    log_likelihood: float

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["confidence"] = list(self.confidence)
        d["amplitude_interval"] = list(self.amplitude_interval)
        return json.dumps(d, sort_keys=True, indent=2)


def parity_expectation(state, phases) -> np.ndarray:
    """Exact parity ``P0 + P2 - P1`` after a collective pi/2 pulse of each phase."""
    rho = _spin_density(state)
    zz = np.diag([1.0, -1.0, -1.0, 1.0])
    out = []
    for phi in np.atleast_1d(phases):
        r = qcore.rotation_matrix(np.pi / 2, phi)
        u = np.kron(r, r)
        out.append(np.real(np.trace(zz @ u @ rho @ u.conj().T)))
    return np.array(out)


def _rotated_populations(rho, phi):
    r = qcore.rotation_matrix(np.pi / 2, phi)
    u = np.kron(r, r)
    diag = np.real(np.diag(u @ rho @ u.conj().T))
    return qcore.spin_populations(diag).as_array()


def parity_scan(state, phases, shots: int | None = None, seed=None,
                population_shots: int | None = None) -> ParityData:
    """Simulate a parity scan of a gate output.

    ``state`` is a :class:`RegisterState` or a 4x4 spin density matrix. For
    each phase the collective analysis rotation is applied and, if ``shots``
    is given, the parity is estimated from a trinomial sample. P0+P2 of the
    unrotated state is recorded exactly, or sampled with
    ``population_shots`` shots.
    """
    rho = _spin_density(state)
    phases = np.asarray(phases, dtype=float)
    pops0 = qcore.spin_populations(np.diag(rho)).as_array()
    rng = np.random.default_rng(seed)
    samples = np.empty(phases.size)
    for i, phi in enumerate(phases):
        p = np.clip(_rotated_populations(rho, phi), 0, None)
        p /= p.sum()
        if shots is None:
            samples[i] = p[0] + p[2] - p[1]
        else:
            n = rng.multinomial(shots, p)
            samples[i] = (n[0] + n[2] - n[1]) / shots
    p_even = float(pops0[0] + pops0[2])
    p_even_std = 0.0
    if population_shots is not None:
        pe = np.clip(pops0, 0, None)
        n = rng.multinomial(population_shots, pe / pe.sum())
        p_even = float((n[0] + n[2]) / population_shots)
        p_even_std = float(np.sqrt(max(p_even * (1 - p_even), 1e-12) / population_shots))
    return ParityData(phases, shots, samples, p_even, p_even_std, seed)


def _nll(amp, phi0, phases, k_even, n):
    q = 0.5 * (1 + amp * np.sin(2 * phases + phi0))
    q = np.clip(q, 0.0, 1.0)
    return -float(np.sum(xlogy(k_even, q) + xlogy(n - k_even, 1 - q)))


def ml_fit_parity(data: ParityData, p_even: float | None = None,
                  level: float = 0.95) -> ParityFit:
    """Maximum-likelihood fit of ``parity(phi) = A sin(2 phi + phi0)``.

    Each phase contributes a binomial likelihood for the number of even
    outcomes with mean ``(1 + parity)/2``. The fidelity is
    ``p_even/2 + A/2``. The confidence interval on ``A`` is the profile
    likelihood-ratio interval at ``level`` (phase profiled out), mapped to the
    fidelity and widened in quadrature by ``data.p_even_std``. In exact mode
    (``shots_per_phase is None``) every phase carries unit weight and the
    interval collapses to the point estimate.
    """
    phases = np.asarray(data.phases, dtype=float)
    p_even = data.p_even if p_even is None else p_even
    if p_even is None:
        raise ValueError("P0+P2 of the gate output is required for the fidelity")
    if np.unique(np.round(phases, 12)).size < 5:
        raise FitError("fit unidentifiable: fewer than five distinct phases")
    distinct = np.unique(np.round(np.mod(phases, np.pi), 12))
    if distinct.size < 3:
        raise FitError("fit unidentifiable: fewer than three distinct phases mod pi")
    exact = data.shots_per_phase is None
    n = 1.0 if exact else float(data.shots_per_phase)
    parity = np.clip(np.asarray(data.parity_samples, dtype=float), -1, 1)
    k_even = n * (1 + parity) / 2

    design = np.column_stack([np.sin(2 * phases), np.cos(2 * phases)])
    (a, b), *_ = np.linalg.lstsq(design, parity, rcond=None)
    amp0 = min(float(np.hypot(a, b)), 1.0)
    phi00 = float(np.arctan2(b, a))

    def f(x):
        return _nll(x[0], x[1], phases, k_even, n)

    best = (amp0, phi00)
    best_val = f(best)
    res = minimize(f, x0=[min(amp0, 1 - 1e-9), phi00], method="L-BFGS-B",
                   bounds=[(0.0, 1.0), (None, None)],
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
    if res.fun < best_val:
        best, best_val = (float(res.x[0]), float(res.x[1])), float(res.fun)
    amp, phi0 = best
    phi0 = float(np.mod(phi0 + np.pi, TWO_PI) - np.pi)

    if exact:
        lo, hi = amp, amp
    else:
        lo, hi = _profile_interval(amp, phi0, best_val, phases, k_even, n, level)
    fid = p_even / 2 + amp / 2
    conf_lo = p_even / 2 + lo / 2
    conf_hi = p_even / 2 + hi / 2
    z = float(np.sqrt(chi2.ppf(level, 1)))
    half_std = (hi - lo) / 2 / z / 2
    fid_std = float(np.hypot(half_std, data.p_even_std / 2))
    if data.p_even_std:
        conf_lo -= z * data.p_even_std / 2
        conf_hi += z * data.p_even_std / 2
    fid = float(np.clip(fid, 0, 1))
    conf = (float(np.clip(min(conf_lo, fid), 0, 1)), float(np.clip(max(conf_hi, fid), 0, 1)))
    return ParityFit(amplitude=amp, phase=phi0, fidelity=fid, confidence=conf,
                     fidelity_std=fid_std, amplitude_interval=(lo, hi),
                     p_even=float(p_even), log_likelihood=-best_val)


def _profile_interval(amp, phi0, nll_min, phases, k_even, n, level):
    drop = chi2.ppf(level, 1) / 2

    def profile(a):
        r = minimize_scalar(lambda p: _nll(a, p, phases, k_even, n),
                            bracket=(phi0 - 0.3, phi0 + 0.3))
        return min(r.fun, _nll(a, phi0, phases, k_even, n)) - nll_min - drop

    lo = 0.0
    if amp > 0 and profile(0.0) > 0:
        lo = brentq(profile, 0.0, amp, xtol=1e-10)
    hi = 1.0
    if amp < 1 and profile(1.0) > 0:
        hi = brentq(profile, amp, 1.0, xtol=1e-10)
    return float(lo), float(hi)
