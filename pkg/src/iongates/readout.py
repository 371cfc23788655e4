"""Fluorescence readout of the two-ion register.

Each ion in ``S`` scatters ``lambda_bright`` detected photons per window on
average, the background adds ``lambda_dark``. A count histogram is therefore
a mixture of three components, one per number of bright ions, with fixed
means. Optionally an ion in ``D`` may decay to ``S`` during the window and
fluoresce for the remainder of it; that tail is folded exactly into the
component distributions.

Histograms are stored as occurrences per photon number ``0..K``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from .noisekit import seed_sequence
from .qcore import D_LIFETIME, Populations


@dataclass(frozen=True)
class DetectionModel:
    """:param lambda_bright: mean counts per ``S`` ion per window
    :param lambda_dark: mean background counts per window
    :param window: detection window in seconds
    :param lifetime: ``D`` lifetime in seconds
    :param decay_correction: include decay of ``D`` during the window
    """

    lambda_bright: float = 30.0
    lambda_dark: float = 0.5
    window: float = 1e-3
    lifetime: float = D_LIFETIME
    decay_correction: bool = True

    def __post_init__(self):
        if not self.lambda_bright > self.lambda_dark >= 0:
            raise ValueError("need lambda_bright > lambda_dark >= 0")
        if self.window <= 0 or self.lifetime <= 0:
            raise ValueError("window and lifetime must be positive")

    @property
    def decay_probability(self) -> float:
        return float(-np.expm1(-self.window / self.lifetime)) if self.decay_correction else 0.0

    def means(self) -> np.ndarray:
        """Component means ignoring decay."""
        return self.lambda_dark + self.lambda_bright * np.arange(3)

    def to_dict(self) -> dict:
        return {"lambda_bright": self.lambda_bright, "lambda_dark": self.lambda_dark,
                "window": self.window, "lifetime": self.lifetime,
                "decay_correction": self.decay_correction}


def _decay_tail(model: DetectionModel, kmax: int, nodes: int = 64) -> np.ndarray:
    """Count distribution added by one ``D`` ion over ``0..kmax``."""
    g = np.zeros(kmax + 1)
    g[0] = 1.0
    if not model.decay_correction:
        return g
    w, life = model.window, model.lifetime
    x, wx = np.polynomial.legendre.leggauss(nodes)
    tau = 0.5 * w * (x + 1)
    dens = 0.5 * w * wx * np.exp(-tau / life) / life
    k = np.arange(kmax + 1)
    tail = poisson.pmf(k[:, None], model.lambda_bright * (1 - tau / w)[None, :]) @ dens
    g *= np.exp(-w / life)
    return g + tail


def component_pmf(model: DetectionModel, kmax: int) -> np.ndarray:
    """``(3, kmax+1)`` count distributions for 0, 1 and 2 bright ions."""
    k = np.arange(kmax + 1)
    g = _decay_tail(model, kmax)
    out = np.empty((3, kmax + 1))
    for j in range(3):
        base = poisson.pmf(k, model.lambda_dark + j * model.lambda_bright)
        for _ in range(2 - j):
            base = np.convolve(base, g)[:kmax + 1]
        out[j] = base
    return out


def _pmf_limit(model: DetectionModel) -> int:
    top = model.lambda_dark + 2 * model.lambda_bright
    return int(np.ceil(top + 12 * np.sqrt(top) + 20))


@dataclass
class PhotonHistogram:
    """Occurrences per photon number; ``occurrences[k]`` counts windows with
    ``k`` detected photons. Non-integer occurrences are allowed (expected
    histograms)."""

    occurrences: np.ndarray
    seed: object = None

    def __post_init__(self):
        self.occurrences = np.asarray(self.occurrences, dtype=float)
        if np.any(self.occurrences < 0):
            raise ValueError("occurrences must be non-negative")

    @property
    def shots(self) -> float:
        return float(self.occurrences.sum())

    @property
    def counts(self) -> np.ndarray:
        return np.arange(self.occurrences.size)

    def mean(self) -> float:
        return float(self.counts @ self.occurrences / self.shots)

    def to_csv(self, path):
        from .io import write_csv
        occ = self.occurrences
        col = occ.astype(int) if np.all(occ == np.round(occ)) else occ
        write_csv(path, ["count", "occurrences"], [self.counts, col])

    @classmethod
    def from_csv(cls, path) -> "PhotonHistogram":
        from .io import read_csv
        header, (k, occ) = read_csv(path)
        out = np.zeros(int(k.max()) + 1)
        np.add.at(out, k.astype(int), occ)
        return cls(out)

    @classmethod
    def from_samples(cls, samples, seed=None) -> "PhotonHistogram":
        return cls(np.bincount(np.asarray(samples, dtype=int)).astype(float), seed)


def simulate_counts(pops: Populations, model: DetectionModel, shots: int,
                    seed=None) -> np.ndarray:
    """Photon counts of ``shots`` detection windows."""
    p = np.clip(np.asarray(pops.as_array(), dtype=float), 0, None)
    if abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"populations sum to {p.sum():.6g}, not 1")
    rng = np.random.default_rng(seed)
    bright = rng.choice(3, size=shots, p=p / p.sum())
    counts = rng.poisson(model.lambda_dark + bright * model.lambda_bright)
    if model.decay_correction:
        w, life = model.window, model.lifetime
        for ion in range(2):
            dark = (2 - bright) > ion
            tau = rng.exponential(life, size=shots)
            decays = dark & (tau < w)
            lam = model.lambda_bright * np.where(decays, w - tau, 0.0) / w
            counts = counts + rng.poisson(lam)
    return counts


def simulate_histogram(pops: Populations, model: DetectionModel, shots: int,
                       seed=None) -> PhotonHistogram:
    """Per shot: draw the number of bright ions from ``pops``, then counts."""
    return PhotonHistogram.from_samples(simulate_counts(pops, model, shots, seed), seed)


def expected_histogram(pops: Populations, model: DetectionModel, shots: float = 1.0,
                       kmax: int | None = None) -> PhotonHistogram:
    """Infinite-statistics histogram ``shots * pmf``."""
    kmax = _pmf_limit(model) if kmax is None else kmax
    pmf = pops.as_array() @ component_pmf(model, kmax)
    return PhotonHistogram(shots * pmf)


@dataclass
class Inference:
    populations: Populations
    stderr: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    low_confidence: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"p": self.populations.as_array().tolist(),
                "stderr": self.stderr.tolist(),
                "log_likelihood": self.log_likelihood,
                "iterations": self.iterations, "converged": self.converged,
                "low_confidence": self.low_confidence, "notes": list(self.notes)}


def log_likelihood(weights, hist: PhotonHistogram, model: DetectionModel) -> float:
    f = component_pmf(model, max(hist.occurrences.size - 1, 0))
    mix = np.asarray(weights, dtype=float) @ f
    occ = hist.occurrences
    mask = occ > 0
    with np.errstate(divide="ignore"):
        return float(occ[mask] @ np.log(mix[mask]))


def resolvable(model: DetectionModel) -> bool:
    """Adjacent components are at least three widths apart."""
    widths = np.sqrt(model.means())
    return bool(model.lambda_bright >= 3 * widths[1:].max())


def infer_populations(hist: PhotonHistogram, model: DetectionModel,
                      tol: float = 1e-12, max_iter: int = 100000) -> Inference:
    """Maximum-likelihood mixture weights with fixed component distributions.

    Expectation-maximisation keeps the weights on the simplex at every step.
    Errors come from the observed Fisher information of the two free weights.
    Overlapping components do not raise; the result is flagged instead.
    """
    occ = hist.occurrences
    if hist.shots <= 0:
        raise ValueError("empty histogram")
    f = component_pmf(model, occ.size - 1)
    keep = occ > 0
    occ, f = occ[keep], f[:, keep]
    n = occ.sum()
    w = np.full(3, 1 / 3)
    converged = False
    for it in range(1, max_iter + 1):
        resp = w[:, None] * f / (w @ f)
        w_new = resp @ occ / n
        step = np.max(np.abs(w_new - w))
        w = w_new
        if step <= tol:
            converged = True
            break
    w = np.clip(w, 0, None)
    w = w / w.sum()
    mix = w @ f
    # free parameters (w0, w1); w2 = 1 - w0 - w1
    diff = f[:2] - f[2]
    info = (diff * occ / mix ** 2) @ diff.T
    notes = []
    try:
        cov2 = np.linalg.inv(info)
        jac = np.array([[1, 0], [0, 1], [-1, -1]])
        cov = jac @ cov2 @ jac.T
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.nan)
        notes.append("singular Fisher information")
    low = not resolvable(model) or not np.all(np.isfinite(cov))
    if not resolvable(model):
        notes.append("components closer than three widths")
    stderr = np.sqrt(np.clip(np.diag(cov), 0, None))
    return Inference(Populations(*map(float, w)), stderr, cov,
                     float(occ @ np.log(mix)), it, converged, low, notes)


def calibrate_model(dark: PhotonHistogram, bright: PhotonHistogram,
                    window: float = 1e-3, lifetime: float = D_LIFETIME,
                    decay_correction: bool = True) -> DetectionModel:
    """Component means from reference histograms of both ions in ``D``
    (``dark``) and both in ``S`` (``bright``).

    Count means are linear in ``(lambda_dark, lambda_bright)``; a ``D`` ion
    adds on average ``lambda_bright * c`` counts through decay, with ``c``
    the mean fluorescing fraction of the window.
    """
    c = 0.0
    if decay_correction:
        r = window / lifetime
        # E[(w - tau)/w ; tau < w] for tau ~ Exp(lifetime)
        c = 1 - (1 - np.exp(-r)) / r
    a = np.array([[1.0, 2 * c], [1.0, 2.0]])
    lam_d, lam_b = np.linalg.solve(a, [dark.mean(), bright.mean()])
    return DetectionModel(float(lam_b), float(max(lam_d, 0.0)), window, lifetime,
                          decay_correction)


def roundtrip_errors(pops: Populations, model: DetectionModel, shots: int,
                     repetitions: int, seed=None) -> np.ndarray:
    """Inferred minus true populations for repeated simulate/infer cycles,
    shape ``(repetitions, 3)``."""
    truth = pops.as_array()
    seeds = seed_sequence(seed).spawn(repetitions)
    out = np.empty((repetitions, 3))
    for i, s in enumerate(seeds):
        hist = simulate_histogram(pops, model, shots, s)
        out[i] = infer_populations(hist, model).populations.as_array() - truth
    return out
