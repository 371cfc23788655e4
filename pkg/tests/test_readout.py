import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from iongates.qcore import Populations
from iongates.readout import (DetectionModel, PhotonHistogram, calibrate_model,
                              component_pmf, expected_histogram, infer_populations,
                              log_likelihood, resolvable, roundtrip_errors,
                              simulate_counts, simulate_histogram)

MODEL = DetectionModel()
NO_DECAY = DetectionModel(decay_correction=False)
MIXED = Populations(0.25, 0.5, 0.25)


def test_model_validation():
    with pytest.raises(ValueError):
        DetectionModel(0.4, 0.5)
    assert NO_DECAY.decay_probability == 0.0
    assert MODEL.decay_probability == pytest.approx(1 - np.exp(-1e-3 / 0.390))


def test_component_pmf_without_decay_is_poisson():
    k = np.arange(120)
    f = component_pmf(NO_DECAY, 119)
    for j in range(3):
        assert np.allclose(f[j], poisson.pmf(k, 0.5 + 30 * j), atol=1e-15)


def test_component_pmf_normalised_with_decay():
    f = component_pmf(MODEL, 200)
    assert np.allclose(f.sum(axis=1), 1, atol=1e-12)
    # a decaying D ion adds lambda_b * (1 - (1 - exp(-r))/r) counts on average
    r = 1e-3 / 0.390
    extra = 30 * (1 - (1 - np.exp(-r)) / r)
    assert np.arange(201) @ f[0] == pytest.approx(0.5 + 2 * extra, rel=1e-9)


def test_dark_counts_are_poisson():
    counts = simulate_counts(Populations(1, 0, 0), NO_DECAY, 10000, seed=1)
    assert abs(counts.mean() - 0.5) < 3 * np.sqrt(0.5 / 10000)


def test_bright_counts_mean():
    counts = simulate_counts(Populations(0, 0, 1), MODEL, 10000, seed=2)
    assert abs(counts.mean() - 60.5) < 3 * np.sqrt(60.5 / 10000)


def test_simulation_matches_pmf():
    hist = simulate_histogram(MIXED, MODEL, 200000, seed=3)
    exp = expected_histogram(MIXED, MODEL, 1.0, kmax=hist.occurrences.size - 1)
    assert np.max(np.abs(hist.occurrences / hist.shots - exp.occurrences)) < 2e-3


def test_histogram_csv_roundtrip(tmp_path):
    hist = simulate_histogram(MIXED, MODEL, 500, seed=4)
    hist.to_csv(tmp_path / "h.csv")
    back = PhotonHistogram.from_csv(tmp_path / "h.csv")
    assert np.array_equal(back.occurrences, hist.occurrences)


def test_bad_populations_rejected():
    with pytest.raises(ValueError):
        simulate_counts(Populations(0.5, 0.5, 0.5), MODEL, 10)


def test_pure_dark_recovered():
    hist = simulate_histogram(Populations(1, 0, 0), MODEL, 100000, seed=5)
    inf = infer_populations(hist, MODEL)
    assert np.allclose(inf.populations.as_array(), [1, 0, 0], atol=1e-3)


def test_exact_recovery_from_expected_histogram():
    inf = infer_populations(expected_histogram(MIXED, MODEL, 1e4), MODEL)
    assert inf.converged
    assert np.allclose(inf.populations.as_array(), MIXED.as_array(), atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 300))
def test_inference_on_simplex(seed, shots):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(3))
    hist = simulate_histogram(Populations(*w), MODEL, shots, seed=seed)
    p = infer_populations(hist, MODEL).populations.as_array()
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_truth_beats_perturbations():
    truth = MIXED.as_array()
    moves = [np.array(m) * 0.05 for m in itertools.permutations([1, -1, 0])]
    wins = 0
    for seed in range(100):
        hist = simulate_histogram(MIXED, MODEL, 10000, seed=seed)
        ll = log_likelihood(truth, hist, MODEL)
        wins += all(ll >= log_likelihood(truth + m, hist, MODEL) for m in moves)
    assert wins >= 95


def test_rms_error_scaling_regression():
    shots = 500
    err = roundtrip_errors(MIXED, MODEL, shots, 200, seed=2024)
    c = np.sqrt(np.mean(err ** 2)) * np.sqrt(shots)
    # frozen from this seed; the multinomial limit is sqrt(mean p(1-p)) = 0.456
    assert c == pytest.approx(0.44946775660607524, rel=1e-6)
    assert c == pytest.approx(np.sqrt(np.mean(MIXED.as_array() * (1 - MIXED.as_array()))),
                              rel=0.1)


def test_stderr_matches_spread():
    err = roundtrip_errors(MIXED, MODEL, 2000, 100, seed=7)
    hist = simulate_histogram(MIXED, MODEL, 2000, seed=8)
    stderr = infer_populations(hist, MODEL).stderr
    assert np.allclose(err.std(axis=0), stderr, rtol=0.3)


def test_calibration_recovers_means():
    dark = simulate_histogram(Populations(1, 0, 0), MODEL, 50000, seed=9)
    bright = simulate_histogram(Populations(0, 0, 1), MODEL, 50000, seed=10)
    cal = calibrate_model(dark, bright)
    assert cal.lambda_bright == pytest.approx(30.0, abs=0.1)
    assert cal.lambda_dark == pytest.approx(0.5, abs=0.05)


def test_overlapping_components_flagged():
    weak = DetectionModel(3.0, 0.5)
    assert not resolvable(weak) and resolvable(MODEL)
    inf = infer_populations(simulate_histogram(MIXED, weak, 1000, seed=11), weak)
    assert inf.low_confidence
    assert inf.notes
    assert not infer_populations(simulate_histogram(MIXED, MODEL, 1000, seed=11),
                                 MODEL).low_confidence


def test_empty_histogram():
    with pytest.raises(ValueError):
        infer_populations(PhotonHistogram(np.zeros(5)), MODEL)
