import numpy as np
import pytest

import kmgl
from kmgl.synth import _sample_cluster_signals, cluster_sizes


def test_cluster_sizes_even_and_remainder():
    assert cluster_sizes(500, 3) == [167, 167, 166]
    assert cluster_sizes(9, 3) == [3, 3, 3]
    assert cluster_sizes(10, 4) == [3, 3, 2, 2]


def test_generate_defaults_shapes():
    ds = kmgl.generate(20, 60, 3, 0.3, 10.0, 15.0, seed=0)
    assert ds.signals.values.shape == (20, 60)
    assert ds.signals.masks is None
    assert len(ds.truth_graphs) == 3
    assert len(ds.kernels) == 3
    assert np.array_equal(np.sort(np.unique(ds.truth_assignment)), [0, 1, 2])
    assert ds.meta["sigma_eps"] == pytest.approx(
        kmgl.sigma_for_snr(list(ds.kernels), 15.0, 20)
    )


def test_generate_full_masks_absent_at_zero_rate_present_otherwise():
    a = kmgl.generate(10, 20, 2, 0.3, 10.0, 15.0, missing_rate=0.0, seed=1)
    assert a.signals.masks is None
    b = kmgl.generate(10, 20, 2, 0.3, 10.0, 15.0, missing_rate=0.4, seed=1)
    assert b.signals.masks is not None
    observed_rate = b.signals.masks.mean()
    assert 0.45 < observed_rate < 0.75  # Bernoulli(1 - 0.4)


def test_generate_bitwise_deterministic():
    a = kmgl.generate(12, 30, 2, 0.25, 10.0, 12.0, missing_rate=0.3, seed=9)
    b = kmgl.generate(12, 30, 2, 0.25, 10.0, 12.0, missing_rate=0.3, seed=9)
    assert np.array_equal(a.signals.values, b.signals.values)
    assert np.array_equal(a.signals.masks, b.signals.masks)
    for ga, gb in zip(a.truth_graphs, b.truth_graphs):
        assert np.array_equal(ga.w, gb.w)
    for ka, kb in zip(a.kernels, b.kernels):
        assert np.array_equal(ka.matrix, kb.matrix)


def test_generate_validation():
    with pytest.raises(ValueError):
        kmgl.generate(1, 10, 2, 0.3, 10.0, 15.0)
    with pytest.raises(ValueError):
        kmgl.generate(10, 1, 2, 0.3, 10.0, 15.0)
    with pytest.raises(ValueError):
        kmgl.generate(10, 10, 2, 0.0, 10.0, 15.0)
    with pytest.raises(ValueError):
        kmgl.generate(10, 10, 2, 0.3, 0.0, 15.0)
    with pytest.raises(ValueError):
        kmgl.generate(10, 10, 2, 0.3, 10.0, 15.0, missing_rate=1.0)


def test_sample_covariance_matches_kernel():
    # noise-free component: sample covariance of many draws matches K entrywise
    g = kmgl.erdos_renyi(6, 0.5, 3)
    kernel = kmgl.diffusion_kernel(g, 10.0)
    rng = np.random.default_rng(4)
    draws = 50_000
    clean, _ = _sample_cluster_signals(rng, kernel, 0.0, draws)
    sample_cov = clean @ clean.T / draws
    K = kernel.matrix
    se = np.sqrt((np.outer(np.diag(K), np.diag(K)) + K**2) / draws)
    assert np.all(np.abs(sample_cov - K) <= 5 * se)


def test_empirical_snr_within_one_db():
    graphs = [kmgl.erdos_renyi(20, 0.3, s) for s in range(3)]
    kernels = [kmgl.diffusion_kernel(g, 10.0) for g in graphs]
    target = 15.0
    sigma = kmgl.sigma_for_snr(kernels, target, 20)
    rng = np.random.default_rng(5)
    signal_power, noise_power = 0.0, 0.0
    for kernel in kernels:
        clean, noise = _sample_cluster_signals(rng, kernel, sigma, 400)
        signal_power += np.sum(clean**2)
        noise_power += np.sum(noise**2)
    empirical = 10 * np.log10(signal_power / noise_power)
    assert abs(empirical - target) <= 1.0


def test_export_load_round_trip(tmp_path):
    ds = kmgl.generate(10, 24, 2, 0.3, 10.0, 15.0, missing_rate=0.25, seed=6)
    kmgl.export_dataset(ds, tmp_path / "ds")
    loaded = kmgl.load_dataset(tmp_path / "ds")
    assert np.array_equal(ds.signals.values, loaded.signals.values)
    assert np.array_equal(ds.signals.masks, loaded.signals.masks)
    assert np.array_equal(ds.truth_assignment, loaded.truth_assignment)
    for ga, gb in zip(ds.truth_graphs, loaded.truth_graphs):
        assert np.array_equal(ga.w, gb.w)
    for ka, kb in zip(ds.kernels, loaded.kernels):
        assert np.array_equal(ka.matrix, kb.matrix)
    assert loaded.meta == ds.meta


def test_signals_csv_header(tmp_path):
    ds = kmgl.generate(5, 8, 2, 0.5, 10.0, 15.0, seed=7)
    kmgl.export_dataset(ds, tmp_path / "ds")
    first = (tmp_path / "ds" / "signals.csv").read_text().splitlines()[0]
    assert first == "s0,s1,s2,s3,s4"
