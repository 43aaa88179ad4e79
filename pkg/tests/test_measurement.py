import math

import numpy as np
import pytest

from dsce.measurement import measure, sample_pilots
from dsce.signal_model import (ArrayConfig, SparseVector, build_dictionary,
                               sample_profile, sample_sparse_vectors)


def _setup(seed, num_atoms=30, num_antennas=24, sparsity=4, num_users=1):
    rng = np.random.default_rng(seed)
    d = build_dictionary(ArrayConfig(num_antennas), num_atoms)
    p = sample_profile(rng, num_atoms, num_users, sparsity)
    ws = sample_sparse_vectors(rng, p, "complex_normal")
    return rng, d, ws


class TestSamplePilots:
    def test_paper_shape(self):
        rng = np.random.default_rng(0)
        pilots = sample_pilots(rng, 20, 128)
        assert pilots.entries.shape == (20, 128)
        assert pilots.num_slots == 20

    def test_zero_mean_within_three_sigma(self):
        rng = np.random.default_rng(1)
        pilots = sample_pilots(rng, 20, 5000)
        entries = pilots.entries.ravel()
        # each real component has variance 1/(2T); the mean of n samples
        # stays inside a 3-sigma band
        n = entries.size
        band = 3.0 * np.sqrt(1.0 / (2 * 20) / n)
        assert abs(entries.real.mean()) < band
        assert abs(entries.imag.mean()) < band

    def test_entry_variance_is_one_over_t(self):
        rng = np.random.default_rng(2)
        pilots = sample_pilots(rng, 20, 5000)
        var = np.mean(np.abs(pilots.entries) ** 2)
        assert abs(var - 1.0 / 20) / (1.0 / 20) < 0.05

    def test_invalid_dimensions(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            sample_pilots(rng, 0, 4)


class TestMeasure:
    def test_noiseless_is_exact(self):
        rng, d, ws = _setup(4)
        pilots = sample_pilots(rng, 12, 24)
        meas = measure(rng, pilots, d, ws, math.inf)
        expected = meas.sensing_matrix @ ws[0].to_dense()
        assert np.array_equal(meas.per_user[0], expected)
        assert meas.noise_variance_per_user[0] == 0.0

    def test_zero_vector_gives_zero_measurement(self):
        rng, d, _ = _setup(5)
        w0 = SparseVector(length=30, support=(), values=np.zeros(0))
        pilots = sample_pilots(rng, 12, 24)
        for snr in (math.inf, 10.0):
            meas = measure(rng, pilots, d, [w0], snr)
            assert np.all(meas.per_user[0] == 0.0)

    def test_sensing_matrix_is_pilots_times_atoms(self):
        rng, d, ws = _setup(6)
        pilots = sample_pilots(rng, 10, 24)
        meas = measure(rng, pilots, d, ws, 20.0)
        assert np.array_equal(meas.sensing_matrix, pilots.entries @ d.atoms)

    def test_zero_db_noise_to_signal_ratio(self):
        # statistical oracle: at 0 dB the noise and signal energies agree
        # on average over many trials
        rng, d, ws = _setup(7, num_atoms=12, num_antennas=10, sparsity=3)
        ratios = np.empty(10_000)
        for i in range(ratios.size):
            pilots = sample_pilots(rng, 8, 10)
            meas = measure(rng, pilots, d, ws, 0.0)
            signal = meas.sensing_matrix @ ws[0].to_dense()
            noise = meas.per_user[0] - signal
            ratios[i] = (np.linalg.norm(noise) / np.linalg.norm(signal)) ** 2
        assert abs(ratios.mean() - 1.0) < 0.05

    def test_snr_calibration_at_ten_db(self):
        # ratio of mean energies (not the mean of ratios, which carries a
        # chi-square Jensen bias) must hit the linear SNR
        rng, d, ws = _setup(8, num_atoms=12, num_antennas=10, sparsity=3)
        sig = np.empty(10_000)
        noi = np.empty(10_000)
        for i in range(sig.size):
            pilots = sample_pilots(rng, 8, 10)
            meas = measure(rng, pilots, d, ws, 10.0)
            signal = meas.sensing_matrix @ ws[0].to_dense()
            noise = meas.per_user[0] - signal
            sig[i] = np.linalg.norm(signal) ** 2
            noi[i] = np.linalg.norm(noise) ** 2
        assert abs(sig.mean() / noi.mean() - 10.0) / 10.0 < 0.05

    def test_per_user_snr_list(self):
        rng, d, ws = _setup(9, num_users=3)
        pilots = sample_pilots(rng, 12, 24)
        meas = measure(rng, pilots, d, ws, [20.0, 0.0, math.inf])
        assert meas.snr_db_per_user == (20.0, 0.0, math.inf)
        assert meas.noise_variance_per_user[1] > \
            meas.noise_variance_per_user[0]
        assert meas.noise_variance_per_user[2] == 0.0

    def test_dimension_mismatches(self):
        rng, d, ws = _setup(10)
        pilots = sample_pilots(rng, 12, 23)
        with pytest.raises(ValueError):
            measure(rng, pilots, d, ws, 20.0)
        pilots = sample_pilots(rng, 12, 24)
        with pytest.raises(ValueError):
            measure(rng, pilots, d, ws, [20.0, 10.0])
        bad = SparseVector(length=29, support=(0,), values=np.ones(1))
        with pytest.raises(ValueError):
            measure(rng, pilots, d, [bad], 20.0)

    def test_reproducibility_bit_identical(self):
        out = []
        for _ in range(2):
            rng, d, ws = _setup(11, num_users=2)
            pilots = sample_pilots(rng, 12, 24)
            out.append(measure(rng, pilots, d, ws, [20.0, 0.0]))
        first, second = out
        assert np.array_equal(first.sensing_matrix, second.sensing_matrix)
        for a, b in zip(first.per_user, second.per_user):
            assert np.array_equal(a, b)
        assert first.noise_variance_per_user == second.noise_variance_per_user
