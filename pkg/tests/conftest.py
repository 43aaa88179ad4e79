import numpy as np
import pytest

from dsce.signal_model import ArrayConfig, build_dictionary


@pytest.fixture(scope="session")
def small_dictionary():
    return build_dictionary(ArrayConfig(16), 24)


def random_instance(seed, num_slots=20, num_atoms=50, sparsity=5,
                    snr_db=20.0, num_users=1, num_antennas=32):
    """Noisy random recovery instance on a steering dictionary."""
    from dsce.measurement import measure, sample_pilots
    from dsce.signal_model import sample_profile, sample_sparse_vectors

    rng = np.random.default_rng(seed)
    dictionary = build_dictionary(ArrayConfig(num_antennas), num_atoms)
    profile = sample_profile(rng, num_atoms, num_users, sparsity)
    vectors = sample_sparse_vectors(rng, profile, "complex_normal")
    pilots = sample_pilots(rng, num_slots, num_antennas)
    meas = measure(rng, pilots, dictionary, vectors, snr_db)
    return profile, vectors, meas
