"""Downlink pilot training: random pilot matrices, noisy measurements, and
per-user SNR calibration."""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .signal_model import Dictionary, SparseVector


@dataclass(frozen=True)
class PilotMatrix:
    """Broadcast training matrix with i.i.d. CN(0, 1/num_slots) entries."""

    entries: np.ndarray

    @property
    def num_slots(self) -> int:
        return self.entries.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class MeasurementSet:
    """Per-user noisy measurements plus the shared sensing matrix.

    sensing_matrix is exactly pilots @ dictionary atoms; noise variance is
    calibrated per user so that ||A w||^2 / E||n||^2 hits the requested SNR
    for every realization.
    """

    per_user: tuple
    noise_variance_per_user: tuple
    snr_db_per_user: tuple
    sensing_matrix: np.ndarray

    @property
    def num_users(self) -> int:
        return len(self.per_user)

    @property
    def num_slots(self) -> int:
        return self.sensing_matrix.shape[0]


def sample_pilots(rng: np.random.Generator, num_slots: int,
                  num_antennas: int) -> PilotMatrix:
    """Draw a num_slots x num_antennas pilot matrix, entries CN(0, 1/num_slots)."""
    if num_slots < 1 or num_antennas < 1:
        raise ValueError("num_slots and num_antennas must be >= 1")
    parts = rng.standard_normal((num_slots, num_antennas, 2))
    entries = (parts[..., 0] + 1j * parts[..., 1]) / np.sqrt(2.0 * num_slots)
    return PilotMatrix(entries=entries)


def measure(rng: np.random.Generator, pilots: PilotMatrix, dictionary: Dictionary,
            sparse_vectors: Sequence[SparseVector],
            snr_db: Union[float, Sequence[float]]) -> MeasurementSet:
    """Form y_k = A w_k + n_k for every user, A = pilots @ atoms.

    The noise variance for user k is (||A w_k||^2 / T) / 10^(snr_db_k / 10):
    SNR is received signal power per time slot over noise power per slot,
    exact for each realization. ``snr_db`` may be a scalar (shared by all
    users) or one value per user; ``math.inf`` disables noise entirely.
    """
    if pilots.num_antennas != dictionary.num_antennas:
        raise ValueError(
            f"pilot columns ({pilots.num_antennas}) must match dictionary "
            f"antennas ({dictionary.num_antennas})")
    num_users = len(sparse_vectors)
    if isinstance(snr_db, (int, float)):
        snr_list = [float(snr_db)] * num_users
    else:
        snr_list = [float(s) for s in snr_db]
        if len(snr_list) != num_users:
            raise ValueError("need one SNR value per user")
    for w in sparse_vectors:
        if w.length != dictionary.num_atoms:
            raise ValueError("sparse vector length must match dictionary atoms")

    sensing = pilots.entries @ dictionary.atoms
    num_slots = pilots.num_slots
    ys = []
    variances = []
    for w, snr in zip(sparse_vectors, snr_list):
        signal = sensing @ w.to_dense()
        if math.isinf(snr):
            variance = 0.0
            y = signal
        else:
            power = float(np.vdot(signal, signal).real) / num_slots
            variance = power / (10.0 ** (snr / 10.0))
            if variance > 0.0:
                parts = rng.standard_normal((num_slots, 2))
                noise = (parts[:, 0] + 1j * parts[:, 1]) * np.sqrt(variance / 2.0)
                y = signal + noise
            else:
                y = signal
        ys.append(y)
        variances.append(variance)
    return MeasurementSet(
        per_user=tuple(ys),
        noise_variance_per_user=tuple(variances),
        snr_db_per_user=tuple(snr_list),
        sensing_matrix=sensing,
    )
