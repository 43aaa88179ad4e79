"""Angular-domain signal model: ULA steering vectors, sparsifying
dictionaries, joint-sparsity support profiles, sparse coefficient vectors,
and geometry-based stochastic channel realizations."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

GRID_POLICIES = ("spatial_frequency", "angle")
VALUE_LAWS = ("real_normal", "complex_normal")
OVERLAP_POLICIES = ("disjoint", "overlap")


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array at the base station.

    ``element_spacing_over_wavelength`` is d/lambda; the half-wavelength
    default makes the visible spatial-frequency span exactly [-pi, pi].
    """

    num_antennas: int
    element_spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ConfigurationError("num_antennas must be >= 1")
        if self.element_spacing_over_wavelength <= 0:
            raise ConfigurationError("element spacing must be positive")


@dataclass(frozen=True)
class Dictionary:
    """Sparsifying dictionary: unit-norm steering-vector atoms on an
    angular grid.

    atoms : complex matrix of shape (num_antennas, num_atoms)
    grid_angles : the angle (radians) each atom represents
    """

    atoms: np.ndarray
    grid_angles: np.ndarray

    @property
    def num_antennas(self) -> int:
        return self.atoms.shape[0]

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[1]


def steering_vector(cfg: ArrayConfig, angle: float) -> np.ndarray:
    """ULA array response for a departure angle (radians).

    Element n is (1/sqrt(N)) * exp(j*2*pi*n*(d/lambda)*sin(angle)), so the
    output always has unit Euclidean norm.
    """
    n = np.arange(cfg.num_antennas)
    phase = 2.0 * np.pi * cfg.element_spacing_over_wavelength * np.sin(angle)
    return np.exp(1j * phase * n) / np.sqrt(cfg.num_antennas)


def build_dictionary(cfg: ArrayConfig, num_atoms: int,
                     grid_policy: str = "spatial_frequency") -> Dictionary:
    """Build a steering-vector dictionary on an ``num_atoms``-point grid.

    Parameters
    ----------
    cfg : ArrayConfig
        Array geometry.
    num_atoms : int
        Number of atoms (columns). May exceed ``cfg.num_antennas`` for an
        overcomplete dictionary.
    grid_policy : {"spatial_frequency", "angle"}
        "spatial_frequency" places atoms uniformly in sin(angle), i.e. the
        (over)complete DFT grid; with half-wavelength spacing and
        num_atoms == num_antennas the atoms form a unitary matrix.
        "angle" places atoms uniformly in angle over [-pi, pi).

    Returns
    -------
    Dictionary
        Atoms of shape (num_antennas, num_atoms), all unit norm.
    """
    if num_atoms < 1:
        raise ConfigurationError("num_atoms must be >= 1")
    if grid_policy not in GRID_POLICIES:
        raise ConfigurationError(f"unknown grid policy {grid_policy!r}")
    if grid_policy == "spatial_frequency":
        sines = -1.0 + 2.0 * np.arange(num_atoms) / num_atoms
        angles = np.arcsin(sines)
    else:
        angles = -np.pi + 2.0 * np.pi * np.arange(num_atoms) / num_atoms
        sines = np.sin(angles)
    n = np.arange(cfg.num_antennas)[:, None]
    phases = 2.0 * np.pi * cfg.element_spacing_over_wavelength * sines[None, :]
    atoms = np.exp(1j * n * phases) / np.sqrt(cfg.num_antennas)
    return Dictionary(atoms=atoms, grid_angles=angles)


@dataclass(frozen=True)
class JointSparsityProfile:
    """Global and multiple-common support structure over a dictionary.

    ``global_support`` is shared by every user; ``common_supports[j]`` is
    shared by the users listed in ``group_members[j]``. ``user_interest[k]``
    holds the group indices user k belongs to (derived from membership).
    """

    num_atoms: int
    num_users: int
    global_support: tuple
    common_supports: tuple
    group_members: tuple
    user_interest: tuple = field(init=False)

    def __post_init__(self):
        if len(self.common_supports) != len(self.group_members):
            raise ConfigurationError("one member set needed per common support")
        for s in (self.global_support, *self.common_supports):
            if any(i < 0 or i >= self.num_atoms for i in s):
                raise ConfigurationError("support index out of range")
            if len(set(s)) != len(s):
                raise ConfigurationError("duplicate index inside a support set")
        for members in self.group_members:
            if any(k < 0 or k >= self.num_users for k in members):
                raise ConfigurationError("group member index out of range")
        interest = tuple(
            tuple(j for j, members in enumerate(self.group_members) if k in members)
            for k in range(self.num_users)
        )
        object.__setattr__(self, "user_interest", interest)

    def support_of(self, user: int) -> tuple:
        """Sorted support set of one user: global plus its groups' commons."""
        s = set(self.global_support)
        for j in self.user_interest[user]:
            s.update(self.common_supports[j])
        return tuple(sorted(s))

    def sparsity_of(self, user: int) -> int:
        return len(self.support_of(user))


@dataclass(frozen=True)
class SparseVector:
    """Sparse coefficient vector stored as (support, values) pairs.

    Entries off the support are exactly zero. ``values`` is aligned with
    the sorted ``support`` tuple.
    """

    length: int
    support: tuple
    values: np.ndarray

    def __post_init__(self):
        if len(self.support) != len(self.values):
            raise ConfigurationError("values must align with support")
        if any(i < 0 or i >= self.length for i in self.support):
            raise ConfigurationError("support index out of range")
        if list(self.support) != sorted(set(self.support)):
            raise ConfigurationError("support must be sorted and duplicate-free")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.length, dtype=np.result_type(self.values, np.float64))
        dense[list(self.support)] = self.values
        return dense


@dataclass(frozen=True)
class ChannelRealization:
    """Antenna-domain channel with optional angular-domain representation.

    ``angular_domain`` is populated only for on-grid construction; channels
    built from arbitrary path angles have no exact sparse representation.
    ``path_angles`` lists (angle, complex gain) per propagation path.
    """

    antenna_domain: np.ndarray
    angular_domain: Optional[SparseVector] = None
    path_angles: Optional[tuple] = None


def sample_profile(rng: np.random.Generator, num_atoms: int, num_users: int,
                   global_size: int, group_sizes: Sequence[int] = (),
                   memberships: Sequence[Sequence[int]] = (),
                   policy: str = "disjoint") -> JointSparsityProfile:
    """Draw a joint-sparsity profile uniformly at random.

    Under the default "disjoint" policy the global support and every common
    support are pairwise disjoint, so each user's sparsity is exactly
    global_size plus the sizes of its groups. The "overlap" policy draws
    each set independently (sets may intersect).
    """
    if policy not in OVERLAP_POLICIES:
        raise ConfigurationError(f"unknown overlap policy {policy!r}")
    if len(group_sizes) != len(memberships):
        raise ConfigurationError("group_sizes and memberships must align")
    if global_size < 0 or any(s < 0 for s in group_sizes):
        raise ConfigurationError("support sizes must be nonnegative")
    if policy == "disjoint":
        total = global_size + sum(group_sizes)
        if total > num_atoms:
            raise ConfigurationError(
                f"disjoint supports need {total} atoms but only {num_atoms} exist")
        drawn = rng.choice(num_atoms, size=total, replace=False)
        global_support = tuple(sorted(int(i) for i in drawn[:global_size]))
        commons = []
        offset = global_size
        for size in group_sizes:
            commons.append(tuple(sorted(int(i) for i in drawn[offset:offset + size])))
            offset += size
    else:
        if max((global_size, *group_sizes), default=0) > num_atoms:
            raise ConfigurationError("a support set is larger than the grid")
        global_support = tuple(sorted(
            int(i) for i in rng.choice(num_atoms, size=global_size, replace=False)))
        commons = [
            tuple(sorted(int(i) for i in rng.choice(num_atoms, size=size, replace=False)))
            for size in group_sizes
        ]
    return JointSparsityProfile(
        num_atoms=num_atoms,
        num_users=num_users,
        global_support=global_support,
        common_supports=tuple(commons),
        group_members=tuple(tuple(sorted(m)) for m in memberships),
    )


def sample_sparse_vectors(rng: np.random.Generator, profile: JointSparsityProfile,
                          value_law: str = "real_normal") -> list:
    """Draw one sparse coefficient vector per user on the profile's supports.

    Supports are shared per the profile; the nonzero values are independent
    across users. "real_normal" draws standard normal reals;
    "complex_normal" draws circularly-symmetric unit-variance complex values.
    """
    if value_law not in VALUE_LAWS:
        raise ConfigurationError(f"unknown value law {value_law!r}")
    vectors = []
    for k in range(profile.num_users):
        support = profile.support_of(k)
        if value_law == "real_normal":
            values = rng.standard_normal(len(support))
        else:
            parts = rng.standard_normal((len(support), 2))
            values = (parts[:, 0] + 1j * parts[:, 1]) / np.sqrt(2.0)
        vectors.append(SparseVector(length=profile.num_atoms,
                                    support=support, values=values))
    return vectors


def channel_from_paths(cfg: ArrayConfig, angles: Sequence[float],
                       gains: Sequence[complex]) -> ChannelRealization:
    """Superpose steering vectors with complex gains into one channel."""
    if len(angles) != len(gains):
        raise ConfigurationError("angles and gains must align")
    h = np.zeros(cfg.num_antennas, dtype=complex)
    for theta, gamma in zip(angles, gains):
        h += gamma * steering_vector(cfg, theta)
    return ChannelRealization(
        antenna_domain=h,
        path_angles=tuple((float(t), complex(g)) for t, g in zip(angles, gains)),
    )


def channel_from_sparse(dictionary: Dictionary, w: SparseVector) -> ChannelRealization:
    """On-grid channel: antenna domain is exactly atoms @ dense(w)."""
    h = dictionary.atoms @ w.to_dense()
    paths = tuple(
        (float(dictionary.grid_angles[i]), complex(v))
        for i, v in zip(w.support, w.values)
    )
    return ChannelRealization(antenna_domain=h, angular_domain=w, path_angles=paths)


def gscm_channel(rng: np.random.Generator, cfg: ArrayConfig, num_clusters: int,
                 paths_per_cluster: int, angle_law: str = "uniform",
                 gain_law: str = "complex_normal") -> ChannelRealization:
    """Geometry-based stochastic channel: clusters of sub-paths with random
    departure angles and complex gains.

    The angular-domain field is left empty: randomly drawn angles fall off
    the grid and have no exact sparse representation.
    """
    if num_clusters < 1 or paths_per_cluster < 1:
        raise ConfigurationError("need at least one cluster and one sub-path")
    num_paths = num_clusters * paths_per_cluster
    if angle_law == "uniform":
        angles = rng.uniform(-np.pi, np.pi, size=num_paths)
    else:
        raise ConfigurationError(f"unknown angle law {angle_law!r}")
    if gain_law == "complex_normal":
        parts = rng.standard_normal((num_paths, 2))
        gains = (parts[:, 0] + 1j * parts[:, 1]) / np.sqrt(2.0)
    elif gain_law == "real_normal":
        gains = rng.standard_normal(num_paths).astype(complex)
    else:
        raise ConfigurationError(f"unknown gain law {gain_law!r}")
    return channel_from_paths(cfg, angles, gains)
