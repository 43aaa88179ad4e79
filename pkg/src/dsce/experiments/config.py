"""Scenario configuration: dataclass schema, validation, JSON round-trip,
and the three built-in experiment presets."""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..errors import ConfigurationError
from ..signal_model import GRID_POLICIES, OVERLAP_POLICIES, VALUE_LAWS

KNOWN_ALGORITHMS = ("omp", "somp", "diomp", "wdiomp")

PRESET_NAMES = ("exp1", "exp1_low", "exp2", "exp3")


@dataclass(frozen=True)
class GroupSpec:
    """One common-interest group: its support size and its member users."""

    size: int
    members: tuple

    @classmethod
    def of(cls, size: int, members: Sequence[int]) -> "GroupSpec":
        return cls(size=int(size), members=tuple(int(k) for k in members))


@dataclass(frozen=True)
class SnrSetting:
    """One per-user SNR assignment evaluated as its own Monte Carlo run.

    The label becomes the snr_tag of the setting's overall metric rows;
    heterogeneous settings additionally get per-SNR breakdown rows.
    """

    per_user_db: tuple
    label: str = ""

    def resolved_label(self) -> str:
        if self.label:
            return self.label
        distinct = set(self.per_user_db)
        if len(distinct) == 1:
            return f"{next(iter(distinct)):g}dB"
        return "all"

    @property
    def heterogeneous(self) -> bool:
        return len(set(self.per_user_db)) > 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete parameterization of one Monte Carlo scenario.

    ``snr_settings`` lists one or more per-user SNR assignments; every
    algorithm is evaluated on identical data within each
    (T, setting, trial) cell. Trials redraw supports, coefficients, pilots
    and noise unless ``fixed_profile`` pins the supports and coefficients
    for weight-convergence inspection.
    """

    name: str
    num_users: int
    num_antennas: int
    dict_size: int
    t_list: tuple
    snr_settings: tuple
    global_size: int
    groups: tuple = ()
    algorithms: tuple = KNOWN_ALGORITHMS
    forgetting_factor: float = 0.1
    trials: int = 1000
    master_seed: int = 12345
    value_law: str = "complex_normal"
    grid_policy: str = "spatial_frequency"
    overlap_policy: str = "disjoint"
    element_spacing_over_wavelength: float = 0.5
    measurement_bits: int = 36
    include_self: bool = True
    shuffle_snr_per_trial: bool = False
    fixed_profile: bool = False

    def validate(self) -> "ScenarioConfig":
        if self.num_users < 1:
            raise ConfigurationError("num_users must be >= 1")
        if self.num_antennas < 1 or self.dict_size < 1:
            raise ConfigurationError("num_antennas and dict_size must be >= 1")
        if not self.t_list:
            raise ConfigurationError("t_list must not be empty")
        if any(int(t) != t or t < 1 for t in self.t_list):
            raise ConfigurationError("t_list entries must be positive integers")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be nonnegative")
        if not self.snr_settings:
            raise ConfigurationError("at least one SNR setting is required")
        for setting in self.snr_settings:
            if len(setting.per_user_db) != self.num_users:
                raise ConfigurationError("each SNR setting needs one value per user")
        labels = [s.resolved_label() for s in self.snr_settings]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"SNR setting labels collide: {labels}")
        unknown = [a for a in self.algorithms if a not in KNOWN_ALGORITHMS]
        if unknown:
            raise ConfigurationError(f"unknown algorithms {unknown}")
        if not 0.0 < self.forgetting_factor < 1.0:
            raise ConfigurationError("forgetting_factor must lie in (0, 1)")
        if self.value_law not in VALUE_LAWS:
            raise ConfigurationError(f"unknown value law {self.value_law!r}")
        if self.grid_policy not in GRID_POLICIES:
            raise ConfigurationError(f"unknown grid policy {self.grid_policy!r}")
        if self.overlap_policy not in OVERLAP_POLICIES:
            raise ConfigurationError(f"unknown overlap policy {self.overlap_policy!r}")
        if self.measurement_bits < 1:
            raise ConfigurationError("measurement_bits must be >= 1")
        if self.global_size < 0 or any(g.size < 0 for g in self.groups):
            raise ConfigurationError("support sizes must be nonnegative")
        for g in self.groups:
            if any(k < 0 or k >= self.num_users for k in g.members):
                raise ConfigurationError("group member index out of range")
            if len(set(g.members)) != len(g.members):
                raise ConfigurationError("duplicate user inside a group")
        if self.overlap_policy == "disjoint":
            total = self.global_size + sum(g.size for g in self.groups)
            if total > self.dict_size:
                raise ConfigurationError(
                    f"disjoint supports need {total} atoms, grid has {self.dict_size}")
        sparsities = {self.user_sparsity(k) for k in range(self.num_users)}
        if len(sparsities) != 1:
            raise ConfigurationError(
                "the cooperation protocol requires the same total sparsity for "
                f"every user, got {sorted(sparsities)}")
        sparsity = next(iter(sparsities))
        if sparsity < 1:
            raise ConfigurationError("per-user sparsity must be >= 1")
        if sparsity > min(min(self.t_list), self.dict_size):
            raise ConfigurationError(
                f"sparsity {sparsity} exceeds min(T)={min(self.t_list)} or the grid")
        return self

    def user_sparsity(self, user: int) -> int:
        """Per-user support size under the disjoint overlap policy."""
        return self.global_size + sum(
            g.size for g in self.groups if user in g.members)

    @property
    def sparsity(self) -> int:
        return self.user_sparsity(0)


def _default_t_list() -> tuple:
    return tuple(range(10, 41, 2))


def preset(name: str) -> ScenarioConfig:
    """Built-in scenario presets reproducing the three reference experiments.

    exp1     : shared global support (size 5), all users at 20 and 10 dB
               (two SNR settings in one report).
    exp1_low : the 10 dB setting of exp1 on its own.
    exp2     : global support only, unbalanced SNR (7 users at 20 dB, 3 at
               0 dB, assignment shuffled per trial).
    exp3     : global support (5) plus two 5-user groups with a common
               support of 3 each (total sparsity 8), all users at 20 dB.
    """
    common = dict(
        num_users=10,
        num_antennas=128,
        dict_size=200,
        t_list=_default_t_list(),
        global_size=5,
        trials=1000,
        forgetting_factor=0.1,
        master_seed=12345,
    )
    if name == "exp1":
        return ScenarioConfig(
            name="exp1",
            snr_settings=(
                SnrSetting(per_user_db=(20.0,) * 10),
                SnrSetting(per_user_db=(10.0,) * 10),
            ),
            **common,
        ).validate()
    if name == "exp1_low":
        return ScenarioConfig(
            name="exp1_low",
            snr_settings=(SnrSetting(per_user_db=(10.0,) * 10),),
            **common,
        ).validate()
    if name == "exp2":
        return ScenarioConfig(
            name="exp2",
            snr_settings=(
                SnrSetting(per_user_db=(20.0,) * 7 + (0.0,) * 3),
            ),
            shuffle_snr_per_trial=True,
            **common,
        ).validate()
    if name == "exp3":
        return ScenarioConfig(
            name="exp3",
            snr_settings=(SnrSetting(per_user_db=(20.0,) * 10),),
            groups=(
                GroupSpec.of(3, range(0, 5)),
                GroupSpec.of(3, range(5, 10)),
            ),
            **common,
        ).validate()
    raise ConfigurationError(
        f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def config_to_dict(config: ScenarioConfig) -> dict:
    """Plain-JSON representation of a scenario (inverse of config_from_dict)."""
    data = dataclasses.asdict(config)
    data["snr_settings"] = [
        {"per_user_db": list(s.per_user_db), **({"label": s.label} if s.label else {})}
        for s in config.snr_settings
    ]
    data["groups"] = [
        {"size": g.size, "members": list(g.members)} for g in config.groups
    ]
    data["t_list"] = list(config.t_list)
    data["algorithms"] = list(config.algorithms)
    return data


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from parsed JSON."""
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "snr_settings" in kwargs:
        settings = []
        for entry in kwargs["snr_settings"]:
            if isinstance(entry, dict):
                settings.append(SnrSetting(
                    per_user_db=tuple(float(v) for v in entry["per_user_db"]),
                    label=entry.get("label", "")))
            else:
                settings.append(SnrSetting(
                    per_user_db=tuple(float(v) for v in entry)))
        kwargs["snr_settings"] = tuple(settings)
    if "groups" in kwargs:
        kwargs["groups"] = tuple(
            GroupSpec.of(entry["size"], entry["members"])
            for entry in kwargs["groups"]
        )
    for key in ("t_list", "algorithms"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "t_list" in kwargs:
        kwargs["t_list"] = tuple(int(t) for t in kwargs["t_list"])
    try:
        config = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    return config.validate()


def load_config(path) -> ScenarioConfig:
    """Read a scenario from a JSON file (schema: ScenarioConfig fields)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return config_from_dict(data)


def save_config(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")
