"""Serializable run configuration with flat per-module sections."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import FormatError


@dataclass
class ApertureSection:
    kind: str = "circular"         # circular | annular | full
    outer_ratio: float = 1.0       # 2r/H
    inner_ratio: float = 0.0       # annular only


@dataclass
class NoiseSection:
    sigma_z: float = 25.0          # display (0-255) scale
    looks: int = 4
    seed: int = 0


@dataclass
class SolverSection:
    cg_tol: float = 1e-6
    cg_max_iter: int = 500
    warm_start_looks: bool = False


@dataclass
class PriorSection:
    spec: str = "tv:0.02"


@dataclass
class PgdSection:
    step_size: float = 0.01
    iterations: int = 150
    probes: int = 5
    probe_kind: str = "gaussian"
    seed: int = 0
    sigma_z: float | None = None   # override, display scale


@dataclass
class CpnpSection:
    iterations: int = 50
    prox_strength: float = 0.1
    mann_rate: float = 0.2
    sigma_z: float | None = None


@dataclass
class CropSection:
    size: int = 128


@dataclass
class RunConfig:
    aperture: ApertureSection = field(default_factory=ApertureSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    solver: SolverSection = field(default_factory=SolverSection)
    prior: PriorSection = field(default_factory=PriorSection)
    pgd: PgdSection = field(default_factory=PgdSection)
    cpnp: CpnpSection = field(default_factory=CpnpSection)
    crop: CropSection = field(default_factory=CropSection)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = cls()
        for f in fields(cls):
            section = getattr(cfg, f.name)
            for key, value in data.get(f.name, {}).items():
                if not hasattr(section, key):
                    raise FormatError(f"unknown config key {f.name}.{key}")
                setattr(section, key, value)
        extra = set(data) - {f.name for f in fields(cls)}
        if extra:
            raise FormatError(f"unknown config sections: {sorted(extra)}")
        return cfg

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"malformed config file: {e}") from e
        return cls.from_dict(data)
