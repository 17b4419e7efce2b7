"""Run configuration: one YAML document mirroring every physical constant.

``load_config`` merges a user file over the packaged ``defaults.yaml``,
validates every block and returns a frozen :class:`RunConfig`.
``dump_config`` writes the effective configuration back out; reloading that
file gives an equal object.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .bandwidth import BayesClassifier
from .coherent import CoherentConfig
from .protocol import ProtocolConfig
from .structure import EsmParams, GsmParams, MetastableModel


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass(frozen=True)
class ZeroFieldData:
    """Free lifetimes (ns) and metastable branching of E2, E1, Ex, Ey, A1, A2."""

    lifetimes: tuple = (7.5, 7.5, 12.1, 12.1, 5.1, 12.1)
    ms_branch: tuple = (0.38, 0.38, None, None, 0.54, None)  # None: follow protocol.ms0_branch

    def __post_init__(self):
        object.__setattr__(self, "lifetimes", tuple(float(x) for x in self.lifetimes))
        object.__setattr__(self, "ms_branch", tuple(None if x is None else float(x) for x in self.ms_branch))

    def validate(self):
        if len(self.lifetimes) != 6 or len(self.ms_branch) != 6:
            raise ConfigError("zero_field lists must have six entries")
        if not all(t > 0 for t in self.lifetimes):
            raise ConfigError("zero_field.lifetimes must be positive")
        if not all(b is None or 0 <= b <= 1 for b in self.ms_branch):
            raise ConfigError("zero_field.ms_branch entries must lie in [0, 1]")

    def branching(self, low: float):
        return np.array([low if b is None else b for b in self.ms_branch])


@dataclass(frozen=True)
class CavityConfig:
    cooperativity: float = 10.0
    kappa_mhz: float = 50.0  # total field decay, ordinary frequency
    kappa_ratio: float = 0.5  # kappa_a / kappa
    ref_level: int = 3  # level whose gamma defines C (M4)
    operating_point: str = "shifted"

    def validate(self):
        if not self.cooperativity >= 0:
            raise ConfigError("cavity.cooperativity must be non-negative")
        if not self.kappa_mhz > 0:
            raise ConfigError("cavity.kappa_mhz must be positive")
        if not 0 < self.kappa_ratio < 1:
            raise ConfigError("cavity.kappa_ratio must lie in (0, 1)")
        if self.ref_level not in range(6):
            raise ConfigError("cavity.ref_level must index one of the six excited levels")
        if self.operating_point not in ("shifted", "cavity"):
            raise ConfigError("cavity.operating_point must be 'shifted' or 'cavity'")


@dataclass(frozen=True)
class BandwidthConfig:
    sigma_t_ns: float = 27.5
    target: float = 1e-3
    p0: float = 0.50
    p1: float = 0.00364
    eta0: float = 3.5e-4
    eta1: float = 1.2e-5
    n_max: int = 60

    def validate(self):
        if not self.sigma_t_ns > 0:
            raise ConfigError("bandwidth.sigma_t_ns must be positive")
        if not 0 < self.target < 1:
            raise ConfigError("bandwidth.target must lie in (0, 1)")
        if int(self.n_max) < 1:
            raise ConfigError("bandwidth.n_max must be a positive integer")
        try:
            self.classifier()
        except ValueError as exc:
            raise ConfigError(f"bandwidth: {exc}") from None

    def classifier(self) -> BayesClassifier:
        return BayesClassifier(self.p0, self.p1, self.eta0, self.eta1)


@dataclass(frozen=True)
class SweepConfig:
    variable: str = "cooperativity"
    start: float = 0.1
    stop: float = 20.0
    points: int = 40
    log: bool = True
    n_max: int = 600

    def validate(self):
        if self.variable not in ("cooperativity", "eta_source", "eta_detect", "ms0_branch"):
            raise ConfigError(f"sweep.variable {self.variable!r} is not sweepable")
        if int(self.points) < 1:
            raise ConfigError("sweep.points must be a positive integer")
        if self.log and not (self.start > 0 and self.stop > 0):
            raise ConfigError("sweep.start and sweep.stop must be positive for a log grid")
        if int(self.n_max) < 1:
            raise ConfigError("sweep.n_max must be a positive integer")

    def values(self):
        if self.points == 1:
            return np.array([self.start])
        if self.log:
            return np.geomspace(self.start, self.stop, int(self.points))
        return np.linspace(self.start, self.stop, int(self.points))


@dataclass(frozen=True)
class RunConfig:
    gsm: GsmParams = field(default_factory=GsmParams)
    esm: EsmParams = field(default_factory=EsmParams)
    metastable: MetastableModel = field(default_factory=MetastableModel)
    zero_field: ZeroFieldData = field(default_factory=ZeroFieldData)
    cavity: CavityConfig = field(default_factory=CavityConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    bandwidth: BandwidthConfig = field(default_factory=BandwidthConfig)
    coherent: CoherentConfig = field(default_factory=CoherentConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    b_z_mT: float = 20.0
    out: str = "out"
    deterministic: bool = True

    def validate(self) -> "RunConfig":
        for name in ("gsm", "esm", "metastable", "zero_field", "cavity", "bandwidth", "sweep"):
            try:
                getattr(self, name).validate()
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if not self.deterministic:
            raise ConfigError("deterministic must stay true: every computation is seedless")
        if not abs(self.b_z_mT) < 1e4:
            raise ConfigError("b_z_mT must be finite and below 10 T")
        return self

    @property
    def b_z(self) -> float:
        return self.b_z_mT * 1e-3

    def level_table(self, b_z: float | None = None, ms0_branch: float | None = None):
        from .structure import level_table

        low = self.protocol.ms0_branch if ms0_branch is None else ms0_branch
        return level_table(self.esm, self.b_z if b_z is None else b_z, self.zero_field.lifetimes,
                           self.zero_field.branching(low))

    def readout_model(self, cooperativity: float | None = None, ms0_branch: float | None = None):
        from .protocol import readout_model
        from .structure import ground_levels

        c = self.cavity.cooperativity if cooperativity is None else cooperativity
        ms0 = self.protocol.ms0_branch if ms0_branch is None else ms0_branch
        return readout_model(c, ms0, table=self.level_table(ms0_branch=ms0),
                             ground=ground_levels(self.gsm, self.b_z), **self.model_kw())

    def model_kw(self) -> dict:
        return {"b_z": self.b_z, "kappa_mhz": self.cavity.kappa_mhz, "kappa_ratio": self.cavity.kappa_ratio,
                "ref_level": self.cavity.ref_level, "operating_point": self.cavity.operating_point}


BLOCKS = {"gsm": GsmParams, "esm": EsmParams, "metastable": MetastableModel, "zero_field": ZeroFieldData,
          "cavity": CavityConfig,
          "protocol": ProtocolConfig, "bandwidth": BandwidthConfig, "coherent": CoherentConfig,
          "sweep": SweepConfig}


def defaults_path() -> Path:
    return Path(str(resources.files("nvdit").joinpath("defaults.yaml")))


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = dict(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {where + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where + k!r} must be a mapping")
            out[k] = _merge(base[k], v, where + k + ".")
        else:
            out[k] = v
    return out


def from_dict(doc: dict) -> RunConfig:
    kw = {}
    for k, v in doc.items():
        cls = BLOCKS.get(k)
        if cls is None:
            kw[k] = v
            continue
        names = {f.name for f in fields(cls)}
        bad = set(v) - names
        if bad:
            raise ConfigError(f"unknown key(s) in {k}: {sorted(bad)}")
        try:
            kw[k] = cls(**v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{k}: {exc}") from None
    return RunConfig(**kw).validate()


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def to_dict(cfg: RunConfig) -> dict:
    return _plain(asdict(cfg))


def _read(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a mapping at top level")
    return doc


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    doc = _read(defaults_path())
    if path is not None:
        doc = _merge(doc, _read(path))
    if overrides:
        doc = _merge(doc, overrides)
    return from_dict(doc)


def dump_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=True)


def with_overrides(cfg: RunConfig, **blocks) -> RunConfig:
    """Replace fields block by block, e.g. ``with_overrides(cfg, cavity={"cooperativity": 2})``."""
    kw = {}
    for name, changes in blocks.items():
        kw[name] = replace(getattr(cfg, name), **changes) if isinstance(changes, dict) else changes
    return replace(cfg, **kw).validate()
