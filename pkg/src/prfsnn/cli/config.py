"""YAML run configuration: one section per subcommand, validated before use."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml

from ..traingrad.model import TrainConfig
from .bench import MIN_REPEATS
from .equiv import EquivConfig

MAX_SEED = (1 << 64) - 1


class ConfigError(ValueError):
    pass


@dataclass
class SimulateSection:
    neuron: str = "lif"  # lif | prf
    mode: str = "parallel"  # sequential | parallel | deploy
    T: int = 64
    B: int = 1
    N: int = 1
    input: str = "randn"  # randn | impulse | step
    amplitude: float = 1.0
    beta: float = 0.9
    tau: float = 2.0
    theta: float = 0.5
    delta: float = 0.1
    v_th: float = 1.0


@dataclass
class BenchSection:
    seq_lens: list = field(default_factory=lambda: [256, 1024, 4096])
    batch: int = 64
    channels: int = 128
    repeats: int = 3
    beta: float = 0.9
    dtype: str = "float32"


@dataclass
class TaskSection:
    name: str = "impulse"  # impulse | smnist | psmnist
    n_train: int = 1000
    n_test: int = 500
    length: int = 256
    amplitude: float = 3.0
    permute_seed: int = 42
    limit: int = 0  # 0 means every available digit
    test_fraction: float = 0.2
    data_dir: str = ""


@dataclass
class FreqSection:
    tau: float = 2.0
    theta: float = 0.5
    delta: float = 0.1
    steps: int = 4096
    omega_max: float = 1.0
    n_omegas: int = 101
    simulate: bool = True
    tolerance: float = 0.10


@dataclass
class VarianceSection:
    tau: float = 4.0
    delta: float = 0.5
    sigma: float = 1.0
    trials: int = 100_000
    T: int = 0  # 0 picks the horizon automatically
    z_max: float = 3.0


@dataclass
class EnergySection:
    preset: str = "listops"  # listops | custom
    h: int = 64
    e_mac: float = 4.6
    e_ac: float = 0.9
    e_m: float = 3.7
    depth: int = 8
    width: int = 128
    seq_len: int = 2000
    rates: list = field(default_factory=lambda: [[0.0353, 0.0353]])
    max_ratio: float = 0.05


@dataclass
class StatsSection:
    n_samples: int = 100


@dataclass
class RunConfig:
    seed: int = 0
    simulate: SimulateSection = field(default_factory=SimulateSection)
    equiv: EquivConfig = field(default_factory=EquivConfig)
    bench: BenchSection = field(default_factory=BenchSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    task: TaskSection = field(default_factory=TaskSection)
    freq: FreqSection = field(default_factory=FreqSection)
    variance: VarianceSection = field(default_factory=VarianceSection)
    energy: EnergySection = field(default_factory=EnergySection)
    stats: StatsSection = field(default_factory=StatsSection)


def _coerce(section: str, name: str, value, default):
    where = f"{section}.{name}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, (list, tuple)):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return type(default)(value)
    return value


def _build(cls, section: str, raw):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(raw).__name__}")
    proto = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {unknown}; allowed {sorted(known)}")
    kwargs = {k: _coerce(section, k, v, getattr(proto, k)) for k, v in raw.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _check(cfg: RunConfig):
    s = cfg.simulate
    if s.neuron not in ("lif", "prf") or s.mode not in ("sequential", "parallel", "deploy"):
        raise ConfigError("simulate: neuron must be lif|prf and mode sequential|parallel|deploy")
    if s.neuron == "lif" and s.mode == "deploy":
        raise ConfigError("simulate: deploy mode exists only for prf")
    if s.input not in ("randn", "impulse", "step") or min(s.T, s.B, s.N) < 1:
        raise ConfigError("simulate: input must be randn|impulse|step and T, B, N >= 1")
    b = cfg.bench
    if b.repeats < MIN_REPEATS:
        raise ConfigError(f"bench.repeats must be at least {MIN_REPEATS}")
    if not b.seq_lens or any(not isinstance(L, int) or L < 1 for L in b.seq_lens):
        raise ConfigError("bench.seq_lens must be a non-empty list of positive integers")
    if b.dtype not in ("float32", "float64"):
        raise ConfigError("bench.dtype must be float32 or float64")
    t = cfg.task
    if t.name not in ("impulse", "smnist", "psmnist"):
        raise ConfigError("task.name must be impulse|smnist|psmnist")
    if not 0 < t.test_fraction < 1:
        raise ConfigError("task.test_fraction must lie in (0, 1)")
    f = cfg.freq
    if f.tau <= 0 or f.delta <= 0 or f.tau <= f.delta or f.n_omegas < 2 or f.steps < 4:
        raise ConfigError("freq: need tau > delta > 0, n_omegas >= 2, steps >= 4")
    v = cfg.variance
    if v.trials < 2 or v.tau <= v.delta or v.delta <= 0 or v.sigma < 0:
        raise ConfigError("variance: need trials >= 2, tau > delta > 0, sigma >= 0")
    e = cfg.energy
    if e.preset not in ("listops", "custom"):
        raise ConfigError("energy.preset must be listops|custom")
    if not (math.isfinite(e.max_ratio) and e.max_ratio > 0):
        raise ConfigError("energy.max_ratio must be positive")


def parse_config(raw: dict | None) -> RunConfig:
    """Validate a nested mapping against the schema and build a :class:`RunConfig`."""
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    sections = {f.name: f for f in fields(RunConfig)}
    unknown = sorted(set(raw) - set(sections))
    if unknown:
        raise ConfigError(f"unknown sections {unknown}; allowed {sorted(sections)}")
    kwargs = {}
    for name, value in raw.items():
        if name == "seed":
            if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_SEED:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            kwargs[name] = value
        else:
            kwargs[name] = _build(sections[name].default_factory, name, value)
    cfg = RunConfig(**kwargs)
    _check(cfg)
    return cfg


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return parse_config(raw)


def config_dict(cfg: RunConfig) -> dict:
    """Plain nested mapping of ``cfg`` suitable for YAML dumping."""
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if is_dataclass(v):
            out[f.name] = {g.name: (list(x) if isinstance(x := getattr(v, g.name), tuple) else x) for g in fields(v)}
        else:
            out[f.name] = v
    return out
