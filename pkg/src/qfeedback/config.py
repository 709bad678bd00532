"""Scenario configuration and per-cycle trajectory records.

Config files are JSON objects; unknown keys are rejected. Complex numbers
are written either as a plain number or as a ``[re, im]`` pair.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .core import ATOL, PureState, QuantumStateError

SEED_ENV = "QFEEDBACK_SEED"
MAX_COPIES = 8


class ConfigError(ValueError):
    pass


def parse_complex(value) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}")


def complex_to_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def parse_state(value) -> PureState:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"expected a list of amplitudes, got {value!r}")
    try:
        return PureState([parse_complex(v) for v in value])
    except QuantumStateError as exc:
        raise ConfigError(str(exc)) from exc


def _strict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class NoiseConfig:
    kind: str = "none"
    p: float = 0.0

    def validate(self):
        if self.kind not in ("none", "depolarizing"):
            raise ConfigError(f"noise.kind must be 'none' or 'depolarizing', got {self.kind!r}")
        if not 0.0 <= self.p < 1.0:
            raise ConfigError(f"noise.p must lie in [0, 1), got {self.p!r}")


@dataclass
class ChannelConfig:
    delay: int = 0
    drop_probability: float = 0.0

    def validate(self):
        if isinstance(self.delay, bool) or not isinstance(self.delay, int) or self.delay < 0:
            raise ConfigError(f"channel.delay must be a nonnegative integer, got {self.delay!r}")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ConfigError(
                f"channel.drop_probability must lie in [0, 1], got {self.drop_probability!r}")


@dataclass
class ClonerConfig:
    N: int = 2
    M: int = 1

    @property
    def total_copies(self) -> int:
        return self.N + self.M + 1

    def validate(self):
        for name in ("N", "M"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"cloner.{name} must be an integer >= 1, got {v!r}")
        if self.total_copies > MAX_COPIES:
            raise ConfigError(f"N + M + 1 = {self.total_copies} exceeds {MAX_COPIES}")


@dataclass
class RecognizerConfig:
    d0: float = 0.1
    mode: str = "oracle"
    bases: Optional[list] = None
    merge_tolerance: float = 1e-6

    def validate(self):
        if not isinstance(self.d0, (int, float)) or self.d0 <= 0:
            raise ConfigError(f"recognizer.d0 must be > 0, got {self.d0!r}")
        if self.mode not in ("oracle", "measured"):
            raise ConfigError(f"recognizer.mode must be 'oracle' or 'measured', got {self.mode!r}")

    def parsed_bases(self):
        if self.bases is None:
            return None
        return [[parse_state(v) for v in basis] for basis in self.bases]


@dataclass
class LoopConfig:
    scenario: str
    initial_alpha: Any = 1.0
    initial_beta: Any = 0.0
    target: Any = field(default_factory=lambda: [1.0, 0.0])
    cycles: int = 10
    seed: Optional[int] = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    cloner: ClonerConfig = field(default_factory=ClonerConfig)
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "LoopConfig":
        cfg = _strict(cls, data, "config")
        sections = {"noise": NoiseConfig, "channel": ChannelConfig,
                    "cloner": ClonerConfig, "recognizer": RecognizerConfig}
        for name, sub in sections.items():
            value = getattr(cfg, name)
            if not isinstance(value, sub):
                setattr(cfg, name, _strict(sub, value, name))
        if cfg.seed is None and os.environ.get(SEED_ENV):
            try:
                cfg.seed = int(os.environ[SEED_ENV])
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "LoopConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def initial_state(self) -> PureState:
        alpha, beta = parse_complex(self.initial_alpha), parse_complex(self.initial_beta)
        norm = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm - 1.0) > ATOL:
            raise ConfigError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
        return PureState([alpha, beta])

    def target_state(self) -> PureState:
        target = parse_state(self.target)
        if target.num_qubits != 1:
            raise ConfigError("target must be a single-qubit state")
        return target

    def validate(self, scenario: Optional[str] = None):
        if self.scenario not in ("teleport", "clone"):
            raise ConfigError(f"scenario must be 'teleport' or 'clone', got {self.scenario!r}")
        if scenario is not None and self.scenario != scenario:
            raise ConfigError(f"expected a {scenario} scenario, got {self.scenario!r}")
        if isinstance(self.cycles, bool) or not isinstance(self.cycles, int) or self.cycles < 1:
            raise ConfigError(f"cycles must be a positive integer, got {self.cycles!r}")
        seed = 0 if self.seed is None else self.seed
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        self.noise.validate()
        self.channel.validate()
        self.cloner.validate()
        self.recognizer.validate()
        self.initial_state()
        self.target_state()
        bases = self.recognizer.parsed_bases()
        if bases is not None and len(bases) != self.cloner.N:
            raise ConfigError(f"recognizer.bases lists {len(bases)} bases for N = {self.cloner.N}")

    @property
    def rng_seed(self) -> int:
        return 0 if self.seed is None else self.seed


@dataclass(frozen=True)
class TrajectoryRecord:
    cycle: int
    fidelity_to_target: float
    bell_outcome: Optional[Any] = None
    recognizer_max_distance: Optional[float] = None
    gate_signal: Optional[Any] = None
    actuator_applied: bool = False

    def rounded(self, digits: int = 9) -> "TrajectoryRecord":
        def r(x):
            return None if x is None else float(f"{x:.{digits}g}")

        return TrajectoryRecord(self.cycle, r(self.fidelity_to_target), self.bell_outcome,
                                r(self.recognizer_max_distance), self.gate_signal,
                                self.actuator_applied)


def config_to_dict(cfg: LoopConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = {g.name: getattr(v, g.name) for g in fields(v)} if hasattr(
            v, "__dataclass_fields__") else v
    return out

