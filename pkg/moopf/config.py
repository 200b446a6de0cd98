from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from moopf.errors import ConfigError

_MAX_CONFIG_BYTES = 256 * 1024


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class EnvSection(_Section):
    episode_length: int = Field(100, ge=1)
    gate_tolerance: float = Field(1e-3, gt=0.0)
    warmup_attempts: int = Field(10, ge=1)
    intervals_per_day: int = Field(24, ge=1)
    peak_factor: float = Field(1.2, gt=0.0)
    trough_factor: float = Field(0.7, gt=0.0)
    peak_hour: float = 18.0
    weekend_factor: float = Field(0.9, gt=0.0)
    noise_sigma: float = Field(0.02, ge=0.0)
    fluctuation_window: int = Field(5, ge=1)
    frozen_profile: bool = False
    solver_tolerance: float = Field(1e-6, gt=0.0)
    solver_max_iter: int = Field(50, ge=1)

    @model_validator(mode="after")
    def _check_profile(self) -> "EnvSection":
        if self.trough_factor > self.peak_factor:
            raise ValueError("trough_factor must not exceed peak_factor")
        return self


class RewardSection(_Section):
    line_loss_rate: float = Field(0.05, gt=0.0)
    thermal_epsilon: float = Field(1e-6, gt=0.0)
    divergence_reward: float = -100.0
    early_stop: Optional[float] = None  # None disables (+inf sentinel)
    cost_weight: float = 0.5
    w4: float = 1.0
    weights: Optional[List[float]] = None  # explicit w1..w8 overrides everything above
    literal_penalty_indexing: bool = False

    @model_validator(mode="after")
    def _check_weights(self) -> "RewardSection":
        if self.weights is not None and len(self.weights) != 8:
            raise ValueError("weights must list exactly 8 values (w1..w8)")
        return self


class AstgcnSection(_Section):
    enabled: bool = True
    recent: int = Field(12, ge=1)
    daily: int = Field(7, ge=0)
    weekly: int = Field(4, ge=0)
    components: int = Field(2, ge=1)
    channels: int = Field(64, ge=1)
    cheb_order: int = Field(3, ge=1)
    kernel: int = Field(3, ge=1)
    embedding: int = Field(64, ge=1)
    attention_mode: Literal["st", "cosine", "jaccard", "uniform"] = "st"
    freeze: bool = False

    @model_validator(mode="after")
    def _check_kernel(self) -> "AstgcnSection":
        shortest = min(self.recent, self.daily + 1, self.weekly + 1)
        if self.kernel > shortest:
            raise ValueError(f"kernel={self.kernel} longer than shortest segment ({shortest})")
        return self


class DdpgSection(_Section):
    episodes: int = Field(500, ge=1)
    gamma: float = Field(0.99, ge=0.0, le=1.0)
    rho: float = Field(0.005, ge=0.0, le=1.0)
    buffer_capacity: int = Field(100_000, ge=1)
    batch_size: int = Field(64, ge=1)
    critic_lr: float = Field(1e-3, gt=0.0)
    actor_lr: float = Field(1e-4, gt=0.0)
    hidden: List[int] = Field(default_factory=lambda: [256, 256])
    optimizer: Literal["adam", "sgd"] = "adam"
    ou_theta: float = Field(0.15, ge=0.0)
    ou_sigma: float = Field(0.2, ge=0.0)
    ou_sigma_final: float = Field(0.05, ge=0.0)
    time_budget_seconds: Optional[float] = None


class BaselineSection(_Section):
    population: int = Field(30, ge=1)
    budget_per_step: int = Field(300, ge=1)
    levy_beta: float = Field(1.5, gt=0.0, lt=2.0)


class EvaluationSection(_Section):
    episodes: int = Field(100, ge=1)  # N_eval
    horizon: int = Field(100, ge=1)  # T_end
    fault_onset: int = Field(10, ge=0)
    recovery_window: int = Field(2, ge=1)
    max_fault_count: int = Field(5, ge=0)
    scenarios_per_count: int = Field(5, ge=1)
    weight_grid: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0])
    monitored_bus: Optional[int] = None
    attention_window: int = Field(10, ge=1)
    ablation_seeds: int = Field(5, ge=1)
    ablation_threshold: Optional[float] = None


class RenewableSection(_Section):
    """Overrides applied to every RER generator; None keeps the case-file value."""

    wind_shape: Optional[float] = Field(None, gt=0.0)
    wind_scale: Optional[float] = Field(None, gt=0.0)
    cut_in: Optional[float] = Field(None, ge=0.0)
    rated_speed: Optional[float] = Field(None, gt=0.0)
    cut_out: Optional[float] = Field(None, gt=0.0)
    solar_mu: Optional[float] = None
    solar_sigma: Optional[float] = Field(None, gt=0.0)
    standard_irradiance: Optional[float] = Field(None, gt=0.0)
    direct: Optional[float] = Field(None, ge=0.0)
    reserve: Optional[float] = Field(None, ge=0.0)
    penalty: Optional[float] = Field(None, ge=0.0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    case: str = "case33"
    seed: Optional[int] = None
    env: EnvSection = Field(default_factory=EnvSection)
    rewards: RewardSection = Field(default_factory=RewardSection)
    astgcn: AstgcnSection = Field(default_factory=AstgcnSection)
    ddpg: DdpgSection = Field(default_factory=DdpgSection)
    baselines: BaselineSection = Field(default_factory=BaselineSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    renewables: RenewableSection = Field(default_factory=RenewableSection)


class RuntimeSettings(BaseSettings):
    """Process-level knobs read from MOOPF_* environment variables or .env."""

    model_config = SettingsConfigDict(env_prefix="MOOPF_", env_file=".env", extra="ignore")

    eval_workers: int = Field(4, ge=1)
    out_dir: Path = Path("runs")
    torch_threads: Optional[int] = None
    log_level: str = "INFO"


def _load_payload(path: Path) -> Any:
    size = path.stat().st_size if path.exists() else 0
    if size > _MAX_CONFIG_BYTES:
        raise ConfigError(f"{path} exceeds {_MAX_CONFIG_BYTES} byte limit")
    text = path.read_text(encoding="utf-8")
    if path.suffix in {".yaml", ".yml"}:
        return yaml.safe_load(text)
    return json.loads(text)


def load_run_config(path: str | Path | None = None) -> RunConfig:
    """Load a run config from YAML/JSON; None yields the defaults.

    Env fallback for the seed applies only when the file leaves it unset.
    """
    if path is None:
        data: Any = {}
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = _load_payload(p) or {}
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{p}: could not parse config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
    try:
        cfg = RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc
    env_seed = os.getenv("MOOPF_SEED")
    if cfg.seed is None and env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            pass
    return cfg


def load_runtime_settings() -> RuntimeSettings:
    return RuntimeSettings()


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical JSON dump, seed excluded so reseeding keeps the hash."""
    payload = cfg.model_dump(mode="json", exclude={"seed"})
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def resolve_seed(cfg: RunConfig) -> int:
    """Config seed > MOOPF_SEED (already folded in by the loader) > derived seed."""
    if cfg.seed is not None:
        return int(cfg.seed)
    env_seed = os.getenv("MOOPF_SEED")
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError:
            pass
    from moopf.seed import make_run_seed

    return make_run_seed(cfg.case, config_hash(cfg))
