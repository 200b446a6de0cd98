from __future__ import annotations

import json
from pathlib import Path

import pytest

from moopf.config import RunConfig, config_hash, load_run_config, load_runtime_settings, resolve_seed
from moopf.errors import ConfigError, MoopfError
from moopf.seed import derive_seed, episode_seeds, make_run_seed, seed_set_digest


def test_defaults_carry_documented_values():
    cfg = load_run_config(None)
    assert cfg.case == "case33"
    assert cfg.env.episode_length == 100
    assert cfg.env.gate_tolerance == 1e-3
    assert cfg.env.fluctuation_window == 5
    assert cfg.rewards.divergence_reward == -100.0
    assert cfg.rewards.early_stop is None
    assert cfg.astgcn.recent == 12 and cfg.astgcn.daily == 7 and cfg.astgcn.weekly == 4
    assert cfg.astgcn.cheb_order == 3 and cfg.astgcn.embedding == 64
    assert cfg.ddpg.gamma == 0.99 and cfg.ddpg.rho == 0.005
    assert cfg.ddpg.hidden == [256, 256]
    assert cfg.evaluation.episodes == 100 and cfg.evaluation.horizon == 100


def test_yaml_and_json_load(tmp_path: Path):
    y = tmp_path / "run.yaml"
    y.write_text("case: case2\nrewards:\n  w4: 3.0\nddpg:\n  episodes: 5\n")
    cfg = load_run_config(y)
    assert cfg.case == "case2"
    assert cfg.rewards.w4 == 3.0
    assert cfg.ddpg.episodes == 5

    j = tmp_path / "run.json"
    j.write_text(json.dumps({"case": "case6", "env": {"episode_length": 12}}))
    cfg = load_run_config(j)
    assert cfg.case == "case6"
    assert cfg.env.episode_length == 12


def test_unknown_key_is_rejected(tmp_path: Path):
    p = tmp_path / "bad.yaml"
    p.write_text("env:\n  episode_lenght: 10\n")
    with pytest.raises(ConfigError):
        load_run_config(p)


def test_parse_failure_and_missing_file(tmp_path: Path):
    p = tmp_path / "broken.yaml"
    p.write_text("env: [unclosed\n")
    with pytest.raises(ConfigError):
        load_run_config(p)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.yaml")


def test_config_error_is_a_value_error(tmp_path: Path):
    p = tmp_path / "list.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        load_run_config(p)
    assert issubclass(ConfigError, MoopfError)


def test_weight_vector_length_checked(tmp_path: Path):
    p = tmp_path / "w.yaml"
    p.write_text("rewards:\n  weights: [1, 1, 1, 1, 1, 1, 1]\n")
    with pytest.raises(ConfigError):
        load_run_config(p)


def test_kernel_longer_than_segment_rejected(tmp_path: Path):
    p = tmp_path / "k.yaml"
    p.write_text("astgcn:\n  daily: 1\n  kernel: 3\n")
    with pytest.raises(ConfigError):
        load_run_config(p)


def test_config_seed_overrides_env(monkeypatch, tmp_path: Path):
    monkeypatch.setenv("MOOPF_SEED", "9999")
    p = tmp_path / "s.yaml"
    p.write_text("seed: 42\n")
    assert resolve_seed(load_run_config(p)) == 42


def test_env_seed_used_when_config_silent(monkeypatch):
    monkeypatch.setenv("MOOPF_SEED", "1234")
    cfg = load_run_config(None)
    assert cfg.seed == 1234
    assert resolve_seed(RunConfig()) == 1234


def test_derived_seed_when_nothing_given():
    cfg = RunConfig(case="case6")
    assert resolve_seed(cfg) == make_run_seed("case6", config_hash(cfg))
    assert resolve_seed(cfg) == resolve_seed(RunConfig(case="case6"))
    assert resolve_seed(cfg) != resolve_seed(RunConfig(case="case2"))


def test_config_hash_ignores_seed_but_tracks_content():
    a = RunConfig(seed=1)
    b = RunConfig(seed=2)
    assert config_hash(a) == config_hash(b)
    c = RunConfig(rewards={"w4": 2.0})
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64


def test_seed_helpers_are_deterministic():
    assert derive_seed(5, "x", 1) == derive_seed(5, "x", 1)
    assert derive_seed(5, "x", 1) != derive_seed(5, "x", 2)
    seeds = episode_seeds(3, 4, stream="score")
    assert len(set(seeds)) == 4
    assert episode_seeds(3, 2, stream="score") == seeds[:2]
    assert all(0 <= s < 2**63 for s in seeds)
    assert seed_set_digest(seeds) == seed_set_digest(list(seeds))
    assert seed_set_digest(seeds) != seed_set_digest(seeds[::-1])


def test_runtime_settings_from_env(monkeypatch, tmp_path: Path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("MOOPF_EVAL_WORKERS", "3")
    monkeypatch.setenv("MOOPF_OUT_DIR", str(tmp_path / "out"))
    settings = load_runtime_settings()
    assert settings.eval_workers == 3
    assert settings.out_dir == tmp_path / "out"
    assert settings.log_level == "INFO"
