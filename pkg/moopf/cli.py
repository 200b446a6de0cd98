from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from dotenv import load_dotenv

from moopf.config import RunConfig, RuntimeSettings, config_hash, load_run_config, load_runtime_settings, resolve_seed
from moopf.errors import MoopfError
from moopf.grid.loader import load_case
from moopf.grid.types import GridCase
from moopf.telemetry import configure_logging

app = typer.Typer(help="moopf: multi-objective OPF lab (grid, DDPG + graph attention, metaheuristic baselines)")

ALGORITHMS = ("ddpg", "hho", "gwo", "random")


@app.callback()
def _root_callback():
    """moopf CLI root."""
    pass


@contextmanager
def _errors() -> Iterator[None]:
    try:
        yield
    except MoopfError as exc:
        typer.echo(f"ERROR: {exc}", err=True)
        raise typer.Exit(1)


def _setup(
    config: Optional[Path], case: Optional[str], seed: Optional[int]
) -> tuple[RunConfig, GridCase, RuntimeSettings, int]:
    load_dotenv()
    settings = load_runtime_settings()
    configure_logging(settings.log_level)
    if settings.torch_threads:
        import torch

        torch.set_num_threads(settings.torch_threads)
    cfg = load_run_config(config)
    if case is not None:
        cfg.case = case
    if seed is not None:
        cfg.seed = seed
    return cfg, load_case(cfg.case), settings, resolve_seed(cfg)


def _eval_config(cfg: RunConfig, horizon: int) -> RunConfig:
    env = cfg.env.model_copy(update={"episode_length": max(cfg.env.episode_length, horizon)})
    return cfg.model_copy(update={"env": env})


def _policy(algorithm: str, cfg: RunConfig, grid: GridCase, checkpoint: Optional[Path], budget: Optional[int], seed: int):
    from moopf.baselines import HeuristicPolicy, RandomPolicy

    if algorithm == "ddpg":
        if checkpoint is None:
            raise MoopfError("--checkpoint is required for the ddpg policy")
        from moopf.agent.checkpoint import checkpoint_config, load_checkpoint, read_checkpoint
        from moopf.env.environment import OPFEnv

        cfg = checkpoint_config(read_checkpoint(checkpoint), cfg)
        return load_checkpoint(checkpoint, OPFEnv(grid, cfg), cfg).policy(), cfg
    if algorithm in ("hho", "gwo"):
        return HeuristicPolicy(algorithm, section=cfg.baselines, budget=budget, seed=seed), cfg  # type: ignore[arg-type]
    if algorithm == "random":
        return RandomPolicy(seed), cfg
    raise MoopfError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")


_CONFIG = typer.Option(None, "--config", "-c", exists=True, dir_okay=False, help="Run config YAML/JSON")
_CASE = typer.Option(None, "--case", help="Bundled case name (case33) or path to a case file")
_SEED = typer.Option(None, "--seed", help="Global seed (config > MOOPF_SEED > derived)")
_OUT = typer.Option(None, "--out", help="Output root (defaults to MOOPF_OUT_DIR or runs/)")


@app.command("train")
def cmd_train(
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    episodes: Optional[int] = typer.Option(None, help="Override ddpg.episodes"),
    log_transitions: bool = typer.Option(False, help="Also write every step to transitions.csv"),
):
    """Train the DDPG agent and write checkpoint.pt, training.csv and the manifest."""
    with _errors():
        from moopf.agent.checkpoint import save_checkpoint
        from moopf.agent.training import train
        from moopf.artifacts import open_run
        from moopf.env.environment import OPFEnv
        from moopf.env.translog import TransitionLog

        cfg, grid, settings, base = _setup(config, case, seed)
        run = open_run(out or settings.out_dir, "train", cfg, seeds=[base])
        tlog = TransitionLog(run.store.path("transitions.csv")) if log_transitions else None
        env = OPFEnv(grid, cfg, transition_log=tlog)
        agent, log = train(
            env,
            cfg,
            seed=base,
            episodes=episodes,
            on_episode=lambda r: typer.echo(f"episode {r.episode:4d}  steps={r.steps:3d}  R={r.cumulative_reward:10.3f}  {r.reason}"),
        )
        run.write_frame("training", log.to_frame())
        run.outputs["checkpoint"] = str(save_checkpoint(agent, run.store.path("checkpoint.pt")))
        if tlog is not None:
            tlog.flush()
            run.outputs["transitions"] = str(tlog.path)
        run.summary = {"episodes": len(log), "last_reward": float(log.rewards[-1]) if len(log) else None}
        typer.echo(f"Wrote {run.finish()}")


@app.command("score")
def cmd_score(
    algorithm: str = typer.Option("ddpg", help="ddpg | hho | gwo | random"),
    checkpoint: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="Agent checkpoint (ddpg)"),
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    episodes: Optional[int] = typer.Option(None, help="N_eval (default evaluation.episodes)"),
    horizon: Optional[int] = typer.Option(None, help="T_end (default evaluation.horizon)"),
    budget: Optional[int] = typer.Option(None, help="Objective evaluations per step for hho/gwo"),
):
    """SCORE one policy: mean cumulative reward over N_eval seeded episodes."""
    with _errors():
        from moopf.artifacts import open_run
        from moopf.env.environment import OPFEnv
        from moopf.evaluation.score import score
        from moopf.seed import episode_seeds

        cfg, grid, settings, base = _setup(config, case, seed)
        n_eval = episodes or cfg.evaluation.episodes
        t_end = horizon or cfg.evaluation.horizon
        policy, cfg = _policy(algorithm, cfg, grid, checkpoint, budget, base)
        ecfg = _eval_config(cfg, t_end)
        report = score(lambda: OPFEnv(grid, ecfg), policy, n_eval=n_eval, t_end=t_end, seed=base, workers=settings.eval_workers)
        run = open_run(out or settings.out_dir, "score", ecfg, seeds=episode_seeds(base, n_eval, stream="score"))
        run.write_frame("score", report.episodes_frame())
        run.summary = report.to_row()
        run.finish()
        typer.echo(json.dumps(report.to_row(), indent=2))


@app.command("compare")
def cmd_compare(
    checkpoint: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="Agent checkpoint; omit to skip ddpg"),
    algorithms: List[str] = typer.Option(["hho", "gwo"], "--algorithm", "-a", help="Heuristic arms (repeatable)"),
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    episodes: Optional[int] = typer.Option(None, help="N_eval"),
    horizon: Optional[int] = typer.Option(None, help="T_end"),
    budget: Optional[int] = typer.Option(None, help="Objective evaluations per step for hho/gwo"),
):
    """SCORE DDPG and the heuristic arms on matched episode seeds."""
    with _errors():
        from moopf.artifacts import open_run
        from moopf.env.environment import OPFEnv
        from moopf.evaluation.score import compare
        from moopf.seed import episode_seeds

        cfg, grid, settings, base = _setup(config, case, seed)
        n_eval = episodes or cfg.evaluation.episodes
        t_end = horizon or cfg.evaluation.horizon
        arms = (["ddpg"] if checkpoint is not None else []) + [a for a in algorithms if a != "ddpg"]
        policies = []
        for arm in arms:
            policy, arm_cfg = _policy(arm, cfg, grid, checkpoint, budget, base)
            if arm == "ddpg":
                cfg = arm_cfg
            policies.append(policy)
        ecfg = _eval_config(cfg, t_end)
        table, _ = compare(
            lambda: OPFEnv(grid, ecfg), policies, n_eval=n_eval, t_end=t_end, seed=base, workers=settings.eval_workers
        )
        run = open_run(out or settings.out_dir, "compare", ecfg, seeds=episode_seeds(base, n_eval, stream="score"))
        run.write_frame("compare", table)
        run.finish()
        typer.echo(table.to_string(index=False))


@app.command("fault-study")
def cmd_fault_study(
    algorithm: str = typer.Option("ddpg", help="ddpg | hho | gwo | random"),
    checkpoint: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="Agent checkpoint (ddpg)"),
    nodes: List[int] = typer.Option(None, "--node", help="Explicit faulted bus ids (repeatable); default samples scenarios"),
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    budget: Optional[int] = typer.Option(None, help="Objective evaluations per step for hho/gwo"),
):
    """Trip generators at the onset interval and count intervals until voltages recover."""
    with _errors():
        from moopf.artifacts import open_run
        from moopf.env.environment import OPFEnv
        from moopf.evaluation.faults import FaultScenario, fault_study, sample_scenarios, scenarios_frame

        cfg, grid, settings, base = _setup(config, case, seed)
        ev = cfg.evaluation
        policy, cfg = _policy(algorithm, cfg, grid, checkpoint, budget, base)
        ecfg = _eval_config(cfg, ev.horizon)
        if nodes:
            scenarios = [FaultScenario(tuple(nodes), ev.fault_onset, ev.recovery_window)]
        else:
            scenarios = sample_scenarios(
                OPFEnv(grid, ecfg),
                range(ev.max_fault_count + 1),
                ev.scenarios_per_count,
                onset=ev.fault_onset,
                recovery_window=ev.recovery_window,
                seed=base,
            )
        table, measured = fault_study(lambda: OPFEnv(grid, ecfg), policy, scenarios, horizon=ev.horizon, seed=base)
        run = open_run(out or settings.out_dir, "fault-study", ecfg, seeds=[base])
        run.write_frame("faults", table)
        run.write_frame("fault_scenarios", scenarios_frame(measured))
        run.finish()
        typer.echo(table.to_string(index=False))


@app.command("weight-sweep")
def cmd_weight_sweep(
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    episodes: Optional[int] = typer.Option(None, help="Training episodes per w4 value"),
    n_eval: Optional[int] = typer.Option(None, help="N_eval per cell"),
    horizon: Optional[int] = typer.Option(None, help="T_end per cell"),
):
    """Train and score one agent per voltage-fluctuation weight w4."""
    with _errors():
        from moopf.artifacts import open_run
        from moopf.evaluation.sweep import weight_sweep

        cfg, grid, settings, base = _setup(config, case, seed)
        t_end = horizon or cfg.evaluation.horizon
        ecfg = _eval_config(cfg, t_end)
        result = weight_sweep(
            grid, ecfg, seed=base, episodes=episodes, n_eval=n_eval, t_end=t_end, workers=settings.eval_workers
        )
        run = open_run(out or settings.out_dir, "weight-sweep", ecfg, seeds=[base])
        run.write_frame("sweep", result.table)
        run.write_frame("sweep_traces", result.traces)
        run.finish()
        typer.echo(result.table.to_string(index=False))


@app.command("export-attention")
def cmd_export_attention(
    checkpoint: Path = typer.Option(..., exists=True, dir_okay=False, help="Agent checkpoint with a graph extractor"),
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    window: Optional[int] = typer.Option(None, help="Steps to average over (default evaluation.attention_window)"),
):
    """Dump mean spatial and temporal attention matrices to CSV."""
    with _errors():
        from moopf.agent.checkpoint import checkpoint_config, read_checkpoint
        from moopf.artifacts import open_run
        from moopf.env.environment import OPFEnv
        from moopf.evaluation.attention import export_attention

        cfg, grid, settings, base = _setup(config, case, seed)
        cfg = checkpoint_config(read_checkpoint(checkpoint), cfg)
        export = export_attention(checkpoint, OPFEnv(grid, cfg), cfg, window=window, seed=base)
        run = open_run(out or settings.out_dir, "export-attention", cfg, seeds=[base])
        run.write_frame("attention_spatial", export.spatial_frame([b.id for b in grid.buses]))
        run.write_frame("attention_temporal", export.temporal_frame())
        run.summary = {"steps": export.steps}
        typer.echo(f"Wrote {run.finish()}")


@app.command("ablation")
def cmd_ablation(
    modes: List[str] = typer.Option(["st", "cosine"], "--mode", help="Attention modes to compare (repeatable)"),
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
    out: Optional[Path] = _OUT,
    episodes: Optional[int] = typer.Option(None, help="Training episodes per run"),
    seeds: Optional[int] = typer.Option(None, help="Training seeds per mode"),
    threshold: Optional[float] = typer.Option(None, help="Reward threshold (default evaluation.ablation_threshold)"),
):
    """Episodes-to-threshold per attention mode, median over seeds."""
    with _errors():
        from moopf.artifacts import open_run
        from moopf.evaluation.ablation import ATTENTION_MODES, attention_ablation

        bad = [m for m in modes if m not in ATTENTION_MODES]
        if bad:
            raise MoopfError(f"unknown attention mode(s): {', '.join(bad)}")
        cfg, grid, settings, base = _setup(config, case, seed)
        runs, summary = attention_ablation(
            grid, cfg, modes=modes, seed=base, seeds=seeds, episodes=episodes, threshold=threshold
        )
        run = open_run(out or settings.out_dir, "ablation", cfg, seeds=[base])
        run.write_frame("ablation_runs", runs)
        run.write_frame("ablation", summary)
        run.finish()
        typer.echo(summary.to_string(index=False))


@app.command("render-plots")
def cmd_render_plots(
    run_dir: Path = typer.Argument(..., exists=True, file_okay=False, help="Run directory holding CSV outputs"),
):
    """Render PNG figures for every known CSV in a run directory."""
    load_dotenv()
    paths = []
    with _errors():
        from moopf.evaluation.plots import render_plots

        paths = render_plots(run_dir)
    if not paths:
        typer.echo("ERROR: no known tables in run directory", err=True)
        raise typer.Exit(1)
    for p in paths:
        typer.echo(f"Wrote {p}")


@app.command("describe")
def cmd_describe(
    config: Optional[Path] = _CONFIG,
    case: Optional[str] = _CASE,
    seed: Optional[int] = _SEED,
):
    """Describe the effective configuration, case sizes and derived widths (no training)."""
    with _errors():
        from moopf.env.environment import OPFEnv

        cfg, grid, _, base = _setup(config, case, seed)
        env = OPFEnv(grid, cfg)
        summary = {
            "config": cfg.model_dump(mode="json"),
            "config_hash": config_hash(cfg),
            "seed_effective": base,
            "case": {
                "name": grid.name,
                "buses": grid.n_buses,
                "branches": grid.n_branches,
                "thermal": grid.n_thermal,
                "wind": grid.n_wind,
                "solar": grid.n_solar,
            },
            "env": {
                "action_dim": env.action_dim,
                "state_width": env.state_width,
                "features_per_node": env.n_features,
                "history_depth": env.history_depth,
                "segment_lengths": list(env.segment_config.lengths) if env.segment_config is not None else None,
                "cost_normalizer": env.c_norm,
                "reward_weights": env.weights.as_array().tolist(),
            },
        }
        typer.echo(json.dumps(summary, indent=2))


if __name__ == "__main__":
    app()
