"""SCORE protocol, fault study, weight sweep, attention export, ablation and plots."""

from moopf.evaluation.ablation import ATTENTION_MODES, attention_ablation, default_threshold, with_attention_mode
from moopf.evaluation.attention import AttentionExport, export_attention, mean_attention
from moopf.evaluation.faults import (
    FaultScenario,
    fault_study,
    response_time,
    run_fault_scenario,
    sample_scenarios,
    scenarios_frame,
    tripable_buses,
)
from moopf.evaluation.plots import render_plots
from moopf.evaluation.score import ScoreReport, compare, score
from moopf.evaluation.sweep import SweepResult, monitored_bus, weight_sweep, with_w4

__all__ = [
    "ATTENTION_MODES",
    "attention_ablation",
    "default_threshold",
    "with_attention_mode",
    "AttentionExport",
    "export_attention",
    "mean_attention",
    "FaultScenario",
    "fault_study",
    "response_time",
    "run_fault_scenario",
    "sample_scenarios",
    "scenarios_frame",
    "tripable_buses",
    "render_plots",
    "ScoreReport",
    "compare",
    "score",
    "SweepResult",
    "monitored_bus",
    "weight_sweep",
    "with_w4",
]
