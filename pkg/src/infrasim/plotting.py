"""Figure rendering for the report paths: condition trajectories, budget
timelines, and benchmark metric spreads, written as PNG files next to the
delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .benchmarks import BenchmarkReport
from .episode_log import EpisodeLog

MAX_COMPONENT_LINES = 12


def save_condition_figure(log: EpisodeLog, path: str | Path) -> Path:
    """True-condition trajectories of an episode: a mean line with a min/max
    band, plus individual lines for small fleets."""
    path = Path(path)
    steps = [rec.t + 1 for rec in log.records]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if log.records and log.records[0].true_ci is not None:
        ci = np.array([rec.true_ci for rec in log.records])  # (steps, n)
        n = ci.shape[1]
        ax.fill_between(steps, ci.min(axis=1), ci.max(axis=1), alpha=0.2, label="min/max")
        ax.plot(steps, ci.mean(axis=1), lw=2, label="mean")
        if n <= MAX_COMPONENT_LINES:
            for j in range(n):
                ax.plot(steps, ci[:, j], lw=0.8, alpha=0.7)
    else:
        obs = np.array([rec.observation for rec in log.records])
        n = (obs.shape[1] - 1) // 2
        seen = np.where(obs[:, :n] <= 100, obs[:, :n], np.nan)
        ax.plot(steps, np.nanmean(seen, axis=1), lw=2, label="mean observed")
    ax.set_xlabel("step")
    ax.set_ylabel("condition index")
    ax.set_ylim(-2, 102)
    ax.set_title(f"{log.scenario.get('name', 'scenario')} – condition over time")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_budget_figure(log: EpisodeLog, path: str | Path) -> Path:
    """Remaining budget and per-step spend over the episode."""
    path = Path(path)
    steps = [rec.t + 1 for rec in log.records]
    remaining = [rec.budget_remaining for rec in log.records]
    spent = [rec.cost_total for rec in log.records]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.step(steps, remaining, where="post", lw=2, label="remaining")
    ax.bar(steps, spent, width=0.9, alpha=0.4, label="spent this step")
    ax.set_xlabel("step")
    ax.set_ylabel("budget units")
    ax.set_title("budget over time")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_benchmark_figure(report: BenchmarkReport, path: str | Path) -> Path:
    """Per-run metric spread of a benchmark report (2x2 panel)."""
    path = Path(path)
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    panels = (
        ("ettf", "time to failure (censored)"),
        ("budget_utilization_pct", "budget utilized (%)"),
        ("replacements_total", "replacements"),
        ("episode_return", "episode return"),
    )
    runs = [r.run for r in report.rows]
    for ax, (metric, label) in zip(axes.flat, panels):
        values = [getattr(r, metric) for r in report.rows]
        ax.bar(runs, values, color="#4878d0")
        mean = report.aggregates[metric]["mean"]
        ax.axhline(mean, color="#d65f5f", lw=1.5, label=f"mean {mean:.4g}")
        ax.set_xlabel("run")
        ax.set_title(label, fontsize=10)
        ax.legend(fontsize=8)
    fig.suptitle(f"{report.scenario_name} – {report.policy} ({report.n_runs} runs)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
