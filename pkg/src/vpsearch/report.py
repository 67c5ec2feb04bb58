"""Run reports: plain-text summary, per-iteration CSV, and figures.

The report directory holds three artifacts side by side:

* ``summary.txt``       human-readable best-node report with the config header
* ``iterations.csv``    one row per iteration (reward, best-so-far, tokens)
* ``reward_curve.png``  reward and best-so-far over iterations
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from vpsearch.engine import InferenceReport, RunReport


def format_summary(report: RunReport) -> str:
    config = report.config
    lines = [
        "exploration run summary",
        "=======================",
        (
            f"config: lambda_expl={config.lambda_expl} lambda_novel={config.lambda_novel} "
            f"lambda_sat={config.lambda_sat} k={config.k}"
        ),
        f"iterations: {config.iteration_budget}  seed: {config.seed}",
        "",
        f"best node: {report.best_node_id}",
        f"dev accuracy: {report.best_reward:.6f}",
        f"idea: {report.best_idea}",
        "",
        "program:",
        report.best_program.to_json(),
        "",
        (
            f"token cost: input={report.tokens_total.input_tokens} "
            f"output={report.tokens_total.output_tokens} "
            f"reasoning={report.tokens_total.reasoning_tokens} "
            f"total={report.tokens_total.total}"
        ),
        f"cache hits: {report.cache_hits}",
    ]
    return "\n".join(lines) + "\n"


def write_iterations_csv(report: RunReport, path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["iteration", "node_id", "reward", "best_so_far", "input_tokens", "output_tokens", "reasoning_tokens"]
        )
        for row in report.iterations:
            writer.writerow(
                [
                    row.iteration,
                    row.node_id,
                    f"{row.reward:.6f}",
                    f"{row.best_so_far:.6f}",
                    row.tokens.input_tokens,
                    row.tokens.output_tokens,
                    row.tokens.reasoning_tokens,
                ]
            )


def plot_reward_curve(report: RunReport, path: Path) -> None:
    iterations = [row.iteration for row in report.iterations]
    rewards = [row.reward for row in report.iterations]
    best = [row.best_so_far for row in report.iterations]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(iterations, rewards, marker="o", markersize=3, linewidth=1, alpha=0.6, label="iteration reward")
    ax.step(iterations, best, where="post", linewidth=2, label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("dev-set reward")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_run_report(report: RunReport, out_dir: str | Path) -> Path:
    """Render summary + CSV + figures into out_dir; returns the summary path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "summary.txt"
    summary_path.write_text(format_summary(report))
    write_iterations_csv(report, out_dir / "iterations.csv")
    plot_reward_curve(report, out_dir / "reward_curve.png")
    return summary_path


def format_inference(report: InferenceReport) -> str:
    lines = [
        f"node: {report.node_id}",
        f"test accuracy: {report.accuracy:.6f}",
        f"samples: {report.sample_count}",
        f"mean tokens per sample: {report.mean_tokens_per_sample:.2f}",
        (
            f"token cost: input={report.tokens_total.input_tokens} "
            f"output={report.tokens_total.output_tokens} "
            f"reasoning={report.tokens_total.reasoning_tokens} "
            f"total={report.tokens_total.total}"
        ),
    ]
    return "\n".join(lines) + "\n"
