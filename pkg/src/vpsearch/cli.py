"""Command-line interface: explore, infer, export-tree, resume.

Exit codes: 0 success, 2 configuration error, 3 aborted (resumable
snapshot written), 4 exhausted frontier.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from vpsearch import export as export_mod
from vpsearch import report as report_mod
from vpsearch.config import ExplorationConfig, load_config
from vpsearch.datasets import load_task
from vpsearch.engine import POLICIES, ExplorationEngine, run_inference
from vpsearch.errors import (
    AbortRequested,
    ConfigurationError,
    ExhaustedFrontierError,
    SnapshotError,
    VpsearchError,
)
from vpsearch.gateway import GatewayClient, HttpBackend, ScriptedBackend
from vpsearch.simulator import load_landscape
from vpsearch.snapshot import read_snapshot
from vpsearch.toolclient import HttpToolClient, StubToolClient
from vpsearch.tree import ExplorationTree

EXIT_CONFIG = 2
EXIT_ABORTED = 3
EXIT_EXHAUSTED = 4

MODEL_URL_VAR = "VPSEARCH_MODEL_URL"
MODEL_KEY_VAR = "VPSEARCH_MODEL_KEY"
TOOLS_URL_VAR = "VPSEARCH_TOOLS_URL"

logger = logging.getLogger(__name__)


def _exit_for(exc: VpsearchError) -> int:
    if isinstance(exc, ExhaustedFrontierError):
        return EXIT_EXHAUSTED
    if isinstance(exc, AbortRequested):
        return EXIT_ABORTED
    return EXIT_CONFIG


def _build_gateway(offline: bool, script: str | None) -> GatewayClient:
    if offline or script:
        if not script:
            raise ConfigurationError("offline task mode needs --script with scripted replies")
        return GatewayClient(ScriptedBackend.from_file(script), logical_clock=True)
    url = os.environ.get(MODEL_URL_VAR)
    if not url:
        raise ConfigurationError(f"set {MODEL_URL_VAR} or run with --offline/--script")
    return GatewayClient(HttpBackend(url, api_key=os.environ.get(MODEL_KEY_VAR)))


def _build_tool_client(offline: bool):
    # A configured tool server is used even offline (its stub mode passes
    # the health gate); without one, external tools run on the in-process stub.
    url = os.environ.get(TOOLS_URL_VAR)
    if not url:
        return StubToolClient()
    return HttpToolClient(url, offline=offline)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Discover task-wise visual prompts with novelty-guided tree search."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--task", "task_path", type=click.Path(), help="Task manifest (JSONL).")
@click.option("--landscape", "landscape_path", type=click.Path(), help="Synthetic landscape config.")
@click.option("--config", "config_path", type=click.Path(), help="Exploration config file.")
@click.option("--iterations", type=int, default=None, help="Override the iteration budget.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--out", "out_dir", type=click.Path(), default="run", show_default=True, help="Artifact directory.")
@click.option("--script", type=click.Path(), default=None, help="Scripted gateway replies (JSON).")
@click.option("--offline", is_flag=True, help="Force scripted/stub backends; no network calls.")
@click.option("--policy", type=click.Choice(POLICIES), default="nuct", show_default=True)
def explore(task_path, landscape_path, config_path, iterations, seed, out_dir, script, offline, policy):
    """Run the exploration loop and write the report + snapshot."""
    try:
        config = load_config(config_path) if config_path else ExplorationConfig()
        if iterations is not None:
            config.iteration_budget = iterations
        if seed is not None:
            config.seed = seed
        config.validate()
        if (task_path is None) == (landscape_path is None):
            raise ConfigurationError("pass exactly one of --task or --landscape")
        if landscape_path:
            engine = ExplorationEngine(
                config,
                artifact_root=out_dir,
                landscape=load_landscape(landscape_path),
                policy=policy,
                offline=True,
            )
        else:
            task = load_task(task_path)
            engine = ExplorationEngine(
                config,
                artifact_root=out_dir,
                task=task,
                gateway=_build_gateway(offline, script),
                tool_client=_build_tool_client(offline),
                policy=policy,
                offline=offline or bool(script),
                manifest_path=str(task_path),
                script_path=str(script) if script else None,
            )
        report = engine.run()
    except VpsearchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_for(exc))
    summary_path = report_mod.write_run_report(report, Path(out_dir) / "report")
    click.echo(summary_path.read_text(), nl=False)
    click.echo(f"report written to {summary_path.parent}")


@main.command()
@click.option("--snapshot", "snapshot_path", type=click.Path(), required=True)
@click.option("--task", "task_path", type=click.Path(), default=None, help="Override the stored manifest path.")
@click.option("--script", type=click.Path(), default=None, help="Override the stored script path.")
def resume(snapshot_path, task_path, script):
    """Continue an aborted run from its snapshot."""
    try:
        document = read_snapshot(snapshot_path)
        artifact_root = Path(snapshot_path).parent
        if document["mode"] == "task":
            manifest = task_path or document.get("manifest_path")
            if not manifest:
                raise ConfigurationError("snapshot has no manifest path; pass --task")
            task = load_task(manifest)
            offline = document.get("offline", False)
            gateway = _build_gateway(offline, script or document.get("script_path"))
            engine = ExplorationEngine.from_document(
                document,
                artifact_root,
                task=task,
                gateway=gateway,
                tool_client=_build_tool_client(offline),
            )
        else:
            engine = ExplorationEngine.from_document(document, artifact_root)
        if engine.status == "completed":
            raise ConfigurationError("run is already completed; nothing to resume")
        report = engine.run()
    except VpsearchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_for(exc))
    summary_path = report_mod.write_run_report(report, artifact_root / "report")
    click.echo(summary_path.read_text(), nl=False)


@main.command()
@click.option("--snapshot", "snapshot_path", type=click.Path(), required=True)
@click.option("--node", "node_ref", default="best", show_default=True, help="Node id or 'best'.")
@click.option("--task", "task_path", type=click.Path(), required=True, help="Task manifest with a test split.")
@click.option("--script", type=click.Path(), default=None)
@click.option("--offline", is_flag=True)
def infer(snapshot_path, node_ref, task_path, script, offline):
    """Evaluate a discovered node's program on the test split."""
    try:
        document = read_snapshot(snapshot_path)
        tree = ExplorationTree.from_dict(document["tree"])
        task = load_task(task_path)
        gateway = _build_gateway(offline, script)
        report = run_inference(tree, node_ref, task, gateway, tool_client=_build_tool_client(offline))
    except VpsearchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_for(exc))
    click.echo(report_mod.format_inference(report), nl=False)


@main.command("export-tree")
@click.option("--snapshot", "snapshot_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["graph-dot", "structured"]), default="graph-dot")
@click.option("--out", "out_path", type=click.Path(), required=True)
def export_tree(snapshot_path, fmt, out_path):
    """Export the search tree for visual or programmatic audit."""
    try:
        document = read_snapshot(snapshot_path)
        tree = ExplorationTree.from_dict(document["tree"])
        export_mod.write_export(tree, fmt, out_path)
    except (VpsearchError, SnapshotError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_for(exc))
    click.echo(f"wrote {fmt} export to {out_path}")


if __name__ == "__main__":
    main()
