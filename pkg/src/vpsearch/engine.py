"""Run lifecycle: the iterative explore loop, snapshots, resume, inference.

One iteration is select -> compile -> execute -> analyze -> backpropagate
-> expand.  Expansion keeps every executed node at exactly k non-rejected
unexecuted children: the freshly executed node receives k children to
refine it, and its parent receives one replacement sibling.  Snapshots are
written at every iteration boundary, so a crash or abort always resumes
from a clean state.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from vpsearch import insights as insights_mod
from vpsearch import snapshot as snapshot_mod
from vpsearch.compiler import compile_idea
from vpsearch.config import ExplorationConfig
from vpsearch.datasets import Task
from vpsearch.errors import (
    AbortRequested,
    CompileError,
    ConfigurationError,
    ExhaustedFrontierError,
    SnapshotError,
)
from vpsearch.executor import Executor, SampleCache
from vpsearch.gateway import GatewayClient, Ledger, ScriptedBackend
from vpsearch.ideation import IdeationContext, gate_and_regenerate, propose_idea
from vpsearch.program import VisualPromptProgram, functions_reference, identity_program
from vpsearch.records import ExperimentRecord, TokenUsage
from vpsearch.selection import select_node
from vpsearch.simulator import SyntheticLandscape, scripted_ideation_for_landscape, simulate_reward
from vpsearch.tree import EXECUTED, ExplorationTree, create_root

logger = logging.getLogger(__name__)

MODE_TASK = "task"
MODE_LANDSCAPE = "landscape"

# Consecutive compile rejections before the iteration gives up resumable.
MAX_REJECTIONS_PER_ITERATION = 10

POLICIES = ("nuct", "greedy", "random")


def policy_nuct(tree: ExplorationTree, config: ExplorationConfig, rng: random.Random) -> int:
    return select_node(tree, config)


def policy_greedy(tree: ExplorationTree, config: ExplorationConfig, rng: random.Random) -> int:
    """Flat frontier baseline: highest self-evaluated gain, lowest id on ties."""
    frontier = tree.frontier()
    if not frontier:
        raise ExhaustedFrontierError("no non-rejected unexecuted node to select")
    return max(frontier, key=lambda nid: (tree.node(nid).self_eval.s_gain, -nid))


def policy_random(tree: ExplorationTree, config: ExplorationConfig, rng: random.Random) -> int:
    """Flat frontier baseline: uniform choice from the seeded stream."""
    frontier = tree.frontier()
    if not frontier:
        raise ExhaustedFrontierError("no non-rejected unexecuted node to select")
    return frontier[rng.randrange(len(frontier))]


_POLICY_FUNCS: dict[str, Callable[[ExplorationTree, ExplorationConfig, random.Random], int]] = {
    "nuct": policy_nuct,
    "greedy": policy_greedy,
    "random": policy_random,
}


@dataclass
class IterationRow:
    iteration: int
    node_id: int
    reward: float
    best_so_far: float
    tokens: TokenUsage

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "node_id": self.node_id,
            "reward": self.reward,
            "best_so_far": self.best_so_far,
            "tokens": self.tokens.to_list(),
        }


@dataclass
class RunReport:
    config: ExplorationConfig
    best_node_id: int
    best_reward: float
    best_idea: str
    best_program: VisualPromptProgram
    tokens_total: TokenUsage
    iterations: list[IterationRow] = field(default_factory=list)
    cache_hits: int = 0


@dataclass
class InferenceReport:
    node_id: int
    accuracy: float
    sample_count: int
    mean_tokens_per_sample: float
    tokens_total: TokenUsage


class ExplorationEngine:
    """Owns one run: tree, rng, ledger, clients, and the artifact directory."""

    def __init__(
        self,
        config: ExplorationConfig,
        artifact_root: str | Path,
        task: Task | None = None,
        landscape: SyntheticLandscape | None = None,
        gateway: GatewayClient | None = None,
        tool_client: Any = None,
        policy: str = "nuct",
        offline: bool = False,
        manifest_path: str | None = None,
        script_path: str | None = None,
    ):
        config.validate()
        if (task is None) == (landscape is None):
            raise ConfigurationError("exactly one of task or landscape must be provided")
        if task is not None and gateway is None:
            raise ConfigurationError("task mode needs a gateway client")
        if policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {policy!r}; choose from {POLICIES}")
        self.config = config
        self.artifact_root = Path(artifact_root)
        self.task = task
        self.landscape = landscape
        self.gateway = gateway
        self.tool_client = tool_client
        self.policy = policy
        self.offline = offline
        self.manifest_path = manifest_path
        self.script_path = script_path
        self.mode = MODE_TASK if task is not None else MODE_LANDSCAPE
        self.rng = random.Random(config.seed)
        self.tree: ExplorationTree | None = None
        self.status = "running"
        self._select = _POLICY_FUNCS[policy]
        if self.mode == MODE_TASK:
            self.executor = Executor(gateway, tool_client, artifact_root=self.artifact_root)
            self.cache = SampleCache(self.artifact_root / "cache")
            self._functions_reference = functions_reference()
        else:
            self.executor = None
            self.cache = None

    # --- snapshot round-trip ---

    @property
    def snapshot_path(self) -> Path:
        return self.artifact_root / snapshot_mod.SNAPSHOT_NAME

    def _ledger(self) -> Ledger:
        if self.gateway is not None:
            return self.gateway.ledger
        return Ledger()

    def to_document(self) -> dict[str, Any]:
        assert self.tree is not None
        return {
            "schema_version": snapshot_mod.SCHEMA_VERSION,
            "status": self.status,
            "mode": self.mode,
            "offline": self.offline,
            "policy": self.policy,
            "config": self.config.to_dict(),
            "tree": self.tree.to_dict(),
            "rng_state": snapshot_mod.encode_rng_state(self.rng.getstate()),
            "cost_ledger": self._ledger().to_list(),
            "landscape": self.landscape.to_dict() if self.landscape is not None else None,
            "manifest_path": self.manifest_path,
            "script_path": self.script_path,
        }

    def write_snapshot(self) -> None:
        snapshot_mod.write_snapshot(self.to_document(), self.snapshot_path)

    @classmethod
    def from_document(
        cls,
        document: dict[str, Any],
        artifact_root: str | Path,
        task: Task | None = None,
        gateway: GatewayClient | None = None,
        tool_client: Any = None,
    ) -> "ExplorationEngine":
        """Rebuild an engine from a snapshot document.

        In task mode the caller supplies the task and gateway again; a
        scripted backend's per-role cursors are restored from the ledger
        (every round-trip left exactly one entry).
        """
        config = ExplorationConfig.from_mapping(document["config"])
        landscape = (
            SyntheticLandscape.from_dict(document["landscape"]) if document.get("landscape") else None
        )
        engine = cls(
            config=config,
            artifact_root=artifact_root,
            task=task,
            landscape=landscape,
            gateway=gateway,
            tool_client=tool_client,
            policy=document.get("policy", "nuct"),
            offline=document.get("offline", False),
            manifest_path=document.get("manifest_path"),
            script_path=document.get("script_path"),
        )
        engine.tree = ExplorationTree.from_dict(document["tree"])
        engine.rng = snapshot_mod.rng_from_state(document["rng_state"])
        engine.status = document["status"]
        if gateway is not None:
            restored = Ledger.from_list(document["cost_ledger"])
            gateway.ledger = restored
            if gateway.deterministic:
                gateway.set_clock(len(restored.entries))
            if isinstance(gateway.backend, ScriptedBackend):
                counters = {role: restored.count(role) for role in ("ideation", "engineer", "analyst", "target_model")}
                gateway.backend.set_counters(counters)
        return engine

    @classmethod
    def resume(
        cls,
        artifact_root: str | Path,
        task: Task | None = None,
        gateway: GatewayClient | None = None,
        tool_client: Any = None,
    ) -> "ExplorationEngine":
        path = Path(artifact_root) / snapshot_mod.SNAPSHOT_NAME
        document = snapshot_mod.read_snapshot(path)
        if document["status"] == "completed":
            raise SnapshotError(f"run in {artifact_root} is already completed")
        if document["mode"] == MODE_TASK and task is None:
            raise ConfigurationError("resuming a task run needs the task manifest again")
        return cls.from_document(document, artifact_root, task=task, gateway=gateway, tool_client=tool_client)

    # --- properties ---

    @property
    def iterations_done(self) -> int:
        if self.tree is None:
            return -1
        return len(self.tree.executed_nodes()) - 1

    # --- expansion helpers ---

    def _spawn_child(self, parent_id: int) -> int:
        assert self.tree is not None
        parent = self.tree.node(parent_id)
        if self.mode == MODE_LANDSCAPE:
            siblings = [
                tuple(c.latent)
                for c in self.tree.non_rejected_children(parent_id)
                if c.latent is not None
            ]
            idea, latent, evaluation = scripted_ideation_for_landscape(
                self.landscape, tuple(parent.latent), self.rng, siblings
            )
            return self.tree.add_child(parent_id, idea, evaluation, latent=list(latent))
        siblings = [c.idea for c in self.tree.non_rejected_children(parent_id)]
        context = IdeationContext(
            problem_description=self.task.problem_description,
            parent_idea=parent.idea,
            sibling_ideas=siblings,
            parent_implications=parent.history.implications,
            tool_catalog_reference=self._functions_reference,
        )
        draft = propose_idea(context, self.gateway, node_id=parent_id)
        gate = gate_and_regenerate(
            draft,
            context,
            self.config.feasibility_threshold,
            self.config.max_regeneration_attempts,
            self.gateway,
            node_id=parent_id,
        )
        return self.tree.add_child(
            parent_id, gate.idea, gate.self_eval, gate_warning=gate.accepted_with_warning
        )

    def _expand_after_execution(self, node_id: int) -> None:
        """k fresh children for the executed node, one replacement sibling."""
        assert self.tree is not None
        for _ in range(self.config.k):
            self._spawn_child(node_id)
        parent_id = self.tree.node(node_id).parent_id
        if parent_id is not None:
            self._spawn_child(parent_id)

    # --- execution helpers ---

    def _execute_baseline(self) -> None:
        program = identity_program(source_idea_id=0)
        if self.mode == MODE_LANDSCAPE:
            reward = simulate_reward(self.landscape, self.landscape.root_latent, self.rng)
            record = ExperimentRecord(node_id=0, reward=reward)
            self.tree = create_root(record, program, latent=list(self.landscape.root_latent))
        else:
            record = self.executor.evaluate_on_devset(
                program,
                self.task.dev_samples,
                node_id=0,
                cache=self.cache,
                parallel_width=self.config.parallel_width,
            )
            self.tree = create_root(record, program)
            self._persist_record(record)
            self._analyze_and_distill(0, record)
        for _ in range(self.config.k):
            self._spawn_child(self.tree.root_id)

    def _persist_record(self, record: ExperimentRecord) -> None:
        directory = self.artifact_root / "nodes" / f"{record.node_id:04d}"
        snapshot_mod.write_snapshot(record.to_dict(), directory / "record.json")

    def _log_exchange(self, exchange: dict[str, Any]) -> None:
        """Append one rendered prompt + raw reply to the audit transcript."""
        path = self.artifact_root / "transcript.jsonl"
        with path.open("a") as handle:
            handle.write(json.dumps(exchange, ensure_ascii=False) + "\n")

    def _analyze_and_distill(self, node_id: int, record: ExperimentRecord) -> None:
        assert self.tree is not None
        node = self.tree.node(node_id)
        by_id = {s.sample_id: s for s in self.task.dev_samples}
        analyses = []
        for result in insights_mod.select_samples_for_analysis(record):
            sample = by_id[result.sample_id]
            final_path = None
            if result.final_images:
                final_path = self.artifact_root / result.final_images[-1]
            analyses.append(
                insights_mod.analyze_sample(
                    result,
                    ground_truth=sample.answer,
                    idea=node.idea,
                    gateway=self.gateway,
                    input_image=insights_mod.load_image_bytes(sample.image_path),
                    final_image=insights_mod.load_image_bytes(final_path),
                    node_id=node_id,
                )
            )
        bundle = insights_mod.distill_insights(record, node.idea, analyses, self.gateway, node_id=node_id)
        node.history.summary = bundle.summary
        node.history.implications = list(bundle.implications)
        node.history.sample_analyses = [(a.sample_id, a.implication, a.causes) for a in analyses]

    def _execute_iteration(self, iteration: int) -> int:
        """Run one full cycle; returns the executed node id."""
        assert self.tree is not None
        rejections = 0
        while True:
            node_id = self._select(self.tree, self.config, self.rng)
            node = self.tree.node(node_id)
            if self.mode == MODE_LANDSCAPE:
                reward = simulate_reward(self.landscape, tuple(node.latent), self.rng)
                record = ExperimentRecord(node_id=node_id, reward=reward)
                self.tree.mark_executed(node_id, record, identity_program(source_idea_id=node_id), iteration)
                break
            parent = self.tree.node(node.parent_id)
            try:
                program = compile_idea(
                    node.idea,
                    parent_implications=parent.history.implications,
                    gateway=self.gateway,
                    node_id=node_id,
                    source_idea_id=node_id,
                )
            except CompileError as exc:
                rejections += 1
                logger.warning("node %d rejected at compile time: %s", node_id, exc)
                self.tree.reject_node(node_id, str(exc))
                self._spawn_child(parent.id)  # restore the parent's k-count
                if rejections >= MAX_REJECTIONS_PER_ITERATION:
                    raise AbortRequested(
                        f"{rejections} consecutive compile rejections in iteration {iteration}"
                    ) from exc
                continue
            record = self.executor.evaluate_on_devset(
                program,
                self.task.dev_samples,
                node_id=node_id,
                cache=self.cache,
                parallel_width=self.config.parallel_width,
            )
            self.tree.mark_executed(node_id, record, program, iteration)
            self._persist_record(record)
            self._analyze_and_distill(node_id, record)
            insights_mod.backpropagate_insights(self.tree, node_id, self.gateway)
            break
        self._expand_after_execution(node_id)
        return node_id

    # --- run loop ---

    def run(self, stop_after: int | None = None) -> RunReport:
        """Execute up to the iteration budget; write a snapshot per boundary.

        ``stop_after`` aborts resumable after that many completed
        iterations (used for crash-recovery testing and SIGINT handling).
        """
        lock = self.artifact_root / "run.lock"
        self.artifact_root.mkdir(parents=True, exist_ok=True)
        try:
            lock.touch(exist_ok=False)
        except FileExistsError:
            raise ConfigurationError(f"artifact directory {self.artifact_root} is locked by another run")
        if self.gateway is not None:
            self.gateway.transcript_sink = self._log_exchange
        try:
            self.status = "running"
            if self.tree is None:
                self._execute_baseline()
                self.write_snapshot()
            while self.iterations_done < self.config.iteration_budget:
                if stop_after is not None and self.iterations_done >= stop_after:
                    raise AbortRequested(f"stop requested after iteration {self.iterations_done}")
                iteration = self.iterations_done + 1
                self._execute_iteration(iteration)
                self.write_snapshot()
                logger.info(
                    "iteration %d/%d done (best reward %.4f)",
                    iteration,
                    self.config.iteration_budget,
                    self.tree.best_executed().reward,
                )
            self.status = "completed"
            self.write_snapshot()
            return self.build_report()
        except AbortRequested:
            self.status = "aborted"
            self.write_snapshot()
            raise
        finally:
            lock.unlink(missing_ok=True)

    def build_report(self) -> RunReport:
        assert self.tree is not None
        best = self.tree.best_executed()
        ledger = self._ledger()
        rows = []
        best_so_far = 0.0
        executed = sorted(
            (n for n in self.tree.executed_nodes() if n.executed_at is not None),
            key=lambda n: n.executed_at,
        )
        for node in executed:
            best_so_far = max(best_so_far, node.reward)
            rows.append(
                IterationRow(
                    iteration=node.executed_at,
                    node_id=node.id,
                    reward=node.reward,
                    best_so_far=best_so_far,
                    tokens=ledger.total(node_id=node.id),
                )
            )
        return RunReport(
            config=self.config,
            best_node_id=best.id,
            best_reward=best.reward,
            best_idea=best.idea,
            best_program=best.implementation,
            tokens_total=ledger.total(),
            iterations=rows,
            cache_hits=self.cache.hits if self.cache is not None else 0,
        )


def run_inference(
    tree: ExplorationTree,
    node_ref: str,
    task: Task,
    gateway: GatewayClient,
    tool_client: Any = None,
    parallel_width: int = 1,
    artifact_root: str | Path | None = None,
) -> InferenceReport:
    """Evaluate a discovered program on the task's test split."""
    if node_ref == "best":
        node = tree.best_executed()
    else:
        node = tree.node(int(node_ref))
    if node.status != EXECUTED or node.implementation is None:
        raise ConfigurationError(f"node {node.id} has no executed program to run")
    samples = task.test_samples
    if not samples:
        raise ConfigurationError("task has no test samples")
    executor = Executor(gateway, tool_client, artifact_root=artifact_root)
    record = executor.evaluate_on_devset(
        node.implementation, samples, node_id=node.id, parallel_width=parallel_width
    )
    return InferenceReport(
        node_id=node.id,
        accuracy=record.reward,
        sample_count=len(samples),
        mean_tokens_per_sample=record.tokens_total.total / len(samples),
        tokens_total=record.tokens_total,
    )
