"""The dynamically growing idea tree: nodes, lifecycle, and statistics.

Statistics semantics:

* ``visit_count`` of a node is the number of executed nodes in its
  subtree, itself included, so the root's count equals the total number
  of executed nodes.
* ``max_subtree_reward`` is the maximum empirical reward over the node
  and all executed descendants.
* Ties anywhere are broken by lowest node id, which makes replays
  deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from vpsearch.errors import ConfigurationError, LifecycleError
from vpsearch.ideation import SelfEvaluation
from vpsearch.program import VisualPromptProgram
from vpsearch.records import ExperimentRecord

UNEXECUTED = "unexecuted"
EXECUTED = "executed"
REJECTED = "rejected"

BASELINE_IDEA = "Send the unmodified image together with the task question; no visual changes."

# Neutral self-evaluation attached to the baseline root (never scored).
_ROOT_EVAL = SelfEvaluation.from_raw(5, 3, 3)


@dataclass
class ExperimentHistory:
    """Distilled findings attached to a node, revised by backpropagation."""

    summary: str | None = None
    implications: list[str] = field(default_factory=list)
    sample_analyses: list[tuple[str, str, str]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "summary": self.summary,
            "implications": list(self.implications),
            "sample_analyses": [list(item) for item in self.sample_analyses],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentHistory":
        return cls(
            summary=data.get("summary"),
            implications=list(data.get("implications", [])),
            sample_analyses=[tuple(item) for item in data.get("sample_analyses", [])],
        )


@dataclass
class IdeaNode:
    id: int
    parent_id: int | None
    idea: str
    self_eval: SelfEvaluation
    implementation: VisualPromptProgram | None = None
    history: ExperimentHistory = field(default_factory=ExperimentHistory)
    status: str = UNEXECUTED
    reward: float | None = None
    max_subtree_reward: float | None = None
    visit_count: int = 0
    executed_child_count: int = 0
    children: list[int] = field(default_factory=list)
    rejection_reason: str | None = None
    executed_at: int | None = None  # iteration index when executed
    latent: list[float] | None = None  # landscape mode only
    last_priority: dict[str, Any] | None = None  # audit trail from selection
    gate_warning: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "parent_id": self.parent_id,
            "idea": self.idea,
            "self_eval": self.self_eval.to_dict(),
            "implementation": self.implementation.to_dict() if self.implementation else None,
            "history": self.history.to_dict(),
            "status": self.status,
            "reward": self.reward,
            "max_subtree_reward": self.max_subtree_reward,
            "visit_count": self.visit_count,
            "executed_child_count": self.executed_child_count,
            "children": list(self.children),
            "rejection_reason": self.rejection_reason,
            "executed_at": self.executed_at,
            "latent": list(self.latent) if self.latent is not None else None,
            "last_priority": self.last_priority,
            "gate_warning": self.gate_warning,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IdeaNode":
        return cls(
            id=data["id"],
            parent_id=data["parent_id"],
            idea=data["idea"],
            self_eval=SelfEvaluation.from_dict(data["self_eval"]),
            implementation=(
                VisualPromptProgram.from_dict(data["implementation"]) if data.get("implementation") else None
            ),
            history=ExperimentHistory.from_dict(data.get("history", {})),
            status=data["status"],
            reward=data.get("reward"),
            max_subtree_reward=data.get("max_subtree_reward"),
            visit_count=data.get("visit_count", 0),
            executed_child_count=data.get("executed_child_count", 0),
            children=list(data.get("children", [])),
            rejection_reason=data.get("rejection_reason"),
            executed_at=data.get("executed_at"),
            latent=data.get("latent"),
            last_priority=data.get("last_priority"),
            gate_warning=data.get("gate_warning", False),
        )


class ExplorationTree:
    """Single-writer tree of idea nodes with creation-ordered ids."""

    def __init__(self) -> None:
        self._nodes: dict[int, IdeaNode] = {}
        self._next_id = 0
        self.root_id: int | None = None

    # --- accessors ---

    def node(self, node_id: int) -> IdeaNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise LifecycleError(f"unknown node id {node_id}")

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def root(self) -> IdeaNode:
        if self.root_id is None:
            raise LifecycleError("tree has no root")
        return self.node(self.root_id)

    def nodes(self) -> Iterator[IdeaNode]:
        for node_id in sorted(self._nodes):
            yield self._nodes[node_id]

    def children_of(self, node_id: int) -> list[IdeaNode]:
        return [self.node(cid) for cid in self.node(node_id).children]

    def non_rejected_children(self, node_id: int) -> list[IdeaNode]:
        return [c for c in self.children_of(node_id) if c.status != REJECTED]

    def unexecuted_children(self, node_id: int) -> list[IdeaNode]:
        return [c for c in self.children_of(node_id) if c.status == UNEXECUTED]

    def executed_nodes(self) -> list[IdeaNode]:
        return [n for n in self.nodes() if n.status == EXECUTED]

    def frontier(self) -> list[int]:
        """Ids of all selectable (non-rejected unexecuted) nodes, ascending."""
        return [n.id for n in self.nodes() if n.status == UNEXECUTED]

    def ancestors(self, node_id: int) -> list[IdeaNode]:
        """Chain from the node's parent up to and including the root."""
        chain = []
        current = self.node(node_id)
        while current.parent_id is not None:
            current = self.node(current.parent_id)
            chain.append(current)
        return chain

    def depth(self, node_id: int) -> int:
        return len(self.ancestors(node_id))

    def best_executed(self) -> IdeaNode:
        """Executed node with the highest reward; ties go to the lowest id."""
        executed = self.executed_nodes()
        if not executed:
            raise LifecycleError("tree has no executed nodes")
        return max(executed, key=lambda n: (n.reward, -n.id))

    # --- lifecycle ---

    @classmethod
    def create_root(
        cls,
        baseline_record: ExperimentRecord,
        baseline_program: VisualPromptProgram,
        idea: str = BASELINE_IDEA,
        latent: list[float] | None = None,
    ) -> "ExplorationTree":
        """Start a tree from the executed naive-prompt baseline."""
        if not 0.0 <= baseline_record.reward <= 1.0:
            raise ConfigurationError(f"baseline reward {baseline_record.reward} outside [0, 1]")
        tree = cls()
        root = IdeaNode(
            id=tree._next_id,
            parent_id=None,
            idea=idea,
            self_eval=_ROOT_EVAL,
            implementation=baseline_program,
            status=EXECUTED,
            reward=baseline_record.reward,
            max_subtree_reward=baseline_record.reward,
            visit_count=1,
            executed_at=0,
            latent=latent,
        )
        tree._next_id += 1
        tree._nodes[root.id] = root
        tree.root_id = root.id
        return tree

    def add_child(
        self,
        parent_id: int,
        idea: str,
        self_eval: SelfEvaluation,
        latent: list[float] | None = None,
        gate_warning: bool = False,
    ) -> int:
        parent = self.node(parent_id)
        if parent.status != EXECUTED:
            raise LifecycleError(f"cannot add a child to {parent.status} node {parent_id}")
        if not idea or not idea.strip():
            raise LifecycleError("idea text must be nonempty")
        child = IdeaNode(
            id=self._next_id,
            parent_id=parent_id,
            idea=idea,
            self_eval=self_eval,
            latent=latent,
            gate_warning=gate_warning,
        )
        self._next_id += 1
        self._nodes[child.id] = child
        parent.children.append(child.id)
        return child.id

    def mark_executed(
        self,
        node_id: int,
        record: ExperimentRecord,
        program: VisualPromptProgram,
        iteration: int | None = None,
    ) -> None:
        """Transition a node to executed and push statistics up to the root."""
        node = self.node(node_id)
        if node.status != UNEXECUTED:
            raise LifecycleError(f"node {node_id} is {node.status}; only unexecuted nodes can be executed")
        if not 0.0 <= record.reward <= 1.0:
            raise ConfigurationError(f"reward {record.reward} outside [0, 1]")
        node.status = EXECUTED
        node.reward = record.reward
        node.implementation = program
        node.max_subtree_reward = record.reward
        node.visit_count = 1
        node.executed_at = iteration
        if node.parent_id is not None:
            self.node(node.parent_id).executed_child_count += 1
        for ancestor in self.ancestors(node_id):
            ancestor.visit_count += 1
            if ancestor.max_subtree_reward is None or record.reward > ancestor.max_subtree_reward:
                ancestor.max_subtree_reward = record.reward

    def reject_node(self, node_id: int, reason: str) -> None:
        node = self.node(node_id)
        if node.status != UNEXECUTED:
            raise LifecycleError(f"cannot reject {node.status} node {node_id}")
        node.status = REJECTED
        node.rejection_reason = reason

    # --- serialization ---

    def to_dict(self) -> dict[str, Any]:
        return {
            "root_id": self.root_id,
            "next_id": self._next_id,
            "nodes": [node.to_dict() for node in self.nodes()],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExplorationTree":
        tree = cls()
        tree.root_id = data["root_id"]
        tree._next_id = data["next_id"]
        for item in data["nodes"]:
            node = IdeaNode.from_dict(item)
            tree._nodes[node.id] = node
        return tree


def create_root(
    baseline_record: ExperimentRecord,
    baseline_program: VisualPromptProgram,
    idea: str = BASELINE_IDEA,
    latent: list[float] | None = None,
) -> ExplorationTree:
    """Module-level alias for ExplorationTree.create_root."""
    return ExplorationTree.create_root(baseline_record, baseline_program, idea=idea, latent=latent)
