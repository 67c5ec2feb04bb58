"""Priority scoring and node selection by tree descent.

Executed and unexecuted children compete at the same level, each scored
with its status-appropriate formula.  Executed nodes score the best
subtree reward relative to the parent plus a confidence radius; unexecuted
nodes score the agent's own gain estimate plus novelty and a saturation
term that decays as more of the parent's children get executed.

Both formulas stay finite for every valid input: the saturation term uses
(n+1)/(c+1) guards so a fresh parent (zero executed children) and a
single-visit parent are well-defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from vpsearch.config import ExplorationConfig
from vpsearch.errors import ExhaustedFrontierError, NormalizationError, WrongBranchError
from vpsearch.tree import EXECUTED, REJECTED, UNEXECUTED, ExplorationTree, IdeaNode

EXECUTED_FORMULA = "executed_formula"
UNEXECUTED_FORMULA = "unexecuted_formula"


@dataclass(frozen=True)
class PriorityScore:
    """A priority value with its per-term breakdown for auditing."""

    value: float
    branch: str
    components: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "branch": self.branch, "components": dict(self.components)}


def priority_executed(
    r_max: float,
    r_parent: float,
    n_parent: int,
    n_node: int,
    lambda_expl: float,
) -> PriorityScore:
    """Score of an executed child: (r_max - r_parent) + lambda*sqrt(ln n_p / n)."""
    if n_node == 0:
        raise WrongBranchError("executed formula needs n_node >= 1; use the unexecuted formula")
    if n_node < 0 or n_parent < n_node:
        raise WrongBranchError(f"invalid visit counts: n_parent={n_parent}, n_node={n_node}")
    exploit = r_max - r_parent
    explore = lambda_expl * math.sqrt(math.log(n_parent) / n_node)
    return PriorityScore(
        value=exploit + explore,
        branch=EXECUTED_FORMULA,
        components={"exploit": exploit, "explore": explore},
    )


def priority_unexecuted(
    s_gain: float,
    s_novel: float,
    n_parent: int,
    c_exec_parent: int,
    lambda_novel: float,
    lambda_sat: float,
) -> PriorityScore:
    """Score of an unexecuted child from self-evaluation and parent saturation."""
    if not 0.0 <= s_gain <= 1.0 or not 0.0 <= s_novel <= 1.0:
        raise NormalizationError(f"scores must be normalized to [0, 1]: s_gain={s_gain}, s_novel={s_novel}")
    if n_parent < 1 or c_exec_parent < 0:
        raise WrongBranchError(f"invalid counts: n_parent={n_parent}, c_exec_parent={c_exec_parent}")
    gain = s_gain
    novelty = lambda_novel * s_novel
    saturation = lambda_sat * math.sqrt(math.log(n_parent + 1) / (c_exec_parent + 1))
    return PriorityScore(
        value=gain + novelty + saturation,
        branch=UNEXECUTED_FORMULA,
        components={"gain": gain, "novelty": novelty, "saturation": saturation},
    )


def score_child(parent: IdeaNode, child: IdeaNode, config: ExplorationConfig) -> PriorityScore:
    """Score one non-rejected child with its status-appropriate formula."""
    if child.status == EXECUTED:
        return priority_executed(
            r_max=child.max_subtree_reward,
            r_parent=parent.reward,
            n_parent=parent.visit_count,
            n_node=child.visit_count,
            lambda_expl=config.lambda_expl,
        )
    if child.status == UNEXECUTED:
        return priority_unexecuted(
            s_gain=child.self_eval.s_gain,
            s_novel=child.self_eval.s_novel,
            n_parent=parent.visit_count,
            c_exec_parent=parent.executed_child_count,
            lambda_novel=config.lambda_novel,
            lambda_sat=config.lambda_sat,
        )
    raise WrongBranchError(f"rejected node {child.id} is never scored")


def select_node(tree: ExplorationTree, config: ExplorationConfig) -> int:
    """Descend from the root along argmax children until one is unexecuted.

    Children are re-scored with fresh statistics at every level; ties go to
    the lowest id.  Each scored child keeps its latest PriorityScore for
    the audit export.
    """
    if not tree.frontier():
        raise ExhaustedFrontierError("no non-rejected unexecuted node to select")
    current = tree.root
    while True:
        candidates = [c for c in tree.children_of(current.id) if c.status != REJECTED]
        if not candidates:
            raise ExhaustedFrontierError(f"executed node {current.id} has no selectable children")
        best: IdeaNode | None = None
        best_score: PriorityScore | None = None
        for child in candidates:  # ascending id order; strict > keeps the lowest id on ties
            score = score_child(current, child, config)
            child.last_priority = score.to_dict()
            if best_score is None or score.value > best_score.value:
                best, best_score = child, score
        assert best is not None
        if best.status == UNEXECUTED:
            return best.id
        current = best
