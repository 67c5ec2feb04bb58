"""Idea generation, self-evaluation, and the feasibility gate."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any

from vpsearch import prompts
from vpsearch.errors import IdeationError, NormalizationError
from vpsearch.gateway import ChatRequest, GatewayClient

logger = logging.getLogger(__name__)


def normalize_score(raw: int) -> float:
    """Affine map of a 1..5 rating onto [0, 1]: {1,2,3,4,5} -> {0,.25,.5,.75,1}."""
    if not 1 <= raw <= 5:
        raise NormalizationError(f"raw score {raw} outside 1..5")
    return (raw - 1) / 4


@dataclass(frozen=True)
class SelfEvaluation:
    """Feasibility/expectation/novelty ratings plus their normalized forms.

    ``from_raw`` is the validated constructor used for gateway-parsed
    ratings; it enforces s_gain = (expectation-1)/4 and the analogue for
    novelty.  The landscape simulator constructs instances directly with
    continuous estimates and nearest raw labels.
    """

    feasibility_raw: int
    expectation_raw: int
    novelty_raw: int
    s_gain: float
    s_novel: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.s_gain <= 1.0 or not 0.0 <= self.s_novel <= 1.0:
            raise NormalizationError("normalized scores must lie in [0, 1]")

    @classmethod
    def from_raw(cls, feasibility: int, expectation: int, novelty: int) -> "SelfEvaluation":
        return cls(
            feasibility_raw=feasibility,
            expectation_raw=expectation,
            novelty_raw=novelty,
            s_gain=normalize_score(expectation),
            s_novel=normalize_score(novelty),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasibility_raw": self.feasibility_raw,
            "expectation_raw": self.expectation_raw,
            "novelty_raw": self.novelty_raw,
            "s_gain": self.s_gain,
            "s_novel": self.s_novel,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SelfEvaluation":
        return cls(
            feasibility_raw=data["feasibility_raw"],
            expectation_raw=data["expectation_raw"],
            novelty_raw=data["novelty_raw"],
            s_gain=data["s_gain"],
            s_novel=data["s_novel"],
        )


@dataclass
class IdeationContext:
    """Everything the idea-generation prompt needs for one new node slot."""

    problem_description: str
    parent_idea: str
    sibling_ideas: list[str] = field(default_factory=list)
    parent_implications: list[str] = field(default_factory=list)
    tool_catalog_reference: str = ""


@dataclass
class IdeaDraft:
    idea: str
    self_eval: SelfEvaluation


@dataclass
class GateResult:
    idea: str
    self_eval: SelfEvaluation
    accepted_with_warning: bool
    attempts: list[IdeaDraft]


def generate_idea(context: IdeationContext, gateway: GatewayClient, node_id: int | None = None) -> str:
    """Ask the ideation agent for one new idea; returns the reply verbatim."""
    if not context.problem_description:
        raise IdeationError("problem_description must be nonempty")
    prompt = prompts.render_idea_generation(
        problem_description=context.problem_description,
        parent_idea=context.parent_idea,
        sibling_ideas=context.sibling_ideas,
        parent_implications=context.parent_implications,
        functions_reference=context.tool_catalog_reference,
    )
    text, _ = gateway.complete(ChatRequest.text("ideation", prompt, node_id=node_id))
    return text


def _iter_json_objects(text: str):
    """Yield every balanced {...} block in the text, outermost first."""
    depth = 0
    start = None
    for i, ch in enumerate(text):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and start is not None:
                yield text[start : i + 1]
                start = None


def _clamp_raw(value: int, dimension: str) -> int:
    if value < 1 or value > 5:
        logger.warning("self-evaluation %s score %d outside 1..5; clamping", dimension, value)
        return min(5, max(1, value))
    return value


def parse_self_evaluation(reply: str) -> SelfEvaluation | None:
    """Extract the three 1..5 scores from a reply, or None when unparseable.

    The first structured JSON block carrying all three keys wins; a loose
    regex over the prose is the fallback.
    """
    for block in _iter_json_objects(reply):
        try:
            data = json.loads(block)
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict) and {"feasibility", "expectation", "novelty"} <= set(data):
            try:
                scores = {key: int(data[key]) for key in ("feasibility", "expectation", "novelty")}
            except (TypeError, ValueError):
                continue
            return SelfEvaluation.from_raw(
                _clamp_raw(scores["feasibility"], "feasibility"),
                _clamp_raw(scores["expectation"], "expectation"),
                _clamp_raw(scores["novelty"], "novelty"),
            )
    found = {}
    for key in ("feasibility", "expectation", "novelty"):
        match = re.search(rf'"?{key}"?\s*[:=]\s*(-?\d+)', reply, re.IGNORECASE)
        if not match:
            return None
        found[key] = _clamp_raw(int(match.group(1)), key)
    return SelfEvaluation.from_raw(found["feasibility"], found["expectation"], found["novelty"])


def self_evaluate(
    idea: str,
    sibling_ideas: list[str],
    tool_catalog_reference: str,
    gateway: GatewayClient,
    node_id: int | None = None,
) -> SelfEvaluation:
    """Score an idea on feasibility/expectation/novelty via the gateway.

    An unparseable reply is re-asked once; a second failure raises.
    """
    if not idea:
        raise IdeationError("idea must be nonempty")
    prompt = prompts.render_self_evaluation(idea, sibling_ideas, tool_catalog_reference)
    request = ChatRequest.text("ideation", prompt, node_id=node_id)
    for attempt in range(2):
        reply, _ = gateway.complete(request)
        evaluation = parse_self_evaluation(reply)
        if evaluation is not None:
            return evaluation
        logger.warning("self-evaluation reply unparseable (attempt %d): %.80s", attempt + 1, reply)
    raise IdeationError("self-evaluation reply unparseable after re-ask")


def propose_idea(
    context: IdeationContext, gateway: GatewayClient, node_id: int | None = None
) -> IdeaDraft:
    idea = generate_idea(context, gateway, node_id=node_id)
    if not idea.strip():
        raise IdeationError("ideation agent returned an empty idea")
    evaluation = self_evaluate(
        idea, context.sibling_ideas, context.tool_catalog_reference, gateway, node_id=node_id
    )
    return IdeaDraft(idea=idea, self_eval=evaluation)


def gate_and_regenerate(
    draft: IdeaDraft,
    context: IdeationContext,
    feasibility_threshold: int,
    max_attempts: int,
    gateway: GatewayClient,
    node_id: int | None = None,
) -> GateResult:
    """Enforce the feasibility gate, regenerating low-feasibility drafts.

    The incoming draft counts as attempt one.  When every attempt stays
    below the threshold, the best one (highest feasibility, earliest tie)
    is kept and flagged accepted-with-warning.
    """
    attempts = [draft]
    current = draft
    while current.self_eval.feasibility_raw < feasibility_threshold and len(attempts) < max_attempts:
        logger.info(
            "idea rejected by feasibility gate (%d < %d); regenerating (%d/%d)",
            current.self_eval.feasibility_raw,
            feasibility_threshold,
            len(attempts),
            max_attempts,
        )
        current = propose_idea(context, gateway, node_id=node_id)
        attempts.append(current)
    if current.self_eval.feasibility_raw >= feasibility_threshold:
        return GateResult(current.idea, current.self_eval, accepted_with_warning=False, attempts=attempts)
    best = max(attempts, key=lambda d: d.self_eval.feasibility_raw)
    logger.warning(
        "all %d ideation attempts below feasibility threshold; keeping best (feasibility %d)",
        len(attempts),
        best.self_eval.feasibility_raw,
    )
    return GateResult(best.idea, best.self_eval, accepted_with_warning=True, attempts=attempts)
