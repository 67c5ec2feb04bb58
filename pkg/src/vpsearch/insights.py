"""Analyst stage: sample-wise analysis, insight distillation, revision.

Only the two representative samples plus every errored sample get a
per-sample analysis call, which bounds the analyst's token cost.  Fresh
distillations carry at most 4 implications; revision along the ancestor
chain caps the stored list at 5.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from vpsearch import prompts
from vpsearch.errors import VpsearchError
from vpsearch.gateway import ChatRequest, GatewayClient, Part
from vpsearch.records import ExperimentRecord, SampleResult
from vpsearch.tree import EXECUTED, ExplorationTree

logger = logging.getLogger(__name__)

FRESH_IMPLICATION_CAP = 4
REVISED_IMPLICATION_CAP = 5

_BULLET_RE = re.compile(r"^\s*[-*]\s+(.*\S)\s*$")


@dataclass
class SampleAnalysis:
    sample_id: str
    implication: str
    causes: str
    parse_warning: bool = False
    raw: str = ""

    def render_line(self) -> str:
        return f"[sample {self.sample_id}] IMPLICATIONS: {self.implication} CAUSES: {self.causes}"


@dataclass
class InsightBundle:
    summary: str
    implications: list[str]
    degraded: bool = False


def _section_after(text: str, header: str, stop_headers: tuple[str, ...]) -> str | None:
    """Text following `header` up to the next stop header, or None."""
    match = re.search(rf"^{header}\s*:?\s*", text, re.MULTILINE)
    if not match:
        return None
    rest = text[match.end() :]
    stops = [m.start() for h in stop_headers for m in [re.search(rf"^{h}\s*:", rest, re.MULTILINE)] if m]
    if stops:
        rest = rest[: min(stops)]
    return rest.strip()


def parse_sample_analysis(reply: str, sample_id: str) -> SampleAnalysis:
    implication = _section_after(reply, "IMPLICATIONS", ("CAUSES",))
    causes = _section_after(reply, "CAUSES", ())
    if implication is None or causes is None:
        logger.warning("sample analysis reply missing headers; keeping raw text")
        return SampleAnalysis(
            sample_id=sample_id,
            implication=reply.strip(),
            causes="",
            parse_warning=True,
            raw=reply,
        )
    return SampleAnalysis(sample_id=sample_id, implication=implication, causes=causes, raw=reply)


def parse_bullets(text: str) -> list[str]:
    return [m.group(1) for line in text.splitlines() if (m := _BULLET_RE.match(line))]


def select_samples_for_analysis(record: ExperimentRecord) -> list[SampleResult]:
    """The two representatives plus every errored sample, in sample order."""
    wanted = {record.representative_success, record.representative_failure}
    picked = []
    for result in record.sample_results:
        if result.sample_id in wanted or result.error is not None:
            picked.append(result)
    return picked


def analyze_sample(
    result: SampleResult,
    ground_truth: str,
    idea: str,
    gateway: GatewayClient,
    input_image: bytes | None = None,
    final_image: bytes | None = None,
    node_id: int | None = None,
) -> SampleAnalysis:
    """Ask the analyst whether the idea was applied correctly on one sample."""
    prompt = prompts.render_sample_analysis(
        idea=idea,
        prediction=result.prediction,
        ground_truth=ground_truth,
        error=result.error,
    )
    parts = [Part("text", text=prompt)]
    if input_image is not None:
        parts.append(Part("image", image_bytes=input_image))
    if final_image is not None:
        parts.append(Part("image", image_bytes=final_image))
    reply, _ = gateway.complete(ChatRequest("analyst", parts, node_id=node_id))
    return parse_sample_analysis(reply, result.sample_id)


def format_reward(record: ExperimentRecord) -> str:
    correct = sum(1 for r in record.sample_results if r.correct)
    total = len(record.sample_results)
    return f"{record.reward:.4f} ({correct}/{total} correct)"


def _record_error_summary(record: ExperimentRecord) -> str | None:
    errored = [r for r in record.sample_results if r.error is not None]
    if not errored:
        return None
    return f"{len(errored)} of {len(record.sample_results)} samples errored"


def distill_insights(
    record: ExperimentRecord,
    idea: str,
    analyses: list[SampleAnalysis],
    gateway: GatewayClient,
    node_id: int | None = None,
) -> InsightBundle:
    """Summarize a finished experiment into a summary plus 2-4 implications.

    An unparseable reply is retried once; the second failure degrades to a
    bundle carrying the raw reply as its single implication.
    """
    prompt = prompts.render_insights_generation(
        success=not record.degraded,
        reward_str=format_reward(record),
        error=_record_error_summary(record),
        idea=idea,
        image_comparisons=[a.render_line() for a in analyses],
    )
    request = ChatRequest.text("analyst", prompt, node_id=node_id)
    reply = ""
    for attempt in range(2):
        reply, _ = gateway.complete(request)
        summary = _section_after(reply, "SUMMARY", ("IMPLICATIONS",))
        bullets = parse_bullets(_section_after(reply, "IMPLICATIONS", ()) or "")
        if summary and bullets:
            if len(bullets) > FRESH_IMPLICATION_CAP:
                logger.info("distillation returned %d bullets; keeping first %d", len(bullets), FRESH_IMPLICATION_CAP)
                bullets = bullets[:FRESH_IMPLICATION_CAP]
            return InsightBundle(summary=summary, implications=bullets)
        logger.warning("insights reply unparseable (attempt %d)", attempt + 1)
    return InsightBundle(summary=reply.strip(), implications=[reply.strip()], degraded=True)


def backpropagate_insights(
    tree: ExplorationTree,
    node_id: int,
    gateway: GatewayClient,
) -> int:
    """Revise every ancestor's implications bottom-up; returns the call count.

    Each ancestor is revised from its own implications plus all of its
    executed children's implications.  A gateway failure leaves that
    ancestor's implications untouched and revision continues upward.
    """
    calls = 0
    for ancestor in tree.ancestors(node_id):
        children_implications: list[str] = []
        for child in tree.children_of(ancestor.id):
            if child.status == EXECUTED:
                children_implications.extend(child.history.implications)
        prompt = prompts.render_insights_revision(
            current_implications=ancestor.history.implications,
            children_implications=children_implications,
        )
        try:
            reply, _ = gateway.complete(ChatRequest.text("analyst", prompt, node_id=node_id))
        except VpsearchError as exc:
            logger.warning("revision call for ancestor %d failed; keeping prior implications: %s", ancestor.id, exc)
            calls += 1
            continue
        calls += 1
        bullets = parse_bullets(reply)
        if not bullets:
            logger.warning("revision reply for ancestor %d had no bullets; keeping prior implications", ancestor.id)
            continue
        if len(bullets) > REVISED_IMPLICATION_CAP:
            bullets = bullets[:REVISED_IMPLICATION_CAP]
        ancestor.history.implications = bullets
    return calls


def load_image_bytes(path: str | Path | None) -> bytes | None:
    if path is None:
        return None
    path = Path(path)
    if not path.is_file():
        return None
    return path.read_bytes()
