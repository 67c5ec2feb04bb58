"""Engineer stage: turn an accepted idea into a validated pipeline program."""

from __future__ import annotations

import logging
import re

from vpsearch import prompts
from vpsearch.errors import CompileError, ProgramParseError
from vpsearch.gateway import ChatRequest, GatewayClient
from vpsearch.program import CATALOG, VisualPromptProgram, functions_reference, validate_program

logger = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def extract_program_document(reply: str) -> str:
    """Pull the JSON document out of a reply, tolerating code fences/prose."""
    fenced = _FENCE_RE.search(reply)
    if fenced:
        return fenced.group(1).strip()
    start = reply.find("{")
    end = reply.rfind("}")
    if start >= 0 and end > start:
        return reply[start : end + 1]
    return reply.strip()


def compile_idea(
    idea: str,
    parent_implications: list[str],
    gateway: GatewayClient,
    catalog=None,
    node_id: int | None = None,
    source_idea_id: int | None = None,
) -> VisualPromptProgram:
    """Compile an idea into a program, with one validator-guided repair round.

    Raises CompileError when the second attempt still fails; the caller
    rejects the node and triggers regeneration.
    """
    catalog = catalog if catalog is not None else CATALOG
    reference = functions_reference(catalog)
    prompt = prompts.render_implementation(
        idea=idea,
        parent_implications=parent_implications,
        functions_reference=reference,
    )
    reply, _ = gateway.complete(ChatRequest.text("engineer", prompt, node_id=node_id))

    errors: list[str] = []
    for round_index in range(2):
        try:
            program = VisualPromptProgram.from_json(extract_program_document(reply))
        except ProgramParseError as exc:
            errors = [str(exc)]
            program = None
        if program is not None:
            program.source_idea_id = source_idea_id
            issues = validate_program(program, catalog)
            if not issues:
                return program
            errors = [str(issue) for issue in issues]
        if round_index == 0:
            logger.info("program failed validation; asking the engineer for one repair round")
            repair = prompts.render_repair(previous_reply=reply, errors=errors)
            reply, _ = gateway.complete(ChatRequest.text("engineer", repair, node_id=node_id))
    raise CompileError("program invalid after repair round: " + "; ".join(errors))
