"""Agent prompt templates and their deterministic rendering.

The templates live as text assets next to this module and are filled with
plain ``str.format``.  Empty list sections render as the literal marker
``(none)`` so every rendering is reproducible and golden-testable.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

EMPTY_SECTION = "(none)"

# Repair round for the engineer: validator findings echoed back once.
REPAIR_TEMPLATE = """The pipeline document you produced failed validation.

Your previous document:
{previous_reply}

Validation errors:
{errors}

Fix every error and return ONLY the corrected JSON pipeline document, with the
same structure and rules as before.
"""


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Return the raw template text for an asset name (without extension)."""
    return resources.files("vpsearch").joinpath("assets", f"{name}.txt").read_text()


def bullet_list(items: list[str]) -> str:
    """Render a list as '- item' lines, or the empty-section marker."""
    if not items:
        return EMPTY_SECTION
    return "\n".join(f"- {item}" for item in items)


def render_idea_generation(
    problem_description: str,
    parent_idea: str,
    sibling_ideas: list[str],
    parent_implications: list[str],
    functions_reference: str,
) -> str:
    return load_template("idea_generation").format(
        problem_description=problem_description,
        parent_idea=parent_idea,
        sibling_ideas=bullet_list(sibling_ideas),
        parent_implications=bullet_list(parent_implications),
        functions_reference=functions_reference,
    )


def render_self_evaluation(idea: str, sibling_ideas: list[str], functions_reference: str) -> str:
    return load_template("self_evaluation").format(
        idea=idea,
        sibling_ideas=bullet_list(sibling_ideas),
        functions_reference=functions_reference,
    )


def render_sample_analysis(idea: str, prediction: str, ground_truth: str, error: str | None) -> str:
    return load_template("sample_analysis").format(
        idea=idea,
        prediction=prediction,
        ground_truth=ground_truth,
        error=error if error is not None else "None",
    )


def render_insights_generation(
    success: bool,
    reward_str: str,
    error: str | None,
    idea: str,
    image_comparisons: list[str],
) -> str:
    return load_template("insights_generation").format(
        success=success,
        reward_str=reward_str,
        error=error if error is not None else "None",
        idea=idea,
        image_comparisons="\n".join(image_comparisons) if image_comparisons else EMPTY_SECTION,
    )


def render_insights_revision(
    current_implications: list[str],
    children_implications: list[str],
) -> str:
    return load_template("insights_revision").format(
        current_implication=bullet_list(current_implications),
        children_implications=bullet_list(children_implications),
    )


def render_implementation(
    idea: str,
    parent_implications: list[str],
    functions_reference: str,
) -> str:
    return load_template("implementation").format(
        idea=idea,
        parent_implications=bullet_list(parent_implications),
        functions_reference=functions_reference,
    )


def render_repair(previous_reply: str, errors: list[str]) -> str:
    return REPAIR_TEMPLATE.format(
        previous_reply=previous_reply,
        errors=bullet_list(errors),
    )
