"""Tool-pipeline DSL: program/step types, the tool catalog, and validation.

A program is a small dataflow document: named steps pulling from the
reserved ``input_image`` or from earlier outputs, a list of final image
references, and the answer-stage text template.  Validation reports every
violation at once so the engineer agent can repair in a single round.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from vpsearch.errors import ProgramParseError
from vpsearch.imaging import parse_color

RESERVED_INPUT = "input_image"
QUESTION_PLACEHOLDER = "{question}"

# Value kinds flowing between steps.
IMAGE = "image"
SIZE = "size"
DETECTIONS = "detections"
TEXT = "text"


@dataclass
class ToolStep:
    op: str
    params: dict[str, Any] = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    output: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"op": self.op, "params": dict(self.params), "inputs": list(self.inputs), "output": self.output}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ToolStep":
        if not isinstance(data, dict):
            raise ProgramParseError(f"step must be an object, got {type(data).__name__}")
        unknown = set(data) - {"op", "params", "inputs", "output"}
        if unknown:
            raise ProgramParseError(f"step has unknown fields: {sorted(unknown)}")
        try:
            return cls(
                op=str(data["op"]),
                params=dict(data.get("params", {})),
                inputs=[str(x) for x in data.get("inputs", [])],
                output=str(data["output"]),
            )
        except KeyError as exc:
            raise ProgramParseError(f"step missing required field {exc}") from exc


@dataclass
class VisualPromptProgram:
    """A validated pipeline plus the answer-stage prompt template."""

    steps: list[ToolStep] = field(default_factory=list)
    final_image_refs: list[str] = field(default_factory=lambda: [RESERVED_INPUT])
    answer_prompt_template: str = QUESTION_PLACEHOLDER
    source_idea_id: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "final_image_refs": list(self.final_image_refs),
            "answer_prompt_template": self.answer_prompt_template,
            "source_idea_id": self.source_idea_id,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "VisualPromptProgram":
        if not isinstance(data, dict):
            raise ProgramParseError("program document must be an object")
        unknown = set(data) - {"steps", "final_image_refs", "answer_prompt_template", "source_idea_id"}
        if unknown:
            raise ProgramParseError(f"program has unknown fields: {sorted(unknown)}")
        return cls(
            steps=[ToolStep.from_dict(s) for s in data.get("steps", [])],
            final_image_refs=[str(x) for x in data.get("final_image_refs", [])],
            answer_prompt_template=str(data.get("answer_prompt_template", QUESTION_PLACEHOLDER)),
            source_idea_id=data.get("source_idea_id"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "VisualPromptProgram":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProgramParseError(f"program document is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def canonical_json(self) -> str:
        """Stable serialization of the program's semantics (cache keys).

        source_idea_id is provenance, not behavior, so it is excluded:
        identical pipelines share cache entries across nodes.
        """
        data = self.to_dict()
        data.pop("source_idea_id")
        return json.dumps(data, sort_keys=True, separators=(",", ":"))


def identity_program(source_idea_id: int | None = None) -> VisualPromptProgram:
    """The no-op program: raw image plus the bare question (naive baseline)."""
    return VisualPromptProgram(
        steps=[],
        final_image_refs=[RESERVED_INPUT],
        answer_prompt_template=QUESTION_PLACEHOLDER,
        source_idea_id=source_idea_id,
    )


# --- catalog -----------------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "int" | "float" | "string" | "color" | "point" | "box"
    required: bool = True
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple[str, ...] | None = None
    default: Any = None


@dataclass(frozen=True)
class ToolSpec:
    name: str
    category: str
    summary: str
    params: tuple[ParamSpec, ...]
    input_signatures: tuple[tuple[str, ...], ...]  # allowed tuples of input kinds
    output_kind: str
    variadic_images: bool = False  # accepts 1..N image inputs (ask_to_LVLM)
    external: bool = False  # served by the tool server rather than in-process

    def param(self, name: str) -> ParamSpec | None:
        for spec in self.params:
            if spec.name == name:
                return spec
        return None


CATALOG: dict[str, ToolSpec] = {
    spec.name: spec
    for spec in [
        ToolSpec(
            name="get_image_size",
            category="basic",
            summary="Returns image dimensions as (width, height)",
            params=(),
            input_signatures=((IMAGE,),),
            output_kind=SIZE,
        ),
        ToolSpec(
            name="convert_image_grayscale",
            category="basic",
            summary="Converts image to grayscale",
            params=(),
            input_signatures=((IMAGE,),),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="crop",
            category="basic",
            summary="Crops a specified region of the image; the region comes from the box param or from a detections input",
            params=(
                ParamSpec("box", "box", required=False),
                ParamSpec("box_index", "int", required=False, minimum=0, default=0),
            ),
            input_signatures=((IMAGE,), (IMAGE, DETECTIONS)),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="overlay_images",
            category="basic",
            summary="Overlays the second image onto the first at a position with given opacity",
            params=(
                ParamSpec("position", "point", required=False, default=(0, 0)),
                ParamSpec("opacity", "float", required=False, minimum=0.0, maximum=1.0, default=0.5),
            ),
            input_signatures=((IMAGE, IMAGE),),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="draw_line",
            category="drawing",
            summary="Draws a line on the image",
            params=(
                ParamSpec("start", "point"),
                ParamSpec("end", "point"),
                ParamSpec("color", "color"),
                ParamSpec("width", "int", required=False, minimum=1, default=1),
            ),
            input_signatures=((IMAGE,),),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="draw_box",
            category="drawing",
            summary="Draws a rectangle outline; the box comes from the box param or every box of a detections input",
            params=(
                ParamSpec("box", "box", required=False),
                ParamSpec("color", "color"),
                ParamSpec("width", "int", required=False, minimum=1, default=1),
            ),
            input_signatures=((IMAGE,), (IMAGE, DETECTIONS)),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="draw_filled_box",
            category="drawing",
            summary="Draws a filled rectangle on the image",
            params=(
                ParamSpec("box", "box"),
                ParamSpec("color", "color"),
            ),
            input_signatures=((IMAGE,),),
            output_kind=IMAGE,
        ),
        ToolSpec(
            name="detect_objects",
            category="external model",
            summary="Open-vocabulary object detection; returns scored boxes for a text query",
            params=(
                ParamSpec("query", "string"),
                ParamSpec("threshold", "float", required=False, minimum=0.0, maximum=1.0, default=0.3),
            ),
            input_signatures=((IMAGE,),),
            output_kind=DETECTIONS,
            external=True,
        ),
        ToolSpec(
            name="sliding_window_detection",
            category="external model",
            summary="Sliding window object detection over the image for a text query",
            params=(ParamSpec("query", "string"),),
            input_signatures=((IMAGE,),),
            output_kind=DETECTIONS,
            external=True,
        ),
        ToolSpec(
            name="segment_and_mark",
            category="external model",
            summary="Semantic segmentation; returns the image annotated with region marks",
            params=(
                ParamSpec("granularity", "int", required=False, minimum=1, maximum=6, default=3),
                ParamSpec("mark_type", "string", required=False, choices=("number", "letter"), default="number"),
            ),
            input_signatures=((IMAGE,),),
            output_kind=IMAGE,
            external=True,
        ),
        ToolSpec(
            name="estimate_depth",
            category="external model",
            summary="Monocular depth estimation; returns a depth map image",
            params=(),
            input_signatures=((IMAGE,),),
            output_kind=IMAGE,
            external=True,
        ),
        ToolSpec(
            name="ask_to_LVLM",
            category="LVLM",
            summary="Sends images and a text prompt to the target model and returns its response",
            params=(ParamSpec("prompt", "string"),),
            input_signatures=((IMAGE,),),
            output_kind=TEXT,
            variadic_images=True,
        ),
    ]
}


def functions_reference(catalog: dict[str, ToolSpec] | None = None) -> str:
    """Deterministic one-line-per-tool documentation block for prompts."""
    catalog = catalog if catalog is not None else CATALOG
    lines = []
    for spec in catalog.values():
        params = ", ".join(
            p.name + ("" if p.required else "?") + f": {p.kind}" for p in spec.params
        )
        inputs = " | ".join("(" + ", ".join(sig) + ")" for sig in spec.input_signatures)
        if spec.variadic_images:
            inputs = "(image, ...)"
        lines.append(f"- {spec.name}[inputs {inputs}; params {params or 'none'}] -> {spec.output_kind}: {spec.summary}")
    return "\n".join(lines)


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ProgramIssue:
    step: str | None  # output name of the offending step, or None for program-level
    code: str
    message: str

    def __str__(self) -> str:
        where = f"step '{self.step}': " if self.step else ""
        return f"{where}{self.message}"


def _check_param_value(spec: ParamSpec, value: Any) -> str | None:
    """Return an error message when the value does not fit the spec."""
    if spec.kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            return f"param '{spec.name}' must be an integer"
        if spec.minimum is not None and value < spec.minimum:
            return f"param '{spec.name}' must be >= {spec.minimum}"
        if spec.maximum is not None and value > spec.maximum:
            return f"param '{spec.name}' must be <= {spec.maximum}"
    elif spec.kind == "float":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            return f"param '{spec.name}' must be a number"
        if spec.minimum is not None and value < spec.minimum:
            return f"param '{spec.name}' must be >= {spec.minimum}"
        if spec.maximum is not None and value > spec.maximum:
            return f"param '{spec.name}' must be <= {spec.maximum}"
    elif spec.kind == "string":
        if not isinstance(value, str) or not value:
            return f"param '{spec.name}' must be a nonempty string"
        if spec.choices is not None and value not in spec.choices:
            return f"param '{spec.name}' must be one of {list(spec.choices)}"
    elif spec.kind == "color":
        if not isinstance(value, str):
            return f"param '{spec.name}' must be a color string"
        try:
            parse_color(value)
        except ValueError as exc:
            return f"param '{spec.name}': {exc}"
    elif spec.kind == "point":
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
        ):
            return f"param '{spec.name}' must be a [x, y] integer pair"
    elif spec.kind == "box":
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 4
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
        ):
            return f"param '{spec.name}' must be [left, top, right, bottom] integers"
        left, top, right, bottom = value
        if left >= right or top >= bottom:
            return f"param '{spec.name}' must satisfy left < right and top < bottom"
    return None


def _check_step_params(step: ToolStep, spec: ToolSpec, issues: list[ProgramIssue]) -> None:
    for name in step.params:
        if spec.param(name) is None:
            issues.append(ProgramIssue(step.output, "unknown-param", f"tool '{step.op}' has no param '{name}'"))
    for pspec in spec.params:
        if pspec.name not in step.params:
            if pspec.required:
                issues.append(
                    ProgramIssue(step.output, "missing-param", f"tool '{step.op}' requires param '{pspec.name}'")
                )
            continue
        message = _check_param_value(pspec, step.params[pspec.name])
        if message:
            issues.append(ProgramIssue(step.output, "bad-param", message))
    # crop/draw_box: a static box and a detections input are alternatives.
    if step.op in ("crop", "draw_box") and len(step.inputs) == 1 and "box" not in step.params:
        issues.append(
            ProgramIssue(step.output, "missing-param", f"tool '{step.op}' needs a 'box' param or a detections input")
        )


def topological_order(program: VisualPromptProgram) -> list[ToolStep]:
    """Execution order of steps, or raise ProgramParseError on a cycle.

    Assumes references resolve; run validate_program first for full checks.
    """
    by_output = {step.output: step for step in program.steps}
    order: list[ToolStep] = []
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(step: ToolStep, stack: list[str]) -> None:
        mark = state.get(step.output)
        if mark == 1:
            return
        if mark == 0:
            cycle = " -> ".join(stack + [step.output])
            raise ProgramParseError(f"cycle detected: {cycle}")
        state[step.output] = 0
        for name in step.inputs:
            dep = by_output.get(name)
            if dep is not None:
                visit(dep, stack + [step.output])
        state[step.output] = 1
        order.append(step)

    for step in program.steps:
        visit(step, [])
    return order


def validate_program(
    program: VisualPromptProgram, catalog: dict[str, ToolSpec] | None = None
) -> list[ProgramIssue]:
    """Check a program against the catalog; returns every violation found."""
    catalog = catalog if catalog is not None else CATALOG
    issues: list[ProgramIssue] = []

    # Output names: nonempty, unique, not the reserved input.
    seen: set[str] = set()
    for step in program.steps:
        if not step.output:
            issues.append(ProgramIssue(None, "bad-output", "every step needs a nonempty output name"))
        elif step.output == RESERVED_INPUT:
            issues.append(ProgramIssue(step.output, "bad-output", f"'{RESERVED_INPUT}' is reserved"))
        elif step.output in seen:
            issues.append(ProgramIssue(step.output, "duplicate-output", f"output '{step.output}' defined twice"))
        seen.add(step.output)

    kinds: dict[str, str] = {RESERVED_INPUT: IMAGE}
    for step in program.steps:
        spec = catalog.get(step.op)
        if spec is not None and step.output and step.output != RESERVED_INPUT:
            kinds[step.output] = spec.output_kind

    for step in program.steps:
        spec = catalog.get(step.op)
        if spec is None:
            issues.append(ProgramIssue(step.output, "unknown-tool", f"tool '{step.op}' is not in the catalog"))
            continue
        _check_step_params(step, spec, issues)
        dangling = False
        for name in step.inputs:
            if name not in kinds:
                issues.append(
                    ProgramIssue(step.output, "dangling-input", f"input '{name}' is not produced by any step")
                )
                dangling = True
        if dangling:
            continue
        input_kinds = tuple(kinds[name] for name in step.inputs)
        if spec.variadic_images:
            if not input_kinds or any(kind != IMAGE for kind in input_kinds):
                issues.append(
                    ProgramIssue(step.output, "bad-inputs", f"tool '{step.op}' takes one or more image inputs")
                )
        elif input_kinds not in spec.input_signatures:
            allowed = " or ".join("(" + ", ".join(sig) + ")" for sig in spec.input_signatures)
            issues.append(
                ProgramIssue(
                    step.output,
                    "bad-inputs",
                    f"tool '{step.op}' takes inputs {allowed}, got ({', '.join(input_kinds) or ''})",
                )
            )

    # Acyclicity (only meaningful when references resolve).
    if not any(issue.code == "dangling-input" for issue in issues):
        try:
            topological_order(program)
        except ProgramParseError as exc:
            issues.append(ProgramIssue(None, "cycle", str(exc)))

    if not program.final_image_refs:
        issues.append(ProgramIssue(None, "bad-final-refs", "final_image_refs must not be empty"))
    for name in program.final_image_refs:
        if name not in kinds:
            issues.append(ProgramIssue(None, "bad-final-refs", f"final image '{name}' is not produced by any step"))
        elif kinds[name] != IMAGE:
            issues.append(ProgramIssue(None, "bad-final-refs", f"final reference '{name}' is not an image"))

    count = program.answer_prompt_template.count(QUESTION_PLACEHOLDER)
    if count != 1:
        issues.append(
            ProgramIssue(
                None,
                "bad-answer-template",
                f"answer_prompt_template must contain {QUESTION_PLACEHOLDER} exactly once (found {count})",
            )
        )
    else:
        try:
            program.answer_prompt_template.format(question="probe")
        except (KeyError, IndexError, ValueError):
            issues.append(
                ProgramIssue(None, "bad-answer-template", "answer_prompt_template has stray placeholders or braces")
            )

    return issues
