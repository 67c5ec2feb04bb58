"""Pipeline DSL: parsing, validation, and the round-trip contract."""

import json
import time

import pytest

from vpsearch.errors import ProgramParseError
from vpsearch.program import (
    ToolStep,
    VisualPromptProgram,
    functions_reference,
    identity_program,
    topological_order,
    validate_program,
)

from oracles import kahn_has_cycle


def step(op, output, inputs=("input_image",), **params):
    return ToolStep(op=op, params=dict(params), inputs=list(inputs), output=output)


def program(steps, finals, template="{question}"):
    return VisualPromptProgram(steps=steps, final_image_refs=finals, answer_prompt_template=template)


class TestValidation:
    def test_identity_program_is_valid(self):
        assert validate_program(identity_program()) == []

    def test_crop_then_draw_chain_is_valid(self):
        prog = program(
            [
                step("detect_objects", "dets", query="circled region", threshold=0.2),
                step("crop", "cropped", inputs=("input_image", "dets")),
                step("draw_line", "lined", inputs=("cropped",), start=[0, 0], end=[5, 5], color="red"),
            ],
            ["lined"],
        )
        assert validate_program(prog) == []

    def test_dangling_reference_names_step_and_missing_input(self):
        prog = program([step("convert_image_grayscale", "gray", inputs=("img7",))], ["gray"])
        issues = validate_program(prog)
        assert any(i.code == "dangling-input" and i.step == "gray" and "img7" in i.message for i in issues)

    def test_cycle_detected_and_oracle_agrees(self):
        prog = program(
            [
                step("convert_image_grayscale", "a", inputs=("b",)),
                step("convert_image_grayscale", "b", inputs=("a",)),
            ],
            ["a"],
        )
        issues = validate_program(prog)
        assert any(i.code == "cycle" and "cycle detected" in i.message for i in issues)
        assert kahn_has_cycle([(s.output, s.inputs) for s in prog.steps])

    def test_acyclic_chain_agrees_with_oracle(self):
        prog = program(
            [
                step("convert_image_grayscale", "g1"),
                step("convert_image_grayscale", "g2", inputs=("g1",)),
            ],
            ["g2"],
        )
        assert validate_program(prog) == []
        assert not kahn_has_cycle([(s.output, s.inputs) for s in prog.steps])

    def test_color_range_violation(self):
        prog = program(
            [step("draw_line", "lined", start=[0, 0], end=[3, 3], color="rgb(300,0,0)")],
            ["lined"],
        )
        issues = validate_program(prog)
        assert any(i.code == "bad-param" and "color" in i.message for i in issues)

    def test_unknown_tool_reported(self):
        prog = program([step("zoom_enhance", "z")], ["z"])
        issues = validate_program(prog)
        assert any(i.code == "unknown-tool" for i in issues)

    def test_all_violations_reported_not_just_first(self):
        prog = program(
            [
                step("zoom_enhance", "z"),
                step("draw_line", "lined", start=[0, 0], end=[1, 1], color="nope"),
            ],
            ["missing"],
            template="no placeholder",
        )
        codes = {i.code for i in validate_program(prog)}
        assert {"unknown-tool", "bad-param", "bad-final-refs", "bad-answer-template"} <= codes

    def test_reserved_output_name_rejected(self):
        prog = program([step("convert_image_grayscale", "input_image")], ["input_image"])
        assert any(i.code == "bad-output" for i in validate_program(prog))

    def test_duplicate_outputs_rejected(self):
        prog = program(
            [step("convert_image_grayscale", "x"), step("convert_image_grayscale", "x")],
            ["x"],
        )
        assert any(i.code == "duplicate-output" for i in validate_program(prog))

    def test_detections_cannot_be_final_images(self):
        prog = program([step("detect_objects", "dets", query="q")], ["dets"])
        assert any(i.code == "bad-final-refs" for i in validate_program(prog))

    def test_answer_template_placeholder_count(self):
        for template, valid in [("{question}", True), ("{question} {question}", False), ("no slot", False)]:
            prog = program([], ["input_image"], template=template)
            issues = validate_program(prog)
            assert (not issues) == valid, template

    def test_crop_needs_box_or_detections(self):
        prog = program([step("crop", "c")], ["c"])
        assert any(i.code == "missing-param" for i in validate_program(prog))

    def test_twenty_step_chain_validates_quickly(self):
        steps = [step("convert_image_grayscale", "g0")]
        for i in range(1, 20):
            steps.append(step("convert_image_grayscale", f"g{i}", inputs=(f"g{i-1}",)))
        prog = program(steps, ["g19"])
        start = time.perf_counter()
        assert validate_program(prog) == []
        assert time.perf_counter() - start < 0.1


class TestTopologicalOrder:
    def test_orders_out_of_order_documents(self):
        prog = program(
            [
                step("convert_image_grayscale", "late", inputs=("early",)),
                step("convert_image_grayscale", "early"),
            ],
            ["late"],
        )
        order = [s.output for s in topological_order(prog)]
        assert order.index("early") < order.index("late")

    def test_cycle_raises(self):
        prog = program(
            [
                step("convert_image_grayscale", "a", inputs=("b",)),
                step("convert_image_grayscale", "b", inputs=("a",)),
            ],
            ["a"],
        )
        with pytest.raises(ProgramParseError, match="cycle detected"):
            topological_order(prog)


class TestSerialization:
    def test_round_trip_equality(self):
        prog = program(
            [
                step("detect_objects", "dets", query="marker", threshold=0.5),
                step("crop", "c", inputs=("input_image", "dets"), box_index=1),
            ],
            ["c"],
            template="Focus on the crop. {question}",
        )
        prog.source_idea_id = 17
        assert VisualPromptProgram.from_json(prog.to_json()).to_dict() == prog.to_dict()

    def test_unknown_fields_rejected(self):
        with pytest.raises(ProgramParseError):
            VisualPromptProgram.from_dict({"steps": [], "final_image_refs": ["input_image"], "extra": 1})

    def test_invalid_json_rejected(self):
        with pytest.raises(ProgramParseError):
            VisualPromptProgram.from_json("{not json")

    def test_canonical_json_stable(self):
        prog = identity_program()
        assert prog.canonical_json() == identity_program().canonical_json()


class TestFunctionsReference:
    def test_lists_every_catalog_tool(self):
        text = functions_reference()
        for name in (
            "get_image_size",
            "convert_image_grayscale",
            "crop",
            "overlay_images",
            "draw_line",
            "draw_box",
            "draw_filled_box",
            "detect_objects",
            "sliding_window_detection",
            "segment_and_mark",
            "estimate_depth",
            "ask_to_LVLM",
        ):
            assert f"- {name}[" in text

    def test_reference_is_deterministic(self):
        assert functions_reference() == functions_reference()
