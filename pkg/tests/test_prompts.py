"""Template fidelity: asset checksums and golden renderings."""

import hashlib
from pathlib import Path

import pytest

from vpsearch import prompts

GOLDEN_DIR = Path(__file__).parent / "goldens"

# sha256 of the verbatim template assets, pinned at extraction time.
# A mismatch means someone edited the template text.
ASSET_HASHES = {
    "idea_generation": "81ea52a32985c5e6dbd5c1e8ed5068c5d8b3685175f4cd40f7be96928fd8e821",
    "insights_generation": "891c1fdd69ad196f6862855447d8d0d8fbe861b5c168c78597bf4a37400fa29e",
    "insights_revision": "2efff2e6cb674b40249a033fa2ced178e9944b8c5bcea57a3eae33d1a2b5b512",
    "sample_analysis": "2bf7bbf5210c2ea85cef27457717419100e9127aeaff46166ff665a3d69c3bac",
    "self_evaluation": "66f630115f50e29979bff231e935c023c67c19489a354b8d673dcf07fb95d4cd",
}

FUNCS = (
    "- crop[inputs (image); params box?: box] -> image: Crops a specified region of the image\n"
    "- draw_line[inputs (image); params start: point, end: point, color: color] -> image: Draws a line on the image"
)
PROBLEM = "Count the number of intersection points between the two line segments drawn in the image."
PARENT = "Send the unmodified image together with the task question; no visual changes."
SIBLINGS = [
    "Draw a thin red diagonal guide line so the model can anchor positions against it.",
    "Convert the image to grayscale and box the salient region to reduce color distraction.",
]
IMPLICATIONS = ["the cue helped on thin structures", "contrast against the background matters"]
IDEA = "Crop tightly around the crossing region, then draw a baseline for reference."


def golden(name: str) -> str:
    return (GOLDEN_DIR / f"{name}.txt").read_text()


@pytest.mark.parametrize("name,expected", sorted(ASSET_HASHES.items()))
def test_template_assets_unchanged(name, expected):
    digest = hashlib.sha256(prompts.load_template(name).encode()).hexdigest()
    assert digest == expected, f"template asset {name}.txt was modified"


class TestGoldenRenderings:
    def test_idea_generation(self):
        rendered = prompts.render_idea_generation(PROBLEM, PARENT, SIBLINGS, IMPLICATIONS, FUNCS)
        assert rendered == golden("idea_generation")

    def test_self_evaluation(self):
        rendered = prompts.render_self_evaluation(IDEA, SIBLINGS, FUNCS)
        assert rendered == golden("self_evaluation")

    def test_sample_analysis(self):
        rendered = prompts.render_sample_analysis(IDEA, "The answer is 2.", "2", None)
        assert rendered == golden("sample_analysis")

    def test_insights_generation(self):
        rendered = prompts.render_insights_generation(
            True,
            "0.8000 (24/30 correct)",
            None,
            IDEA,
            [
                "[sample s003] IMPLICATIONS: applied correctly CAUSES: None",
                "[sample s007] IMPLICATIONS: crop removed the crossing CAUSES: wrong region used",
            ],
        )
        assert rendered == golden("insights_generation")

    def test_insights_revision(self):
        rendered = prompts.render_insights_revision(
            IMPLICATIONS,
            ["avoid cropping away the answer region", "prefer marks over removal"],
        )
        assert rendered == golden("insights_revision")

    def test_implementation(self):
        rendered = prompts.render_implementation(IDEA, IMPLICATIONS, FUNCS)
        assert rendered == golden("implementation")


class TestRenderingRules:
    def test_sibling_texts_appear_in_order(self):
        rendered = prompts.render_idea_generation(PROBLEM, PARENT, SIBLINGS, IMPLICATIONS, FUNCS)
        first = rendered.index(SIBLINGS[0])
        second = rendered.index(SIBLINGS[1])
        assert first < second

    def test_empty_sections_render_none_marker(self):
        rendered = prompts.render_idea_generation(PROBLEM, PARENT, [], [], FUNCS)
        section = rendered.split("Implications from Previous Experiments:\n")[1]
        assert section.startswith(prompts.EMPTY_SECTION)
        assert "Previous ideas:\n" + PARENT + "\n\n" + prompts.EMPTY_SECTION in rendered

    def test_error_none_renders_literal(self):
        rendered = prompts.render_sample_analysis(IDEA, "B", "B", None)
        assert "- Error message (if any): None" in rendered

    def test_self_eval_json_braces_render_literally(self):
        rendered = prompts.render_self_evaluation(IDEA, SIBLINGS, FUNCS)
        assert '{\n  "feasibility": <1-5>,' in rendered

    def test_renderings_are_deterministic(self):
        a = prompts.render_insights_revision(IMPLICATIONS, ["x"])
        b = prompts.render_insights_revision(IMPLICATIONS, ["x"])
        assert a == b
