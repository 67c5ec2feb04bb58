"""Shared fixtures: fixture tasks, scripted replies, tree builders."""

from __future__ import annotations

import json
import random

import pytest

from vpsearch import imaging
from vpsearch.config import ExplorationConfig
from vpsearch.datasets import load_task
from vpsearch.gateway import GatewayClient, ScriptedBackend
from vpsearch.ideation import SelfEvaluation
from vpsearch.program import identity_program
from vpsearch.records import ExperimentRecord
from vpsearch.tree import ExplorationTree

# One analyst reply shape parses for all three analyst call types
# (sample analysis, distillation, revision).
ANALYST_REPLIES = [
    (
        "SUMMARY:\nThe manipulation was applied as intended and most samples matched.\n"
        "IMPLICATIONS: the cue helped on thin structures\n"
        "- keep the added cue minimal\n"
        "- contrast against the background matters\n"
        "CAUSES: None\n"
    ),
    (
        "SUMMARY:\nSeveral predictions flipped after the image change.\n"
        "IMPLICATIONS: the crop removed needed context\n"
        "- avoid cropping away the answer region\n"
        "- prefer marks over removal\n"
        "- verify the region before cropping\n"
        "CAUSES: None\n"
    ),
]

IDEA_REPLIES = [
    "Draw a thin red diagonal guide line so the model can anchor positions against it.",
    "Convert the image to grayscale and box the salient region to reduce color distraction.",
    "Crop tightly around the region of interest before asking the question.",
    "Overlay a faint grid to give the model coordinate anchors.",
]

SELF_EVAL_REPLIES = [
    '{"feasibility": 5, "expectation": 4, "novelty": 4}',
    '{"feasibility": 4, "expectation": 3, "novelty": 5}',
    '{"feasibility": 5, "expectation": 3, "novelty": 3}',
    '{"feasibility": 4, "expectation": 4, "novelty": 3}',
    '{"feasibility": 5, "expectation": 2, "novelty": 4}',
]

ENGINEER_REPLIES = [
    json.dumps(
        {
            "steps": [
                {
                    "op": "draw_line",
                    "params": {"start": [0, 0], "end": [9, 9], "color": "red", "width": 1},
                    "inputs": ["input_image"],
                    "output": "lined",
                }
            ],
            "final_image_refs": ["lined"],
            "answer_prompt_template": "Look carefully at the guide line. {question}",
        }
    ),
    json.dumps(
        {
            "steps": [
                {"op": "convert_image_grayscale", "params": {}, "inputs": ["input_image"], "output": "gray"},
                {
                    "op": "draw_box",
                    "params": {"box": [1, 1, 6, 6], "color": "blue", "width": 1},
                    "inputs": ["gray"],
                    "output": "boxed",
                },
            ],
            "final_image_refs": ["boxed"],
            "answer_prompt_template": "{question} Answer with the letter only.",
        }
    ),
    json.dumps(
        {
            "steps": [],
            "final_image_refs": ["input_image"],
            "answer_prompt_template": "{question}",
        }
    ),
]


def build_script(target_replies: list[str] | None = None) -> dict[str, list]:
    # Ideation calls alternate generate-idea / self-evaluate, so the script
    # interleaves the two reply kinds (no gate regenerations: feasibility >= 4).
    ideation: list[dict] = []
    pairs = max(len(IDEA_REPLIES), len(SELF_EVAL_REPLIES))
    for i in range(pairs):
        ideation.append({"text": IDEA_REPLIES[i % len(IDEA_REPLIES)], "usage": [120 + 10 * i, 40, 15]})
        ideation.append({"text": SELF_EVAL_REPLIES[i % len(SELF_EVAL_REPLIES)], "usage": [90, 12, 5]})
    return {
        "ideation": ideation,
        "engineer": [{"text": text, "usage": [300, 80, 40]} for text in ENGINEER_REPLIES],
        "analyst": [{"text": text, "usage": [200, 60, 25]} for text in ANALYST_REPLIES],
        "target_model": [
            {"text": text, "usage": [50, 5, 0]} for text in (target_replies or ["(A)", "B", "A", "C", "A"])
        ],
    }


def scripted_gateway(script: dict | None = None, target_replies: list[str] | None = None) -> GatewayClient:
    return GatewayClient(ScriptedBackend(script or build_script(target_replies)), logical_clock=True)


def write_fixture_task(
    directory,
    n_dev: int = 6,
    n_test: int = 4,
    answer: str = "A",
    answer_mode: str = "multiple_choice",
    name: str = "fixture-task",
):
    """Write a small manifest + PNGs under `directory`; returns the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    images_dir = directory / "images"
    total = n_dev + n_test
    lines = [
        json.dumps(
            {
                "name": name,
                "problem_description": "Identify the marked letter in a synthetic scene.",
                "dev_indices": [f"s{i:03d}" for i in range(n_dev)],
                "test_indices": [f"s{i:03d}" for i in range(n_dev, total)],
            }
        )
    ]
    for i in range(total):
        img = imaging.new_image(10, 10, ((i * 37) % 256, (i * 91) % 256, (i * 53) % 256))
        imaging.save_png(img, images_dir / f"s{i:03d}.png")
        lines.append(
            json.dumps(
                {
                    "sample_id": f"s{i:03d}",
                    "image": f"images/s{i:03d}.png",
                    "question": f"Which letter is circled in sample {i}?",
                    "answer": answer,
                    "answer_mode": answer_mode,
                }
            )
        )
    manifest = directory / "task.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture
def fixture_task(tmp_path):
    manifest = write_fixture_task(tmp_path / "task")
    return load_task(manifest), manifest


@pytest.fixture
def config():
    return ExplorationConfig()


def ev(expectation: int = 3, novelty: int = 3, feasibility: int = 5) -> SelfEvaluation:
    return SelfEvaluation.from_raw(feasibility, expectation, novelty)


def record_with_reward(node_id: int, reward: float) -> ExperimentRecord:
    return ExperimentRecord(node_id=node_id, reward=reward)


def manual_tree(baseline_reward: float = 0.6) -> ExplorationTree:
    return ExplorationTree.create_root(record_with_reward(0, baseline_reward), identity_program())


def execute(tree: ExplorationTree, node_id: int, reward: float, iteration: int | None = None) -> None:
    tree.mark_executed(node_id, record_with_reward(node_id, reward), identity_program(), iteration)


def random_engine_like_tree(seed: int, max_nodes: int = 100, k: int = 3) -> ExplorationTree:
    """Random tree grown with the engine's k-maintenance discipline.

    Every executed node keeps at least one selectable child, so descent
    always terminates.
    """
    rng = random.Random(seed)
    tree = manual_tree(rng.random())
    for _ in range(k):
        tree.add_child(0, f"idea {len(tree)}", ev(rng.randint(1, 5), rng.randint(1, 5)))
    while len(tree) < max_nodes:
        action = rng.random()
        frontier = tree.frontier()
        if not frontier:
            break
        if action < 0.55:
            node_id = frontier[rng.randrange(len(frontier))]
            execute(tree, node_id, rng.random())
            for _ in range(k):
                tree.add_child(node_id, f"idea {len(tree)}", ev(rng.randint(1, 5), rng.randint(1, 5)))
            parent_id = tree.node(node_id).parent_id
            if parent_id is not None:
                tree.add_child(parent_id, f"idea {len(tree)}", ev(rng.randint(1, 5), rng.randint(1, 5)))
        elif action < 0.8:
            executed = [n.id for n in tree.executed_nodes()]
            parent_id = executed[rng.randrange(len(executed))]
            tree.add_child(parent_id, f"idea {len(tree)}", ev(rng.randint(1, 5), rng.randint(1, 5)))
        else:
            # Reject only when the parent keeps another selectable child.
            candidates = [
                nid
                for nid in frontier
                if len(tree.unexecuted_children(tree.node(nid).parent_id)) >= 2
            ]
            if candidates:
                tree.reject_node(candidates[rng.randrange(len(candidates))], "fuzz rejection")
    return tree
