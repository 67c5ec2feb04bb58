"""Task manifests: image-QA samples with dev/test splits.

A manifest is a JSONL file.  The first line is the task header:

    {"name": ..., "problem_description": ..., "dev_indices": [...],
     "test_indices": [...]}

Every following line is one sample:

    {"sample_id": ..., "image": "relative/path.png", "question": ...,
     "answer": ..., "answer_mode": "multiple_choice" | "exact" | "numeric"}

Image paths resolve relative to the manifest's directory.  Validation
collects every problem before raising so a broken manifest is fixable in
one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from vpsearch.errors import ManifestError

ANSWER_MODES = ("multiple_choice", "exact", "numeric")


@dataclass
class Sample:
    sample_id: str
    image_path: Path
    question: str
    answer: str
    answer_mode: str


@dataclass
class Task:
    name: str
    problem_description: str
    samples: list[Sample] = field(default_factory=list)
    dev_ids: list[str] = field(default_factory=list)
    test_ids: list[str] = field(default_factory=list)

    def _by_id(self) -> dict[str, Sample]:
        return {s.sample_id: s for s in self.samples}

    @property
    def dev_samples(self) -> list[Sample]:
        by_id = self._by_id()
        return [by_id[sid] for sid in self.dev_ids]

    @property
    def test_samples(self) -> list[Sample]:
        by_id = self._by_id()
        return [by_id[sid] for sid in self.test_ids]


def _parse_lines(path: Path) -> list[dict[str, Any]]:
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return records


def load_task(manifest_path: str | Path) -> Task:
    """Load and validate a task manifest."""
    path = Path(manifest_path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    records = _parse_lines(path)
    if not records:
        raise ManifestError(f"{path}: manifest is empty")

    header, sample_records = records[0], records[1:]
    problems: list[str] = []
    for key in ("name", "problem_description", "dev_indices", "test_indices"):
        if key not in header:
            problems.append(f"header missing field '{key}'")
    if problems:
        raise ManifestError(f"{path}: " + "; ".join(problems))

    samples: list[Sample] = []
    seen: set[str] = set()
    missing_images: list[str] = []
    for index, record in enumerate(sample_records, start=2):
        for key in ("sample_id", "image", "question", "answer", "answer_mode"):
            if key not in record:
                problems.append(f"line {index}: sample missing field '{key}'")
        if problems and problems[-1].startswith(f"line {index}"):
            continue
        sample_id = str(record["sample_id"])
        if sample_id in seen:
            problems.append(f"duplicate sample id '{sample_id}'")
            continue
        seen.add(sample_id)
        if record["answer_mode"] not in ANSWER_MODES:
            problems.append(f"sample '{sample_id}': unknown answer_mode '{record['answer_mode']}'")
        image_path = (path.parent / record["image"]).resolve()
        if not image_path.is_file():
            missing_images.append(str(record["image"]))
        samples.append(
            Sample(
                sample_id=sample_id,
                image_path=image_path,
                question=str(record["question"]),
                answer=str(record["answer"]),
                answer_mode=record["answer_mode"],
            )
        )
    if missing_images:
        problems.append("missing image files: " + ", ".join(missing_images))

    dev_ids = [str(x) for x in header["dev_indices"]]
    test_ids = [str(x) for x in header["test_indices"]]
    overlap = sorted(set(dev_ids) & set(test_ids))
    if overlap:
        problems.append(f"dev/test splits overlap on ids: {overlap}")
    for split, ids in (("dev", dev_ids), ("test", test_ids)):
        unknown = sorted(set(ids) - seen)
        if unknown:
            problems.append(f"{split}_indices reference unknown sample ids: {unknown}")

    if problems:
        raise ManifestError(f"{path}: " + "; ".join(problems))

    return Task(
        name=str(header["name"]),
        problem_description=str(header["problem_description"]),
        samples=samples,
        dev_ids=dev_ids,
        test_ids=test_ids,
    )
