"""Program execution over sample sets: tools, answering, matching, reward.

Failures are isolated per sample: a failing step records its cause on the
sample result, scores it incorrect, and the batch continues.  Results can
be cached on disk keyed by the content hash of (program serialization,
sample image bytes, question, client fingerprint); a cache hit re-uses the
prediction but reports zero token cost since no new model call happened.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from vpsearch import imaging
from vpsearch.datasets import Sample
from vpsearch.errors import ConfigurationError, GatewayError, SampleExecutionError, ToolClientError
from vpsearch.gateway import ChatRequest, GatewayClient, Part
from vpsearch.program import RESERVED_INPUT, VisualPromptProgram, topological_order
from vpsearch.records import ExperimentRecord, SampleResult, TokenUsage
from vpsearch.toolclient import Detection

logger = logging.getLogger(__name__)

ANSWER_MODES = ("multiple_choice", "exact", "numeric")

_NUMBER_RE = re.compile(r"[-+]?\d*\.?\d+")
_PAREN_CHOICE_RE = re.compile(r"\(([A-Za-z])\)")
_BARE_CHOICE_RE = re.compile(r"(?<![A-Za-z0-9])([A-Za-z])(?![A-Za-z0-9])")


def _extract_choice(text: str) -> str | None:
    match = _PAREN_CHOICE_RE.search(text)
    if match:
        return match.group(1).lower()
    match = _BARE_CHOICE_RE.search(text)
    if match:
        return match.group(1).lower()
    return None


def match_answer(prediction: str, ground_truth: str, answer_mode: str) -> bool:
    """Compare a model reply against ground truth under the task's mode."""
    if answer_mode == "multiple_choice":
        predicted = _extract_choice(prediction)
        expected = _extract_choice(ground_truth)
        return predicted is not None and predicted == expected
    if answer_mode == "exact":
        return prediction.strip().lower() == ground_truth.strip().lower()
    if answer_mode == "numeric":
        predicted = _NUMBER_RE.search(prediction)
        expected = _NUMBER_RE.search(ground_truth)
        if predicted is None or expected is None:
            return False
        return float(predicted.group()) == float(expected.group())
    raise ConfigurationError(f"unknown answer_mode {answer_mode!r}")


class SampleCache:
    """Content-addressed cache of SampleResults, optionally disk-backed."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, dict[str, Any]] = {}
        self._hits = 0
        self._lock = threading.Lock()

    @staticmethod
    def key(program: VisualPromptProgram, image_bytes: bytes, question: str, fingerprint: str) -> str:
        hasher = hashlib.sha256()
        hasher.update(program.canonical_json().encode())
        hasher.update(b"\0")
        hasher.update(image_bytes)
        hasher.update(b"\0")
        hasher.update(question.encode())
        hasher.update(b"\0")
        hasher.update(fingerprint.encode())
        return hasher.hexdigest()

    @property
    def hits(self) -> int:
        with self._lock:
            return self._hits

    def get(self, key: str) -> SampleResult | None:
        with self._lock:
            data = self._memory.get(key)
        if data is None and self.directory is not None:
            path = self.directory / f"{key}.json"
            if path.is_file():
                data = json.loads(path.read_text())
                with self._lock:
                    self._memory[key] = data
        if data is None:
            return None
        with self._lock:
            self._hits += 1
        return SampleResult.from_dict(data)

    def put(self, key: str, result: SampleResult) -> None:
        data = result.to_dict()
        with self._lock:
            self._memory[key] = data
        if self.directory is not None:
            (self.directory / f"{key}.json").write_text(json.dumps(data, sort_keys=True))


class Executor:
    """Runs validated programs over samples and computes empirical rewards."""

    def __init__(
        self,
        gateway: GatewayClient,
        tool_client: Any = None,
        artifact_root: str | Path | None = None,
    ):
        self.gateway = gateway
        self.tool_client = tool_client
        self.artifact_root = Path(artifact_root) if artifact_root is not None else None

    # --- single tool application ---

    def apply_tool(
        self,
        step,
        store: dict[str, Any],
        usage_sink: list[TokenUsage] | None = None,
        node_id: int | None = None,
    ) -> Any:
        """Execute one step against the value store and return its output."""
        inputs = []
        for name in step.inputs:
            if name not in store:
                raise SampleExecutionError(f"step '{step.output}': input '{name}' is not available")
            inputs.append(store[name])
        params = dict(step.params)
        op = step.op

        if op == "get_image_size":
            return imaging.image_size(inputs[0])
        if op == "convert_image_grayscale":
            return imaging.to_grayscale(inputs[0])
        if op == "crop":
            box = self._resolve_box(step, inputs, params)
            try:
                return imaging.crop(inputs[0], box)
            except ValueError as exc:
                raise SampleExecutionError(f"step '{step.output}': {exc}") from exc
        if op == "overlay_images":
            position = tuple(params.get("position", (0, 0)))
            opacity = float(params.get("opacity", 0.5))
            return imaging.overlay(inputs[0], inputs[1], position, opacity)
        if op == "draw_line":
            return imaging.draw_line(
                inputs[0],
                tuple(params["start"]),
                tuple(params["end"]),
                imaging.parse_color(params["color"]),
                int(params.get("width", 1)),
            )
        if op == "draw_box":
            color = imaging.parse_color(params["color"])
            width = int(params.get("width", 1))
            if len(inputs) == 2:
                out = inputs[0]
                for detection in inputs[1]:
                    out = imaging.draw_box(out, detection.box, color, width)
                return out
            return imaging.draw_box(inputs[0], tuple(params["box"]), color, width)
        if op == "draw_filled_box":
            return imaging.draw_filled_box(inputs[0], tuple(params["box"]), imaging.parse_color(params["color"]))
        if op == "detect_objects":
            return self._tools().detect_objects(
                inputs[0], params["query"], float(params.get("threshold", 0.3))
            )
        if op == "sliding_window_detection":
            return self._tools().sliding_window_detection(inputs[0], params["query"])
        if op == "segment_and_mark":
            annotated, _regions = self._tools().segment_and_mark(
                inputs[0], int(params.get("granularity", 3)), params.get("mark_type", "number")
            )
            return annotated
        if op == "estimate_depth":
            return self._tools().estimate_depth(inputs[0])
        if op == "ask_to_LVLM":
            parts = [Part("image", image_bytes=imaging.encode_png(img)) for img in inputs]
            parts.append(Part("text", text=params["prompt"]))
            reply, usage = self.gateway.complete(ChatRequest("target_model", parts, node_id=node_id))
            if usage_sink is not None:
                usage_sink.append(usage)
            return reply
        raise SampleExecutionError(f"step '{step.output}': tool '{op}' has no runtime implementation")

    def _tools(self):
        if self.tool_client is None:
            raise SampleExecutionError("no tool client configured for external-model tools")
        return self.tool_client

    @staticmethod
    def _resolve_box(step, inputs: list[Any], params: dict[str, Any]) -> tuple[int, int, int, int]:
        if len(inputs) == 2:
            detections: list[Detection] = inputs[1]
            index = int(params.get("box_index", 0))
            if index >= len(detections):
                raise SampleExecutionError(
                    f"step '{step.output}': detection produced {len(detections)} boxes, index {index} unavailable"
                )
            return detections[index].box
        return tuple(params["box"])

    # --- per-sample execution ---

    def run_program_on_sample(
        self,
        program: VisualPromptProgram,
        sample: Sample,
        node_id: int | None = None,
        cache: SampleCache | None = None,
    ) -> SampleResult:
        image = imaging.load_image(sample.image_path)
        if cache is not None:
            key = SampleCache.key(program, imaging.encode_png(image), sample.question, self._fingerprint())
            cached = cache.get(key)
            if cached is not None:
                # No new model calls happened, so this evaluation costs nothing.
                return SampleResult(
                    sample_id=sample.sample_id,
                    prediction=cached.prediction,
                    correct=cached.correct,
                    final_images=list(cached.final_images),
                    error=cached.error,
                    tokens=TokenUsage(),
                )
        result = self._run_uncached(program, sample, image, node_id)
        if cache is not None:
            cache.put(key, result)
        return result

    def _fingerprint(self) -> str:
        try:
            tools = getattr(self.tool_client, "fingerprint", "tools:none")
        except ToolClientError:
            # Unreachable server: keep going so the failure lands on each
            # sample (fault isolation), not on the whole batch.
            tools = "tools:unreachable"
        return f"{self.gateway.backend.backend_id}|{tools}"

    def _run_uncached(
        self,
        program: VisualPromptProgram,
        sample: Sample,
        image: np.ndarray,
        node_id: int | None,
    ) -> SampleResult:
        store: dict[str, Any] = {RESERVED_INPUT: image}
        usages: list[TokenUsage] = []
        final_paths: list[str] = []
        try:
            for step in topological_order(program):
                try:
                    store[step.output] = self.apply_tool(step, store, usages, node_id)
                except (ToolClientError, ValueError, KeyError, TypeError) as exc:
                    raise SampleExecutionError(f"step '{step.output}': {exc}") from exc
            finals = [store[name] for name in program.final_image_refs]
            final_paths = self._persist_finals(program, finals, node_id, sample.sample_id)
            prompt = program.answer_prompt_template.format(question=sample.question)
            parts = [Part("image", image_bytes=imaging.encode_png(img)) for img in finals]
            parts.append(Part("text", text=prompt))
            try:
                prediction, usage = self.gateway.complete(ChatRequest("target_model", parts, node_id=node_id))
            except GatewayError as exc:
                raise SampleExecutionError(f"target model call failed: {exc}") from exc
            usages.append(usage)
        except SampleExecutionError as exc:
            logger.warning("sample %s failed: %s", sample.sample_id, exc)
            tokens = TokenUsage()
            for u in usages:
                tokens = tokens + u
            return SampleResult(
                sample_id=sample.sample_id,
                prediction="",
                correct=False,
                final_images=final_paths,
                error=str(exc),
                tokens=tokens,
            )
        tokens = TokenUsage()
        for u in usages:
            tokens = tokens + u
        correct = match_answer(prediction, sample.answer, sample.answer_mode)
        return SampleResult(
            sample_id=sample.sample_id,
            prediction=prediction,
            correct=correct,
            final_images=final_paths,
            error=None,
            tokens=tokens,
        )

    def _persist_finals(
        self,
        program: VisualPromptProgram,
        finals: list[np.ndarray],
        node_id: int | None,
        sample_id: str,
    ) -> list[str]:
        if self.artifact_root is None or node_id is None:
            return []
        paths = []
        for ref, img in zip(program.final_image_refs, finals):
            rel = Path("nodes") / f"{node_id:04d}" / "samples" / str(sample_id) / f"{ref}.png"
            imaging.save_png(img, self.artifact_root / rel)
            paths.append(rel.as_posix())
        return paths

    # --- development-set evaluation ---

    def evaluate_on_devset(
        self,
        program: VisualPromptProgram,
        samples: list[Sample],
        node_id: int,
        cache: SampleCache | None = None,
        parallel_width: int = 1,
    ) -> ExperimentRecord:
        """Run the program on every sample and aggregate the record.

        Results keep the sample order regardless of the evaluation width.
        Scripted (deterministic) gateways force sequential evaluation so
        reply order stays reproducible.
        """
        if not samples:
            raise ConfigurationError("development set must not be empty")
        width = 1 if self.gateway.deterministic else max(1, parallel_width)
        if width == 1:
            results = [self.run_program_on_sample(program, s, node_id, cache) for s in samples]
        else:
            with ThreadPoolExecutor(max_workers=width) as pool:
                results = list(pool.map(lambda s: self.run_program_on_sample(program, s, node_id, cache), samples))
        record = ExperimentRecord.from_results(node_id, results)
        if record.degraded:
            logger.warning("node %d: every sample errored; reward forced to 0.0", node_id)
        return record
