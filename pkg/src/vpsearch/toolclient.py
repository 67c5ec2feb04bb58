"""Clients for the external-model visual tools.

Two implementations share one wire contract: an HTTP client for a running
tool server and an in-process stub whose outputs are a pure function of
(tool, image content hash, params).  The JSON Schemas below are the
published protocol; the server side validates against the same shapes.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import time
from dataclasses import dataclass
from typing import Any

import jsonschema
import numpy as np
import requests

from vpsearch import imaging
from vpsearch.errors import ToolClientError, ToolProtocolError

logger = logging.getLogger(__name__)

EXTERNAL_TOOLS = ("detect_objects", "sliding_window_detection", "segment_and_mark", "estimate_depth")

_BOX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
}

TOOL_REQUEST_SCHEMA = {
    "type": "object",
    "required": ["image", "params"],
    "additionalProperties": False,
    "properties": {
        "image": {"type": "string"},  # base64 PNG
        "params": {"type": "object"},
    },
}

_COMMON_RESPONSE = {
    "server_mode": {"type": "string", "enum": ["stub", "real"]},
    "model_version": {"type": "string"},
}

TOOL_RESPONSE_SCHEMAS: dict[str, dict[str, Any]] = {
    "detect_objects": {
        "type": "object",
        "required": ["detections", "server_mode", "model_version"],
        "additionalProperties": False,
        "properties": {
            **_COMMON_RESPONSE,
            "detections": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["box", "label", "score"],
                    "additionalProperties": False,
                    "properties": {
                        "box": _BOX,
                        "label": {"type": "string"},
                        "score": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
        },
    },
    "segment_and_mark": {
        "type": "object",
        "required": ["image", "regions", "server_mode", "model_version"],
        "additionalProperties": False,
        "properties": {
            **_COMMON_RESPONSE,
            "image": {"type": "string"},
            "regions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["mark", "box"],
                    "additionalProperties": False,
                    "properties": {
                        "mark": {"type": "string"},
                        "box": _BOX,
                    },
                },
            },
        },
    },
    "estimate_depth": {
        "type": "object",
        "required": ["image", "server_mode", "model_version"],
        "additionalProperties": False,
        "properties": {
            **_COMMON_RESPONSE,
            "image": {"type": "string"},
        },
    },
}
TOOL_RESPONSE_SCHEMAS["sliding_window_detection"] = TOOL_RESPONSE_SCHEMAS["detect_objects"]

HEALTH_SCHEMA = {
    "type": "object",
    "required": ["status", "mode", "model_versions"],
    "properties": {
        "status": {"type": "string"},
        "mode": {"type": "string", "enum": ["stub", "real"]},
        "model_versions": {"type": "object"},
    },
}


def validate_tool_request(payload: dict[str, Any]) -> None:
    try:
        jsonschema.validate(payload, TOOL_REQUEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ToolProtocolError(f"tool request violates schema: {exc.message}") from exc


def validate_tool_response(tool: str, payload: dict[str, Any]) -> None:
    schema = TOOL_RESPONSE_SCHEMAS.get(tool)
    if schema is None:
        raise ToolProtocolError(f"unknown tool {tool!r}; allowed: {list(EXTERNAL_TOOLS)}")
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        raise ToolProtocolError(f"{tool} response violates schema: {exc.message}") from exc


@dataclass
class Detection:
    box: tuple[int, int, int, int]
    label: str
    score: float


def _canonical_params(params: dict[str, Any]) -> str:
    # Integral floats serialize as ints so the canonical form is identical
    # across languages (JS has no int/float distinction in JSON output).
    def normalize(value: Any) -> Any:
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, dict):
            return {k: normalize(v) for k, v in value.items()}
        if isinstance(value, list):
            return [normalize(v) for v in value]
        return value

    return json.dumps(normalize(params), sort_keys=True, separators=(",", ":"))


class _StubRng:
    """Tiny 64-bit LCG; mirrored by the tool server's stub mode."""

    MUL = 6364136223846793005
    INC = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state * self.MUL + self.INC) & self.MASK
        return self.state >> 33

    def next_below(self, bound: int) -> int:
        return self.next() % bound


def stub_seed(tool: str, image_png: bytes, params: dict[str, Any]) -> int:
    digest = hashlib.sha256(tool.encode() + b"\0" + image_png + b"\0" + _canonical_params(params).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _grid_box(width: int, height: int, cell: int) -> tuple[int, int, int, int]:
    """Cell `cell` (0..8) of a 3x3 grid over a width x height image."""
    col, row = cell % 3, cell // 3
    xs = [0, width // 3, 2 * width // 3, width]
    ys = [0, height // 3, 2 * height // 3, height]
    return (xs[col], ys[row], xs[col + 1], ys[row + 1])


class StubToolClient:
    """Deterministic in-process stand-in for the external-model tools."""

    fingerprint = "tools:stub:v1"
    mode = "stub"

    def _detections(self, tool: str, image: np.ndarray, params: dict[str, Any], count: int) -> list[Detection]:
        png = imaging.encode_png(image)
        rng = _StubRng(stub_seed(tool, png, params))
        width, height = imaging.image_size(image)
        label = str(params.get("query", "object"))
        threshold = float(params.get("threshold", 0.0))
        detections = []
        for _ in range(count):
            cell = rng.next_below(9)
            score = rng.next_below(1000) / 999.0
            if score < threshold:
                continue
            detections.append(Detection(box=_grid_box(width, height, cell), label=label, score=score))
        return detections

    def detect_objects(self, image: np.ndarray, query: str, threshold: float = 0.3) -> list[Detection]:
        return self._detections("detect_objects", image, {"query": query, "threshold": threshold}, count=3)

    def sliding_window_detection(self, image: np.ndarray, query: str) -> list[Detection]:
        """One detection per cell of the fixed 3x3 window grid."""
        params = {"query": query}
        png = imaging.encode_png(image)
        rng = _StubRng(stub_seed("sliding_window_detection", png, params))
        width, height = imaging.image_size(image)
        return [
            Detection(box=_grid_box(width, height, cell), label=str(query), score=rng.next_below(1000) / 999.0)
            for cell in range(9)
        ]

    def segment_and_mark(
        self, image: np.ndarray, granularity: int = 3, mark_type: str = "number"
    ) -> tuple[np.ndarray, list[dict[str, Any]]]:
        params = {"granularity": granularity, "mark_type": mark_type}
        png = imaging.encode_png(image)
        rng = _StubRng(stub_seed("segment_and_mark", png, params))
        width, height = imaging.image_size(image)
        color = (rng.next_below(256), rng.next_below(256), rng.next_below(256))
        annotated = image.copy()
        regions = []
        cells = min(9, 3 * granularity)
        for index in range(cells):
            box = _grid_box(width, height, index % 9)
            annotated = imaging.draw_box(annotated, box, color, width=1)
            mark = str(index + 1) if mark_type == "number" else chr(ord("A") + index)
            regions.append({"mark": mark, "box": list(box)})
        return annotated, regions

    def estimate_depth(self, image: np.ndarray) -> np.ndarray:
        png = imaging.encode_png(image)
        rng = _StubRng(stub_seed("estimate_depth", png, {}))
        width, height = imaging.image_size(image)
        horizontal = rng.next_below(2) == 0

        # Integer-exact 0..255 ramp so every implementation agrees bit-for-bit.
        def ramp(n: int) -> np.ndarray:
            if n <= 1:
                return np.zeros(n, dtype=np.uint8)
            return ((255 * np.arange(n)) // (n - 1)).astype(np.uint8)

        if horizontal:
            plane = ramp(width)[None, :].repeat(height, axis=0)
        else:
            plane = ramp(height)[:, None].repeat(width, axis=1)
        return np.repeat(plane[:, :, None], 3, axis=2)


class HttpToolClient:
    """Client for a running tool server speaking the published protocol."""

    def __init__(
        self,
        base_url: str,
        offline: bool = False,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
    ):
        self.base_url = base_url.rstrip("/")
        self.offline = offline
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._health: dict[str, Any] | None = None

    def health(self) -> dict[str, Any]:
        if self._health is None:
            try:
                response = requests.get(f"{self.base_url}/healthz", timeout=self.timeout)
                response.raise_for_status()
                payload = response.json()
            except (requests.RequestException, ValueError) as exc:
                raise ToolClientError(f"tool server health check failed: {exc}") from exc
            try:
                jsonschema.validate(payload, HEALTH_SCHEMA)
            except jsonschema.ValidationError as exc:
                raise ToolProtocolError(f"health reply violates schema: {exc.message}") from exc
            if payload["mode"] == "stub" and not self.offline:
                raise ToolClientError(
                    "tool server is running in stub mode; pass --offline to accept stubbed tools"
                )
            self._health = payload
        return self._health

    @property
    def fingerprint(self) -> str:
        health = self.health()
        versions = ",".join(f"{k}={v}" for k, v in sorted(health["model_versions"].items()))
        return f"tools:http:{health['mode']}:{versions}"

    def _call(self, tool: str, image: np.ndarray, params: dict[str, Any]) -> dict[str, Any]:
        self.health()
        payload = {"image": base64.b64encode(imaging.encode_png(image)).decode(), "params": params}
        validate_tool_request(payload)
        url = f"{self.base_url}/v1/tools/{tool}"
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                response = requests.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                time.sleep(self.backoff_base * (2**attempt))
                continue
            if response.status_code >= 500:
                last = ToolClientError(f"server returned {response.status_code}")
                time.sleep(self.backoff_base * (2**attempt))
                continue
            if response.status_code != 200:
                raise ToolClientError(f"tool call {tool} rejected ({response.status_code}): {response.text[:200]}")
            body = response.json()
            validate_tool_response(tool, body)
            return body
        raise ToolClientError(f"tool server unreachable after {self.max_attempts} attempts: {last}")

    def detect_objects(self, image: np.ndarray, query: str, threshold: float = 0.3) -> list[Detection]:
        body = self._call("detect_objects", image, {"query": query, "threshold": threshold})
        return [Detection(tuple(int(v) for v in d["box"]), d["label"], d["score"]) for d in body["detections"]]

    def sliding_window_detection(self, image: np.ndarray, query: str) -> list[Detection]:
        body = self._call("sliding_window_detection", image, {"query": query})
        return [Detection(tuple(int(v) for v in d["box"]), d["label"], d["score"]) for d in body["detections"]]

    def segment_and_mark(
        self, image: np.ndarray, granularity: int = 3, mark_type: str = "number"
    ) -> tuple[np.ndarray, list[dict[str, Any]]]:
        body = self._call("segment_and_mark", image, {"granularity": granularity, "mark_type": mark_type})
        annotated = imaging.decode_png(base64.b64decode(body["image"]))
        return annotated, body["regions"]

    def estimate_depth(self, image: np.ndarray) -> np.ndarray:
        body = self._call("estimate_depth", image, {})
        return imaging.decode_png(base64.b64decode(body["image"]))
