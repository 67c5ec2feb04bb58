"""Result records produced by executing a visual prompt on a sample set."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from vpsearch.errors import ConfigurationError


@dataclass
class TokenUsage:
    """Token counts for one or more model round-trips."""

    input_tokens: int = 0
    output_tokens: int = 0
    reasoning_tokens: int = 0

    def __post_init__(self) -> None:
        for name in ("input_tokens", "output_tokens", "reasoning_tokens"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
            self.reasoning_tokens + other.reasoning_tokens,
        )

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens + self.reasoning_tokens

    def to_list(self) -> list[int]:
        return [self.input_tokens, self.output_tokens, self.reasoning_tokens]

    @classmethod
    def from_list(cls, data: list[int]) -> "TokenUsage":
        return cls(int(data[0]), int(data[1]), int(data[2]))


@dataclass
class SampleResult:
    """Outcome of running a program on one sample.

    ``final_images`` holds artifact-relative paths of the images that were
    sent to the target model (empty when artifacts are not persisted).
    """

    sample_id: str
    prediction: str
    correct: bool
    final_images: list[str] = field(default_factory=list)
    error: str | None = None
    tokens: TokenUsage = field(default_factory=TokenUsage)

    def __post_init__(self) -> None:
        if self.correct and self.error is not None:
            raise ConfigurationError("a correct sample cannot carry an error")

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "prediction": self.prediction,
            "correct": self.correct,
            "final_images": list(self.final_images),
            "error": self.error,
            "tokens": self.tokens.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SampleResult":
        return cls(
            sample_id=data["sample_id"],
            prediction=data["prediction"],
            correct=data["correct"],
            final_images=list(data.get("final_images", [])),
            error=data.get("error"),
            tokens=TokenUsage.from_list(data.get("tokens", [0, 0, 0])),
        )


@dataclass
class ExperimentRecord:
    """Aggregated development-set result for one node's program."""

    node_id: int
    reward: float
    sample_results: list[SampleResult] = field(default_factory=list)
    representative_success: str | None = None
    representative_failure: str | None = None
    tokens_total: TokenUsage = field(default_factory=TokenUsage)
    degraded: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.reward <= 1.0:
            raise ConfigurationError(f"reward {self.reward} outside [0, 1]")

    @classmethod
    def from_results(cls, node_id: int, results: list[SampleResult]) -> "ExperimentRecord":
        """Build a record from per-sample results, in sample order."""
        if not results:
            raise ConfigurationError("cannot build a record from zero samples")
        correct = [r for r in results if r.correct]
        reward = float(Fraction(len(correct), len(results)))
        success = next((r.sample_id for r in results if r.correct), None)
        failure = next((r.sample_id for r in results if not r.correct), None)
        tokens = TokenUsage()
        for r in results:
            tokens = tokens + r.tokens
        return cls(
            node_id=node_id,
            reward=reward,
            sample_results=results,
            representative_success=success,
            representative_failure=failure,
            tokens_total=tokens,
            degraded=all(r.error is not None for r in results),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "reward": self.reward,
            "sample_results": [r.to_dict() for r in self.sample_results],
            "representative_success": self.representative_success,
            "representative_failure": self.representative_failure,
            "tokens_total": self.tokens_total.to_list(),
            "degraded": self.degraded,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentRecord":
        return cls(
            node_id=data["node_id"],
            reward=data["reward"],
            sample_results=[SampleResult.from_dict(r) for r in data.get("sample_results", [])],
            representative_success=data.get("representative_success"),
            representative_failure=data.get("representative_failure"),
            tokens_total=TokenUsage.from_list(data.get("tokens_total", [0, 0, 0])),
            degraded=data.get("degraded", False),
        )
