"""Synthetic idea-space landscape for validating the search offline.

Rewards are a clamped mixture of Gaussian peaks over a small latent space.
A finite pool of candidate points makes the global optimum exhaustively
computable, which the acceptance suite uses as its oracle.  Scripted
ideation proposes a child latent as a seeded random step from the parent,
with a self-evaluation whose expectation correlates with the true reward
and whose novelty reflects distance to sibling latents, so the selection
formulas receive meaningful inputs without any model in the loop.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from vpsearch.errors import ConfigurationError
from vpsearch.ideation import SelfEvaluation

Point = tuple[float, ...]


@dataclass(frozen=True)
class Peak:
    center: Point
    height: float
    width: float


@dataclass(frozen=True)
class PoolIdea:
    text: str
    latent: Point


@dataclass
class SyntheticLandscape:
    dimension: int = 2
    peaks: list[Peak] = field(default_factory=list)
    idea_pool: list[PoolIdea] = field(default_factory=list)
    noise_scale: float = 0.0
    seed: int = 0
    root_latent: Point = (0.0, 0.0)
    step_scale: float = 0.45
    expectation_corr: float = 1.0
    expectation_noise: float = 0.0

    def validate(self) -> None:
        if self.dimension < 1:
            raise ConfigurationError("landscape dimension must be positive")
        if not self.peaks:
            raise ConfigurationError("landscape needs at least one peak")
        for peak in self.peaks:
            if len(peak.center) != self.dimension:
                raise ConfigurationError(f"peak center {peak.center} has wrong dimension")
            if not 0.0 <= peak.height <= 1.0:
                raise ConfigurationError("peak heights must lie in [0, 1]")
            if peak.width <= 0:
                raise ConfigurationError("peak widths must be positive")
        if len(self.root_latent) != self.dimension:
            raise ConfigurationError("root latent has wrong dimension")
        if self.noise_scale < 0 or self.step_scale < 0:
            raise ConfigurationError("scales must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "peaks": [{"center": list(p.center), "height": p.height, "width": p.width} for p in self.peaks],
            "idea_pool": [{"text": p.text, "latent": list(p.latent)} for p in self.idea_pool],
            "noise_scale": self.noise_scale,
            "seed": self.seed,
            "root_latent": list(self.root_latent),
            "step_scale": self.step_scale,
            "expectation_corr": self.expectation_corr,
            "expectation_noise": self.expectation_noise,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SyntheticLandscape":
        landscape = cls(
            dimension=data.get("dimension", 2),
            peaks=[
                Peak(tuple(float(c) for c in p["center"]), float(p["height"]), float(p["width"]))
                for p in data.get("peaks", [])
            ],
            idea_pool=[
                PoolIdea(str(p["text"]), tuple(float(c) for c in p["latent"])) for p in data.get("idea_pool", [])
            ],
            noise_scale=float(data.get("noise_scale", 0.0)),
            seed=int(data.get("seed", 0)),
            root_latent=tuple(float(c) for c in data.get("root_latent", (0.0, 0.0))),
            step_scale=float(data.get("step_scale", 0.45)),
            expectation_corr=float(data.get("expectation_corr", 1.0)),
            expectation_noise=float(data.get("expectation_noise", 0.0)),
        )
        landscape.validate()
        return landscape


def clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def landscape_reward(landscape: SyntheticLandscape, point: Point) -> float:
    """Noiseless reward: clamped max over peaks of height * exp(-d^2/w^2)."""
    if len(point) != landscape.dimension:
        raise ConfigurationError(f"point {point} has wrong dimension for landscape")
    best = 0.0
    for peak in landscape.peaks:
        dist_sq = sum((a - b) ** 2 for a, b in zip(point, peak.center))
        value = peak.height * math.exp(-dist_sq / (peak.width**2))
        if value > best:
            best = value
    return clamp01(best)


def simulate_reward(landscape: SyntheticLandscape, point: Point, rng: random.Random | None = None) -> float:
    """Reward with seeded observation noise drawn from the run's stream."""
    value = landscape_reward(landscape, point)
    if landscape.noise_scale > 0:
        if rng is None:
            raise ConfigurationError("a noisy landscape needs the run's rng stream")
        value += rng.gauss(0.0, landscape.noise_scale)
    return clamp01(value)


def pool_optimum(landscape: SyntheticLandscape) -> float:
    """Exhaustive noiseless maximum over the finite idea pool."""
    if not landscape.idea_pool:
        raise ConfigurationError("landscape has no idea pool to enumerate")
    return max(landscape_reward(landscape, idea.latent) for idea in landscape.idea_pool)


def _mean_norm_factor(dimension: int) -> float:
    """E[|N(0, I_d)|] so steps can be calibrated to a mean length."""
    return math.sqrt(2.0) * math.gamma((dimension + 1) / 2) / math.gamma(dimension / 2)


def _nearest_raw(value: float) -> int:
    return 1 + round(4 * clamp01(value))


def scripted_ideation_for_landscape(
    landscape: SyntheticLandscape,
    parent_latent: Point,
    rng: random.Random,
    sibling_latents: list[Point] | None = None,
) -> tuple[str, Point, SelfEvaluation]:
    """Propose a child latent plus a correlated self-evaluation.

    The Gaussian step is calibrated so its mean length equals
    ``step_scale``.  Expectation mixes the true child reward with noise by
    ``expectation_corr``; novelty grows with distance to the nearest
    sibling latent.  Raw 1..5 labels are the nearest grid points of the
    continuous estimates.
    """
    if len(parent_latent) != landscape.dimension:
        raise ConfigurationError("parent latent has wrong dimension")
    sigma = landscape.step_scale / _mean_norm_factor(landscape.dimension) if landscape.step_scale > 0 else 0.0
    child = tuple(c + rng.gauss(0.0, sigma) for c in parent_latent)

    true_reward = landscape_reward(landscape, child)
    estimate = landscape.expectation_corr * true_reward + (1.0 - landscape.expectation_corr) * 0.5
    if landscape.expectation_noise > 0:
        estimate += rng.gauss(0.0, landscape.expectation_noise)
    s_gain = clamp01(estimate)

    if sibling_latents:
        nearest = min(math.dist(child, s) for s in sibling_latents)
        s_novel = clamp01(nearest / (2.0 * landscape.step_scale)) if landscape.step_scale > 0 else 0.0
    else:
        s_novel = 1.0

    coords = ", ".join(f"{c:.4f}" for c in child)
    idea = f"Probe latent point ({coords})"
    evaluation = SelfEvaluation(
        feasibility_raw=5,
        expectation_raw=_nearest_raw(s_gain),
        novelty_raw=_nearest_raw(s_novel),
        s_gain=s_gain,
        s_novel=s_novel,
    )
    return idea, child, evaluation


def default_landscape(seed: int = 0, noise_scale: float = 0.0) -> SyntheticLandscape:
    """The acceptance landscape: three separated peaks, 0.95 global optimum.

    A strong decoy peak sits close to the root while the global peak lies
    far away in the opposite direction, beyond the reach of single steps,
    so a search that keeps drilling the first promising direction stalls
    at the decoy.  The idea pool is a grid plus the exact peak centers,
    making the pool optimum exactly 0.95.
    """
    peaks = [
        Peak(center=(0.0, 0.0), height=0.35, width=0.8),
        Peak(center=(-0.9, 0.75), height=0.7, width=0.55),
        Peak(center=(1.35, -1.1), height=0.95, width=0.6),
    ]
    pool: list[PoolIdea] = []
    index = 0
    for i in range(21):
        for j in range(21):
            latent = (-2.0 + 0.2 * i, -2.0 + 0.2 * j)
            pool.append(PoolIdea(text=f"grid idea {index}", latent=latent))
            index += 1
    for peak in peaks:
        pool.append(PoolIdea(text=f"peak idea {index}", latent=peak.center))
        index += 1
    landscape = SyntheticLandscape(
        dimension=2,
        peaks=peaks,
        idea_pool=pool,
        noise_scale=noise_scale,
        seed=seed,
        root_latent=(0.0, 0.0),
        step_scale=0.55,
        expectation_corr=0.9,
        expectation_noise=0.05,
    )
    landscape.validate()
    return landscape


def load_landscape(path: str | Path) -> SyntheticLandscape:
    """Load a landscape config from YAML/JSON; 'default: true' uses the built-in."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"landscape file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"landscape file {path} is not valid YAML/JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"landscape file {path} must hold a mapping")
    if data.get("default"):
        return default_landscape(
            seed=int(data.get("seed", 0)), noise_scale=float(data.get("noise_scale", 0.0))
        )
    if "idea_pool" not in data and "pool_grid" in data:
        grid = data.pop("pool_grid")
        low, high, per_axis = float(grid["min"]), float(grid["max"]), int(grid["per_axis"])
        step = (high - low) / (per_axis - 1)
        pool = []
        index = 0
        for i in range(per_axis):
            for j in range(per_axis):
                pool.append({"text": f"grid idea {index}", "latent": [low + step * i, low + step * j]})
                index += 1
        data["idea_pool"] = pool
    return SyntheticLandscape.from_dict(data)
