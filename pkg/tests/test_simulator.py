"""Synthetic landscape: reward field, scripted ideation, pool oracle."""

import math
import random

import pytest

from vpsearch.errors import ConfigurationError
from vpsearch.simulator import (
    Peak,
    PoolIdea,
    SyntheticLandscape,
    default_landscape,
    landscape_reward,
    load_landscape,
    pool_optimum,
    scripted_ideation_for_landscape,
    simulate_reward,
)


def flat_landscape(**overrides):
    params = dict(
        dimension=2,
        peaks=[Peak((0.0, 0.0), 0.95, 0.5)],
        idea_pool=[PoolIdea("center", (0.0, 0.0))],
        noise_scale=0.0,
        seed=0,
        root_latent=(0.0, 0.0),
        step_scale=0.4,
        expectation_corr=1.0,
        expectation_noise=0.0,
    )
    params.update(overrides)
    return SyntheticLandscape(**params)


class TestRewardField:
    def test_peak_center_hits_height_noiselessly(self):
        land = flat_landscape()
        assert simulate_reward(land, (0.0, 0.0)) == 0.95

    def test_gaussian_decay_far_point(self):
        land = flat_landscape()
        # at 10 widths the value underflows toward zero
        value = landscape_reward(land, (5.0, 0.0))
        assert value < 1e-40

    def test_max_over_peaks(self):
        land = flat_landscape(
            peaks=[Peak((0.0, 0.0), 0.3, 0.5), Peak((1.0, 0.0), 0.9, 0.5)]
        )
        assert landscape_reward(land, (1.0, 0.0)) == 0.9
        mid = landscape_reward(land, (0.5, 0.0))
        assert 0.3 < mid < 0.9

    def test_noise_stream_is_deterministic(self):
        land = flat_landscape(noise_scale=0.1)
        def draw():
            rng = random.Random(42)
            return [simulate_reward(land, (0.3, 0.1), rng) for _ in range(5)]
        assert draw() == draw()

    def test_noisy_reward_requires_stream(self):
        land = flat_landscape(noise_scale=0.1)
        with pytest.raises(ConfigurationError):
            simulate_reward(land, (0.0, 0.0))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            landscape_reward(flat_landscape(), (0.0, 0.0, 0.0))


class TestScriptedIdeation:
    def test_zero_step_returns_parent_latent(self):
        land = flat_landscape(step_scale=0.0)
        idea, latent, evaluation = scripted_ideation_for_landscape(land, (0.25, -0.5), random.Random(1))
        assert latent == (0.25, -0.5)
        assert idea

    def test_perfect_signal_equals_true_reward(self):
        land = flat_landscape(expectation_corr=1.0, expectation_noise=0.0)
        rng = random.Random(3)
        for _ in range(20):
            _, latent, evaluation = scripted_ideation_for_landscape(land, (0.1, 0.1), rng)
            assert evaluation.s_gain == pytest.approx(simulate_reward(land, latent), abs=1e-12)

    def test_mean_step_length_within_ten_percent(self):
        land = flat_landscape(step_scale=0.4)
        rng = random.Random(7)
        lengths = []
        for _ in range(1000):
            _, latent, _ = scripted_ideation_for_landscape(land, (0.0, 0.0), rng)
            lengths.append(math.hypot(*latent))
        mean = sum(lengths) / len(lengths)
        assert abs(mean - 0.4) / 0.4 < 0.1

    def test_novelty_is_one_without_siblings(self):
        land = flat_landscape()
        _, _, evaluation = scripted_ideation_for_landscape(land, (0.0, 0.0), random.Random(5))
        assert evaluation.s_novel == 1.0

    def test_novelty_shrinks_near_siblings(self):
        land = flat_landscape()
        rng = random.Random(9)
        _, latent, _ = scripted_ideation_for_landscape(land, (0.0, 0.0), rng)
        rng2 = random.Random(9)
        _, _, evaluation = scripted_ideation_for_landscape(land, (0.0, 0.0), rng2, sibling_latents=[latent])
        assert evaluation.s_novel == 0.0  # identical proposal

    def test_feasibility_always_max(self):
        land = flat_landscape()
        _, _, evaluation = scripted_ideation_for_landscape(land, (0.0, 0.0), random.Random(11))
        assert evaluation.feasibility_raw == 5


class TestPoolOracle:
    def test_default_landscape_pool_optimum_exact(self):
        land = default_landscape()
        assert pool_optimum(land) == 0.95

    def test_enumeration_matches_manual_max(self):
        land = flat_landscape(
            idea_pool=[PoolIdea("a", (0.0, 0.0)), PoolIdea("b", (2.0, 2.0)), PoolIdea("c", (0.1, 0.0))]
        )
        manual = max(landscape_reward(land, p.latent) for p in land.idea_pool)
        assert pool_optimum(land) == manual

    def test_empty_pool_rejected(self):
        with pytest.raises(ConfigurationError):
            pool_optimum(flat_landscape(idea_pool=[]))


class TestLoadLandscape:
    def test_default_flag(self, tmp_path):
        path = tmp_path / "land.yaml"
        path.write_text("default: true\nseed: 4\n")
        land = load_landscape(path)
        assert land.seed == 4
        assert pool_optimum(land) == 0.95

    def test_explicit_config_with_grid_pool(self, tmp_path):
        path = tmp_path / "land.yaml"
        path.write_text(
            "dimension: 2\n"
            "root_latent: [0.0, 0.0]\n"
            "step_scale: 0.3\n"
            "peaks:\n"
            "  - {center: [0.0, 0.0], height: 0.5, width: 0.5}\n"
            "pool_grid: {min: -1.0, max: 1.0, per_axis: 5}\n"
        )
        land = load_landscape(path)
        assert len(land.idea_pool) == 25
        assert land.peaks[0].height == 0.5

    def test_invalid_heights_rejected(self, tmp_path):
        path = tmp_path / "land.yaml"
        path.write_text(
            "dimension: 2\nroot_latent: [0, 0]\n"
            "peaks: [{center: [0, 0], height: 1.5, width: 0.5}]\n"
            "idea_pool: [{text: a, latent: [0, 0]}]\n"
        )
        with pytest.raises(ConfigurationError):
            load_landscape(path)

    def test_roundtrip_to_dict(self):
        land = default_landscape()
        clone = SyntheticLandscape.from_dict(land.to_dict())
        assert clone.to_dict() == land.to_dict()
