"""
Tests for configuration models and environment settings.
"""

import pytest
from pydantic import ValidationError

from src.config import Settings
from src.models.config_models import (
    AlgorithmSpec,
    EngineConfig,
    ExperimentConfig,
    RankingConfig,
    RandomSearchConfig,
)


class TestEngineConfig:
    """Test cases for EngineConfig."""

    def test_defaults(self):
        """Test the published protocol defaults."""
        config = EngineConfig()
        assert config.population_size == 32
        assert config.truncation == 25.0
        assert config.resample_probability == 0.2
        assert config.ranking.kind == "nds_greedy"
        assert config.ranking.parego_rho == 0.05
        assert config.ranking.n_weights == 100

    @pytest.mark.parametrize("field, value", [
        ("population_size", 3),
        ("truncation", 0.0),
        ("truncation", 50.5),
        ("resample_probability", 1.5),
        ("mode", "eventual"),
    ])
    def test_rejects_invalid(self, field, value):
        """Test boundary violations."""
        with pytest.raises(ValidationError):
            EngineConfig(**{field: value})

    def test_schedule(self):
        """Test schedule defaults and explicit values."""
        assert EngineConfig().schedule(steps_per_epoch=5) == (10, 500)
        assert EngineConfig(ready_interval=4, total_steps=8).schedule(1) == (4, 8)
        with pytest.raises(ValueError):
            EngineConfig(ready_interval=4, total_steps=2, mode="asynchronous").schedule(1)


class TestRankingConfig:
    """Test cases for RankingConfig labels and validation."""

    def test_labels(self):
        """Test the generated labels."""
        assert RankingConfig().label() == "nds_greedy"
        assert RankingConfig(kind="scalarized", weight_mode="max", scalarizer="golovin").label() == "max-golovin"
        assert RankingConfig(kind="single_objective", objective_index=1).label() == "so-f2"

    def test_objective_index_against_task(self):
        """Test that a missing objective is rejected."""
        with pytest.raises(ValueError):
            RankingConfig(kind="single_objective", objective_index=2).validate_for(2)
        RankingConfig(kind="single_objective", objective_index=1).validate_for(2)

    def test_unknown_scalarizer(self):
        """Test that only the four scalarizers are accepted."""
        with pytest.raises(ValidationError):
            RankingConfig(kind="scalarized", scalarizer="hypervolume")


class TestExperimentConfig:
    """Test cases for experiment specs."""

    def test_algorithm_config_validated_eagerly(self):
        """Test that a bad nested config fails at parse time."""
        with pytest.raises(ValidationError):
            AlgorithmSpec(kind="pbt", config={"population_size": 2})

    def test_build_config_overrides(self):
        """Test that None overrides are ignored."""
        spec = AlgorithmSpec(kind="random_search", config={"n_trials": 5})
        config = spec.build_config(seed=3, workers=None)
        assert isinstance(config, RandomSearchConfig)
        assert (config.n_trials, config.seed, config.workers) == (5, 3, None)

    def test_resolved_labels(self):
        """Test default labels per kind."""
        assert AlgorithmSpec(kind="pbt").resolved_label() == "pbt-nds_greedy"
        assert AlgorithmSpec(kind="random_search").resolved_label() == "random_search"
        assert AlgorithmSpec(kind="nsga2", label="nsga").resolved_label() == "nsga"

    def test_duplicate_labels(self):
        """Test that two algorithms may not share a label."""
        with pytest.raises(ValidationError, match="unique"):
            ExperimentConfig(algorithms=[{"kind": "pbt"}, {"kind": "pbt"}])

    def test_needs_an_algorithm(self):
        """Test the empty algorithm list."""
        with pytest.raises(ValidationError):
            ExperimentConfig(algorithms=[])

    def test_json_round_trip(self):
        """Test parsing from JSON text."""
        config = ExperimentConfig.model_validate_json(
            '{"task": {"name": "zdt1-noisy", "params": {"n_vars": 3}},'
            ' "algorithms": [{"kind": "mo_asha", "n_seeds": 2, "config": {"eta": 3}}], "seed": 7}'
        )
        assert config.task.params == {"n_vars": 3}
        assert config.algorithms[0].build_config().eta == 3
        assert config.reference_rho == 0.1
        assert config.coverage_sectors == 360


class TestSettings:
    """Test cases for environment settings."""

    def test_environment_overrides(self, monkeypatch):
        """Test MOPBT_ variables."""
        monkeypatch.setenv("MOPBT_WORKERS", "8")
        monkeypatch.setenv("MOPBT_LOG_LEVEL", "debug")
        settings = Settings()
        assert settings.workers == 8
        assert settings.log_level == "DEBUG"

    def test_invalid_values(self, monkeypatch):
        """Test that a zero worker count and unknown formats are rejected."""
        monkeypatch.setenv("MOPBT_WORKERS", "0")
        with pytest.raises(ValidationError):
            Settings()
        monkeypatch.setenv("MOPBT_WORKERS", "2")
        monkeypatch.setenv("MOPBT_LOG_FORMAT", "xml")
        with pytest.raises(ValidationError):
            Settings()
