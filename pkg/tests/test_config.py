"""
Tests for the pipeline configuration loader.
"""

import pytest

from evtrack.config import PipelineConfig, load_config, parse_config
from evtrack.exceptions import ConfigError
from evtrack.sync import WindowPolicy


class TestDefaults:
    """Test the defaults table."""

    def test_values(self):
        config = PipelineConfig()
        assert config.surface.tau_us == 50_000.0
        assert (config.detection.threshold, config.detection.min_area, config.detection.connectivity) == (0.35, 15, 8)
        assert (config.tracker.iou_threshold, config.tracker.max_age, config.tracker.min_hits) == (0.3, 5, 3)
        assert config.tracker.measurement_noise == (1.0, 1.0, 10.0, 1e-2)
        assert config.sync.build() == WindowPolicy()
        assert config.seed == 0

    def test_no_file(self):
        assert load_config(None) == PipelineConfig()

    def test_builds(self):
        params = PipelineConfig().tracker.build()
        assert params.noise.velocity_var == 1000.0
        assert params.emit_tentative is False


class TestParse:
    """Test YAML overlay and validation."""

    def test_overlay(self, tmp_path):
        path = tmp_path / "evtrack.yaml"
        path.write_text(
            "surface: {tau_us: 20000}\n"
            "detection: {min_area: 10}\n"
            "tracker:\n"
            "  max_age: 8\n"
            "  measurement_noise: [2, 2, 20, 0.1]\n"
            "sync: {window: half_open, window_us: 5000}\n"
            "scene: fish3\n"
            "seed: 7\n"
        )
        config = load_config(path)
        assert config.surface.tau_us == 20_000.0
        assert isinstance(config.surface.tau_us, float)
        assert config.detection.min_area == 10
        assert config.detection.threshold == 0.35
        assert config.tracker.max_age == 8
        assert config.tracker.min_hits == 3
        assert config.tracker.measurement_noise == (2.0, 2.0, 20.0, 0.1)
        assert config.sync.build() == WindowPolicy('half_open', 5000)
        assert (config.scene, config.seed) == ("fish3", 7)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path) == PipelineConfig()

    def test_null_values_skipped(self):
        assert parse_config({"tracker": None, "seed": None}) == PipelineConfig()

    def test_base_is_kept(self):
        base = parse_config({"seed": 3})
        assert parse_config({"surface": {"tau_us": 1000}}, base).seed == 3

    @pytest.mark.parametrize("data", [
        {"kalman": {"q": 1}},
        {"tracker": {"max_ages": 3}},
        {"tracker": [1, 2]},
        ["surface"],
    ])
    def test_unknown_or_misshapen(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    @pytest.mark.parametrize("data", [
        {"tracker": {"max_age": 2.5}},
        {"tracker": {"max_age": True}},
        {"tracker": {"emit_tentative": "yes"}},
        {"tracker": {"measurement_noise": [1, 2]}},
        {"surface": {"tau_us": "fast"}},
        {"sync": {"window_us": "5ms"}},
        {"seed": "zero"},
        {"scene": 3},
    ])
    def test_bad_types(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    @pytest.mark.parametrize("data", [
        {"surface": {"tau_us": 0}},
        {"detection": {"threshold": 1.5}},
        {"detection": {"connectivity": 6}},
        {"tracker": {"iou_threshold": -0.1}},
        {"tracker": {"min_hits": 0}},
        {"sync": {"window": "half_open"}},
        {"sync": {"window": "sliding"}},
    ])
    def test_out_of_range(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("tracker: [\n")
        with pytest.raises(ConfigError):
            load_config(path)
