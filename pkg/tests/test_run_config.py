"""Tests for YAML run configuration and dotted overrides"""
import math

import pytest
from pydantic import ValidationError

from core.errors import ConfigError
from core.spectral_core import Band
from utils.run_config import RunConfig, apply_overrides, load_config, parse_override_value


class TestDefaults:
    def test_defaults_validate(self):
        config = load_config()
        assert config.integrator.method == "imex"
        assert config.build_band() == Band(2, 2)
        assert math.isclose(config.params.kappa, math.sqrt(3.0))
        assert math.isclose(config.params.nu, 1.0 / 12.0)

    def test_scaled_band_ties_to_epsilon(self):
        config = load_config(None, ["band.eps_scaling=true", "band.gamma=1.0"])
        assert config.build_band(0.1) == Band(10, 10)
        assert config.build_band() == Band(5, 5)

    def test_kinetic_params_follow_epsilon(self):
        params = load_config().kinetic_params(0.05)
        assert params.epsilon == 0.05
        assert params.relaxation_rate == pytest.approx(400.0)


class TestYaml:
    def test_load_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            "params:\n  epsilon: 0.1\n"
            "initial:\n  preset: modes\n  modes:\n"
            "    - {component: u1, n: [0, 1, 0], amplitude: [0.0, -0.05]}\n",
            encoding="utf-8",
        )
        config = load_config(path)
        assert config.params.epsilon == 0.1
        assert config.initial.modes[0].complex_amplitude == complex(0.0, -0.05)

    def test_override_beats_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("params:\n  epsilon: 0.1\n", encoding="utf-8")
        assert load_config(path, ["params.epsilon=0.3"]).params.epsilon == 0.3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read configuration"):
            load_config(tmp_path / "absent.yaml")

    def test_non_mapping_root(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="must be a mapping"):
            load_config(path)


class TestValidation:
    @pytest.mark.parametrize("override", [
        "params.epsilon=0",
        "band.n_v=1",
        "integrator.method=euler",
        "integrator.t_end=1e-5",
        "study.eps_list=0.1,0.2",
        "study.eps_list=0.4",
        "initial.preset=modes",
        "params.unknown=1",
    ])
    def test_invalid_values_raise_config_error(self, override):
        with pytest.raises(ConfigError, match="Invalid run configuration"):
            load_config(None, [override])

    def test_config_is_frozen(self):
        config = load_config()
        with pytest.raises(ValidationError):
            config.params.epsilon = 0.5

    def test_with_overrides_revalidates(self):
        config = load_config()
        updated = config.with_overrides(["study.eps_list=0.2,0.1"])
        assert updated.study.eps_list == (0.2, 0.1)
        assert config.study.eps_list != updated.study.eps_list
        assert isinstance(updated, RunConfig)


class TestOverrides:
    @pytest.mark.parametrize("raw, expected", [
        ("true", True),
        ("None", None),
        ("3", 3),
        ("2.5e-3", 2.5e-3),
        ("0.4,0.2", [0.4, 0.2]),
        ("'quoted'", "quoted"),
        ("rk4", "rk4"),
    ])
    def test_value_parsing(self, raw, expected):
        assert parse_override_value(raw) == expected

    def test_creates_nested_sections(self):
        assert apply_overrides({}, ["a.b.c=1"]) == {"a": {"b": {"c": 1}}}

    @pytest.mark.parametrize("override", ["no_equals_sign", "=3"])
    def test_malformed_override(self, override):
        with pytest.raises(ConfigError, match="Invalid override"):
            apply_overrides({}, [override])

    def test_cannot_traverse_scalar(self):
        with pytest.raises(ConfigError, match="non-mapping"):
            apply_overrides({"a": 1}, ["a.b.c=2"])
