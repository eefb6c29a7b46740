import json
import math
from unittest.mock import mock_open, patch

from pydantic import ValidationError
import pytest

from bridge_diffusion.src.common.config import (
    BbedParams,
    CompressionParams,
    OuveParams,
    parse_process_params,
    ReverseConfig,
    SessionConfig,
    StftConfig,
    validate_finite_nonnegative,
)
from bridge_diffusion.src.common.constants import Constants


class TestSessionConfig:
    def test_load_with_valid_config_data(self, session_config):
        assert session_config.process.variant == "bbed"
        assert session_config.process.k == 2.6

    def test_load_with_no_config_data(self):
        with patch("builtins.open", mock_open(read_data="{}")):
            with pytest.raises(SystemExit):
                SessionConfig.load("test/path")

    def test_load_with_invalid_json(self):
        with patch("builtins.open", mock_open(read_data="{process:")):
            with pytest.raises(SystemExit):
                SessionConfig.load("test/path")

    def test_load_with_unknown_variant(self, session_config_data):
        session_config_data["process"]["variant"] = "vp"
        with patch(
            "builtins.open", mock_open(read_data=json.dumps(session_config_data)),
        ):
            with pytest.raises(SystemExit):
                SessionConfig.load("test/path")

    def test_load_with_reverse_start_after_end_time(self, session_config_data):
        session_config_data["reverse"]["t_rs"] = 1.0
        with patch(
            "builtins.open", mock_open(read_data=json.dumps(session_config_data)),
        ):
            with pytest.raises(SystemExit):
                SessionConfig.load("test/path")

    @pytest.mark.parametrize(
        "field", [pytest.param("n_paths"), pytest.param("n_em_steps")],
    )
    def test_load_with_nonpositive_count(self, session_config_data, field):
        session_config_data[field] = 0
        with patch(
            "builtins.open", mock_open(read_data=json.dumps(session_config_data)),
        ):
            with pytest.raises(SystemExit):
                SessionConfig.load("test/path")

    @pytest.mark.parametrize(
        "preset, expected_process",
        [
            pytest.param(
                "ouve-paper",
                OuveParams(gamma=1.5, c=0.01, k=10.0, T=1.0),
                id="Ornstein-Uhlenbeck preset",
            ),
            pytest.param(
                "bbed-paper",
                BbedParams(c=0.51, k=2.6, T=0.999),
                id="Bridge preset",
            ),
        ],
    )
    def test_from_preset(self, preset, expected_process):
        assert SessionConfig.from_preset(preset).process == expected_process

    def test_from_unknown_preset(self):
        with pytest.raises(ValueError):
            SessionConfig.from_preset("sgmse")

    def test_resolve_out_dir_from_environment(self, session_config, monkeypatch):
        monkeypatch.setenv(Constants.OUT_DIR_ENV_VAR, "/tmp/elsewhere")
        assert str(session_config.resolve_out_dir()) == "/tmp/elsewhere"

    def test_resolve_out_dir_from_config(self, session_config, monkeypatch):
        monkeypatch.delenv(Constants.OUT_DIR_ENV_VAR, raising=False)
        assert str(session_config.resolve_out_dir()) == "out"

    def test_written_config_loads_to_same_session(self, session_config, tmp_path):
        path = tmp_path / Constants.RESOLVED_CONFIG_FILE_NAME
        session_config.write(path)

        assert SessionConfig.load(path) == session_config


class TestProcessParams:
    @pytest.mark.parametrize(
        "data, expected_type",
        [
            pytest.param(
                {"variant": "ouve", "gamma": 1.5, "c": 0.01, "k": 10, "T": 1},
                OuveParams,
                id="Ornstein-Uhlenbeck",
            ),
            pytest.param(
                {"variant": "bbed", "c": 0.51, "k": 2.6, "T": 0.999},
                BbedParams,
                id="Bridge",
            ),
        ],
    )
    def test_parse_by_variant(self, data, expected_type):
        assert isinstance(parse_process_params(data), expected_type)

    @pytest.mark.parametrize(
        "data",
        [
            pytest.param(
                {"variant": "ouve", "gamma": 0, "c": 0.01, "k": 10, "T": 1},
                id="Zero stiffness",
            ),
            pytest.param(
                {"variant": "ouve", "gamma": 1.5, "c": 0.01, "k": 1, "T": 1},
                id="Unit base without growth",
            ),
            pytest.param(
                {"variant": "ouve", "gamma": 1.5, "c": -1, "k": 10, "T": 1},
                id="Negative scale",
            ),
            pytest.param(
                {"variant": "bbed", "c": 0.51, "k": 2.6, "T": 1.0},
                id="Bridge ending at one",
            ),
            pytest.param(
                {"variant": "bbed", "c": 0.51, "k": 0, "T": 0.999},
                id="Bridge with zero base",
            ),
            pytest.param(
                {"variant": "bbed", "c": float("inf"), "k": 2.6, "T": 0.999},
                id="Infinite scale",
            ),
        ],
    )
    def test_invalid_parameters(self, data):
        with pytest.raises(ValidationError):
            parse_process_params(data)

    def test_params_are_immutable(self):
        params = BbedParams(c=0.51, k=2.6, T=0.999)
        with pytest.raises(TypeError):
            params.c = 1.0

    def test_from_sigma_range(self):
        params = OuveParams.from_sigma_range(0.05, 0.5, gamma=1.5, T=1.0)

        assert params.k == pytest.approx(10.0)
        assert params.c == pytest.approx(2 * 0.05 ** 2 * math.log(10))

    def test_from_sigma_range_unordered(self):
        with pytest.raises(ValueError):
            OuveParams.from_sigma_range(0.5, 0.05, gamma=1.5, T=1.0)

    @pytest.mark.parametrize(
        "value", [pytest.param(0.0, id="Zero"), pytest.param(2.5, id="Positive")],
    )
    def test_valid_scale(self, value):
        assert validate_finite_nonnegative(value) == value

    @pytest.mark.parametrize(
        "value",
        [
            pytest.param(-0.1, id="Negative"),
            pytest.param(float("nan"), id="NaN"),
            pytest.param(float("inf"), id="Infinite"),
        ],
    )
    def test_invalid_scale(self, value):
        with pytest.raises(ValueError):
            validate_finite_nonnegative(value)


class TestSignalConfigs:
    def test_default_frequency_bins(self):
        assert StftConfig().freq_bins == 256

    def test_hop_not_smaller_than_window(self):
        with pytest.raises(ValidationError):
            StftConfig(window_size=256, hop=256)

    @pytest.mark.parametrize(
        "data",
        [
            pytest.param({"beta": 0}, id="Zero beta"),
            pytest.param({"alpha": 0}, id="Zero alpha"),
            pytest.param({"alpha": 1.5}, id="Expanding alpha"),
        ],
    )
    def test_invalid_compression(self, data):
        with pytest.raises(ValidationError):
            CompressionParams(**data)

    @pytest.mark.parametrize(
        "data",
        [
            pytest.param({"t_rs": 0}, id="Zero reverse start"),
            pytest.param({"n_steps_full": 0}, id="No steps"),
            pytest.param({"ald_r": 0}, id="Zero corrector ratio"),
            pytest.param({"corrector_steps_per_predictor": -1}, id="Negative steps"),
        ],
    )
    def test_invalid_reverse_config(self, data):
        with pytest.raises(ValidationError):
            ReverseConfig(**data)
