import pytest

from bridge_diffusion.src.common.logger_setup import build_logger_config, LOG_FORMAT


class TestLoggerSetup:
    def test_console_only_without_location(self):
        config = build_logger_config("DEBUG")

        assert list(config["handlers"]) == ["console"]
        assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"
        assert config["root"]["level"] == "DEBUG"
        assert config["formatters"]["default"]["format"] == LOG_FORMAT

    @pytest.mark.parametrize(
        "key, expected_value",
        [
            pytest.param("class", "logging.handlers.RotatingFileHandler", id="class"),
            pytest.param("filename", "/tmp/bridge.log", id="filename"),
            pytest.param("maxBytes", 5000000, id="size"),
            pytest.param("backupCount", 10, id="backups"),
        ],
    )
    def test_rotating_file_with_location(self, key, expected_value):
        config = build_logger_config("INFO", "/tmp/bridge.log")

        assert config["handlers"]["file"][key] == expected_value
        assert config["root"]["handlers"] == ["console", "file"]
