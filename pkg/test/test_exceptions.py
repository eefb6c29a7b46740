import pytest

from bridge_diffusion.src.common.exceptions import (
    AudioIOError,
    BridgeDiffusionError,
    DiffusionTimeError,
    NonFiniteStateError,
    ParameterError,
    ScoreEvaluationError,
    ShapeMismatchError,
    SignalError,
    SpecialFunctionDomainError,
    UnboundedMetricError,
    VerificationError,
)


class TestExceptions:
    @pytest.mark.parametrize(
        "exception_class, expected_message",
        [
            pytest.param(
                ParameterError, "Invalid process parameters", id="ParameterError",
            ),
            pytest.param(
                DiffusionTimeError,
                "Diffusion time outside the process domain",
                id="DiffusionTimeError",
            ),
            pytest.param(
                ShapeMismatchError,
                "Spectrogram dimensions do not match",
                id="ShapeMismatchError",
            ),
            pytest.param(
                SpecialFunctionDomainError,
                "Argument outside the special function domain",
                id="SpecialFunctionDomainError",
            ),
            pytest.param(
                NonFiniteStateError,
                "Simulated state became non-finite",
                id="NonFiniteStateError",
            ),
            pytest.param(
                ScoreEvaluationError,
                "Score function returned invalid values",
                id="ScoreEvaluationError",
            ),
            pytest.param(SignalError, "Invalid signal", id="SignalError"),
            pytest.param(
                AudioIOError,
                "Audio file could not be read or written",
                id="AudioIOError",
            ),
            pytest.param(
                UnboundedMetricError,
                "Metric is unbounded for identical signals",
                id="UnboundedMetricError",
            ),
            pytest.param(
                VerificationError, "Verification failed", id="VerificationError",
            ),
        ],
    )
    def test_valid_exception_message(self, exception_class, expected_message):
        assert exception_class().args[0] == expected_message

    @pytest.mark.parametrize(
        "exception_class, expected_exit_code",
        [
            pytest.param(BridgeDiffusionError, 1, id="BridgeDiffusionError"),
            pytest.param(ParameterError, 2, id="ParameterError"),
            pytest.param(DiffusionTimeError, 2, id="DiffusionTimeError"),
            pytest.param(NonFiniteStateError, 3, id="NonFiniteStateError"),
            pytest.param(ScoreEvaluationError, 3, id="ScoreEvaluationError"),
            pytest.param(AudioIOError, 4, id="AudioIOError"),
            pytest.param(VerificationError, 5, id="VerificationError"),
        ],
    )
    def test_valid_exit_code(self, exception_class, expected_exit_code):
        assert exception_class().exit_code == expected_exit_code

    def test_custom_message(self):
        assert SignalError("Signal too short").args[0] == "Signal too short"
