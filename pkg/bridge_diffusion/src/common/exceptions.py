class BridgeDiffusionError(Exception):
    exit_code = 1


class ParameterError(BridgeDiffusionError):
    def __init__(self, msg="Invalid process parameters", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class DiffusionTimeError(BridgeDiffusionError):
    def __init__(
        self, msg="Diffusion time outside the process domain", *args, **kwargs,
    ):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class ShapeMismatchError(BridgeDiffusionError):
    def __init__(self, msg="Spectrogram dimensions do not match", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class SpecialFunctionDomainError(BridgeDiffusionError):
    def __init__(
        self, msg="Argument outside the special function domain", *args, **kwargs,
    ):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class NonFiniteStateError(BridgeDiffusionError):
    def __init__(self, msg="Simulated state became non-finite", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 3


class ScoreEvaluationError(BridgeDiffusionError):
    def __init__(self, msg="Score function returned invalid values", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 3


class SignalError(BridgeDiffusionError):
    def __init__(self, msg="Invalid signal", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class AudioIOError(BridgeDiffusionError):
    def __init__(self, msg="Audio file could not be read or written", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 4


class UnboundedMetricError(BridgeDiffusionError):
    def __init__(
        self, msg="Metric is unbounded for identical signals", *args, **kwargs,
    ):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 2


class VerificationError(BridgeDiffusionError):
    def __init__(self, msg="Verification failed", *args, **kwargs):
        super().__init__(msg, *args, **kwargs)
        self.exit_code = 5
