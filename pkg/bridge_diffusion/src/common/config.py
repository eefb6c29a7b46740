import json
import logging
import math
import os
from pathlib import Path
import sys
from typing import Optional, Tuple, Union

from pydantic import (
    BaseModel,
    Field,
    parse_obj_as,
    root_validator,
    StrictBool,
    StrictInt,
    StrictStr,
    ValidationError,
    validator,
)
from typing_extensions import Annotated, Literal

from bridge_diffusion.src.common.constants import Constants

log = logging.getLogger()


def validate_finite_nonnegative(value):
    """
    Checks that a scale parameter is a finite number that is not negative. Zero is
    accepted so the diffusionless limit of a process can be configured.

    :param value: The value of the config field
    """
    if not value >= 0 or value == float("inf"):
        raise ValueError("must be a finite number >= 0")
    return value


class OuveParams(BaseModel):
    """
    Ornstein-Uhlenbeck drift with a variance exploding diffusion coefficient. The
    diffusion coefficient uses the `g(t) = sqrt(c) * k**t` parameterisation.
    """

    variant: Literal["ouve"] = "ouve"
    gamma: float
    c: float
    k: float
    T: float

    _validate_c = validator("c", allow_reuse=True)(validate_finite_nonnegative)

    @validator("gamma")
    def validate_gamma(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("stiffness must be a finite number > 0")
        return value

    @validator("k")
    def validate_k(cls, value):  # noqa: B902, N805
        if not 1 < value < float("inf"):
            raise ValueError("diffusion base must be a finite number > 1")
        return value

    @validator("T")
    def validate_end_time(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("final diffusion time must be a finite number > 0")
        return value

    @root_validator(skip_on_failure=True)
    def validate_variance_denominator(cls, values):  # noqa: B902, N805
        """
        The closed-form variance divides by `gamma + ln(k)`, so this sum must be
        strictly positive.
        """
        if values["gamma"] + math.log(values["k"]) <= 0:
            raise ValueError("gamma + ln(k) must be > 0")
        return values

    @classmethod
    def from_sigma_range(cls, sigma_min, sigma_max, gamma, T):  # noqa: N803
        """
        Builds the parameters from the original `sigma_min (sigma_max /
        sigma_min)**t sqrt(2 ln(sigma_max / sigma_min))` diffusion coefficient.

        :param sigma_min: Smallest noise level, must be > 0
        :param sigma_max: Largest noise level, must be > `sigma_min`
        :param gamma: Stiffness of the drift
        :param T: Final diffusion time
        :return: The equivalent :class:`OuveParams`
        """
        if not 0 < sigma_min < sigma_max:
            raise ValueError("sigma range must satisfy 0 < sigma_min < sigma_max")
        k = sigma_max / sigma_min
        c = 2 * sigma_min ** 2 * math.log(k)
        return cls(gamma=gamma, c=c, k=k, T=T)

    class Config:
        frozen = True


class BbedParams(BaseModel):
    """
    Brownian bridge drift `(y - x) / (1 - t)` with the exponential diffusion
    coefficient `g(t) = sqrt(c) * k**t`. `k == 1` gives the classical Brownian bridge
    with constant diffusion.
    """

    variant: Literal["bbed"] = "bbed"
    c: float
    k: float
    T: float

    _validate_c = validator("c", allow_reuse=True)(validate_finite_nonnegative)

    @validator("k")
    def validate_k(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("diffusion base must be a finite number > 0")
        return value

    @validator("T")
    def validate_end_time(cls, value):  # noqa: B902, N805
        # The drift divides by 1 - t
        if not 0 < value < 1:
            raise ValueError("final diffusion time must satisfy 0 < T < 1")
        return value

    class Config:
        frozen = True


ProcessParams = Annotated[
    Union[OuveParams, BbedParams], Field(discriminator="variant"),
]


def parse_process_params(data):
    """
    Parses a mapping with the keys `variant, gamma, c, k, T` into the matching
    parameter model

    :param data: Mapping holding the process parameters
    :type data: :class:`dict`
    :return: :class:`OuveParams` or :class:`BbedParams`
    :raises ValidationError: If the parameters are not valid for the variant
    """
    return parse_obj_as(ProcessParams, data)


class StftConfig(BaseModel):
    window_size: StrictInt = 510
    hop: StrictInt = 128
    window: Literal["hann"] = "hann"

    @property
    def freq_bins(self):
        return self.window_size // 2 + 1

    @validator("hop")
    def validate_hop(cls, value, values):  # noqa: B902, N805
        if value <= 0:
            raise ValueError("hop must be > 0")
        if "window_size" in values and value >= values["window_size"]:
            raise ValueError("hop must be smaller than window_size")
        return value

    @validator("window_size")
    def validate_window_size(cls, value):  # noqa: B902, N805
        if value < 2:
            raise ValueError("window_size must be >= 2")
        return value

    class Config:
        frozen = True


class CompressionParams(BaseModel):
    beta: float = 0.15
    alpha: float = 0.5

    @validator("beta")
    def validate_beta(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("beta must be a finite number > 0")
        return value

    @validator("alpha")
    def validate_alpha(cls, value):  # noqa: B902, N805
        if not 0 < value <= 1:
            raise ValueError("alpha must satisfy 0 < alpha <= 1")
        return value

    class Config:
        frozen = True


class ReverseConfig(BaseModel):
    """
    Settings of the predictor-corrector sampler. The step size `h = T /
    n_steps_full` does not depend on `t_rs`; starting earlier only executes fewer
    iterations. `t_rs` of `None` means the reverse process starts at `T`.
    """

    t_rs: Optional[float]
    n_steps_full: StrictInt = 30
    ald_r: float = 0.5
    corrector_steps_per_predictor: StrictInt = 1
    seed: StrictInt = 0
    denoise_final: StrictBool = True

    @validator("t_rs")
    def validate_t_rs(cls, value):  # noqa: B902, N805
        if value is not None and not value > 0:
            raise ValueError("reverse starting time must be > 0")
        return value

    @validator("n_steps_full")
    def validate_n_steps_full(cls, value):  # noqa: B902, N805
        if value <= 0:
            raise ValueError("n_steps_full must be > 0")
        return value

    @validator("ald_r")
    def validate_ald_r(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("ald_r must be a finite number > 0")
        return value

    @validator("corrector_steps_per_predictor")
    def validate_corrector_steps(cls, value):  # noqa: B902, N805
        if value < 0:
            raise ValueError("corrector_steps_per_predictor must be >= 0")
        return value

    @validator("seed")
    def validate_seed(cls, value):  # noqa: B902, N805
        if value < 0:
            raise ValueError("seed must be an unsigned integer")
        return value

    class Config:
        frozen = True


class SyntheticConfig(BaseModel):
    n_mixtures: StrictInt = 10
    duration_s: float = 2.0
    sample_rate: StrictInt = Constants.SAMPLE_RATE
    snr_range_db: Tuple[float, float] = (0.0, 20.0)

    @validator("n_mixtures")
    def validate_n_mixtures(cls, value):  # noqa: B902, N805
        if value <= 0:
            raise ValueError("n_mixtures must be > 0")
        return value

    @validator("snr_range_db")
    def validate_snr_range(cls, value):  # noqa: B902, N805
        if value[0] > value[1]:
            raise ValueError("snr range must be ordered (low, high)")
        return value


class SessionConfig(BaseModel):
    """
    Configuration model class for a run of any subcommand. It is validated when
    loaded so that an inconsistent configuration is rejected before any simulation
    starts. The resolved configuration is echoed next to the outputs of every run so
    that loading the echo reproduces the run.
    """

    process: ProcessParams
    stft: StftConfig = StftConfig()
    compression: CompressionParams = CompressionParams()
    reverse: ReverseConfig = ReverseConfig()
    synthetic: SyntheticConfig = SyntheticConfig()
    seed: StrictInt = 0
    out_dir: StrictStr = "out"
    log_level: StrictStr = "INFO"
    log_location: Optional[StrictStr]
    n_paths: StrictInt = 10000
    n_em_steps: StrictInt = 2000
    n_grid: StrictInt = 1000

    @validator("seed")
    def validate_seed(cls, value):  # noqa: B902, N805
        if value < 0:
            raise ValueError("seed must be an unsigned integer")
        return value

    @validator("n_paths", "n_em_steps", "n_grid")
    def validate_positive_count(cls, value):  # noqa: B902, N805
        if value <= 0:
            raise ValueError("must be > 0")
        return value

    @validator("reverse")
    def validate_reverse_start(cls, value, values):  # noqa: B902, N805
        """
        The reverse starting time cannot lie after the final diffusion time of the
        configured process.

        :param cls: :class:`SessionConfig` pointer
        :param value: The value of the given config field
        :param values: The config field values loaded before the given config field
        """
        process = values.get("process")
        if process is not None and value.t_rs is not None and value.t_rs > process.T:
            raise ValueError(
                f"reverse starting time {value.t_rs} exceeds T = {process.T}",
            )
        return value

    @classmethod
    def load(cls, path):
        """
        Loads the config data from a JSON file and returns it as a SessionConfig
        pydantic model. Exits the application if it fails to locate the JSON config
        file or the SessionConfig model validation fails.

        :param cls: :class:`SessionConfig` pointer
        :param path: path to the configuration file
        :return: SessionConfig model object that contains the config data
        """
        try:
            with open(path, encoding="utf-8") as target:
                data = json.load(target)
                return cls(**data)
        except (IOError, ValueError, ValidationError) as error:
            sys.exit(f"An error occurred while trying to load the config data: {error}")

    @classmethod
    def from_preset(cls, name, **overrides):
        """
        Creates a session configuration from one of the named parameterisations

        :param name: Preset name, e.g. `bbed-paper`
        :type name: :class:`str`
        :return: SessionConfig model object for the preset
        :raises ValueError: If the preset does not exist
        """
        try:
            process = Constants.PRESETS[name]
        except KeyError:
            raise ValueError(
                f"Unknown preset '{name}', choose from {sorted(Constants.PRESETS)}",
            )
        return cls(process=dict(process), **overrides)

    def resolve_out_dir(self):
        """
        The output directory is the only setting that can be overridden through the
        environment
        """
        return Path(os.environ.get(Constants.OUT_DIR_ENV_VAR, self.out_dir))

    def write(self, path):
        with open(path, "w", encoding="utf-8") as target:
            target.write(self.json(indent=2, sort_keys=True))
        log.info("Resolved config written to %s", path)
