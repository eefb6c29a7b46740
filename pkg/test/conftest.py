import json
from unittest.mock import mock_open, patch

import numpy as np
import pytest

from bridge_diffusion.src.audio.buffer import AudioBuffer
from bridge_diffusion.src.common.config import (
    CompressionParams,
    SessionConfig,
    StftConfig,
)
from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.sde.processes import create_process
from bridge_diffusion.src.sde.sampling import complex_normal


@pytest.fixture()
def session_config_data():
    return {
        "process": {"variant": "bbed", "c": 0.51, "k": 2.6, "T": 0.999},
        "stft": {"window_size": 510, "hop": 128, "window": "hann"},
        "compression": {"beta": 0.15, "alpha": 0.5},
        "reverse": {
            "t_rs": None,
            "n_steps_full": 30,
            "ald_r": 0.5,
            "corrector_steps_per_predictor": 1,
            "seed": 0,
            "denoise_final": True,
        },
        "seed": 0,
        "out_dir": "out",
        "log_level": "WARN",
        "log_location": None,
        "n_paths": 10000,
        "n_em_steps": 2000,
        "n_grid": 1000,
    }


@pytest.fixture()
def session_config(session_config_data):
    with patch("builtins.open", mock_open(read_data=json.dumps(session_config_data))):
        return SessionConfig.load("test/path")


@pytest.fixture(scope="package")
def ouve_process():
    return create_process(SessionConfig.from_preset("ouve-paper").process)


@pytest.fixture(scope="package")
def bbed_process():
    return create_process(SessionConfig.from_preset("bbed-paper").process)


@pytest.fixture(params=["ouve-paper", "bbed-paper"])
def preset_process(request):
    return create_process(SessionConfig.from_preset(request.param).process)


@pytest.fixture()
def stft_config():
    return StftConfig()


@pytest.fixture()
def compression():
    return CompressionParams()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def spectrogram_pair(rng):
    """Clean and mixture spectrograms with RMS of about 0.5 and 0.3 noise RMS"""
    x0 = 0.5 * complex_normal(rng, (16, 32))
    return x0, x0 + 0.3 * complex_normal(rng, (16, 32))


@pytest.fixture()
def clean_buffer():
    t = np.arange(Constants.SAMPLE_RATE) / Constants.SAMPLE_RATE
    samples = 0.3 * np.sin(2 * np.pi * 220 * t) + 0.1 * np.sin(2 * np.pi * 660 * t)
    return AudioBuffer(samples=samples)


@pytest.fixture()
def noise_buffer():
    samples = 0.1 * np.random.default_rng(99).standard_normal(Constants.SAMPLE_RATE)
    return AudioBuffer(samples=samples)
