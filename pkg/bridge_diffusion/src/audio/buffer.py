import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, validator
import soundfile

from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.exceptions import AudioIOError, SignalError

log = logging.getLogger()

PCM16_MAX = 1.0 - 2.0 ** -15


class AudioBuffer(BaseModel):
    """Mono time-domain signal with real samples in [-1, 1)"""

    samples: np.ndarray
    sample_rate: int = Constants.SAMPLE_RATE

    @validator("samples", pre=True)
    def validate_samples(cls, value):  # noqa: B902, N805
        samples = np.asarray(value, dtype=float)
        if samples.ndim != 1:
            raise ValueError("only mono signals are supported")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        return samples

    @validator("sample_rate")
    def validate_sample_rate(cls, value):  # noqa: B902, N805
        if value <= 0:
            raise ValueError("sample rate must be > 0")
        return value

    def __len__(self):
        return len(self.samples)

    def with_samples(self, samples):
        return AudioBuffer(samples=samples, sample_rate=self.sample_rate)

    class Config:
        arbitrary_types_allowed = True


def as_samples(signal):
    """Accepts an :class:`AudioBuffer` or an array and returns the sample array"""
    if isinstance(signal, AudioBuffer):
        return signal.samples
    return np.asarray(signal, dtype=float)


def check_compatible(*buffers):
    lengths = {len(as_samples(b)) for b in buffers}
    if len(lengths) != 1:
        raise SignalError(f"Signals must have equal lengths, got {sorted(lengths)}")
    rates = {b.sample_rate for b in buffers if isinstance(b, AudioBuffer)}
    if len(rates) > 1:
        raise SignalError(f"Signals must have equal sample rates, got {sorted(rates)}")


def read_wav(path):
    """
    Reads a mono 16 kHz WAV file into a buffer of floats in [-1, 1)

    :param path: Path of the WAV file
    :return: The audio buffer
    :raises AudioIOError: If the file is missing, corrupt, multichannel or uses
        another sample rate
    """
    try:
        samples, sample_rate = soundfile.read(str(path), dtype="float64")
    except (RuntimeError, OSError, soundfile.SoundFileError) as e:
        raise AudioIOError(f"Could not read {path}: {e}")

    if samples.ndim != 1:
        raise AudioIOError(f"{path} has {samples.shape[1]} channels, only mono is read")
    if sample_rate != Constants.SAMPLE_RATE:
        raise AudioIOError(
            f"{path} is sampled at {sample_rate} Hz, expected {Constants.SAMPLE_RATE}",
        )
    log.debug("Read %d samples from %s", len(samples), path)
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def write_wav(buffer, path):
    """Writes a buffer as 16-bit PCM; samples are clipped to the PCM range"""
    path = Path(path)
    try:
        soundfile.write(
            str(path),
            np.clip(buffer.samples, -1.0, PCM16_MAX),
            buffer.sample_rate,
            subtype=Constants.PCM_SUBTYPE,
        )
    except (RuntimeError, OSError, soundfile.SoundFileError) as e:
        raise AudioIOError(f"Could not write {path}: {e}")
    log.info("Wrote %d samples to %s", len(buffer), path)
    return path


def crop_frames(spec, n_frames=256, start=0):
    """
    Deterministic crop of `n_frames` STFT frames starting at frame `start`. Shorter
    spectrograms are zero-padded at the end.
    """
    spec = np.asarray(spec)
    if start < 0 or start > spec.shape[1]:
        raise SignalError(f"Crop start {start} is outside {spec.shape[1]} frames")
    cropped = spec[:, start:start + n_frames]
    missing = n_frames - cropped.shape[1]
    if missing > 0:
        cropped = np.pad(cropped, ((0, 0), (0, missing)))
    return cropped
