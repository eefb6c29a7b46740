"""
Analysis and synthesis of the complex STFT representation, the amplitude compression
applied to every coefficient and SNR-controlled mixing.

Frames are left-aligned without padding; `istft` is a left-inverse of `stft` on all
samples except the first and last `window_size` ones.
"""
from functools import lru_cache
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from bridge_diffusion.src.audio.buffer import as_samples, AudioBuffer, check_compatible
from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.exceptions import ShapeMismatchError, SignalError

log = logging.getLogger()


@lru_cache(maxsize=8)
def periodic_hann(window_size):
    window = get_window("hann", window_size, fftbins=True)
    window.setflags(write=False)
    return window


def n_frames_for(length, cfg):
    return 1 + (length - cfg.window_size) // cfg.hop


def stft(buffer, cfg):
    """
    Complex one-sided STFT with a periodic Hann window

    :param buffer: Time-domain signal, at least `window_size` samples long
    :param cfg: Window and hop settings
    :type cfg: :class:`StftConfig`
    :return: Grid of `freq_bins x frames` coefficients
    :raises SignalError: If the signal is shorter than one window
    """
    samples = as_samples(buffer)
    if len(samples) < cfg.window_size:
        raise SignalError(
            f"Signal of {len(samples)} samples is shorter than the window "
            f"({cfg.window_size})",
        )
    n_frames = n_frames_for(len(samples), cfg)
    frames = sliding_window_view(samples, cfg.window_size)[:: cfg.hop][:n_frames]
    return np.fft.rfft(frames * periodic_hann(cfg.window_size), axis=1).T


def istft(spec, cfg, length, sample_rate=Constants.SAMPLE_RATE):
    """
    Overlap-add synthesis normalised by the summed squared window. Samples no frame
    covers, and the first sample where the periodic window is zero, are returned as 0.

    :param spec: `freq_bins x frames` coefficients
    :param length: Number of output samples
    :return: The synthesised signal
    :raises ShapeMismatchError: If the number of bins does not match the config
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[0] != cfg.freq_bins:
        raise ShapeMismatchError(
            f"Expected {cfg.freq_bins} frequency bins, got shape {spec.shape}",
        )
    window = periodic_hann(cfg.window_size)
    frames = np.fft.irfft(spec.T, n=cfg.window_size, axis=1) * window
    n_frames = frames.shape[0]

    total = max(length, (n_frames - 1) * cfg.hop + cfg.window_size)
    signal = np.zeros(total)
    window_sum = np.zeros(total)
    for i in range(n_frames):
        start = i * cfg.hop
        signal[start:start + cfg.window_size] += frames[i]
        window_sum[start:start + cfg.window_size] += window ** 2

    covered = window_sum > np.finfo(float).eps
    signal[covered] /= window_sum[covered]
    signal[~covered] = 0.0
    return AudioBuffer(samples=signal[:length], sample_rate=sample_rate)


def interior(samples, cfg):
    """The samples `istft` reconstructs exactly"""
    return np.asarray(samples)[cfg.window_size:len(samples) - cfg.window_size]


def compress(spec, p):
    """`beta |c|^alpha exp(i angle(c))` for every coefficient; 0 maps to 0"""
    spec = np.asarray(spec, dtype=complex)
    magnitude = np.abs(spec)
    phase = np.divide(spec, magnitude, out=np.zeros_like(spec), where=magnitude > 0)
    return p.beta * magnitude ** p.alpha * phase


def decompress(spec, p):
    """Inverse of :func:`compress`, `|c| -> (|c| / beta)^(1 / alpha)`"""
    spec = np.asarray(spec, dtype=complex)
    magnitude = np.abs(spec)
    phase = np.divide(spec, magnitude, out=np.zeros_like(spec), where=magnitude > 0)
    return (magnitude / p.beta) ** (1.0 / p.alpha) * phase


def mix_at_snr(clean, noise, snr_db):
    """
    Scales the noise so that `20 log10(||s|| / ||n_scaled||) = snr_db` and adds it to
    the clean signal

    :return: `(mixture, scaled noise)`
    :raises SignalError: For silent inputs or incompatible buffers
    """
    check_compatible(clean, noise)
    s, n = as_samples(clean), as_samples(noise)
    clean_norm, noise_norm = np.linalg.norm(s), np.linalg.norm(n)
    if clean_norm == 0 or noise_norm == 0:
        raise SignalError("Cannot mix silent signals at a given SNR")

    scale = clean_norm / (noise_norm * 10 ** (snr_db / 20))
    n_scaled = n * scale
    sample_rate = getattr(clean, "sample_rate", Constants.SAMPLE_RATE)
    log.debug("Mixing at %.3f dB SNR (noise gain %.4g)", snr_db, scale)
    return (
        AudioBuffer(samples=s + n_scaled, sample_rate=sample_rate),
        AudioBuffer(samples=n_scaled, sample_rate=sample_rate),
    )


def stft_energy_ratio(cfg):
    """
    Expected ratio of one-sided STFT energy to signal energy for a stationary white
    signal: `freq_bins * sum(w^2) / hop`
    """
    window = periodic_hann(cfg.window_size)
    return cfg.freq_bins * math.fsum(window ** 2) / cfg.hop
