"""
Seeded generators for speech-like clean signals and coloured noise, used when no WAV
corpus is at hand. Every mixture draws from its own stream so results are independent
of how many mixtures are requested.
"""
from abc import ABC, abstractmethod
import logging
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from bridge_diffusion.src.audio.buffer import AudioBuffer
from bridge_diffusion.src.audio.transforms import mix_at_snr
from bridge_diffusion.src.sde.sampling import spawn_generators

log = logging.getLogger()


class Mixture(NamedTuple):
    clean: AudioBuffer
    noise: AudioBuffer
    mixture: AudioBuffer
    snr_db: float


class SignalGenerator(ABC):
    peak = 0.5

    def __init__(self, sample_rate):
        self.sample_rate = sample_rate

    @abstractmethod
    def generate(self, rng, n_samples):
        pass

    def _normalised(self, samples):
        peak = np.max(np.abs(samples))
        if peak > 0:
            samples = samples * (self.peak / peak)
        return AudioBuffer(samples=samples, sample_rate=self.sample_rate)


class HarmonicSpeechGenerator(SignalGenerator):
    """Vibrato-modulated harmonic series under a syllable-rate envelope"""

    max_harmonics = 20

    def generate(self, rng, n_samples):
        t = np.arange(n_samples) / self.sample_rate
        f0 = rng.uniform(90.0, 220.0)
        vibrato = 1 + 0.03 * np.sin(2 * np.pi * rng.uniform(3.0, 6.0) * t)
        phase = 2 * np.pi * np.cumsum(f0 * vibrato) / self.sample_rate

        n_harmonics = int(min(self.max_harmonics, (self.sample_rate / 2 - 500) // f0))
        voiced = np.zeros(n_samples)
        for h in range(1, n_harmonics + 1):
            amplitude = rng.uniform(0.5, 1.0) / h
            voiced += amplitude * np.sin(h * phase + rng.uniform(0, 2 * np.pi))

        syllable_rate = rng.uniform(3.0, 5.0)
        envelope = (0.5 * (1 - np.cos(2 * np.pi * syllable_rate * t))) ** 2
        return self._normalised(envelope * voiced)


class ColouredNoiseGenerator(SignalGenerator):
    """First-order autoregressive Gaussian noise"""

    def generate(self, rng, n_samples):
        pole = rng.uniform(0.0, 0.9)
        white = rng.standard_normal(n_samples)
        return self._normalised(lfilter([1.0], [1.0, -pole], white))


def synthetic_mixtures(cfg, seed):
    """
    :param cfg: Number, duration, rate and SNR range of the mixtures
    :type cfg: :class:`SyntheticConfig`
    :param seed: Root seed; mixture `i` uses stream `i`
    :return: List of :class:`Mixture`
    """
    n_samples = int(round(cfg.duration_s * cfg.sample_rate))
    speech = HarmonicSpeechGenerator(cfg.sample_rate)
    noise = ColouredNoiseGenerator(cfg.sample_rate)
    low, high = cfg.snr_range_db

    mixtures = []
    for rng in spawn_generators(seed, cfg.n_mixtures):
        clean = speech.generate(rng, n_samples)
        snr_db = float(rng.uniform(low, high))
        noise_signal = noise.generate(rng, n_samples)
        mixture, scaled_noise = mix_at_snr(clean, noise_signal, snr_db)
        mixtures.append(Mixture(clean, scaled_noise, mixture, snr_db))

    log.info(
        "Generated %d synthetic mixtures of %.2f s (seed %d)",
        cfg.n_mixtures,
        cfg.duration_s,
        seed,
    )
    return mixtures
