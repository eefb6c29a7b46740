"""
Signal-quality measures: SNR, the SNR improvement of a diffusion mean over its
mixture, and the scale-invariant SDR/SIR/SAR family.
"""
import logging
import math
from typing import NamedTuple, Union

import numpy as np
from pydantic import BaseModel

from bridge_diffusion.src.audio.buffer import as_samples, check_compatible
from bridge_diffusion.src.audio.transforms import (
    compress,
    decompress,
    interior,
    istft,
    stft,
)
from bridge_diffusion.src.common.exceptions import SignalError, UnboundedMetricError

log = logging.getLogger()

# Distortion energies below this fraction of the estimate energy count as zero
ZERO_ENERGY_RATIO = 1e-20
# Squared sine of the angle below which s and n are treated as collinear
COLLINEAR_TOLERANCE = 1e-12


class Unbounded:
    """A ratio whose denominator vanished, i.e. `+inf` dB"""

    def __repr__(self):
        return "Unbounded"

    def __reduce__(self):
        return "UNBOUNDED"


UNBOUNDED = Unbounded()


def as_report_value(value):
    return "inf" if value is UNBOUNDED else value


class DsnrPoint(NamedTuple):
    t: float
    dsnr_db: float


class SiDecomposition(BaseModel):
    si_sdr: Union[float, Unbounded]
    si_sir: Union[float, Unbounded]
    si_sar: Union[float, Unbounded]
    target: np.ndarray
    interference: np.ndarray
    artifacts: np.ndarray

    def scores(self):
        return {
            "si_sdr": as_report_value(self.si_sdr),
            "si_sir": as_report_value(self.si_sir),
            "si_sar": as_report_value(self.si_sar),
        }

    class Config:
        arbitrary_types_allowed = True
        smart_union = True


def snr_db(estimate, reference):
    """
    `20 log10(||s|| / ||y' - s||)`

    :raises UnboundedMetricError: If the estimate equals the reference
    :raises SignalError: If the reference is silent or the lengths differ
    """
    check_compatible(estimate, reference)
    s = as_samples(reference)
    error = np.linalg.norm(as_samples(estimate) - s)
    reference_norm = np.linalg.norm(s)
    if reference_norm == 0:
        raise SignalError("SNR of a silent reference is undefined")
    if error == 0:
        raise UnboundedMetricError()
    return 20 * math.log10(reference_norm / error)


def _energy_ratio_db(numerator, denominator, total):
    if denominator <= ZERO_ENERGY_RATIO * total:
        return UNBOUNDED
    return 10 * math.log10(numerator / denominator)


def si_metrics(estimate, clean, noise):
    """
    Scale-invariant decomposition of an estimate into target, interference and
    artifacts. The interference is the projection on the part of the noise orthogonal
    to the clean signal, so the three components are mutually orthogonal.

    :param estimate: Enhanced signal `y'`
    :param clean: Clean reference `s`
    :param noise: Noise reference `n`
    :return: The decomposition with SI-SDR, SI-SIR and SI-SAR in dB; a ratio with a
        vanishing denominator is :data:`UNBOUNDED`
    :raises SignalError: For silent estimates, a silent or collinear reference pair, or
        an estimate orthogonal to the clean signal
    """
    check_compatible(estimate, clean, noise)
    y, s, n = as_samples(estimate), as_samples(clean), as_samples(noise)
    s_energy = np.dot(s, s)
    estimate_energy = np.dot(y, y)
    if s_energy == 0 or estimate_energy == 0:
        raise SignalError("SI metrics need a non-silent estimate and clean reference")

    n_perp = n - (np.dot(n, s) / s_energy) * s
    n_perp_energy = np.dot(n_perp, n_perp)
    if n_perp_energy <= COLLINEAR_TOLERANCE * max(np.dot(n, n), np.finfo(float).tiny):
        raise SignalError("Clean and noise references are collinear")

    target = (np.dot(y, s) / s_energy) * s
    interference = (np.dot(y, n_perp) / n_perp_energy) * n_perp
    artifacts = y - target - interference

    target_energy = np.dot(target, target)
    if target_energy == 0:
        raise SignalError("Estimate is orthogonal to the clean reference")
    interference_energy = np.dot(interference, interference)
    artifact_energy = np.dot(artifacts, artifacts)

    return SiDecomposition(
        si_sdr=_energy_ratio_db(
            target_energy, interference_energy + artifact_energy, estimate_energy,
        ),
        si_sir=_energy_ratio_db(target_energy, interference_energy, estimate_energy),
        si_sar=_energy_ratio_db(
            target_energy + interference_energy, artifact_energy, estimate_energy,
        ),
        target=target,
        interference=interference,
        artifacts=artifacts,
    )


def dsnr_trajectory(process, clean, noise, t_grid, stft_cfg, compression):
    """
    SNR improvement of the diffusion mean over the mixture `y = s + n`: for every `t`
    the mean `(1 - k(t)) S + k(t) Y` of the compressed spectrograms is decompressed,
    synthesised and compared to `s`. Both SNRs are evaluated on the samples the STFT
    round-trip reconstructs exactly.

    :param t_grid: Diffusion times in `(0, T]`
    :return: List of :class:`DsnrPoint` in the order of `t_grid`
    :raises SignalError: If the signal has no interior samples or `y = s`
    :raises DiffusionTimeError: If a time is outside `(0, T]`
    """
    check_compatible(clean, noise)
    s, n = as_samples(clean), as_samples(noise)
    length = len(s)
    if length <= 2 * stft_cfg.window_size:
        raise SignalError(
            f"Signals need more than {2 * stft_cfg.window_size} samples for SNR "
            "improvement",
        )
    y = s + n
    s_interior = interior(s, stft_cfg)
    try:
        mixture_snr = snr_db(interior(y, stft_cfg), s_interior)
    except UnboundedMetricError:
        raise SignalError("Mixture equals the clean signal, no noise to remove")

    clean_c = compress(stft(s, stft_cfg), compression)
    mixture_c = compress(stft(y, stft_cfg), compression)

    points = []
    for t in t_grid:
        process.check_time(t)
        if t == 0:
            raise SignalError("SNR improvement is unbounded at t = 0")
        mean_c = process.kernel_mean(clean_c, mixture_c, t)
        estimate = istft(decompress(mean_c, compression), stft_cfg, length).samples
        estimate_snr = snr_db(interior(estimate, stft_cfg), s_interior)
        points.append(DsnrPoint(float(t), estimate_snr - mixture_snr))
    return points


def average_trajectories(trajectories):
    """Mean SNR improvement per time, averaged in the dB domain"""
    if not trajectories:
        raise SignalError("No trajectories to average")
    times = [p.t for p in trajectories[0]]
    for trajectory in trajectories[1:]:
        if [p.t for p in trajectory] != times:
            raise SignalError("Trajectories must share their time grid")
    values = np.array([[p.dsnr_db for p in trajectory] for trajectory in trajectories])
    return [DsnrPoint(t, float(v)) for t, v in zip(times, values.mean(axis=0))]


def analytic_dsnr_db(process, t):
    """
    SNR improvement of the mean in the domain where the process is linear,
    `-20 log10 k(t)`, independent of the signals
    """
    weight = process.interp_factor(t)
    if weight == 0:
        return UNBOUNDED
    return -20 * math.log10(weight)
