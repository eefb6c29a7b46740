from abc import ABC, abstractmethod
import logging
import math
from typing import NamedTuple

from cachetools import cached, LRUCache
import numpy as np
from scipy.optimize import minimize_scalar

from bridge_diffusion.src.common.config import BbedParams, OuveParams
from bridge_diffusion.src.common.exceptions import (
    DiffusionTimeError,
    ParameterError,
    ShapeMismatchError,
)
from bridge_diffusion.src.sde.specfun import ei_value

log = logging.getLogger()

PEAK_SCAN_POINTS = 1000
PEAK_TOLERANCE = 1e-10
DEFAULT_BBED_END_TIME = 0.999


class PerturbationKernel(NamedTuple):
    mean: np.ndarray
    std: float


class VariancePeak(NamedTuple):
    t_star: float
    var_star: float


def check_same_shape(a, b):
    """
    Checks that two spectrogram tensors can be combined elementwise. A scalar is
    accepted against any shape so that scalar test cases and path batches work.

    :raises ShapeMismatchError: If neither operand is a scalar and the shapes differ
    """
    shape_a, shape_b = np.shape(a), np.shape(b)
    if shape_a != shape_b and shape_a != () and shape_b != ():
        raise ShapeMismatchError(f"Dimensions {shape_a} and {shape_b} do not match")


def step_times(end_time, n_steps):
    """
    Diffusion-time grid `t_i = i * h` with `h = end_time / n_steps`. Computed by index
    arithmetic; the first entry is exactly 0 and the last exactly `end_time`.
    """
    if n_steps < 1:
        raise ParameterError("A time grid needs at least one step")
    times = np.arange(n_steps + 1) * (end_time / n_steps)
    times[-1] = end_time
    return times


class DiffusionProcess(ABC):
    """
    A linear SDE `dX = f(X, Y) dt + g(t) dw` whose mean interpolates between the clean
    signal `X_0` and the mixture `Y`, `mu(t) = (1 - k(t)) X_0 + k(t) Y`, and whose
    diffusion coefficient is `g(t) = sqrt(c) * k**t`.
    """

    def __init__(self, params):
        self.params = params

    @property
    def end_time(self):
        return self.params.T

    @property
    def variant(self):
        return self.params.variant

    def check_time(self, t, upper=None):
        upper = self.end_time if upper is None else upper
        if not 0 <= t <= upper:
            raise DiffusionTimeError(
                f"t = {t} is outside [0, {upper}] for the {self.variant} process",
            )

    @abstractmethod
    def _interp_factor(self, t):
        pass

    @abstractmethod
    def drift_coefficient(self, t):
        """Derivative of the drift with respect to the state, `df/dx`"""
        pass

    @abstractmethod
    def _kernel_var(self, t):
        pass

    def interp_factor(self, t):
        self.check_time(t)
        return self._interp_factor(t)

    def mif(self):
        """The maximal interpolation factor `k(T)`"""
        return self.interp_factor(self.end_time)

    def prior_mismatch(self):
        """Weight `1 - k(T)` of `X_0 - Y` left in the mean at the final time"""
        return 1.0 - self.mif()

    def drift(self, x, y, t):
        check_same_shape(x, y)
        return self.drift_coefficient(t) * (np.asarray(x) - np.asarray(y))

    def diffusion(self, t):
        self.check_time(t)
        return math.sqrt(self.params.c) * self.params.k ** t

    def kernel_mean(self, x0, y, t):
        check_same_shape(x0, y)
        weight = self.interp_factor(t)
        return (1.0 - weight) * np.asarray(x0) + weight * np.asarray(y)

    def kernel_var(self, t):
        self.check_time(t)
        if t == 0:
            return 0.0
        return max(self._kernel_var(t), 0.0)

    def kernel_std(self, t):
        return math.sqrt(self.kernel_var(t))

    def perturbation_kernel(self, x0, y, t):
        return PerturbationKernel(self.kernel_mean(x0, y, t), self.kernel_std(t))

    def time_grid(self, n_steps):
        return step_times(self.end_time, n_steps)

    def with_scale(self, c):
        """The same process shape with a different diffusion scale `c`"""
        return create_process(self.params.copy(update={"c": float(c)}))


class OuveProcess(DiffusionProcess):
    def _interp_factor(self, t):
        return -math.expm1(-self.params.gamma * t)

    def drift_coefficient(self, t):
        if t < 0:
            raise DiffusionTimeError(f"Drift is not defined for t = {t}")
        return -self.params.gamma

    def _kernel_var(self, t):
        p = self.params
        return (
            p.c
            * (p.k ** (2 * t) - math.exp(-2 * p.gamma * t))
            / (2 * (p.gamma + math.log(p.k)))
        )


class BbedProcess(DiffusionProcess):
    def _interp_factor(self, t):
        return float(t)

    def drift_coefficient(self, t):
        if not 0 <= t < 1:
            raise DiffusionTimeError(
                f"The bridge drift divides by 1 - t and is not defined for t = {t}",
            )
        return -1.0 / (1.0 - t)

    def kernel_var(self, t):
        # The variance vanishes at t = 1, which is reported through its limit
        self.check_time(t, upper=1.0)
        if t == 0 or t == 1:
            return 0.0
        return max(self._kernel_var(t), 0.0)

    def _kernel_var(self, t):
        p = self.params
        if p.k == 1:
            return p.c * t * (1.0 - t)

        log_k = math.log(p.k)
        ei_difference = ei_value(2 * (t - 1) * log_k) - ei_value(-2 * log_k)
        return (
            (1.0 - t)
            * p.c
            * (
                (p.k ** (2 * t) - 1.0 + t)
                + 2 * p.k ** 2 * log_k * (1.0 - t) * ei_difference
            )
        )


def create_process(params):
    """
    Create the process matching the variant of the parameters parsed into the function

    :param params: Validated process parameters
    :type params: :class:`OuveParams` or :class:`BbedParams`
    :return: Either an :class:`OuveProcess` or a :class:`BbedProcess`
    :raises ParameterError: If the parameters are of an unknown variant
    """
    if isinstance(params, OuveParams):
        return OuveProcess(params)
    if isinstance(params, BbedParams):
        return BbedProcess(params)
    raise ParameterError(f"Unknown process parameters: {params!r}")


@cached(cache=LRUCache(maxsize=256))
def _unit_scale_peak(unit_params):
    process = create_process(unit_params)
    times = np.linspace(0.0, process.end_time, PEAK_SCAN_POINTS)
    variances = np.array([process.kernel_var(t) for t in times])
    i = int(np.argmax(variances))

    if i == 0:
        return VariancePeak(0.0, float(variances[0]))
    if i == len(times) - 1:
        log.debug("Variance of %s increases up to T, peak at boundary", unit_params)
        return VariancePeak(float(times[-1]), float(variances[-1]))

    try:
        result = minimize_scalar(
            lambda t: -process.kernel_var(min(max(t, 0.0), process.end_time)),
            bracket=(times[i - 1], times[i], times[i + 1]),
            method="golden",
            tol=PEAK_TOLERANCE,
        )
        t_star = float(min(max(result.x, times[i - 1]), times[i + 1]))
    except ValueError:
        # Flat neighbourhood, the scan point is the best estimate
        t_star = float(times[i])

    return VariancePeak(t_star, process.kernel_var(t_star))


def variance_peak(process):
    """
    Location and value of the maximum of the kernel variance over [0, T]. The location
    is found on the unit-scale process (`c = 1`) by a dense scan followed by a
    golden-section refinement, so it does not depend on `c`. For a variance that is
    still increasing at `T` the boundary is returned.

    :param process: The process to analyse
    :type process: :class:`DiffusionProcess`
    :return: `(t_star, var_star)`
    :rtype: :class:`VariancePeak`
    """
    unit_params = process.params.copy(update={"c": 1.0})
    t_star = _unit_scale_peak(unit_params).t_star
    return VariancePeak(t_star, process.kernel_var(t_star))


def calibrate_c(k, target_peak_var, end_time=DEFAULT_BBED_END_TIME):
    """
    Chooses the diffusion scale `c` of a bridge process so that its variance peaks at
    `target_peak_var`. The variance is linear in `c`, so the unit-scale peak fixes it.

    :param k: Diffusion base of the bridge process
    :param target_peak_var: Desired maximum of the kernel variance, must be > 0
    :param end_time: Final diffusion time `T` of the process
    :return: The calibrated `c`
    :raises ParameterError: If the target is not positive
    """
    if not 0 < target_peak_var < float("inf"):
        raise ParameterError(
            f"Target peak variance must be a finite number > 0, got {target_peak_var}",
        )
    unit_process = BbedProcess(BbedParams(c=1.0, k=k, T=end_time))
    unit_peak = variance_peak(unit_process)
    c = target_peak_var / unit_peak.var_star
    log.info(
        "Calibrated c = %.6g for k = %s (peak %.4g at t = %.4f)",
        c,
        k,
        target_peak_var,
        unit_peak.t_star,
    )
    return c
