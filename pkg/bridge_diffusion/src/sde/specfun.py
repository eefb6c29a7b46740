"""
Exponential integral `Ei(x) = -PV int_{-x}^{inf} exp(-t) / t dt` for real, non-zero
arguments.

The positive axis uses the power series (all terms positive) up to
`POSITIVE_SERIES_LIMIT` and the asymptotic expansion beyond. On the negative axis the
series alternates and cancels badly, so it is only used for `|x| <= 1`; further out
`Ei(x) = -E1(-x)` is evaluated with a continued fraction.
"""
import logging
import math
import sys
from typing import NamedTuple

from bridge_diffusion.src.common.exceptions import (
    BridgeDiffusionError,
    SpecialFunctionDomainError,
)

log = logging.getLogger()

EULER_GAMMA = 0.57721566490153286060651209008240243
NEGATIVE_SERIES_LIMIT = 1.0
POSITIVE_SERIES_LIMIT = 40.0
# exp(x - ln x) overflows past this point
OVERFLOW_LIMIT = 716.0
SERIES_STOP_RATIO = 1e-17
MAX_ITERATIONS = 1000
_EPS = sys.float_info.epsilon
_FPMIN = sys.float_info.min / _EPS


class EiResult(NamedTuple):
    value: float
    est_abs_error: float


def _check_argument(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        try:
            x = float(x)
        except (TypeError, ValueError):
            raise SpecialFunctionDomainError(f"Ei needs a real argument, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise SpecialFunctionDomainError(f"Ei is not defined for {x}")
    if x == 0:
        raise SpecialFunctionDomainError("Ei has a logarithmic singularity at 0")
    if x > OVERFLOW_LIMIT:
        raise SpecialFunctionDomainError(
            f"Ei({x}) exceeds the largest representable float",
        )
    return x


def _series(x):
    terms = []
    abs_sum = 0.0
    power_over_factorial = 1.0
    contribution = 0.0
    for n in range(1, MAX_ITERATIONS + 1):
        power_over_factorial *= x / n
        contribution = power_over_factorial / n
        terms.append(contribution)
        abs_sum += abs(contribution)
        if abs(contribution) < SERIES_STOP_RATIO * abs_sum:
            break
    else:
        raise BridgeDiffusionError(f"Ei power series did not converge at {x}")

    log_term = math.log(abs(x))
    value = math.fsum([EULER_GAMMA, log_term] + terms)
    rounding = _EPS * (EULER_GAMMA + abs(log_term) + abs_sum)
    return EiResult(value, 2 * abs(contribution) + rounding)


def _continued_fraction_e1(z):
    """Modified Lentz evaluation of E1(z) for z > 1"""
    b = z + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITERATIONS + 1):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            break
    else:
        raise BridgeDiffusionError(f"E1 continued fraction did not converge at {z}")

    value = h * math.exp(-z)
    return EiResult(value, abs(value) * (abs(delta - 1.0) + 4 * i * _EPS))


def _asymptotic(x):
    terms = [1.0]
    term = 1.0
    for n in range(1, MAX_ITERATIONS + 1):
        next_term = term * n / x
        if next_term >= term or next_term < SERIES_STOP_RATIO:
            break
        term = next_term
        terms.append(term)

    scale = math.exp(x - math.log(x))
    value = scale * math.fsum(terms)
    return EiResult(value, scale * term + _EPS * abs(value) * len(terms))


def ei(x):
    """
    Evaluates the exponential integral with an estimate of the absolute error.

    :param x: Real, finite, non-zero argument
    :type x: :class:`float`
    :return: Value and estimated absolute error
    :rtype: :class:`EiResult`
    :raises SpecialFunctionDomainError: For 0, NaN, infinite arguments and arguments
        whose result overflows
    """
    x = _check_argument(x)

    if x < 0:
        if -x <= NEGATIVE_SERIES_LIMIT:
            return _series(x)
        e1_result = _continued_fraction_e1(-x)
        return EiResult(-e1_result.value, e1_result.est_abs_error)

    if x <= POSITIVE_SERIES_LIMIT:
        return _series(x)
    return _asymptotic(x)


def ei_value(x):
    return ei(x).value


def e1(x):
    """E1(x) = -Ei(-x) for x > 0"""
    if not x > 0:
        raise SpecialFunctionDomainError(f"E1 is only evaluated for x > 0, got {x}")
    return -ei(-x).value
