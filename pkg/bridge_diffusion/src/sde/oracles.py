"""
Analytic score functions that stand in for a trained score model, and the denoising
score matching loss evaluated with them.
"""
from abc import ABC, abstractmethod
import logging
import math
from typing import Any, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validator

from bridge_diffusion.src.common.exceptions import DiffusionTimeError
from bridge_diffusion.src.sde.processes import check_same_shape
from bridge_diffusion.src.sde.sampling import complex_normal

log = logging.getLogger()

DEFAULT_T_EPS = 1e-3
DEFAULT_N_MC = 10000


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    n_samples: int


class GaussianToyModel(BaseModel):
    """
    Per-bin Gaussian model of clean coefficients `X_0 ~ N_C(m0, v0)` observed through
    zero-mean additive noise `N ~ N_C(0, vn)`, so that `X_0 | Y` is Gaussian as well.
    """

    m0: complex = 0j
    v0: float = 1.0
    vn: float = 0.5
    dims: Optional[Tuple[int, int]]

    @validator("m0", pre=True)
    def coerce_mean(cls, value):  # noqa: B902, N805
        return complex(value)

    @validator("v0", "vn")
    def validate_variance(cls, value):  # noqa: B902, N805
        if not 0 < value < float("inf"):
            raise ValueError("variances must be finite numbers > 0")
        return value

    @property
    def posterior_var(self):
        return self.v0 * self.vn / (self.v0 + self.vn)

    def posterior_mean(self, y):
        gain = self.v0 / (self.v0 + self.vn)
        return self.m0 + gain * (np.asarray(y) - self.m0)

    def sample_pair(self, rng, shape=None):
        """Draws `(x0, y)` from the model"""
        shape = self.dims if shape is None else shape
        x0 = self.m0 + math.sqrt(self.v0) * complex_normal(rng, shape)
        noise = math.sqrt(self.vn) * complex_normal(rng, shape)
        return x0, x0 + noise

    class Config:
        frozen = True
        arbitrary_types_allowed = True


class DsmBatch(BaseModel):
    """
    Pairs `(x0, y)` over which the loss expectation is taken. Diffusion times are
    drawn uniformly from `[t_eps, T]`, or fixed to `t_fixed` when given.
    """

    pairs: List[Tuple[Any, Any]]
    t_eps: float = DEFAULT_T_EPS
    t_fixed: Optional[float]

    @validator("pairs")
    def validate_pairs(cls, value):  # noqa: B902, N805
        if not value:
            raise ValueError("a batch needs at least one pair")
        shape = np.shape(value[0][0])
        for x0, y in value:
            if np.shape(x0) != shape or np.shape(y) != shape:
                raise ValueError("all pairs must have the same dimensions")
        return value

    @validator("t_eps")
    def validate_t_eps(cls, value):  # noqa: B902, N805
        if not value > 0:
            raise ValueError("t_eps must be > 0")
        return value

    class Config:
        arbitrary_types_allowed = True


def _positive_variance(process, t):
    if not t > 0:
        raise DiffusionTimeError(f"The score is singular at t = {t}")
    var = process.kernel_var(t)
    if var <= 0:
        raise DiffusionTimeError(f"Kernel variance vanishes at t = {t}")
    return var


def conditional_score(process, x0, y, x_t, t):
    """
    Score of the perturbation kernel, `-(x_t - mu(x0, y, t)) / sigma(t)^2`. This is
    the regression target of denoising score matching and needs the clean signal.

    :raises DiffusionTimeError: Where `sigma(t) = 0`
    """
    var = _positive_variance(process, t)
    check_same_shape(x_t, y)
    return -(np.asarray(x_t) - process.kernel_mean(x0, y, t)) / var


def posterior_score(model, process, y, x_t, t):
    """
    Exact score of `X_t | Y` for the Gaussian toy model. With `X_0 | Y ~ N_C(m_post,
    v_post)` the marginal is `N_C((1 - k(t)) m_post + k(t) y, (1 - k(t))^2 v_post +
    sigma(t)^2)`.

    :type model: :class:`GaussianToyModel`
    :raises DiffusionTimeError: For `t <= 0`
    """
    if not t > 0:
        raise DiffusionTimeError(f"The posterior score is only used for t > 0, got {t}")
    check_same_shape(x_t, y)
    weight = process.interp_factor(t)
    mean = (1 - weight) * model.posterior_mean(y) + weight * np.asarray(y)
    var = (1 - weight) ** 2 * model.posterior_var + process.kernel_var(t)
    return -(np.asarray(x_t) - mean) / var


class PairedScore(ABC):
    """A score oracle that needs to know the clean signal of the pair it scores"""

    @abstractmethod
    def for_pair(self, x0, y):
        pass


class ConditionalScore:
    """
    Conditional score for one known clean signal, as a `(x_t, y, t)` callable. It
    cheats by using the clean signal and only serves verification.
    """

    label = "conditional-oracle"

    def __init__(self, process, x0):
        self.process = process
        self.x0 = np.asarray(x0)

    def __call__(self, x_t, y, t):
        return conditional_score(self.process, self.x0, y, x_t, t)


class ConditionalScoreOracle(PairedScore):
    def __init__(self, process):
        self.process = process

    def for_pair(self, x0, y):
        return ConditionalScore(self.process, x0)


class PosteriorScore:
    label = "gaussian-posterior-oracle"

    def __init__(self, model, process):
        self.model = model
        self.process = process

    def __call__(self, x_t, y, t):
        return posterior_score(self.model, self.process, y, x_t, t)


class ZeroScore:
    label = "zero"

    def __call__(self, x_t, y, t):
        return np.zeros_like(np.asarray(x_t, dtype=complex))


def dsm_loss(score, process, batch, n_mc=DEFAULT_N_MC, rng=None):
    """
    Monte-Carlo estimate of the denoising score matching objective
    `E ||s(x_t, y, t) + Z / sigma(t)||^2` with `x_t = mu(t) + sigma(t) Z`.

    :param score: `(x_t, y, t)` callable or a :class:`PairedScore`
    :type batch: :class:`DsmBatch`
    :param n_mc: Draws of `(t, Z)` per pair
    :return: Loss estimate with its standard error
    :rtype: :class:`MonteCarloEstimate`
    """
    rng = np.random.default_rng() if rng is None else rng
    losses = []
    for x0, y in batch.pairs:
        pair_score = score.for_pair(x0, y) if isinstance(score, PairedScore) else score
        for _ in range(n_mc):
            if batch.t_fixed is None:
                t = rng.uniform(batch.t_eps, process.end_time)
            else:
                t = batch.t_fixed
            std = math.sqrt(_positive_variance(process, t))
            z = complex_normal(rng, np.shape(y))
            x_t = process.kernel_mean(x0, y, t) + std * z
            residual = np.asarray(pair_score(x_t, y, t)) + z / std
            losses.append(float(np.sum(np.abs(residual) ** 2)))

    losses = np.asarray(losses)
    stderr = losses.std(ddof=1) / math.sqrt(len(losses)) if len(losses) > 1 else 0.0
    log.debug("DSM loss %.6g +- %.2g over %d draws", losses.mean(), stderr, len(losses))
    return MonteCarloEstimate(float(losses.mean()), float(stderr), len(losses))
