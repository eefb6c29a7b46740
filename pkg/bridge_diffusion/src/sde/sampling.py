"""
Stochastic simulation of the interpolating processes: exact draws from the
perturbation kernel, Euler-Maruyama forward paths and the reverse-time
predictor-corrector sampler.

Complex noise `Z` has independent real and imaginary parts of variance 1/2 each, so
`E|Z|^2 = 1` and the kernel variance is the total complex variance per entry.
"""
from concurrent.futures import ThreadPoolExecutor
import logging
import math
from typing import Any, List, NamedTuple

import numpy as np
from pydantic import BaseModel, validator
from typing_extensions import Literal

from bridge_diffusion.src.common.exceptions import (
    DiffusionTimeError,
    NonFiniteStateError,
    ParameterError,
    ScoreEvaluationError,
)
from bridge_diffusion.src.sde.processes import check_same_shape, step_times

log = logging.getLogger()


class TrajectoryRecord(BaseModel):
    """
    States of a simulated path (or batch of paths) on the diffusion-time grid. Times
    are strictly increasing for forward paths and strictly decreasing for reverse
    paths.
    """

    times: List[float]
    states: List[Any]
    direction: Literal["forward", "reverse"] = "forward"

    @validator("states")
    def validate_states_length(cls, value, values):  # noqa: B902, N805
        if "times" in values and len(value) != len(values["times"]):
            raise ValueError("one state is needed per recorded time")
        return value

    @validator("direction", always=True)
    def validate_monotone_times(cls, value, values):  # noqa: B902, N805
        times = values.get("times", [])
        steps = np.diff(times)
        if value == "forward" and np.any(steps <= 0):
            raise ValueError("forward times must be strictly increasing")
        if value == "reverse" and np.any(steps >= 0):
            raise ValueError("reverse times must be strictly decreasing")
        return value

    @property
    def final_state(self):
        return self.states[-1]

    class Config:
        arbitrary_types_allowed = True


class ReverseSchedule(NamedTuple):
    step_size: float
    n_iterations: int
    times: np.ndarray


def complex_normal(rng, shape):
    """Circularly-symmetric complex standard normal draws, `E|Z|^2 = 1`"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(
        0.5,
    )


def spawn_generators(seed, n_streams):
    """
    Independent generators derived from `(seed, stream index)`. Results do not depend
    on how the streams are later distributed over workers.
    """
    return [
        np.random.default_rng(child)
        for child in np.random.SeedSequence(seed).spawn(n_streams)
    ]


def _broadcast_shape(x0, y):
    check_same_shape(x0, y)
    return np.broadcast(np.asarray(x0), np.asarray(y)).shape


def _check_finite(x, step, t):
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(
            f"State became non-finite at step {step} (t = {t:.6g})",
        )


def forward_sample(process, x0, y, t, rng):
    """
    Exact draw of `X_t` given `(X_0, Y)` from the Gaussian perturbation kernel

    :param process: The forward process
    :type process: :class:`DiffusionProcess`
    :param x0: Clean spectrogram (or batch of scalars)
    :param y: Mixture spectrogram
    :param t: Diffusion time in [0, T]
    :param rng: Generator owning the noise stream
    :type rng: :class:`numpy.random.Generator`
    :return: `mu(t) + sigma(t) Z`
    """
    kernel = process.perturbation_kernel(x0, y, t)
    if kernel.std == 0:
        return np.array(kernel.mean, dtype=complex)
    return kernel.mean + kernel.std * complex_normal(rng, np.shape(kernel.mean))


def forward_path_em(process, x0, y, n_steps, rng, record_steps=None):
    """
    Euler-Maruyama path `X_{t+h} = X_t + f h + g(t) sqrt(h) Z` from `t = 0` to `T`.
    `x0` may hold a batch of independent scalar starting points, in which case every
    entry is an independent path.

    :param n_steps: Number of Euler-Maruyama steps, at least 1
    :param record_steps: Step indices to record; all steps are recorded when omitted
    :return: The recorded states
    :rtype: :class:`TrajectoryRecord`
    :raises NonFiniteStateError: If the state stops being finite
    """
    times = step_times(process.end_time, n_steps)
    shape = _broadcast_shape(x0, y)
    x = np.array(np.broadcast_to(x0, shape), dtype=complex)
    y = np.asarray(y)
    wanted = set(range(n_steps + 1)) if record_steps is None else set(record_steps)

    recorded_times, states = [], []
    if 0 in wanted:
        recorded_times.append(float(times[0]))
        states.append(x.copy())

    for i in range(n_steps):
        t = times[i]
        h = times[i + 1] - t
        g = process.diffusion(t)
        x = x + process.drift(x, y, t) * h
        if g > 0:
            x = x + g * math.sqrt(h) * complex_normal(rng, shape)
        _check_finite(x, i + 1, times[i + 1])
        if i + 1 in wanted:
            recorded_times.append(float(times[i + 1]))
            states.append(x.copy())

    return TrajectoryRecord(times=recorded_times, states=states, direction="forward")


def simulate_paths(
    process, x0, y, n_paths, n_steps, seed, record_steps=None, chunk_size=1000,
    workers=1,
):
    """
    Runs `n_paths` independent scalar forward paths in chunks. Each chunk owns the
    stream derived from `(seed, chunk index)` so the result is the same for any number
    of workers.

    :return: Recorded times and, per recorded time, the array of all path states
    :rtype: :class:`TrajectoryRecord`
    """
    n_chunks = -(-n_paths // chunk_size)
    generators = spawn_generators(seed, n_chunks)
    sizes = [min(chunk_size, n_paths - i * chunk_size) for i in range(n_chunks)]

    def run_chunk(index):
        batch = np.full(sizes[index], x0, dtype=complex)
        return forward_path_em(
            process, batch, y, n_steps, generators[index], record_steps,
        )

    log.info(
        "Simulating %d %s paths with %d steps (seed %d)",
        n_paths,
        process.variant,
        n_steps,
        seed,
    )
    with ThreadPoolExecutor(max_workers=workers) as executor:
        chunks = list(executor.map(run_chunk, range(n_chunks)))

    states = [
        np.concatenate([chunk.states[j] for chunk in chunks])
        for j in range(len(chunks[0].times))
    ]
    return TrajectoryRecord(times=chunks[0].times, states=states, direction="forward")


def prior_sample(process, y, t_rs, rng):
    """
    Draws the starting point of the reverse process. Only the mixture is available at
    inference, so the prior is centred at `Y` with the closed-form variance at the
    reverse starting time: `Y + sigma(t_rs) Z`.
    """
    if not 0 < t_rs <= process.end_time:
        raise DiffusionTimeError(
            f"Reverse starting time {t_rs} is outside (0, {process.end_time}]",
        )
    y = np.asarray(y)
    std = process.kernel_std(t_rs)
    if std == 0:
        return np.array(y, dtype=complex)
    return y + std * complex_normal(rng, y.shape)


def reverse_schedule(process, cfg):
    """
    The reverse time grid. The step size `h = T / n_steps_full` is fixed, `t_rs` is
    snapped to the nearest multiple of `h` and the grid `t_i = i h` runs from there
    down to exactly 0.

    :return: Step size, number of predictor iterations and the grid (decreasing)
    :rtype: :class:`ReverseSchedule`
    """
    end_time = process.end_time
    t_rs = end_time if cfg.t_rs is None else cfg.t_rs
    if not 0 < t_rs <= end_time:
        raise DiffusionTimeError(
            f"Reverse starting time {t_rs} is outside (0, {end_time}]",
        )

    full_grid = step_times(end_time, cfg.n_steps_full)
    step_size = end_time / cfg.n_steps_full
    n_iterations = min(int(round(t_rs / step_size)), cfg.n_steps_full)
    if n_iterations < 1:
        raise ParameterError(
            f"Reverse starting time {t_rs} is shorter than one step of {step_size}",
        )
    return ReverseSchedule(step_size, n_iterations, full_grid[n_iterations::-1])


def _evaluate_score(score, x, y, t):
    s = np.asarray(score(x, y, t))
    if s.shape != np.shape(x):
        raise ScoreEvaluationError(
            f"Score returned shape {s.shape} for a state of shape {np.shape(x)}",
        )
    if not np.all(np.isfinite(s)):
        raise ScoreEvaluationError(f"Score returned non-finite values at t = {t:.6g}")
    return s


def _ald_correct(x, y, t, score, cfg, rng):
    """Annealed Langevin correction with step `2 (r ||z|| / ||s||)^2`"""
    for _ in range(cfg.corrector_steps_per_predictor):
        s = _evaluate_score(score, x, y, t)
        z = complex_normal(rng, x.shape)
        score_norm = np.linalg.norm(s)
        if score_norm == 0:
            log.debug("Zero score at t = %.6g, correction skipped", t)
            continue
        step = 2 * (cfg.ald_r * np.linalg.norm(z) / score_norm) ** 2
        x = x + step * s + math.sqrt(2 * step) * z
    return x


def reverse_pc(process, y, score, cfg, rng=None, trace=False):
    """
    Predictor-corrector sampling of the reverse SDE. Starting from the prior at the
    (snapped) reverse starting time, every iteration applies the annealed Langevin
    corrector at `t_i > 0` and then one reverse-time Euler-Maruyama step to
    `t_{i-1}`:

        x <- x - h [f(x, y, t) - g(t)^2 s(x, y, t)] + g(t) sqrt(h) Z

    With `denoise_final` the last predictor step returns its noise-free mean.

    :param score: Callable `(x_t, y, t) -> score` approximating the gradient of the
        log-density of `X_t | Y`
    :param cfg: Sampler settings
    :type cfg: :class:`ReverseConfig`
    :param rng: Generator, created from `cfg.seed` when omitted
    :param trace: Return the full :class:`TrajectoryRecord` instead of the final state
    :return: Estimate of the clean spectrogram
    :raises ScoreEvaluationError: If the score is non-finite or has the wrong shape
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    schedule = reverse_schedule(process, cfg)
    times = schedule.times
    log.debug(
        "Reverse %s sampling: %d predictor iterations, h = %.6g",
        process.variant,
        schedule.n_iterations,
        schedule.step_size,
    )

    y = np.asarray(y)
    x = prior_sample(process, y, times[0], rng)
    states = [x.copy()] if trace else None

    for i in range(schedule.n_iterations):
        t, t_next = times[i], times[i + 1]
        h = t - t_next
        x = _ald_correct(x, y, t, score, cfg, rng)

        g = process.diffusion(t)
        s = _evaluate_score(score, x, y, t)
        x_mean = x - (process.drift(x, y, t) - g ** 2 * s) * h
        if cfg.denoise_final and t_next == 0:
            x = x_mean
        else:
            x = x_mean + g * math.sqrt(h) * complex_normal(rng, x.shape)
        _check_finite(x, i + 1, t_next)
        if trace:
            states.append(x.copy())

    if trace:
        return TrajectoryRecord(
            times=[float(t) for t in times], states=states, direction="reverse",
        )
    return x


def reverse_pc_runs(process, y, score, cfg, n_runs, workers=1):
    """
    Independent reverse runs, run `i` owning the stream derived from
    `(cfg.seed, i)`.

    :return: Array of final states with the run index as leading axis
    """
    generators = spawn_generators(cfg.seed, n_runs)

    def run(index):
        return reverse_pc(process, y, score, cfg, rng=generators[index])

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return np.stack(list(executor.map(run, range(n_runs))))


def moment_summary(samples, axis=0):
    """
    Sample mean and complex variance `E|X - E X|^2` along the run axis with their
    standard errors

    :return: `(mean, mean_stderr, var, var_stderr)`
    """
    samples = np.asarray(samples)
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    power = np.abs(samples - np.expand_dims(mean, axis)) ** 2
    var = power.sum(axis=axis) / (n - 1)
    var_stderr = power.std(axis=axis, ddof=1) / math.sqrt(n)
    mean_stderr = np.sqrt(var / n)
    return mean, mean_stderr, var, var_stderr
