"""
Subcommands of the command line tool. Each takes the validated session, the parsed
arguments and the output directory, and returns the paths it wrote.
"""
import logging
from pathlib import Path

import numpy as np

from bridge_diffusion.src.audio.buffer import read_wav, write_wav
from bridge_diffusion.src.audio.metrics import (
    analytic_dsnr_db,
    as_report_value,
    average_trajectories,
    dsnr_trajectory,
    si_metrics,
    snr_db,
)
from bridge_diffusion.src.audio.synthetic import Mixture, synthetic_mixtures
from bridge_diffusion.src.audio.transforms import (
    compress,
    decompress,
    istft,
    mix_at_snr,
    stft,
)
from bridge_diffusion.src.common.config import (
    BbedParams,
    parse_process_params,
    SessionConfig,
)
from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.exceptions import SignalError, VerificationError
from bridge_diffusion.src.common.helpers import (
    reports_errors,
    write_csv,
    write_json_report,
)
from bridge_diffusion.src.sde.oracles import ConditionalScore
from bridge_diffusion.src.sde.processes import (
    BbedProcess,
    calibrate_c,
    create_process,
    variance_peak,
)
from bridge_diffusion.src.sde.sampling import (
    reverse_pc,
    reverse_schedule,
    simulate_paths,
)
from bridge_diffusion.src.sde.specfun import ei
from bridge_diffusion.src.sde.verification import run_verification

log = logging.getLogger()

COMPARED_PRESETS = ("ouve-paper", "bbed-paper")


def _session_for(session, preset):
    data = session.dict()
    data["process"] = dict(Constants.PRESETS[preset])
    data["reverse"]["t_rs"] = None
    return SessionConfig(**data)


def _seed_comments(session, label):
    return [("label", label), ("seed", session.seed), ("process", session.process)]


def _variance_rows(process, n_grid):
    rows = []
    for t in np.linspace(0.0, process.end_time, n_grid):
        rows.append(
            {
                "t": t,
                "interp_factor": process.interp_factor(t),
                "variance": process.kernel_var(t),
                "diffusion": process.diffusion(t),
            },
        )
    return rows


def _grid_rows():
    rows = []
    for k in Constants.BBED_K_GRID:
        unit_peak = variance_peak(BbedProcess(BbedParams(c=1.0, k=k, T=0.999)))
        for target in Constants.PEAK_VARIANCE_TARGETS:
            rows.append(
                {
                    "k": k,
                    "target_peak_var": target,
                    "t_star": unit_peak.t_star,
                    "c": calibrate_c(k, target),
                },
            )
    return rows


def _end_time_rows():
    rows = []
    for end_time in Constants.BBED_T_GRID:
        process = BbedProcess(BbedParams(c=1.0, k=2.6, T=end_time))
        rows.append(
            {
                "T": end_time,
                "mif": process.mif(),
                "prior_mismatch": process.prior_mismatch(),
                "analytic_dsnr_db": analytic_dsnr_db(process, end_time),
            },
        )
    return rows


@reports_errors
def cmd_analyze(session, args, out_dir):
    """Variance evolution on a regular grid, optionally for both presets"""
    if args.compare:
        labelled = [(name, _session_for(session, name)) for name in COMPARED_PRESETS]
    else:
        labelled = [(args.preset or session.process.variant, session)]

    written = []
    for label, labelled_session in labelled:
        process = create_process(labelled_session.process)
        peak = variance_peak(process)
        comments = _seed_comments(labelled_session, label) + [
            ("mif", f"{process.mif():.12g}"),
            ("prior_mismatch", f"{process.prior_mismatch():.12g}"),
            ("peak_t", f"{peak.t_star:.12g}"),
            ("peak_var", f"{peak.var_star:.12g}"),
        ]
        written.append(
            write_csv(
                _variance_rows(process, session.n_grid),
                out_dir / f"analyze_{label}.csv",
                comments,
            ),
        )

    if args.grid:
        written.append(write_csv(_grid_rows(), out_dir / "analyze_bbed_grid.csv"))
        written.append(
            write_csv(_end_time_rows(), out_dir / "analyze_bbed_end_times.csv"),
        )
    return written


@reports_errors
def cmd_verify(session, args, out_dir):
    """
    Runs the verification suite and writes its report. A failed property is raised as
    :class:`VerificationError` after the report is written.
    """
    report = run_verification(session, variance_scale=args.corrupt_variance)
    checks = [check.dict() for check in report.checks]
    rows = [
        {
            "t": check.t,
            "stat_name": check.name,
            "value": check.estimate,
            "stderr": check.stderr,
            "reference": check.reference,
            "tolerance": check.tolerance,
            "passed": check.passed,
        }
        for check in report.checks
    ]
    written = [
        write_json_report(
            {
                "passed": report.passed,
                "variance_scale": report.variance_scale,
                "seed": session.seed,
                "checks": checks,
            },
            out_dir / "verify_report.json",
        ),
        write_csv(rows, out_dir / "verify.csv", [("seed", session.seed)]),
    ]
    if not report.passed:
        raise VerificationError(
            f"{len(report.failures())} of {len(report.checks)} properties failed",
        )
    return written


def _stat_row(t, stat_name, value, stderr=0.0):
    return {"t": t, "stat_name": stat_name, "value": value, "stderr": stderr}


@reports_errors
def cmd_simulate(session, args, out_dir):
    """Monte-Carlo moments of forward paths next to the closed forms"""
    process = create_process(session.process)
    x0, y = complex(args.x0), complex(args.y)
    n_steps = session.n_em_steps
    record_steps = sorted(
        {int(round(i * n_steps / args.records)) for i in range(args.records + 1)},
    )
    paths = simulate_paths(
        process,
        x0,
        y,
        session.n_paths,
        n_steps,
        session.seed,
        record_steps,
        workers=args.workers,
    )

    rows = []
    for t, states in zip(paths.times, paths.states):
        n = len(states)
        mean = states.mean()
        power = np.abs(states - mean) ** 2
        var = power.sum() / (n - 1)
        mean_stderr = np.sqrt(var / (2 * n))
        kernel_mean = process.kernel_mean(x0, y, t)
        rows.extend(
            [
                _stat_row(t, "mean_real", mean.real, mean_stderr),
                _stat_row(t, "mean_imag", mean.imag, mean_stderr),
                _stat_row(t, "var", var, power.std(ddof=1) / np.sqrt(n)),
                _stat_row(t, "kernel_mean_real", kernel_mean.real),
                _stat_row(t, "kernel_mean_imag", kernel_mean.imag),
                _stat_row(t, "kernel_var", process.kernel_var(t)),
            ],
        )
    comments = _seed_comments(session, process.variant) + [
        ("x0", x0),
        ("y", y),
        ("n_paths", session.n_paths),
        ("n_em_steps", n_steps),
    ]
    return [write_csv(rows, out_dir / "simulate.csv", comments)]


def _wav_mixtures(pairs):
    mixtures = []
    for clean_path, noise_path in pairs:
        clean, noise = read_wav(clean_path), read_wav(noise_path)
        if len(clean) != len(noise):
            raise SignalError(f"{clean_path} and {noise_path} differ in length")
        mixture = clean.with_samples(clean.samples + noise.samples)
        mixtures.append(
            Mixture(clean, noise, mixture, snr_db(mixture, clean)),
        )
    return mixtures


def _load_mixtures(session, args):
    if args.pair:
        return _wav_mixtures(args.pair)
    synthetic = session.synthetic
    if args.synthetic is not None:
        synthetic = synthetic.copy(update={"n_mixtures": args.synthetic})
    return synthetic_mixtures(synthetic, session.seed)


@reports_errors
def cmd_mismatch(session, args, out_dir):
    """
    SNR improvement of the mean over the mixture for both presets, averaged over the
    mixtures in the dB domain. The `mixture` rows are the reference line of `Y`.
    """
    mixtures = _load_mixtures(session, args)
    rows = []
    for preset in COMPARED_PRESETS:
        process = create_process(parse_process_params(Constants.PRESETS[preset]))
        t_grid = np.linspace(
            process.end_time / args.points, process.end_time, args.points,
        )
        trajectories = [
            dsnr_trajectory(
                process,
                mixture.clean,
                mixture.noise,
                t_grid,
                session.stft,
                session.compression,
            )
            for mixture in mixtures
        ]
        for point in average_trajectories(trajectories):
            rows.append(
                {
                    "t": point.t,
                    "dsnr_db": point.dsnr_db,
                    "variant": process.variant,
                    "analytic_dsnr_db": as_report_value(
                        analytic_dsnr_db(process, point.t),
                    ),
                },
            )
        log.info(
            "%s: mean SNR improvement %.3f dB at T = %g",
            preset,
            rows[-1]["dsnr_db"],
            process.end_time,
        )

    for t in np.linspace(1.0 / args.points, 1.0, args.points):
        rows.append(
            {"t": t, "dsnr_db": 0.0, "variant": "mixture", "analytic_dsnr_db": 0.0},
        )

    mean_snr = float(np.mean([mixture.snr_db for mixture in mixtures]))
    comments = [
        ("seed", session.seed),
        ("n_mixtures", len(mixtures)),
        ("mixture_snr_db", f"{mean_snr:.6f}"),
    ]
    return [write_csv(rows, out_dir / "mismatch.csv", comments)]


def _enhancement_inputs(session, args):
    if args.clean and args.noise:
        clean = read_wav(args.clean)
        mixture, noise = mix_at_snr(clean, read_wav(args.noise), args.snr)
        return clean, noise, mixture
    synthetic = session.synthetic.copy(update={"n_mixtures": 1})
    first = synthetic_mixtures(synthetic, session.seed)[0]
    return first.clean, first.noise, first.mixture


@reports_errors
def cmd_enhance_oracle(session, args, out_dir):
    """
    Enhances one mixture with the reverse sampler driven by the conditional score of
    the known clean signal. The score uses the clean signal, so the output shows what
    the sampler achieves with a perfect score and is labelled as an oracle run.
    """
    process = create_process(session.process)
    clean, noise, mixture = _enhancement_inputs(session, args)
    reverse_cfg = session.reverse

    clean_c = compress(stft(clean, session.stft), session.compression)
    mixture_c = compress(stft(mixture, session.stft), session.compression)
    schedule = reverse_schedule(process, reverse_cfg)
    log.info(
        "Oracle enhancement with %d of %d predictor iterations",
        schedule.n_iterations,
        reverse_cfg.n_steps_full,
    )
    score = ConditionalScore(process, clean_c)
    estimate_c = reverse_pc(process, mixture_c, score, reverse_cfg)
    enhanced = istft(
        decompress(estimate_c, session.compression),
        session.stft,
        len(mixture),
        mixture.sample_rate,
    )

    wav_path = write_wav(enhanced, out_dir / "enhanced.wav")
    metrics = {
        "score": score.label,
        "oracle": True,
        "variant": process.variant,
        "t_rs": float(schedule.times[0]),
        "step_size": schedule.step_size,
        "n_iterations": schedule.n_iterations,
        "n_steps_full": reverse_cfg.n_steps_full,
        "seed": reverse_cfg.seed,
        "mixture": si_metrics(mixture, clean, noise).scores(),
        "enhanced": si_metrics(enhanced, clean, noise).scores(),
    }
    return [wav_path, write_json_report(metrics, out_dir / "enhance_metrics.json")]


@reports_errors
def cmd_score(session, args, out_dir):
    """Scale-invariant metrics of estimates against their clean and noise references"""
    rows = []
    for estimate_path, clean_path, noise_path in args.triple:
        decomposition = si_metrics(
            read_wav(estimate_path), read_wav(clean_path), read_wav(noise_path),
        )
        rows.append({"file": Path(estimate_path).name, **decomposition.scores()})
    return [write_csv(rows, out_dir / "score.csv")]


@reports_errors
def cmd_specfun(session, args, out_dir):
    result = ei(args.x)
    print(f"{result.value!r} {result.est_abs_error!r}")
    return []
