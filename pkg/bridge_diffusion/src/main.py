import argparse
import logging
import sys

from pydantic import ValidationError

from bridge_diffusion.src import commands
from bridge_diffusion.src.common.config import SessionConfig
from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.exceptions import BridgeDiffusionError
from bridge_diffusion.src.common.helpers import ensure_out_dir
from bridge_diffusion.src.common.logger_setup import setup_logger

log = logging.getLogger()

DEFAULT_PRESET = "bbed-paper"


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--preset",
        choices=sorted(Constants.PRESETS),
        help=f"Named process parameterisation (default {DEFAULT_PRESET})",
    )
    common.add_argument("--config", help="Path of a JSON session config")
    common.add_argument("--seed", type=int, help="Root seed of all random streams")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--steps", type=int, help="Reverse steps over the full [0, T]")
    common.add_argument("--t-rs", type=float, help="Reverse starting time")
    common.add_argument("--paths", type=int, help="Number of Monte-Carlo paths")
    common.add_argument("--em-steps", type=int, help="Euler-Maruyama steps over [0, T]")

    parser = argparse.ArgumentParser(
        prog="bridge-diffusion",
        description="Interpolating diffusion processes for signal restoration",
    )
    subparsers = parser.add_subparsers(dest="command_name", required=True)

    analyze = subparsers.add_parser(
        "analyze", parents=[common], help="Variance evolution of the process",
    )
    analyze.add_argument("--compare", action="store_true", help="Both presets")
    analyze.add_argument(
        "--grid", action="store_true", help="Peak and calibration table of the bridge",
    )
    analyze.set_defaults(command=commands.cmd_analyze)

    verify = subparsers.add_parser(
        "verify", parents=[common], help="Check closed forms against simulation",
    )
    verify.add_argument(
        "--corrupt-variance", type=float, default=1.0, help=argparse.SUPPRESS,
    )
    verify.set_defaults(command=commands.cmd_verify)

    simulate = subparsers.add_parser(
        "simulate", parents=[common], help="Monte-Carlo moments of forward paths",
    )
    simulate.add_argument("--x0", default="1+0j", help="Clean starting value")
    simulate.add_argument("--y", default="-0.5+0.5j", help="Mixture value")
    simulate.add_argument("--records", type=int, default=10, help="Recorded times")
    simulate.add_argument("--workers", type=int, default=1)
    simulate.set_defaults(command=commands.cmd_simulate)

    mismatch = subparsers.add_parser(
        "mismatch", parents=[common], help="SNR improvement of the mean over time",
    )
    mismatch.add_argument(
        "--pair",
        nargs=2,
        action="append",
        metavar=("CLEAN", "NOISE"),
        help="Clean and noise WAV files, repeatable",
    )
    mismatch.add_argument("--synthetic", type=int, help="Number of synthetic mixtures")
    mismatch.add_argument("--points", type=int, default=50, help="Times per process")
    mismatch.set_defaults(command=commands.cmd_mismatch)

    enhance = subparsers.add_parser(
        "enhance-oracle",
        parents=[common],
        help="Reverse sampling with the conditional oracle score",
    )
    enhance.add_argument("--clean", help="Clean WAV file")
    enhance.add_argument("--noise", help="Noise WAV file")
    enhance.add_argument("--snr", type=float, default=5.0, help="Mixing SNR in dB")
    enhance.set_defaults(command=commands.cmd_enhance_oracle)

    score = subparsers.add_parser(
        "score", parents=[common], help="SI-SDR, SI-SIR and SI-SAR of WAV files",
    )
    score.add_argument(
        "--triple",
        nargs=3,
        action="append",
        required=True,
        metavar=("ESTIMATE", "CLEAN", "NOISE"),
    )
    score.set_defaults(command=commands.cmd_score)

    specfun = subparsers.add_parser("specfun", parents=[common])
    specfun.add_argument("function", choices=["ei"])
    specfun.add_argument("x", type=float)
    specfun.set_defaults(command=commands.cmd_specfun)
    return parser


def _validated(data):
    try:
        return SessionConfig(**data)
    except ValidationError as e:
        raise BridgeDiffusionError(f"Invalid session settings: {e}")


def resolve_session(args):
    """
    Builds the session from the config file or preset and applies command line
    overrides. The result is validated again so overrides obey the same rules.

    :raises BridgeDiffusionError: If the overrides make the session invalid
    """
    if args.config:
        session = SessionConfig.load(args.config)
        if args.preset:
            data = session.dict()
            data["process"] = dict(Constants.PRESETS[args.preset])
            session = _validated(data)
    else:
        session = SessionConfig.from_preset(args.preset or DEFAULT_PRESET)

    data = session.dict()
    if args.seed is not None:
        data["seed"] = args.seed
        data["reverse"]["seed"] = args.seed
    if args.steps is not None:
        data["reverse"]["n_steps_full"] = args.steps
    if args.t_rs is not None:
        data["reverse"]["t_rs"] = args.t_rs
    if args.paths is not None:
        data["n_paths"] = args.paths
    if args.em_steps is not None:
        data["n_em_steps"] = args.em_steps
    data["out_dir"] = str(args.out or session.resolve_out_dir())

    return _validated(data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        session = resolve_session(args)
        setup_logger(session.log_level, session.log_location)
        out_dir = ensure_out_dir(session.out_dir)
        session.write(out_dir / Constants.RESOLVED_CONFIG_FILE_NAME)
        log.info("Running %s with seed %d", args.command_name, session.seed)
        args.command(session, args, out_dir)
    except BridgeDiffusionError as e:
        log.error("%s failed: %s", args.command_name, e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
