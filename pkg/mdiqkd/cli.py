"""
The mdiqkd command line: `mdiqkd run` simulates a session and `mdiqkd
selftest` runs the verification suites.

Exit status is 0 on success, 1 when a run aborts (for example when error
correction fails) or a selftest suite fails, and 2 for usage errors.
"""
import argparse
import json
import logging
import sys

from mdiqkd import report, selftest
from mdiqkd.channel import ChannelKind, CharlieKind
from mdiqkd.config import WORKERS_ENV, load_config
from mdiqkd.errors import CapabilityError, ErrorCorrectionFailed, MdiqkdError, UsageError
from mdiqkd.optics import Encoding
from mdiqkd.protocols.utils import Protocol
from mdiqkd.session import run_session
from mdiqkd.version import get_version


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"
VERBOSITY = ("DEBUG", "INFO", "WARNING", "ERROR")

EXIT_OK = 0
EXIT_ABORT = 1
EXIT_USAGE = 2

# Output path meaning standard output.
STDOUT_PATH = "-"

# Flag destinations and the RunConfig settings they override.
FLAG_SETTINGS = {
    "protocol": "protocol",
    "n": "n",
    "rounds": "rounds",
    "channel": "channel",
    "p": "p",
    "channel_legs": "channel_legs",
    "charlie": "charlie",
    "seed": "seed",
    "sample_fraction": "sample_fraction",
    "out": "output_path",
    "workers": "workers",
    "safety_margin": "safety_margin",
    "ec_max_passes": "ec_max_passes",
    "bob_encoding": "bob_encoding",
    "modulus": "modulus",
}


def create_parser():
    parser = argparse.ArgumentParser(
        prog="mdiqkd",
        description="Simulates qudit measurement-device-independent QKD protocols.",
    )
    parser.add_argument("--version", action="version", version=get_version())
    parser.add_argument(
        "--verbosity",
        choices=VERBOSITY,
        default="WARNING",
        help="Logging level (logs go to stderr).",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    run = commands.add_parser("run", help="Simulate a session and distill a key.")
    run.add_argument("--config", help="JSON file of settings; flags take precedence.")
    run.add_argument("--protocol", choices=[p.value for p in Protocol])
    run.add_argument("--n", type=int, help="Field degree: qudits have N = 2^n levels.")
    run.add_argument("--rounds", type=int)
    run.add_argument("--channel", choices=[k.value for k in ChannelKind])
    run.add_argument("--p", type=float, help="Channel noise or loss probability.")
    run.add_argument(
        "--channel-legs",
        help="Comma separated legs the channel acts on (alice,bob).",
    )
    run.add_argument("--charlie", choices=[k.value for k in CharlieKind])
    run.add_argument("--seed", type=int, help="Master seed (64 bit unsigned).")
    run.add_argument("--sample-fraction", type=float)
    run.add_argument(
        "--out",
        help="Write the JSON lines round log here ('%s' for stdout)." % STDOUT_PATH,
    )
    run.add_argument(
        "--workers",
        type=int,
        help="Worker processes (also read from %s)." % WORKERS_ENV,
    )
    run.add_argument("--safety-margin", type=int, help="Bits removed from the key.")
    run.add_argument("--ec-max-passes", type=int)
    run.add_argument("--bob-encoding", choices=[e.value for e in Encoding])
    run.add_argument("--modulus", help="Field modulus, e.g. 0b111 or 7.")

    commands.add_parser("selftest", help="Run the exhaustive verification suites.")
    return parser


def round_log_lines(config, result):
    """
    Yields the JSON lines of the round log: one record per round, then a
    summary record. Keys are sorted and nothing depends on time or on the
    number of workers.
    """
    for record in result.records:
        yield json.dumps(dict(record.to_dict(), type="round"), sort_keys=True)
    settings = config.to_dict()
    del settings["workers"]
    del settings["output_path"]
    summary = {
        "type": "summary",
        "config": settings,
        "report": result.report.to_dict(),
    }
    yield json.dumps(summary, sort_keys=True)


def write_round_log(handle, config, result):
    for line in round_log_lines(config, result):
        handle.write(line + "\n")


def run_command(args, stdout, stderr):
    overrides = {
        setting: getattr(args, flag) for flag, setting in FLAG_SETTINGS.items()
    }
    try:
        config = load_config(args.config, overrides)
    except (UsageError, CapabilityError) as ex:
        logger.critical("Invalid configuration: %s", ex)
        stderr.write("mdiqkd: %s\n" % ex)
        return EXIT_USAGE
    try:
        result = run_session(config)
    except ErrorCorrectionFailed as ex:
        logger.critical("Session aborted: %s", ex)
        stderr.write("mdiqkd: aborted: %s\n" % ex)
        return EXIT_ABORT
    except MdiqkdError as ex:
        logger.critical("Session failed: %s", ex)
        stderr.write("mdiqkd: %s\n" % ex)
        return EXIT_ABORT
    text = report.render(result.report, config)
    if config.output_path == STDOUT_PATH:
        write_round_log(stdout, config, result)
        stderr.write(text)
        return EXIT_OK
    if config.output_path:
        try:
            with open(config.output_path, "w", encoding="utf-8") as handle:
                write_round_log(handle, config, result)
        except OSError as ex:
            logger.critical("Cannot write %s: %s", config.output_path, ex.strerror)
            stderr.write("mdiqkd: cannot write %s\n" % config.output_path)
            return EXIT_ABORT
        logger.info("Round log written to %s", config.output_path)
    stdout.write(text)
    return EXIT_OK


def selftest_command(args, stdout):
    results = selftest.run_selftest()
    stdout.write(selftest.render_table(results))
    return EXIT_OK if selftest.all_passed(results) else EXIT_ABORT


def main(argv=None, stdout=None, stderr=None):
    """
    Entry point. Returns the exit status instead of exiting.
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code
    logging.basicConfig(format=LOG_FORMAT)
    logging.getLogger().setLevel(args.verbosity)
    if args.command == "selftest":
        return selftest_command(args, stdout)
    return run_command(args, stdout, stderr)
