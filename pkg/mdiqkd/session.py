"""
Runs a configured session: fans rounds out to worker processes, merges the
records by round index and hands them to post-processing.

Each round's seed is split from the master seed by its index, so the records
do not depend on the number of workers.
"""
import dataclasses
import functools
import logging
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor

from mdiqkd import postprocess
from mdiqkd.channel import (
    ChannelKind,
    CharlieModel,
    depolarizing_disagreement_rate,
    depolarizing_qber,
)
from mdiqkd.errors import UsageError
from mdiqkd.protocols.chau15 import run_mdi_chau15_lo_round, run_naive_chau15_round
from mdiqkd.protocols.mother import run_mother_round
from mdiqkd.protocols.rrdps import run_mdi_rrdps_round
from mdiqkd.protocols.rrdps_lo import run_mdi_rrdps_lo_round
from mdiqkd.protocols.utils import LINEAR_OPTICS, Protocol
from mdiqkd.rng import (
    BASELINE_STREAM,
    POSTPROCESS_STREAM,
    ROUND_STREAM,
    split_seed,
)


logger = logging.getLogger(__name__)

ROUND_FUNCTIONS = {
    Protocol.MOTHER: run_mother_round,
    Protocol.MDI_RRDPS: run_mdi_rrdps_round,
    Protocol.MDI_RRDPS_LO: run_mdi_rrdps_lo_round,
    Protocol.MDI_CHAU15_LO: run_mdi_chau15_lo_round,
    Protocol.NAIVE_CHAU15: run_naive_chau15_round,
}

# Protocols whose raw bit error rate under depolarizing noise has a closed form.
ANALYTIC_QBER = frozenset([Protocol.MOTHER, Protocol.MDI_RRDPS])

# Rounds handed to a worker at a time.
CHUNK_SIZE = 64

SessionResult = namedtuple("SessionResult", ["report", "records", "distillation"])


def make_round_function(config, charlie=None):
    """
    Given the run configuration returns a picklable function that takes
    (round_index, seed) and runs that round.
    """
    kwargs = {
        "channel": config.channel,
        "charlie": charlie or config.charlie,
    }
    if config.protocol in LINEAR_OPTICS:
        kwargs["encoding"] = config.bob_encoding
    return functools.partial(
        _run_round, ROUND_FUNCTIONS[config.protocol], config.spec, kwargs
    )


def _run_round(function, spec, kwargs, round_index, seed):
    return function(spec, seed, round_index=round_index, **kwargs)


def _run_chunk(round_function, master_seed, stream, indices):
    return [
        round_function(i, split_seed(master_seed, stream, i)) for i in indices
    ]


def run_rounds(round_function, master_seed, rounds, workers=1, stream=ROUND_STREAM):
    """
    Runs `rounds` rounds and returns their records in round order.
    """
    if rounds < 1:
        raise UsageError("A session needs at least one round, got %r" % rounds)
    chunks = [
        range(start, min(rounds, start + CHUNK_SIZE))
        for start in range(0, rounds, CHUNK_SIZE)
    ]
    run = functools.partial(_run_chunk, round_function, master_seed, stream)
    if workers > 1 and len(chunks) > 1:
        logger.info("Running %d rounds on %d workers", rounds, workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]
    records = [record for chunk in results for record in chunk]
    records.sort(key=lambda record: record.round_index)
    return records


def expected_rates(config):
    """
    Returns the analytic (expected_qber, expected_disagreement_rate) for the
    configured channel, with None for a value that has no closed form here.
    """
    channel = config.channel
    if channel.kind is not ChannelKind.DEPOLARIZING:
        return None, None
    qber = disagreement = None
    if config.protocol in ANALYTIC_QBER:
        qber = depolarizing_qber(channel.p, channel.noisy_legs)
    if config.protocol is Protocol.MOTHER:
        disagreement = depolarizing_disagreement_rate(
            channel.p, config.spec.N, channel.noisy_legs
        )
    return qber, disagreement


def run_session(config):
    """
    Runs the configured session. Returns SessionResult(report, records,
    distillation). When Charlie attacks, an honest baseline is run from an
    independent stream and the difference in raw QBER is reported.
    """
    logger.info(
        "Starting %s session: n=%d, %d rounds, seed %d",
        config.protocol.value,
        config.n,
        config.rounds,
        config.seed,
    )
    records = run_rounds(
        make_round_function(config), config.seed, config.rounds, config.workers
    )
    report, distillation = postprocess.summarize(
        records,
        config.sample_fraction,
        split_seed(config.seed, POSTPROCESS_STREAM),
        config.safety_margin,
        config.ec_max_passes,
    )
    expected_qber, expected_disagreement = expected_rates(config)
    report = dataclasses.replace(
        report,
        expected_qber=expected_qber,
        expected_disagreement_rate=expected_disagreement,
    )
    if config.charlie.attacking:
        baseline = run_rounds(
            make_round_function(config, CharlieModel()),
            config.seed,
            config.rounds,
            config.workers,
            BASELINE_STREAM,
        )
        baseline_report, _ = postprocess.summarize(
            baseline,
            config.sample_fraction,
            split_seed(config.seed, POSTPROCESS_STREAM, 1),
            config.safety_margin,
            config.ec_max_passes,
        )
        if report.raw_qber is not None and baseline_report.raw_qber is not None:
            report = dataclasses.replace(
                report, qber_delta=report.raw_qber - baseline_report.raw_qber
            )
    logger.info(
        "Session finished: %d sifted bits, final key length %d",
        report.sifted_bits,
        report.final_key_length,
    )
    if report.final_key_length:
        logger.warning(
            "The final key length is a heuristic estimate, not a proven secure rate"
        )
    return SessionResult(report, records, distillation)
