"""
The mother-of-all scheme: Alice and Bob each prepare |Phi_00>, send one half
to Charlie for entanglement swapping, correct, and measure their retained
halves in the computational basis. Each sifted round yields n key bits.
"""
import logging

from mdiqkd import postprocess, qstate
from mdiqkd.channel import ChannelModel, CharlieModel, naive_charlie_attack
from mdiqkd.errors import UsageError
from mdiqkd.rng import POSTPROCESS_STREAM, make_rng, round_seed, split_seed
from mdiqkd.swap import CorrectedBy, run_swap_round

from .utils import Protocol, RoundRecord, Transcript, bits_of, unsifted


logger = logging.getLogger(__name__)


def measure_retained(spec, post_state, rng):
    """
    Alice then Bob measure their retained qudits in the computational basis.
    Returns (alice_value, bob_value).
    """
    basis = qstate.computational_basis(spec.N, 1)
    first = qstate.measure_in_basis(post_state, [0], basis, rng)
    second = qstate.measure_in_basis(first.posterior, [0], basis, rng)
    return first.outcome, second.outcome


def run_mother_round(
    spec,
    rng_seed=None,
    channel=None,
    charlie=None,
    round_index=0,
    corrected_by=CorrectedBy.BOB,
):
    """
    Runs one round of the mother-of-all scheme.
    """
    channel = channel or ChannelModel.ideal()
    charlie = charlie or CharlieModel()
    rng = make_rng(rng_seed)
    corrected_by = CorrectedBy(corrected_by)
    choices = {"corrected_by": corrected_by.value}
    transcript = Transcript()
    if charlie.attacking:
        # There are no pairs to learn; the transcript refuses the attack.
        naive_charlie_attack(None, None, transcript, rng)
    if charlie.silent:
        transcript.announce_measurement(None)
        return unsifted(Protocol.MOTHER, round_index, choices, transcript=transcript)
    swap = run_swap_round(spec, corrected_by, rng, channel)
    if swap.lost:
        return unsifted(
            Protocol.MOTHER, round_index, choices, lost=True, transcript=transcript
        )
    transcript.announce_measurement(swap.outcome)
    alice_value, bob_value = measure_retained(spec, swap.post_state, rng)
    return RoundRecord(
        Protocol.MOTHER,
        round_index,
        choices,
        swap.outcome,
        True,
        alice_raw=bits_of(alice_value, spec.n),
        bob_raw=bits_of(bob_value, spec.n),
        transcript=transcript,
    )


def run_mother_of_all_session(
    spec,
    rounds,
    rng_seed=0,
    channel=None,
    sample_fraction=postprocess.DEFAULT_SAMPLE_FRACTION,
):
    """
    Runs `rounds` sequential rounds from the master seed and distills the
    key. Returns the SessionReport.
    """
    if rounds < 1:
        raise UsageError("A session needs at least one round, got %r" % rounds)
    records = [
        run_mother_round(spec, round_seed(rng_seed, i), channel, round_index=i)
        for i in range(rounds)
    ]
    report, _ = postprocess.summarize(
        records, sample_fraction, split_seed(rng_seed, POSTPROCESS_STREAM)
    )
    logger.info("Mother-of-all agreement rate %s", report.agreement_rate)
    return report
