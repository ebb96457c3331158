"""
One round of the mother-of-all entanglement-swapping scheme.

Qudits are ordered (A1, A2, B1, B2): Alice keeps A1 and sends A2, Bob keeps
B1 and sends B2. Charlie measures the sent halves, indices (1, 3), in the
generalised Bell basis and announces (a, b). One party then applies the
matching correction to the retained half so that A1, B1 share |Phi_00>.
"""
import enum
import logging
from dataclasses import dataclass
from typing import Optional

from mdiqkd import qstate
from mdiqkd.channel import apply_channel
from mdiqkd.errors import CapabilityError
from mdiqkd.rng import make_rng


logger = logging.getLogger(__name__)

# Indices of the qudits Charlie receives.
CHARLIE_QUDITS = (1, 3)
ALICE_KEPT, BOB_KEPT = 0, 2
# swap_outcome_table enumerates an N^4 dimensional space.
MAX_TABLE_N = 16


class CorrectedBy(enum.Enum):
    """
    Which party applies the correction after Charlie's announcement.
    """

    ALICE = "alice"
    BOB = "bob"


@dataclass(frozen=True)
class SwapRound:
    """
    The outcome of one swapping round. outcome and post_state are None when
    one of the sent halves was lost in the channel.
    """

    spec: object
    outcome: Optional[qstate.BellLabel]
    probability: float
    pre_state: qstate.StateVector
    post_state: Optional[qstate.StateVector]
    corrected_by: CorrectedBy
    lost: bool = False

    @property
    def fidelity(self):
        """
        Fidelity of the corrected retained pair with |Phi_00>.
        """
        if self.post_state is None:
            return 0.0
        return qstate.fidelity(self.post_state, phi_00(self.spec))


def phi_00(spec):
    return qstate.make_phi(qstate.BellLabel(spec.zero(), spec.zero()))


def initial_state(spec):
    """
    |Phi_00> (x) |Phi_00> on (A1, A2, B1, B2).
    """
    pair = phi_00(spec)
    return qstate.tensor(pair, pair)


def correct(spec, retained, outcome, corrected_by):
    """
    Applies the correction for `outcome` to the two qudit state (A1, B1).
    """
    if corrected_by is CorrectedBy.ALICE:
        return qstate.apply_alice_correction(retained, 0, outcome)
    return qstate.apply_correction(retained, 1, outcome)


def _check_capability(spec):
    if spec.N > MAX_TABLE_N:
        raise CapabilityError(
            "Entanglement swapping is limited to N <= %d, got N=%d"
            % (MAX_TABLE_N, spec.N)
        )


def run_swap_round(spec, corrected_by=CorrectedBy.BOB, rng_seed=None, channel=None):
    """
    Runs one sampled swapping round.

    `channel` is an optional ChannelModel applied to the legs it names
    before Charlie measures.
    """
    _check_capability(spec)
    corrected_by = CorrectedBy(corrected_by)
    rng = make_rng(rng_seed)
    pre_state = initial_state(spec)
    state = pre_state
    if channel is not None:
        for leg, index in (("alice", CHARLIE_QUDITS[0]), ("bob", CHARLIE_QUDITS[1])):
            if channel.acts_on(leg):
                state, lost = apply_channel(state, index, channel, rng)
                if lost:
                    logger.debug("Swap round lost on the %s leg", leg)
                    return SwapRound(spec, None, 0.0, pre_state, None, corrected_by, True)
    measurement = qstate.measure_in_basis(
        state, CHARLIE_QUDITS, qstate.bell_basis(spec), rng
    )
    outcome = qstate.BellLabel.from_index(spec, measurement.outcome)
    post_state = correct(spec, measurement.posterior, outcome, corrected_by)
    logger.debug("Charlie announced %r (p=%.6g)", outcome, measurement.probability)
    return SwapRound(
        spec, outcome, measurement.probability, pre_state, post_state, corrected_by
    )


def swap_outcome_table(spec, corrected_by=CorrectedBy.BOB):
    """
    Projects the sent halves of the noiseless initial state onto every Bell
    state in turn. Returns a dict BellLabel -> (probability, fidelity) where
    fidelity is that of the corrected retained pair with |Phi_00>.
    """
    _check_capability(spec)
    corrected_by = CorrectedBy(corrected_by)
    state = initial_state(spec)
    target = phi_00(spec)
    table = {}
    for index, vector in enumerate(qstate.bell_basis(spec)):
        outcome = qstate.BellLabel.from_index(spec, index)
        branch, probability = qstate.project(state, CHARLIE_QUDITS, vector)
        corrected = correct(spec, branch.normalize(), outcome, corrected_by)
        table[outcome] = (probability, qstate.fidelity(corrected, target))
    return table
