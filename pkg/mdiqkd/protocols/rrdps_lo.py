"""
MDI-RRDPS with linear optics.

Bob splits GF(N) into N/2 random pairs, giving the qubit-like basis of states
(|j> +- |k>) / sqrt(2). He withholds (|j> + (-1)^t |k>) / sqrt(2) for one
pair and sends the other N-1 basis states. Charlie tries to project Alice's
qudit and Bob's N-1 onto the antisymmetric state and announces success; Bob
then announces the withheld pair. Alice's raw bit is s_j + s_k and Bob's is
t.
"""
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass

from mdiqkd import optics, qstate
from mdiqkd.channel import ChannelModel, CharlieModel, apply_channel, naive_charlie_attack
from mdiqkd.errors import CapabilityError, UsageError
from mdiqkd.optics import Encoding, ProductInput, pairing_state, project_onto_psi
from mdiqkd.rng import make_rng, random_bit

from .rrdps import RrdpsAliceChoice, rrdps_alice_prepare
from .utils import (
    Protocol,
    RoundRecord,
    Transcript,
    draw_bits,
    draw_pairing,
    unsifted,
)


logger = logging.getLogger(__name__)

# The explicit |Psi> checks need N <= 4.
MAX_LO_N = optics.MAX_EXPLICIT_N

LoBranch = namedtuple(
    "LoBranch", ["choices", "probability", "alice_raw", "bob_raw"]
)


@dataclass(frozen=True)
class LoBobChoice:
    """
    Bob's pairing of GF(N), which pair he withholds a state from, and the
    sign t of the withheld state.
    """

    spec: object
    pairing: tuple
    unsent_pair_index: int
    t: int

    def __post_init__(self):
        pairing = tuple(tuple(int(v) for v in pair) for pair in self.pairing)
        object.__setattr__(self, "pairing", pairing)
        optics.check_pairing(pairing, self.spec.N)
        if not 0 <= self.unsent_pair_index < len(pairing):
            raise UsageError("No pair at index %r" % self.unsent_pair_index)

    @property
    def withheld(self):
        """
        (j, k, t) of the state Bob keeps.
        """
        j, k = self.pairing[self.unsent_pair_index]
        return j, k, self.t

    @property
    def sent(self):
        """
        (j, k, sign) of each of the N-1 sent states, in sending order.
        """
        return tuple(
            (j, k, sign)
            for index, (j, k) in enumerate(self.pairing)
            for sign in (0, 1)
            if (index, sign) != (self.unsent_pair_index, self.t)
        )

    @property
    def sent_signs(self):
        return tuple(sign for _, _, sign in self.sent)


def check_lo_capability(spec):
    if spec.N > MAX_LO_N:
        raise CapabilityError(
            "Linear optics protocols are limited to N <= %d, got N=%d"
            % (MAX_LO_N, spec.N)
        )


def lo_bob_prepare(choice):
    """
    The N-1 states Bob sends.
    """
    N = choice.spec.N
    return tuple(pairing_state(j, k, sign, N) for j, k, sign in choice.sent)


def draw_lo_bob_choice(spec, rng):
    return LoBobChoice(
        spec,
        draw_pairing(rng, spec.N),
        int(rng.integers(spec.N // 2)),
        random_bit(rng),
    )


def transmit(alice_state, bob_states, channel, rng):
    """
    Sends Alice's qudit and each of Bob's through the channel. Returns
    (alice_state, bob_states, lost).
    """
    if channel.acts_on("alice"):
        alice_state, lost = apply_channel(alice_state, 0, channel, rng)
        if lost:
            return alice_state, bob_states, True
    if channel.acts_on("bob"):
        sent = []
        for state in bob_states:
            state, lost = apply_channel(state, 0, channel, rng)
            if lost:
                return alice_state, bob_states, True
            sent.append(state)
        bob_states = tuple(sent)
    return alice_state, bob_states, False


def run_mdi_rrdps_lo_round(
    spec,
    rng_seed=None,
    channel=None,
    charlie=None,
    round_index=0,
    encoding=Encoding.LOGICAL,
):
    """
    Runs one linear optics MDI-RRDPS round.
    """
    check_lo_capability(spec)
    channel = channel or ChannelModel.ideal()
    charlie = charlie or CharlieModel()
    rng = make_rng(rng_seed)
    alice = RrdpsAliceChoice(spec, draw_bits(rng, spec.N))
    bob = draw_lo_bob_choice(spec, rng)
    j, k, t = bob.withheld
    choices = {
        "s": list(alice.s),
        "pairing": [list(p) for p in bob.pairing],
        "unsent_pair_index": bob.unsent_pair_index,
        "t": t,
    }
    alice_state = rrdps_alice_prepare(alice)
    bob_states = lo_bob_prepare(bob)
    transcript = Transcript()
    if charlie.attacking:
        naive_charlie_attack(alice_state, bob_states[0], transcript, rng)
    alice_state, bob_states, lost = transmit(alice_state, bob_states, channel, rng)
    if lost:
        return unsifted(
            Protocol.MDI_RRDPS_LO, round_index, choices, lost=True, transcript=transcript
        )
    if charlie.silent:
        transcript.announce_measurement(None)
        return unsifted(Protocol.MDI_RRDPS_LO, round_index, choices, transcript=transcript)
    projection = project_onto_psi(
        ProductInput((alice_state,) + bob_states, encoding), rng
    )
    transcript.announce_measurement(projection.success)
    if not projection.success:
        return unsifted(
            Protocol.MDI_RRDPS_LO, round_index, choices, False, transcript=transcript
        )
    transcript.announce_pair("bob", (j, k))
    return RoundRecord(
        Protocol.MDI_RRDPS_LO,
        round_index,
        choices,
        True,
        True,
        alice_raw=(alice.s[j] ^ alice.s[k],),
        bob_raw=(t,),
        pairs=((j, k),),
        transcript=transcript,
    )


def perfect_matchings(elements):
    """
    Yields every perfect matching of `elements` as a tuple of sorted pairs.
    """
    elements = tuple(elements)
    if not elements:
        yield ()
        return
    first = elements[0]
    for index in range(1, len(elements)):
        rest = elements[1:index] + elements[index + 1 :]
        for matching in perfect_matchings(rest):
            yield ((first, elements[index]),) + matching


def enumerate_lo_bob_choices(spec):
    for pairing in perfect_matchings(range(spec.N)):
        for unsent, t in itertools.product(range(spec.N // 2), (0, 1)):
            yield LoBobChoice(spec, pairing, unsent, t)


def enumerate_rrdps_lo_branches(spec, encoding=Encoding.LOGICAL):
    """
    One branch per (s, Bob's choice) of a noiseless honest round: the exact
    probability that Charlie's projection succeeds and the raw bits if it
    does. Every choice is equally likely.
    """
    check_lo_capability(spec)
    branches = []
    for s in itertools.product((0, 1), repeat=spec.N):
        alice_state = rrdps_alice_prepare(RrdpsAliceChoice(spec, s))
        for bob in enumerate_lo_bob_choices(spec):
            j, k, t = bob.withheld
            probability = abs(
                optics.antisym_overlap_det(
                    ProductInput((alice_state,) + lo_bob_prepare(bob), encoding)
                )
            ) ** 2
            branches.append(
                LoBranch(
                    {
                        "s": s,
                        "pairing": bob.pairing,
                        "unsent_pair_index": bob.unsent_pair_index,
                        "t": t,
                    },
                    probability,
                    (s[j] ^ s[k],),
                    (t,),
                )
            )
    return branches


def average_success_probability(branches):
    return sum(b.probability for b in branches) / len(branches)


def successful(branches):
    return [b for b in branches if b.probability > qstate.TOLERANCE]
