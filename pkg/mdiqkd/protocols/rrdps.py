"""
The MDI round-robin differential-phase-shift scheme with a Bell measurement.

Alice sends sum_i (-1)^{s_i} |i> / sqrt(N), Bob sends (|j> + (-1)^t |k>) /
sqrt(2). Charlie measures both in the generalised Bell basis and announces
(a, b); only then does Bob announce j, k. Alice's raw bit is

    s_{k+a} + s_{j+a} + Tr(b (j + k))  (mod 2)

and Bob's is t.
"""
import itertools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass

from mdiqkd import qstate
from mdiqkd.channel import ChannelModel, CharlieModel, apply_channel, naive_charlie_attack
from mdiqkd.errors import CapabilityError, UsageError
from mdiqkd.rng import make_rng, random_bit

from .utils import (
    Protocol,
    RoundRecord,
    Transcript,
    draw_bits,
    draw_distinct_pair,
    unsifted,
)


logger = logging.getLogger(__name__)

# Charlie's N^2 outcome Bell measurement is simulated up to this N.
MAX_BELL_N = 16
# Exhaustive branch enumeration is limited to this N.
MAX_ENUMERATION_N = 4

Branch = namedtuple(
    "Branch", ["choices", "outcome", "probability", "alice_raw", "bob_raw"]
)


@dataclass(frozen=True)
class RrdpsAliceChoice:
    """
    Alice's phase signs, s[i] for each element i of GF(N).
    """

    spec: object
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(v) for v in self.s))
        if len(self.s) != self.spec.N:
            raise UsageError("Expected %d phase bits, got %d" % (self.spec.N, len(self.s)))


@dataclass(frozen=True)
class RrdpsBobChoice:
    spec: object
    t: int
    j: object
    k: object

    def __post_init__(self):
        object.__setattr__(self, "j", self.spec.element(int(self.j)))
        object.__setattr__(self, "k", self.spec.element(int(self.k)))
        if self.j == self.k:
            raise UsageError("Bob's j and k must differ, both are %r" % self.j)

    @property
    def pair(self):
        return (self.j.bits, self.k.bits)


def check_bell_capability(spec):
    if spec.N > MAX_BELL_N:
        raise CapabilityError(
            "Bell measurements are simulated for N <= %d, got N=%d"
            % (MAX_BELL_N, spec.N)
        )


def rrdps_alice_prepare(choice):
    """
    sum_i (-1)^{s_i} |i> / sqrt(N).
    """
    N = choice.spec.N
    amplitude = 1 / math.sqrt(N)
    return qstate.from_amplitudes(
        N, [-amplitude if bit else amplitude for bit in choice.s]
    )


def rrdps_bob_prepare(choice):
    """
    (|j> + (-1)^t |k>) / sqrt(2).
    """
    half = 1 / math.sqrt(2)
    return qstate.StateVector(
        choice.spec.N, 1, {choice.j.bits: half, choice.k.bits: -half if choice.t else half}
    )


def rrdps_alice_raw_bit(s, jk, ab):
    """
    Alice's raw bit for Bob's pair jk = (j, k) and Charlie's outcome ab.
    """
    spec = ab.spec
    j, k = (int(v) for v in jk)
    if j == k:
        raise UsageError("j and k must differ")
    a, b = ab.a.bits, ab.b.bits
    return s[k ^ a] ^ s[j ^ a] ^ spec.trace_bits(spec.mul_bits(b, j ^ k))


def run_mdi_rrdps_round(spec, rng_seed=None, channel=None, charlie=None, round_index=0):
    """
    Runs one MDI-RRDPS round: prepare, transmit, measure, announce, sift.
    """
    check_bell_capability(spec)
    channel = channel or ChannelModel.ideal()
    charlie = charlie or CharlieModel()
    rng = make_rng(rng_seed)
    alice = RrdpsAliceChoice(spec, draw_bits(rng, spec.N))
    j, k = draw_distinct_pair(rng, spec.N)
    bob = RrdpsBobChoice(spec, random_bit(rng), j, k)
    choices = {"s": list(alice.s), "t": bob.t, "j": j, "k": k}
    alice_state = rrdps_alice_prepare(alice)
    bob_state = rrdps_bob_prepare(bob)
    transcript = Transcript()
    if charlie.attacking:
        naive_charlie_attack(alice_state, bob_state, transcript, rng)
    for leg in ("alice", "bob"):
        if channel.acts_on(leg):
            state = alice_state if leg == "alice" else bob_state
            state, lost = apply_channel(state, 0, channel, rng)
            if lost:
                return unsifted(
                    Protocol.MDI_RRDPS, round_index, choices, lost=True, transcript=transcript
                )
            if leg == "alice":
                alice_state = state
            else:
                bob_state = state
    if charlie.silent:
        transcript.announce_measurement(None)
        return unsifted(Protocol.MDI_RRDPS, round_index, choices, transcript=transcript)
    measurement = qstate.measure_in_basis(
        qstate.tensor(alice_state, bob_state), [0, 1], qstate.bell_basis(spec), rng
    )
    outcome = qstate.BellLabel.from_index(spec, measurement.outcome)
    transcript.announce_measurement(outcome)
    transcript.announce_pair("bob", bob.pair)
    alice_raw = rrdps_alice_raw_bit(alice.s, bob.pair, outcome)
    logger.debug("Round %d: outcome %r, pair %r", round_index, outcome, bob.pair)
    return RoundRecord(
        Protocol.MDI_RRDPS,
        round_index,
        choices,
        outcome,
        True,
        alice_raw=(alice_raw,),
        bob_raw=(bob.t,),
        pairs=(bob.pair,),
        transcript=transcript,
    )


def enumerate_rrdps_branches(spec):
    """
    Every (choices, outcome) branch of a noiseless honest round with nonzero
    probability, computed by exact projection. probability is conditional
    on the choices.
    """
    if spec.N > MAX_ENUMERATION_N:
        raise CapabilityError(
            "Branch enumeration is limited to N <= %d" % MAX_ENUMERATION_N
        )
    N = spec.N
    basis = qstate.bell_basis(spec)
    branches = []
    for s in itertools.product((0, 1), repeat=N):
        alice_state = rrdps_alice_prepare(RrdpsAliceChoice(spec, s))
        for t, (j, k) in itertools.product((0, 1), itertools.permutations(range(N), 2)):
            bob = RrdpsBobChoice(spec, t, j, k)
            joint = qstate.tensor(alice_state, rrdps_bob_prepare(bob))
            for index, vector in enumerate(basis):
                _, probability = qstate.project(joint, [0, 1], vector)
                if probability <= qstate.TOLERANCE:
                    continue
                outcome = qstate.BellLabel.from_index(spec, index)
                branches.append(
                    Branch(
                        {"s": s, "t": t, "j": j, "k": k},
                        outcome,
                        probability,
                        (rrdps_alice_raw_bit(s, (j, k), outcome),),
                        (t,),
                    )
                )
    return branches
