"""
The Chau15 scheme, in two MDI forms.

MDI-Chau15 with linear optics follows the linear optics RRDPS round, except
that Alice sends (|j'> + (-1)^s |k'>) / sqrt(2) and the round is sifted only
if Bob's withheld pair {j, k} equals {j', k'}. The raw bits are s and t.

The naive version has both pairs public before Charlie measures. He does a
four outcome Bell-type measurement on the two pair subspaces and Bob flips
his bit by the announced sign. A cheating Charlie can learn both phases
first without being noticed; see channel.naive_charlie_attack.
"""
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass

from mdiqkd import optics, qstate
from mdiqkd.channel import (
    ChannelModel,
    CharlieModel,
    apply_channel,
    naive_announcement,
    naive_bell_basis,
    naive_charlie_attack,
    pair_basis,
)
from mdiqkd.errors import CapabilityError, UsageError, ValidationError
from mdiqkd.optics import Encoding, ProductInput, pairing_state, project_onto_psi
from mdiqkd.rng import make_rng, random_bit

from .rrdps import MAX_ENUMERATION_N, check_bell_capability
from .rrdps_lo import (
    check_lo_capability,
    draw_lo_bob_choice,
    enumerate_lo_bob_choices,
    lo_bob_prepare,
    transmit,
)
from .utils import Protocol, RoundRecord, Transcript, draw_distinct_pair, unsifted


logger = logging.getLogger(__name__)

# Bob's raw bit is t XOR this on sifted rounds. Fixed by derive_chau15_key_flip:
# a successful projection with matching pairs forces s = t.
CHAU15_LO_KEY_FLIP = 0

Chau15Branch = namedtuple(
    "Chau15Branch", ["choices", "probability", "sifted", "alice_raw", "bob_raw"]
)
NaiveBranch = namedtuple(
    "NaiveBranch",
    ["choices", "announcement", "probability", "alice_raw", "bob_raw", "charlie_guess"],
)


@dataclass(frozen=True)
class Chau15AliceChoice:
    spec: object
    s: int
    j: int
    k: int

    def __post_init__(self):
        for name in ("j", "k"):
            value = int(getattr(self, name))
            if not 0 <= value < self.spec.N:
                raise UsageError(
                    "%s=%r is not an element of GF(%d)" % (name, value, self.spec.N)
                )
            object.__setattr__(self, name, value)
        if self.j == self.k:
            raise UsageError("Alice's j' and k' must differ, both are %r" % self.j)

    @property
    def pair(self):
        return (self.j, self.k)


def chau15_alice_prepare(choice):
    """
    (|j'> + (-1)^s |k'>) / sqrt(2).
    """
    return pairing_state(choice.j, choice.k, choice.s, choice.spec.N)


def draw_chau15_alice_choice(spec, rng):
    j, k = draw_distinct_pair(rng, spec.N)
    return Chau15AliceChoice(spec, random_bit(rng), j, k)


def run_mdi_chau15_lo_round(
    spec,
    rng_seed=None,
    channel=None,
    charlie=None,
    round_index=0,
    encoding=Encoding.LOGICAL,
):
    """
    Runs one linear optics MDI-Chau15 round.
    """
    check_lo_capability(spec)
    channel = channel or ChannelModel.ideal()
    charlie = charlie or CharlieModel()
    rng = make_rng(rng_seed)
    alice = draw_chau15_alice_choice(spec, rng)
    bob = draw_lo_bob_choice(spec, rng)
    j, k, t = bob.withheld
    choices = {
        "s": alice.s,
        "alice_pair": list(alice.pair),
        "pairing": [list(p) for p in bob.pairing],
        "unsent_pair_index": bob.unsent_pair_index,
        "t": t,
    }
    alice_state = chau15_alice_prepare(alice)
    bob_states = lo_bob_prepare(bob)
    transcript = Transcript()
    if charlie.attacking:
        naive_charlie_attack(alice_state, bob_states[0], transcript, rng)
    alice_state, bob_states, lost = transmit(alice_state, bob_states, channel, rng)
    if lost:
        return unsifted(
            Protocol.MDI_CHAU15_LO, round_index, choices, lost=True, transcript=transcript
        )
    if charlie.silent:
        transcript.announce_measurement(None)
        return unsifted(Protocol.MDI_CHAU15_LO, round_index, choices, transcript=transcript)
    projection = project_onto_psi(
        ProductInput((alice_state,) + bob_states, encoding), rng
    )
    transcript.announce_measurement(projection.success)
    if not projection.success:
        return unsifted(
            Protocol.MDI_CHAU15_LO, round_index, choices, False, transcript=transcript
        )
    transcript.announce_pair("bob", (j, k))
    transcript.announce_pair("alice", alice.pair)
    pairs = ((j, k), alice.pair)
    if {j, k} != set(alice.pair):
        return RoundRecord(
            Protocol.MDI_CHAU15_LO,
            round_index,
            choices,
            True,
            False,
            pairs=pairs,
            transcript=transcript,
        )
    return RoundRecord(
        Protocol.MDI_CHAU15_LO,
        round_index,
        choices,
        True,
        True,
        alice_raw=(alice.s,),
        bob_raw=(t ^ CHAU15_LO_KEY_FLIP,),
        pairs=pairs,
        transcript=transcript,
    )


def enumerate_chau15_lo_branches(spec, encoding=Encoding.LOGICAL, oracle=None):
    """
    Every (Alice's choice, Bob's choice) of a noiseless honest round with the
    exact success probability. Alice's pairs are taken unordered: swapping
    j' and k' only changes a global phase.

    `oracle` computes the overlap with |Psi> (the determinant by default).
    """
    check_lo_capability(spec)
    oracle = oracle or optics.antisym_overlap_det
    branches = []
    for (j_a, k_a), s in itertools.product(
        itertools.combinations(range(spec.N), 2), (0, 1)
    ):
        alice = Chau15AliceChoice(spec, s, j_a, k_a)
        alice_state = chau15_alice_prepare(alice)
        for bob in enumerate_lo_bob_choices(spec):
            j, k, t = bob.withheld
            amplitude = oracle(
                ProductInput((alice_state,) + lo_bob_prepare(bob), encoding)
            )
            branches.append(
                Chau15Branch(
                    {
                        "s": s,
                        "alice_pair": alice.pair,
                        "pairing": bob.pairing,
                        "unsent_pair_index": bob.unsent_pair_index,
                        "t": t,
                    },
                    abs(amplitude) ** 2,
                    {j, k} == {j_a, k_a},
                    (s,),
                    (t ^ CHAU15_LO_KEY_FLIP,),
                )
            )
    return branches


def derive_chau15_key_flip(spec, encoding=Encoding.LOGICAL):
    """
    Computes s XOR t over every sifted branch with nonzero success
    probability, using the permutation-sum overlap. Returns the single value
    that occurs; raises ValidationError if both do.
    """
    flips = set()
    for branch in enumerate_chau15_lo_branches(
        spec, encoding, optics.antisym_overlap_bruteforce
    ):
        if branch.sifted and branch.probability > qstate.TOLERANCE:
            flips.add(branch.alice_raw[0] ^ branch.bob_raw[0] ^ CHAU15_LO_KEY_FLIP)
    if len(flips) != 1:
        raise ValidationError("No consistent key correlation: %r" % sorted(flips))
    return flips.pop()


def naive_bob_raw(t, announcement):
    return t ^ announcement.sign


def run_naive_chau15_round(spec, rng_seed=None, channel=None, charlie=None, round_index=0):
    """
    Runs one round of the naive MDI-Chau15 scheme.

    charlie_guess holds Charlie's guess of Alice's key bit: the measured
    phase for a cheating Charlie, a coin toss for an honest one.
    """
    check_bell_capability(spec)
    channel = channel or ChannelModel.ideal()
    charlie = charlie or CharlieModel()
    rng = make_rng(rng_seed)
    N = spec.N
    alice_pair = draw_distinct_pair(rng, N)
    bob_pair = draw_distinct_pair(rng, N)
    s, t = random_bit(rng), random_bit(rng)
    choices = {"s": s, "t": t, "alice_pair": list(alice_pair), "bob_pair": list(bob_pair)}
    transcript = Transcript(pairs_public=True)
    transcript.announce_pair("alice", alice_pair)
    transcript.announce_pair("bob", bob_pair)
    pairs = (alice_pair, bob_pair)
    alice_state = pairing_state(alice_pair[0], alice_pair[1], s, N)
    bob_state = pairing_state(bob_pair[0], bob_pair[1], t, N)
    for leg in ("alice", "bob"):
        if channel.acts_on(leg):
            state = alice_state if leg == "alice" else bob_state
            state, lost = apply_channel(state, 0, channel, rng)
            if lost:
                return unsifted(
                    Protocol.NAIVE_CHAU15, round_index, choices, lost=True, transcript=transcript
                )
            if leg == "alice":
                alice_state = state
            else:
                bob_state = state
    if charlie.silent:
        transcript.announce_measurement(None)
        return unsifted(Protocol.NAIVE_CHAU15, round_index, choices, transcript=transcript)
    if charlie.attacking:
        guesses, announcement = naive_charlie_attack(alice_state, bob_state, transcript, rng)
    else:
        measurement = qstate.measure_in_basis(
            qstate.tensor(alice_state, bob_state),
            [0, 1],
            naive_bell_basis(N, alice_pair, bob_pair),
            rng,
        )
        announcement = naive_announcement(measurement.outcome)
        guesses = (random_bit(rng), random_bit(rng))
    transcript.announce_measurement(announcement)
    if announcement is None:
        return unsifted(Protocol.NAIVE_CHAU15, round_index, choices, transcript=transcript)
    return RoundRecord(
        Protocol.NAIVE_CHAU15,
        round_index,
        choices,
        announcement,
        True,
        alice_raw=(s,),
        bob_raw=(naive_bob_raw(t, announcement),),
        pairs=pairs,
        charlie_guess=(guesses[0],),
        transcript=transcript,
    )


def enumerate_naive_chau15_branches(spec, attack=False):
    """
    Every branch of a noiseless naive round with nonzero probability, by
    exact projection. With attack=True Charlie first projects each qudit
    onto the +- states of its pair and the branch records his guesses.
    """
    N = spec.N
    if N > MAX_ENUMERATION_N:
        raise CapabilityError(
            "Branch enumeration is limited to N <= %d" % MAX_ENUMERATION_N
        )
    branches = []
    pairs = list(itertools.permutations(range(N), 2))
    for alice_pair, bob_pair, s, t in itertools.product(pairs, pairs, (0, 1), (0, 1)):
        choices = {"s": s, "t": t, "alice_pair": alice_pair, "bob_pair": bob_pair}
        alice_state = pairing_state(alice_pair[0], alice_pair[1], s, N)
        bob_state = pairing_state(bob_pair[0], bob_pair[1], t, N)
        if attack:
            inputs = []
            for a_index, a_vector in enumerate(pair_basis(N, alice_pair)):
                _, pa = qstate.project(alice_state, [0], a_vector)
                for b_index, b_vector in enumerate(pair_basis(N, bob_pair)):
                    _, pb = qstate.project(bob_state, [0], b_vector)
                    if pa * pb > qstate.TOLERANCE:
                        inputs.append(
                            (qstate.tensor(a_vector, b_vector), pa * pb, (a_index, b_index))
                        )
        else:
            inputs = [(qstate.tensor(alice_state, bob_state), 1.0, None)]
        basis = naive_bell_basis(N, alice_pair, bob_pair)
        for joint, weight, guesses in inputs:
            for index, vector in enumerate(basis):
                _, probability = qstate.project(joint, [0, 1], vector)
                probability *= weight
                if probability <= qstate.TOLERANCE:
                    continue
                announcement = naive_announcement(index)
                if announcement is None:
                    continue
                branches.append(
                    NaiveBranch(
                        choices,
                        announcement,
                        probability,
                        (s,),
                        (naive_bob_raw(t, announcement),),
                        None if guesses is None else (guesses[0],),
                    )
                )
    return branches
