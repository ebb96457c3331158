"""
Noise on the quantum channels to Charlie, and models of Charlie himself.

Noise is applied as stochastic pure-state trajectories: each call draws from
the round's generator whether the channel acts, and if so what it does.
"""
import enum
import functools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from mdiqkd import qstate
from mdiqkd.errors import UsageError
from mdiqkd.rng import make_rng, random_bit


logger = logging.getLogger(__name__)

LEGS = ("alice", "bob")

# Charlie's announcement in the naive scheme: cross selects the
# |j',k>,|k',j> pair of states over |j',j>,|k',k>; sign is the relative phase.
NaiveAnnouncement = namedtuple("NaiveAnnouncement", ["cross", "sign"])
NAIVE_BELL_OUTCOMES = 4


class ChannelKind(enum.Enum):
    IDEAL = "ideal"
    DEPOLARIZING = "depolarizing"
    DEPHASING = "dephasing"
    LOSS = "loss"


class CharlieKind(enum.Enum):
    HONEST = "honest"
    SILENT = "silent"
    NAIVE_ATTACKER = "naive_attacker"


@dataclass(frozen=True)
class ChannelModel:
    """
    A noise model applied with probability p to each qudit sent on one of
    the named legs.
    """

    kind: ChannelKind = ChannelKind.IDEAL
    p: float = 0.0
    legs: tuple = LEGS

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ChannelKind(self.kind))
        except ValueError:
            raise UsageError("Unknown channel kind %r" % (self.kind,))
        if not 0.0 <= self.p <= 1.0:
            raise UsageError("Channel probability must lie in [0, 1], got %r" % self.p)
        legs = tuple(self.legs)
        unknown = set(legs) - set(LEGS)
        if unknown:
            raise UsageError("Unknown channel legs %r" % sorted(unknown))
        object.__setattr__(self, "legs", legs)

    @classmethod
    def ideal(cls):
        return cls()

    def acts_on(self, leg):
        """
        Returns True when qudits sent on `leg` pass through the noise.
        """
        return self.kind is not ChannelKind.IDEAL and leg in self.legs

    @property
    def noisy_legs(self):
        """
        Returns the number of legs the noise acts on.
        """
        if self.kind is ChannelKind.IDEAL:
            return 0
        return len(self.legs)


@dataclass(frozen=True)
class CharlieModel:
    kind: CharlieKind = CharlieKind.HONEST

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", CharlieKind(self.kind))
        except ValueError:
            raise UsageError("Unknown Charlie model %r" % (self.kind,))

    @property
    def honest(self):
        return self.kind is CharlieKind.HONEST

    @property
    def silent(self):
        return self.kind is CharlieKind.SILENT

    @property
    def attacking(self):
        return self.kind is CharlieKind.NAIVE_ATTACKER


def apply_channel(s, qudit_index, model, rng_seed=None):
    """
    Sends qudit `qudit_index` of s through the channel.

    Returns (state, lost). An ideal channel returns s itself. Depolarizing
    noise measures the qudit in the computational basis and replaces it by
    a uniformly random basis state; dephasing multiplies it by a random
    diagonal +-1 pattern; loss leaves the state alone and reports the round
    as lost.
    """
    if not 0 <= qudit_index < s.num_qudits:
        raise UsageError("Qudit index %r out of range" % qudit_index)
    if model.kind is ChannelKind.IDEAL:
        return s, False
    rng = make_rng(rng_seed)
    if rng.random() >= model.p:
        return s, False
    if model.kind is ChannelKind.LOSS:
        return s, True
    if model.kind is ChannelKind.DEPOLARIZING:
        measurement = qstate.measure_in_basis(
            s, [qudit_index], qstate.computational_basis(s.dim, 1), rng
        )
        replacement = int(rng.integers(s.dim))
        logger.debug("Depolarized qudit %d -> |%d>", qudit_index, replacement)
        return qstate.insert_qudit(measurement.posterior, qudit_index, replacement), False
    signs = 1.0 - 2.0 * rng.integers(0, 2, size=s.dim)
    logger.debug("Dephased qudit %d with pattern %r", qudit_index, signs.tolist())
    return qstate.apply_local(s, qudit_index, qstate.LocalUnitary(np.diag(signs))), False


def depolarizing_disagreement_rate(p, dim, legs=2):
    """
    Probability that the corrected retained pair of a swapping round gives
    different computational outcomes when `legs` sent qudits are each
    depolarized with probability p.
    """
    return (1.0 - (1.0 - p) ** legs) * (dim - 1) / dim


def depolarizing_qber(p, legs=2):
    """
    Bit error rate of the sifted key under depolarizing noise, for the
    schemes where a replaced qudit leaves the raw bits uncorrelated
    (mother-of-all per key bit, and the Bell-measurement RRDPS scheme).
    """
    return (1.0 - (1.0 - p) ** legs) / 2.0


@functools.lru_cache(maxsize=None)
def pair_basis(dim, pair):
    """
    The single qudit basis {(|j> + |k>)/sqrt(2), (|j> - |k>)/sqrt(2)} completed
    by the remaining computational states in order.
    """
    j, k = pair
    half = 1 / math.sqrt(2)
    vectors = [
        qstate.StateVector(dim, 1, {j: half, k: half}),
        qstate.StateVector(dim, 1, {j: half, k: -half}),
    ]
    vectors.extend(
        qstate.StateVector(dim, 1, {i: 1.0}) for i in range(dim) if i not in pair
    )
    return qstate.Basis(vectors)


@functools.lru_cache(maxsize=None)
def naive_bell_basis(dim, alice_pair, bob_pair):
    """
    Charlie's measurement in the naive scheme, on (Alice's qudit, Bob's
    qudit) with Alice's pair (j', k') and Bob's pair (j, k):

        index 2*cross + sign, for cross, sign in {0, 1}:
            cross = 0: (|j', j> + (-1)^sign |k', k>) / sqrt(2)
            cross = 1: (|j', k> + (-1)^sign |k', j>) / sqrt(2)

    followed by the computational states outside span{j', k'} x span{j, k}.
    """
    (ja, ka), (jb, kb) = alice_pair, bob_pair
    half = 1 / math.sqrt(2)
    vectors = []
    for first, second in (((ja, jb), (ka, kb)), ((ja, kb), (ka, jb))):
        for sign in (0, 1):
            vectors.append(
                qstate.StateVector(
                    dim,
                    2,
                    {
                        qstate.pack(first, dim): half,
                        qstate.pack(second, dim): -half if sign else half,
                    },
                )
            )
    inside = {(u, v) for u in alice_pair for v in bob_pair}
    vectors.extend(
        qstate.StateVector(dim, 2, {qstate.pack((u, v), dim): 1.0})
        for u in range(dim)
        for v in range(dim)
        if (u, v) not in inside
    )
    return qstate.Basis(vectors)


def naive_announcement(outcome):
    """
    Maps a naive_bell_basis outcome index to an announcement, or None for
    the states outside the pair subspaces.
    """
    if outcome >= NAIVE_BELL_OUTCOMES:
        return None
    return NaiveAnnouncement(*divmod(outcome, 2))


def naive_charlie_attack(alice_state, bob_state, transcript, rng_seed=None):
    """
    The cheating Charlie of the naive scheme: he projects each incoming
    qudit onto the +- states of its publicly known pair, then performs the
    honest swap measurement on what is left.

    Only possible when both pairs were announced before Charlie measures;
    the transcript raises ProtocolOrderError otherwise.

    Returns ((s_guess, t_guess), announcement).
    """
    alice_pair, bob_pair = transcript.pairs_before_measurement()
    rng = make_rng(rng_seed)
    dim = alice_state.dim
    guesses = []
    projected = []
    for state, pair in ((alice_state, alice_pair), (bob_state, bob_pair)):
        basis = pair_basis(dim, tuple(pair))
        measurement = qstate.measure_in_basis(state, [0], basis, rng)
        if measurement.outcome < 2:
            guesses.append(measurement.outcome)
        else:
            guesses.append(random_bit(rng))
        projected.append(basis[measurement.outcome])
    joint = qstate.tensor(*projected)
    measurement = qstate.measure_in_basis(
        joint, [0, 1], naive_bell_basis(dim, tuple(alice_pair), tuple(bob_pair)), rng
    )
    announcement = naive_announcement(measurement.outcome)
    logger.debug("Naive attack: guesses %r, announced %r", guesses, announcement)
    return tuple(guesses), announcement
