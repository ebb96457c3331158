"""
Contains what every protocol round shares: the round record, the public
transcript, and the random choices parties draw.
"""
import enum
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Any, Optional

from mdiqkd.errors import ProtocolOrderError, ValidationError


class Protocol(enum.Enum):
    MOTHER = "mother"
    MDI_RRDPS = "mdi_rrdps"
    MDI_RRDPS_LO = "mdi_rrdps_lo"
    MDI_CHAU15_LO = "mdi_chau15_lo"
    NAIVE_CHAU15 = "naive_chau15"


# Protocols where Charlie projects onto |Psi>.
LINEAR_OPTICS = frozenset([Protocol.MDI_RRDPS_LO, Protocol.MDI_CHAU15_LO])
# Protocols where Charlie measures in a two qudit basis of size N^2.
BELL_MEASUREMENT = frozenset(
    [Protocol.MOTHER, Protocol.MDI_RRDPS, Protocol.NAIVE_CHAU15]
)

Event = namedtuple("Event", ["step", "party", "kind", "value"])

PAIRS = "pairs"
MEASUREMENT = "measurement"


class Transcript:
    """
    The append-only log of public announcements made in one round.

    Unless the protocol makes its pairs public up front (the naive scheme),
    a pair announcement before Charlie's measurement is refused.
    """

    def __init__(self, pairs_public=False):
        self.pairs_public = pairs_public
        self._events = []

    @property
    def events(self):
        return tuple(self._events)

    def _append(self, party, kind, value):
        event = Event(len(self._events), party, kind, value)
        self._events.append(event)
        return event

    @property
    def measured(self):
        return any(e.kind == MEASUREMENT for e in self._events)

    def announce_measurement(self, value):
        """
        Charlie's announcement: a Bell label, a success flag, or None when he
        stays silent.
        """
        if self.measured:
            raise ProtocolOrderError("Charlie has already announced a result")
        return self._append("charlie", MEASUREMENT, value)

    def announce_pair(self, party, pair):
        if not self.pairs_public and not self.measured:
            raise ProtocolOrderError(
                "%s may not announce a pair before Charlie's measurement" % party
            )
        return self._append(party, PAIRS, tuple(pair))

    def pairs_before_measurement(self):
        """
        Returns (alice_pair, bob_pair) if both were public before Charlie
        measured. This is what a cheating Charlie needs.
        """
        pairs = {}
        for event in self._events:
            if event.kind == MEASUREMENT:
                break
            if event.kind == PAIRS:
                pairs[event.party] = event.value
        if "alice" not in pairs or "bob" not in pairs:
            raise ProtocolOrderError(
                "The pairs are not public before Charlie measures"
            )
        return pairs["alice"], pairs["bob"]

    def check_order(self):
        """
        Raises ProtocolOrderError if a pair was announced before Charlie's
        measurement in a transcript where that is not allowed.
        """
        if self.pairs_public:
            return
        measured = False
        for event in self._events:
            if event.kind == MEASUREMENT:
                measured = True
            elif event.kind == PAIRS and not measured:
                raise ProtocolOrderError("Pair announced before the measurement")

    def to_list(self):
        return [[e.step, e.party, e.kind, _plain(e.value)] for e in self._events]


def _plain(value):
    """
    Turns announcement values into JSON friendly data.
    """
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if hasattr(value, "as_tuple"):
        return list(value.as_tuple())
    return [_plain(v) for v in value]


@dataclass(frozen=True)
class RoundRecord:
    """
    One protocol round. Raw key bits are tuples of bits, present only when
    the round is sifted.
    """

    protocol: Protocol
    round_index: int
    choices: dict
    announcement: Any
    sifted: bool
    alice_raw: Optional[tuple] = None
    bob_raw: Optional[tuple] = None
    pairs: Optional[tuple] = None
    lost: bool = False
    charlie_guess: Optional[tuple] = None
    transcript: Optional[Transcript] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        has_raw = self.alice_raw is not None or self.bob_raw is not None
        if self.sifted != has_raw:
            raise ValidationError("Raw bits must be present iff the round is sifted")
        if self.sifted and len(self.alice_raw) != len(self.bob_raw):
            raise ValidationError("Alice and Bob raw keys differ in width")

    @property
    def raw_width(self):
        return len(self.alice_raw) if self.sifted else 0

    @property
    def agrees(self):
        return self.sifted and self.alice_raw == self.bob_raw

    def to_dict(self):
        """
        The round as a flat JSON friendly record.
        """
        return {
            "protocol": self.protocol.value,
            "round": self.round_index,
            "sifted": self.sifted,
            "lost": self.lost,
            "announcement": _plain(self.announcement),
            "pairs": _plain(self.pairs),
            "alice_raw": list(self.alice_raw) if self.sifted else None,
            "bob_raw": list(self.bob_raw) if self.sifted else None,
            "charlie_guess": _plain(self.charlie_guess),
            "transcript": self.transcript.to_list() if self.transcript is not None else None,
        }


def unsifted(protocol, round_index, choices, announcement=None, lost=False, transcript=None):
    """
    Returns the record of a round that yields no raw bits.
    """
    return RoundRecord(
        protocol,
        round_index,
        choices,
        announcement,
        False,
        lost=lost,
        transcript=transcript,
    )


def draw_bits(rng, count):
    """
    Returns a tuple of `count` uniformly random bits.
    """
    return tuple(int(b) for b in rng.integers(0, 2, size=count))


def draw_distinct_pair(rng, dim):
    """
    An ordered pair j != k of elements of range(dim).
    """
    j, k = rng.choice(dim, size=2, replace=False)
    return int(j), int(k)


def draw_pairing(rng, dim):
    """
    A uniformly random perfect matching of range(dim) as a tuple of pairs.
    """
    order = [int(v) for v in rng.permutation(dim)]
    return tuple((order[i], order[i + 1]) for i in range(0, dim, 2))


def bits_of(value, width):
    """
    The `width` bits of an int, most significant first.
    """
    return tuple((value >> shift) & 1 for shift in reversed(range(width)))
