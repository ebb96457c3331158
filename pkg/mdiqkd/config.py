"""
Run configuration: defaults, a JSON config file, command line flags and the
MDIQKD_WORKERS environment variable, merged and validated into a RunConfig.

Precedence, lowest first: defaults, config file, environment (workers only),
flags.
"""
import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

from mdiqkd.channel import ChannelKind, ChannelModel, CharlieKind, CharlieModel
from mdiqkd.errors import CapabilityError, MdiqkdError, UsageError, ValidationError
from mdiqkd.gf import MAX_DEGREE, FieldSpec
from mdiqkd.optics import Encoding
from mdiqkd.protocols.rrdps import MAX_BELL_N
from mdiqkd.protocols.rrdps_lo import MAX_LO_N
from mdiqkd.protocols.utils import BELL_MEASUREMENT, LINEAR_OPTICS, Protocol


logger = logging.getLogger(__name__)

WORKERS_ENV = "MDIQKD_WORKERS"
MAX_SEED = 2**64

# Dotted config file keys and the flat keys they stand for.
ALIASES = {
    "channel.kind": "channel",
    "channel.p": "p",
    "channel.legs": "channel_legs",
    "charlie.kind": "charlie",
}


@dataclass(frozen=True)
class RunConfig:
    protocol: Protocol = Protocol.MOTHER
    n: int = 1
    rounds: int = 1000
    channel: ChannelModel = field(default_factory=ChannelModel)
    charlie: CharlieModel = field(default_factory=CharlieModel)
    seed: int = 0
    sample_fraction: float = 0.1
    output_path: Optional[str] = None
    workers: int = 1
    safety_margin: int = 0
    ec_max_passes: int = 16
    bob_encoding: Encoding = Encoding.LOGICAL
    modulus: Optional[int] = None

    def __post_init__(self):
        self.validate()

    @property
    def spec(self):
        return FieldSpec(self.n, self.modulus)

    def validate(self):
        """
        Raises UsageError (CapabilityError for size caps) on a bad config.
        """
        if not isinstance(self.protocol, Protocol):
            raise UsageError("Unknown protocol %r" % (self.protocol,))
        if not isinstance(self.n, int) or not 1 <= self.n <= MAX_DEGREE:
            raise UsageError("n must be an integer in [1, %d], got %r" % (MAX_DEGREE, self.n))
        N = 1 << self.n
        if self.protocol in LINEAR_OPTICS and N > MAX_LO_N:
            raise CapabilityError(
                "%s needs N <= %d (n <= %d), got n=%d"
                % (self.protocol.value, MAX_LO_N, MAX_LO_N.bit_length() - 1, self.n)
            )
        if self.protocol in BELL_MEASUREMENT and N > MAX_BELL_N:
            raise CapabilityError(
                "%s needs N <= %d (n <= %d), got n=%d"
                % (self.protocol.value, MAX_BELL_N, MAX_BELL_N.bit_length() - 1, self.n)
            )
        if self.rounds < 1:
            raise UsageError("rounds must be at least 1, got %r" % self.rounds)
        if not 0.0 < self.sample_fraction < 1.0:
            raise UsageError(
                "sample_fraction must lie in (0, 1), got %r" % self.sample_fraction
            )
        if not 0 <= self.seed < MAX_SEED:
            raise UsageError("seed must be a 64 bit unsigned integer, got %r" % self.seed)
        if self.workers < 1:
            raise UsageError("workers must be at least 1, got %r" % self.workers)
        if self.safety_margin < 0:
            raise UsageError("safety_margin must be nonnegative")
        if self.ec_max_passes < 1:
            raise UsageError("ec_max_passes must be at least 1")
        if self.charlie.attacking and self.protocol is not Protocol.NAIVE_CHAU15:
            raise UsageError(
                "The naive_attacker Charlie only applies to naive_chau15, not %s"
                % self.protocol.value
            )
        try:
            self.spec
        except ValidationError as ex:
            raise UsageError(str(ex))

    @classmethod
    def from_dict(cls, values):
        """
        Builds a RunConfig from flat key/value settings, as found in a config
        file or produced from command line flags.
        """
        values = dict(values)
        for dotted, flat in ALIASES.items():
            if dotted in values:
                values[flat] = values.pop(dotted)
        channel_kind = values.pop("channel", ChannelKind.IDEAL.value)
        p = values.pop("p", 0.0)
        legs = values.pop("channel_legs", ("alice", "bob"))
        if isinstance(legs, str):
            legs = [leg.strip() for leg in legs.split(",") if leg.strip()]
        charlie_kind = values.pop("charlie", CharlieKind.HONEST.value)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise UsageError("Unknown configuration keys: %s" % ", ".join(sorted(unknown)))
        try:
            if "protocol" in values:
                values["protocol"] = Protocol(values["protocol"])
            if "bob_encoding" in values:
                values["bob_encoding"] = Encoding(values["bob_encoding"])
            if isinstance(values.get("modulus"), str):
                values["modulus"] = int(values["modulus"], 0)
            for name in ("n", "rounds", "seed", "workers", "safety_margin", "ec_max_passes"):
                if name in values:
                    values[name] = int(values[name])
            if "sample_fraction" in values:
                values["sample_fraction"] = float(values["sample_fraction"])
            return cls(
                channel=ChannelModel(channel_kind, float(p), tuple(legs)),
                charlie=CharlieModel(charlie_kind),
                **values
            )
        except MdiqkdError:
            raise
        except (TypeError, ValueError) as ex:
            raise UsageError("Invalid configuration value: %s" % ex)

    def to_dict(self):
        """
        The configuration as flat JSON friendly settings; from_dict inverts it.
        """
        return {
            "protocol": self.protocol.value,
            "n": self.n,
            "rounds": self.rounds,
            "channel": self.channel.kind.value,
            "p": self.channel.p,
            "channel_legs": list(self.channel.legs),
            "charlie": self.charlie.kind.value,
            "seed": self.seed,
            "sample_fraction": self.sample_fraction,
            "output_path": self.output_path,
            "workers": self.workers,
            "safety_margin": self.safety_margin,
            "ec_max_passes": self.ec_max_passes,
            "bob_encoding": self.bob_encoding.value,
            "modulus": self.modulus,
        }

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def read_config_file(path):
    """
    Reads a flat JSON object of settings.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            values = json.load(handle)
    except OSError as ex:
        raise UsageError("Cannot read config file %s: %s" % (path, ex.strerror))
    except json.JSONDecodeError as ex:
        raise UsageError("Config file %s is not valid JSON: %s" % (path, ex))
    if not isinstance(values, dict):
        raise UsageError("Config file %s must hold a JSON object" % path)
    return values


def load_config(path=None, overrides=None, environ=None):
    """
    Merges the config file at `path`, the environment and `overrides` (flag
    values, None meaning unset) into a validated RunConfig.
    """
    environ = os.environ if environ is None else environ
    values = read_config_file(path) if path else {}
    for dotted, flat in ALIASES.items():
        if dotted in values:
            values[flat] = values.pop(dotted)
    if environ.get(WORKERS_ENV):
        values["workers"] = environ[WORKERS_ENV]
        logger.info("Worker count %s taken from %s", environ[WORKERS_ENV], WORKERS_ENV)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig.from_dict(values)
