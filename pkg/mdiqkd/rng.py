"""
Seed handling.

Every random choice in a simulation comes from a numpy Generator created
here. A session owns one master seed; round and post-processing streams are
split from it with a counter (stream, index) so the value a round sees does
not depend on the order, or the process, in which rounds are executed.
"""
import numpy as np

# Stream identifiers used when splitting the master seed.
ROUND_STREAM = 0
POSTPROCESS_STREAM = 1
BASELINE_STREAM = 2


def make_rng(seed=None):
    """
    Returns a numpy Generator for the given seed.

    The seed may be an int, a numpy SeedSequence or an existing Generator (in
    which case it is returned untouched, so functions can accept either a seed
    or the caller's generator).
    """
    return np.random.default_rng(seed)


def split_seed(master_seed, stream, index=0):
    """
    Derives an independent SeedSequence for item `index` of `stream` from the
    master seed. Pure function of its arguments.
    """
    return np.random.SeedSequence([int(master_seed) & (2**64 - 1), stream, index])


def round_seed(master_seed, round_index):
    """
    The seed used by round number `round_index` of a session.
    """
    return split_seed(master_seed, ROUND_STREAM, round_index)


def random_bit(rng):
    """
    A single uniformly random bit as a Python int.
    """
    return int(rng.integers(0, 2))
