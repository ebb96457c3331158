"""
Version information for mdiqkd, kept as a tuple so it is easy to compare and
easy to bump.
"""

# MAJOR, MINOR, RELEASE, STATUS [alpha, beta, final], VERSION
VERSION = (0, 1, 0, "alpha", 0)


def get_version():
    """
    Returns a dotted string version of VERSION, e.g. "0.1.0.alpha.0".
    """
    return ".".join([str(i) for i in VERSION])
