"""Error types shared across the package.

Input problems (bad shapes, invalid parameters, malformed files, priors
whose requested summary does not exist) raise plain ValueError.
NumericalError marks computations that were asked for but could not be
completed to tolerance (non-convergence, failed root brackets, quadrature
that never stabilizes).
"""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or the result is undefined."""
