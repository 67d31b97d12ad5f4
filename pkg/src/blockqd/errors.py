"""Exception hierarchy shared by all modules."""


class BlockQDError(Exception):
    """Base class for every error raised by :mod:`blockqd`."""


class DimensionError(BlockQDError, ValueError):
    """Block orders or grid shapes do not agree."""


class Singular(BlockQDError, ArithmeticError):
    """A block (or flattened block matrix) failed the reciprocal-condition floor."""

    def __init__(self, message, rcond=0.0):
        super().__init__(message)
        self.rcond = rcond


class SingularMinor(Singular):
    """The minor of a quasi-determinant is numerically singular."""


class Breakdown(BlockQDError):
    """A pivot block ``q_m`` became singular during an LR-type step.

    ``layer`` is the e-layer being consumed (``None`` for a bare lattice step) and
    ``index`` the 1-based block index of the offending pivot.
    """

    def __init__(self, index, rcond, layer=None):
        where = f"q_{index}" if layer is None else f"q_{index} (layer {layer})"
        super().__init__(
            f"breakdown: pivot {where} is singular (rcond={rcond:.3e}); "
            "perturb the input, the unpivoted iteration cannot continue"
        )
        self.index = index
        self.rcond = rcond
        self.layer = layer


class NoConvergence(BlockQDError):
    """An internal iteration (small eigenvalue kernel) did not converge."""
