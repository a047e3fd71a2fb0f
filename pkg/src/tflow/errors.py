"""Exception types shared across the toolkit.

Validation problems (bad inputs, broken operator constraints) are
``ValueError`` subclasses; numerical failures discovered mid-computation
are ``RuntimeError`` subclasses. The CLI maps the former to exit code 2
and the latter to exit code 3.
"""


class DimensionMismatchError(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class OperatorConstraintError(ValueError):
    """A matrix violates a declared constraint (Hermiticity, projector, ...)."""


class StateConstraintError(ValueError):
    """A state vector or density matrix violates its normalization/positivity."""


class IntegrationError(RuntimeError):
    """A propagator exceeded its drift budget or produced an unphysical state."""


class DegenerateDistributionError(RuntimeError):
    """A flow distribution has no mass (flat population, zero current)."""


class GridMismatchError(ValueError):
    """Two objects that must share a time grid do not."""
