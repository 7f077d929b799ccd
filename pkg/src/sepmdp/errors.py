"""Exception types shared across the package."""


class SepMdpError(Exception):
    """Base class for all errors raised by this package."""


class AssemblyInfeasible(SepMdpError):
    """A perturbed kernel entry would be negative at the requested epsilon."""


class NotIrreducible(SepMdpError):
    """A transition matrix fails the irreducibility gate.

    Carries `actions` (list of offending action indices) when raised while
    analyzing per-action chains, or `policy` (tuple of action indices) when
    raised for a restricted chain.
    """

    def __init__(self, message, actions=None, policy=None):
        super().__init__(message)
        self.actions = actions
        self.policy = policy


class SingularSystem(SepMdpError):
    """A linear solve failed; usually signals a violated irreducibility precondition."""


class CompatibilityViolation(SepMdpError):
    """The Poisson right-hand side is not orthogonal to the invariant distribution."""


class CapExceeded(SepMdpError):
    """Policy enumeration would exceed the configured cap."""


class NonConvergence(SepMdpError):
    """An iterative solver exhausted its iteration budget (indicates a bug, not a model property)."""


class CrossCheckFailure(SepMdpError):
    """Two independent solvers disagree beyond tolerance; aborts the run as an internal error."""
