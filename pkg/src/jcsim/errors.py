class SimulationError(RuntimeError):
    """Base class for numerical failures."""


class StiffIntegrationError(SimulationError):
    """Adaptive integrator could not keep its step size above the floor."""


class InvariantViolation(SimulationError):
    """A state left the physical domain beyond tolerance."""


class DegenerateSteadyState(SimulationError):
    """The Liouvillian null space is not one-dimensional."""


class ConvergenceError(SimulationError):
    """Results changed beyond tolerance when the Fock cutoff was enlarged."""


class NotSettledError(SimulationError):
    """A relaxation run did not reach a stationary state."""
