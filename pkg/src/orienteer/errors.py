"""Exception hierarchy shared by the solvers and the CLI."""


class OrienteerError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OrienteerError, ValueError):
    pass


class SubtourError(OrienteerError):
    """A flow contains a cycle that does not pass through the depot."""

    def __init__(self, component, message=None):
        self.component = tuple(sorted(component))
        super().__init__(message or f"subtour disconnected from depot: {list(self.component)}")


class InconsistentFlowError(OrienteerError):
    pass


class CapacityError(OrienteerError):
    """Instance is larger than a solver is willing to handle."""


class LpStallError(OrienteerError):
    """The simplex hit its iteration cap before proving optimality."""

    def __init__(self, message, best_bound=None, dual_feasible=False):
        super().__init__(message)
        self.best_bound = best_bound
        self.dual_feasible = dual_feasible


class CutLimitError(OrienteerError):
    """The lazy subtour loop ran more rounds than allowed."""
