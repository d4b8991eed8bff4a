"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so raise the narrowest class that fits.
"""


class OhmlabError(Exception):
    """Base class for all library errors."""


class PreconditionError(OhmlabError, ValueError):
    """An input violates an operation's documented precondition."""


class DisconnectedError(PreconditionError):
    """Source and sink lie in different components: the resistance is infinite."""


class ConvergenceError(OhmlabError, ArithmeticError):
    """An iterative solver stopped at its iteration cap without converging."""
