"""Exception hierarchy shared by the library and the command line."""


class MixPCEError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ValidationError(MixPCEError, ValueError):
    """Bad user input: malformed spec, dimension mismatch, inconsistent config."""

    exit_code = 2


class CapacityError(MixPCEError):
    """A requested size exceeds what the implementation is willing to build."""

    exit_code = 2


class NumericalError(MixPCEError):
    """Non-SPD moment matrix after regularization, rank deficiency, etc."""

    exit_code = 3


class OracleError(MixPCEError):
    """Simulation oracle or file-exchange failure."""

    exit_code = 4


class AwaitingResponses(MixPCEError):
    """File-exchange mode wrote pending points and must wait for responses.

    Not a failure; the CLI exits with status 0 after reporting it.
    """

    exit_code = 0

    def __init__(self, path, count):
        super().__init__(f"{count} point(s) written to {path}; awaiting responses")
        self.path = path
        self.count = count
