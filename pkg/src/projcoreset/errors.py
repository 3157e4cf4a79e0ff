class CoresetError(Exception):
    """Base class for all errors raised by projcoreset."""

    exit_code = 1


class InputError(CoresetError, ValueError):
    """Malformed or inconsistent input (bad shapes, dimensions, parameters)."""

    exit_code = 2


class CapabilityError(CoresetError):
    """The request is well-formed but outside what an algorithm supports."""

    exit_code = 3
