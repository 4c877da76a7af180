"""
Exceptions raised by pctlib. Input problems (bad formulas, bad models, bad
options) derive from :obj:`ValidationError`; running out of a resource while
checking derives from :obj:`ResourceError`. The command-line front end maps the
first family to exit code 2, the second to exit code 3 and
:obj:`ConsistencyError` to exit code 4.

Workers run in forked processes and hand their exceptions back to the caller
through a pipe, so every exception here pickles with its extra attributes.
"""
from typing import Optional


def _rebuild(cls, args, state):
    err = cls.__new__(cls, *args)
    err.__dict__.update(state)
    return err


class _Picklable(Exception):
    def __reduce__(self):
        # Constructors take more than the message; skip them on unpickling.
        return _rebuild, (self.__class__, self.args, self.__dict__)


class ValidationError(_Picklable, ValueError):
    """
    Exception raised when any user-provided input fails validation.
    """

    def __init__(self, message):
        super().__init__(message)


class FormulaSyntaxError(ValidationError):
    """
    Exception raised when a formula cannot be parsed.

    :ivar offset: Byte offset into the UTF-8 encoded formula text.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ModelError(ValidationError):
    """
    Exception raised when a model description is malformed or when a model
    misbehaves while being explored.

    :ivar line: One-based line number in the model file, if known.
    """

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResourceError(_Picklable, RuntimeError):
    """
    Exception raised when a check is aborted because a resource limit was hit.
    Partial verdicts are never reported.

    :ivar reason: Short reason code, reported by the command-line front end.
    """

    reason = "resource"

    def __init__(self, message):
        super().__init__(message)


class CapacityError(ResourceError):
    """
    Exception raised when the localization table or the reverse edge log is
    full.

    :ivar required: Number of table slots that would have been needed.
    """

    reason = "state-table-full"

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class MemoryCapExceeded(ResourceError):
    reason = "memory-cap"


class CheckTimeout(ResourceError):
    reason = "timeout"


class ConsistencyError(_Picklable, RuntimeError):
    """
    Exception raised when repeated checks of the same formula disagree.
    """

    reason = "inconsistent-verdict"

    def __init__(self, message):
        super().__init__(message)
