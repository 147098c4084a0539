"""Exception hierarchy shared by every module.

The CLI maps the two top-level families onto distinct exit codes, so new
errors should derive from :class:`DataError` (bad input) or
:class:`PipelineRuntimeError` (environment or transport failures).
"""

from __future__ import annotations


class GustosonicError(Exception):
    """Base class for all package errors."""


class DataError(GustosonicError, ValueError):
    """Input data or parameters are invalid."""


class PipelineRuntimeError(GustosonicError, RuntimeError):
    """Something outside the caller's data went wrong."""


# sensor_data
class HeaderMismatch(DataError):
    pass


class RowArity(DataError):
    pass


class BadNumber(DataError):
    pass


class BadLabel(DataError):
    pass


# featurize / synthgen / learn
class InvalidSpec(DataError):
    pass


class InvalidDuration(DataError):
    pass


class EmptyData(DataError):
    pass


class DegenerateClasses(EmptyData):
    """Training data holds fewer than two classes."""


class SchemaMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class TooFewSamples(DataError):
    pass


class InvalidK(DataError):
    pass


class EmptySpace(DataError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptDocument(DataError):
    pass


# sound_scheduler
class ClipTooShort(DataError):
    pass


# stream_service
class BadRequest(DataError):
    pass


class ModelUnavailable(PipelineRuntimeError):
    pass


class ConnectionFailed(PipelineRuntimeError):
    pass
