"""Exception hierarchy.

Each base class carries the CLI exit code it maps to.
"""


class RecolorDetectError(Exception):
    exit_code = 1


class InputError(RecolorDetectError, ValueError):
    exit_code = 2


class IncompatibleError(RecolorDetectError, ValueError):
    exit_code = 3


class DegenerateError(RecolorDetectError, ValueError):
    exit_code = 4


class MalformedFile(InputError):
    pass


class UnsupportedDepth(InputError):
    pass


class TooSmall(InputError):
    pass


class BadFactor(InputError):
    pass


class BadParameters(InputError):
    pass


class CorpusTooSmall(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class IncompatibleHistograms(IncompatibleError):
    pass


class LayoutMismatch(IncompatibleError):
    pass


class DegeneratePlane(DegenerateError):
    """Correlation is undefined because a centered sum of squares is zero."""


class NoPairs(DegenerateError):
    pass


class EmptyPopulation(DegenerateError):
    pass


class DegenerateDataset(DegenerateError):
    pass


class SingleClass(DegenerateError):
    pass
