"""Exception hierarchy shared across the package.

``GlucoplanError`` marks user-correctable problems (bad data, bad config,
violated preconditions); the CLI maps it to exit code 1. Anything else that
escapes is an internal error (exit code 2).
"""


class GlucoplanError(Exception):
    """Base class for user-facing errors."""


# -- data pipeline ----------------------------------------------------------

class UnknownUnit(GlucoplanError):
    def __init__(self, channel: str, unit: str):
        super().__init__(f"no conversion for unit {unit!r} on channel {channel!r}")
        self.channel = channel
        self.unit = unit


class EmptyInput(GlucoplanError):
    pass


class GridTooShort(GlucoplanError):
    def __init__(self, length: int, window: int):
        super().__init__(f"grid has {length} slots, window needs {window}")
        self.length = length
        self.window = window


class TooFewClips(GlucoplanError):
    pass


class AdapterMismatch(GlucoplanError):
    pass


# -- dietary analysis -------------------------------------------------------

class EmptyMeal(GlucoplanError):
    pass


class InvalidTemplate(GlucoplanError):
    pass


class MalformedResponse(GlucoplanError):
    pass


class BackendUnavailable(GlucoplanError):
    pass


class NoMatch(GlucoplanError):
    pass


# -- model core -------------------------------------------------------------

class ShapeMismatch(GlucoplanError):
    pass


class UnencodableField(GlucoplanError):
    pass


class ModelNotLoaded(GlucoplanError):
    pass


class FeatureGroupMismatch(GlucoplanError):
    pass


# -- metrics / safety -------------------------------------------------------

class LengthMismatch(GlucoplanError):
    pass


class IncompleteContext(GlucoplanError):
    pass


# -- training ---------------------------------------------------------------

class Divergence(GlucoplanError):
    pass


class ModeUnknown(GlucoplanError):
    pass


class InsufficientData(GlucoplanError):
    pass


# -- reporting --------------------------------------------------------------

class MissingArtifacts(GlucoplanError):
    pass
