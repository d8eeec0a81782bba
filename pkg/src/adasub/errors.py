"""Exception hierarchy shared by all modules."""


class AdasubError(Exception):
    pass


class UnknownItem(AdasubError, ValueError):
    """An observation or realization references an item the instance lacks."""


class InconsistentObservation(AdasubError):
    """Conditioning on the observations leaves zero posterior mass."""


class TooLarge(AdasubError):
    """An exact computation would exceed its configured size cap."""


class SupportTooLarge(TooLarge):
    """The prior's support cannot be enumerated under the cap; sample instead."""


class AlreadySelected(AdasubError):
    pass


class Exhausted(AdasubError):
    """No candidate item remains."""


class InfeasibleQuota(AdasubError):
    def __init__(self, message, realization=None):
        super().__init__(message)
        self.realization = realization


class MalformedPolicy(AdasubError):
    pass


class InstanceError(AdasubError, ValueError):
    """Malformed instance data; ``path`` points at the offending JSON field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
