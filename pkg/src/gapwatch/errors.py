"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI when
reporting failures as ``ERROR <code>: <message>``.
"""


class GapwatchError(Exception):
    code = "GapwatchError"


class ProfileError(GapwatchError, ValueError):
    code = "ProfileError"


class MalformedRow(ProfileError):
    code = "MalformedRow"


class NonMonotonicTime(ProfileError):
    code = "NonMonotonicTime"


class EmptyProfile(ProfileError):
    code = "EmptyProfile"


class InvalidRange(ProfileError):
    code = "InvalidRange"


class CollisionDetected(GapwatchError, RuntimeError):
    """A follower reached or passed its leader.

    ``partial`` holds whatever the simulator produced before the abort
    (a :class:`gapwatch.simulator.SimResult` with ``aborted=True``), or None.
    """

    code = "CollisionDetected"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularPrior(GapwatchError, ValueError):
    code = "SingularPrior"


class EmptyStream(GapwatchError, ValueError):
    code = "EmptyStream"


class InvalidConfig(GapwatchError, ValueError):
    code = "InvalidConfig"


class UnknownKey(InvalidConfig):
    code = "UnknownKey"


class TypeMismatch(InvalidConfig):
    code = "TypeMismatch"


class InvariantViolation(InvalidConfig):
    code = "InvariantViolation"
