"""Exception hierarchy shared by every stage of the pipeline.

Each error carries the exit status the CLI should use: 2 for invalid input or
usage, 1 for numerical failures discovered while computing.
"""


class VerificationError(Exception):
    exit_code = 1

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ValidationError(VerificationError, ValueError):
    exit_code = 2


class DimensionMismatch(ValidationError):
    pass


class UnknownIdentity(ValidationError):
    pass


class MissingRole(ValidationError):
    pass


class InsufficientTraining(ValidationError):
    pass


class ProtocolError(ValidationError):
    pass


class EmptyRole(ValidationError):
    pass


class NoImpostorClaims(ValidationError):
    pass


class UnknownClient(ValidationError):
    pass


class NotSymmetric(VerificationError, ValueError):
    pass


class NoPositiveEigenvalue(VerificationError, ValueError):
    pass


class DegenerateStationaryPoint(VerificationError, ArithmeticError):
    pass


class DegenerateWithinScatter(VerificationError, ArithmeticError):
    pass


class DegenerateBetweenScatter(VerificationError, ArithmeticError):
    pass


class SingularPopulationScatter(VerificationError, ArithmeticError):
    pass
