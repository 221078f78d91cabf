"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command line front end.
"""


class BLTPError(Exception):
    exit_code = 1


class SpacelikeSeparation(BLTPError, ValueError):
    exit_code = 10


class UnsupportedOrder(BLTPError, ValueError):
    exit_code = 11


class OutOfRange(BLTPError, ValueError):
    exit_code = 12


class OnWorldline(BLTPError, ValueError):
    exit_code = 13


class TailBoundExceeded(BLTPError, ArithmeticError):
    exit_code = 14


class QuadratureFailure(BLTPError, ArithmeticError):
    exit_code = 15


class NoContraction(BLTPError, ArithmeticError):
    """Picard iteration failed to contract on the current window."""

    exit_code = 16


class StalledWindow(BLTPError, ArithmeticError):
    exit_code = 17


class WorldlineCollision(BLTPError, ValueError):
    exit_code = 18


class ConfigInvalid(BLTPError, ValueError):
    """Configuration failed validation.

    ``errors`` holds one ``(field_path, message)`` pair per violation.
    """

    exit_code = 2

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
