class BenchError(Exception):
    """Base class for all errors raised by clbench."""


class DegenerateWaypoints(BenchError, ValueError):
    pass


class InfeasibleSpeed(BenchError, ValueError):
    pass


class SingularOffset(BenchError, ArithmeticError):
    pass


class IntegrationDiverged(BenchError, RuntimeError):
    pass


class StaleFix(BenchError):
    """A visual fix whose capture time is no longer covered by the IMU buffer."""


class NoOverlap(BenchError, ValueError):
    pass


class NoAssociation(BenchError, ValueError):
    pass


class ReferenceGenFailed(BenchError, RuntimeError):
    pass


class ConfigError(BenchError, ValueError):
    pass


class IoError(BenchError, OSError):
    """Reading or writing an export file failed."""
