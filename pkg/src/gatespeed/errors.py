"""Exception types shared across the package."""


class GatespeedError(Exception):
    """Base class for all package-specific errors."""


class NonHermitianError(GatespeedError, ValueError):
    """A matrix required to be Hermitian is not, within tolerance."""


class NotUnitaryError(GatespeedError, ValueError):
    """A matrix required to be unitary is not, within tolerance."""


class NonHermitianChiError(GatespeedError, ValueError):
    """A chi (process) matrix is not Hermitian."""


class NotTracePreservingError(GatespeedError, ValueError):
    """A channel representation violates trace preservation."""


class UnsupportedGateForInteraction(GatespeedError, ValueError):
    """No tabulated speed limit exists for this gate/interaction pair."""


class ScheduleViolationError(GatespeedError, ValueError):
    """A pulse schedule fails validation against its device."""


class BracketNotFoundError(GatespeedError, RuntimeError):
    """Speed-limit bisection could not bracket a converged gate time."""


class RootNotBracketedError(GatespeedError, RuntimeError):
    """Coupling-strength fit could not bracket the target ZZ shift."""


class SingularTransferError(GatespeedError, ValueError):
    """The SPAM-correction transfer matrix is numerically singular."""


class IntegrationStepError(GatespeedError, RuntimeError):
    """Time integration lost unitarity beyond tolerance (step too large)."""
