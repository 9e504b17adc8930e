"""Engine error hierarchy.

Every error carries a short machine-readable ``code``; the scenario runner
records the code per event instead of aborting.
"""


class SimError(Exception):
    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class Frozen(SimError):
    code = "FROZEN"


class Shutdown(SimError):
    code = "SHUTDOWN"


class NotShutdown(SimError):
    code = "NOT_SHUTDOWN"


class Undercollateralized(SimError):
    code = "UNDERCOLLATERALIZED"


class CeilingExceeded(SimError):
    code = "CEILING"


class NotOwner(SimError):
    code = "NOT_OWNER"


class InsufficientBalance(SimError):
    code = "INSUFFICIENT_BALANCE"


class Overpayment(SimError):
    code = "OVERPAYMENT"


class UnknownCollateral(SimError):
    code = "UNKNOWN_COLLATERAL"


class UnknownVault(SimError):
    code = "UNKNOWN_VAULT"


class InvalidState(SimError):
    code = "INVALID_STATE"


class VaultSafe(SimError):
    code = "VAULT_SAFE"


class KeeperInsufficient(SimError):
    code = "KEEPER_INSUFFICIENT"


class OutOfBounds(SimError):
    code = "OUT_OF_BOUNDS"


class VotingClosed(SimError):
    code = "VOTING_CLOSED"


class TimeRegression(SimError):
    code = "TIME_REGRESSION"


class InvalidAmount(SimError):
    code = "INVALID_AMOUNT"
