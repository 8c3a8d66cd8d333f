"""Exception hierarchy. Every error carries the exit code the command line reports for it."""


class UsoLabError(Exception):
    exit_code = 2

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


# Grid construction
class EmptyBlock(UsoLabError):
    pass


class BlockTooSmall(UsoLabError):
    pass


class NotAPartition(UsoLabError):
    pass


# Points and subgrids
class InvalidPoint(UsoLabError):
    pass


class InvalidSubgrid(UsoLabError):
    pass


class PointOutsideSubgrid(UsoLabError):
    pass


# Guards
class GridTooLarge(UsoLabError):
    pass


class InstanceTooLarge(UsoLabError):
    pass


# Inputs
class BadSpec(UsoLabError):
    pass


class InstanceFormatError(UsoLabError):
    pass


class WidthMismatch(UsoLabError):
    pass


class PreconditionViolation(UsoLabError):
    pass


# Integrity failures: these never happen on a correct implementation
class BudgetExceeded(UsoLabError):
    exit_code = 4


class NoViolationFound(UsoLabError):
    exit_code = 4
