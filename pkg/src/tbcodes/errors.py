"""Exception hierarchy shared by every module.

The CLI maps :class:`ValidationError` (and subclasses) to exit code 1 and
:class:`CapacityError` / :class:`ContractError` (and subclasses) to exit code 2.
"""


class TBCodesError(Exception):
    kind = "error"


class ValidationError(TBCodesError, ValueError):
    kind = "validation"


class ShapeError(ValidationError):
    kind = "shape"


class CapacityError(TBCodesError):
    kind = "capacity"


class ContractError(TBCodesError):
    kind = "contract"


class SchedulingError(ContractError):
    kind = "scheduling"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class HypergraphError(ContractError):
    kind = "hypergraph"


class InfeasibleError(ContractError):
    kind = "infeasible"
