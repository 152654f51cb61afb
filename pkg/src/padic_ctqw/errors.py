"""Exception hierarchy shared by every module of the package."""


class ContractError(ValueError):
    """An argument violated a documented precondition."""


class NumericalContractError(ContractError):
    """A computed quantity drifted outside its guaranteed tolerance.

    ``defect`` holds the measured deviation so callers (the CLI in
    particular) can report it.
    """

    def __init__(self, message, defect=float("nan")):
        super().__init__(message)
        self.defect = defect


class ModelParseError(ContractError):
    """A model configuration file failed validation."""
