class DegenerateInputError(ValueError):
    """Input has no variation where the computation needs some."""


class ConvergenceError(RuntimeError):
    pass
