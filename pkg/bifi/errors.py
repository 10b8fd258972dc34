class BifiError(Exception):
    """Base class for every error raised by the bifi package."""


class ConfigError(BifiError, ValueError):
    """Invalid run configuration or command-line usage."""

    def __init__(self, message: str, key: str = None, line: int = None):
        self.message = message
        self.key = key
        self.line = line
        location = ""
        if key is not None:
            location = f" (key '{key}'" + (f", line {line}" if line is not None else "") + ")"
        super().__init__(f"{message}{location}")

    def __reduce__(self):
        return self.__class__, (self.message, self.key, self.line)


class StabilityError(ConfigError):
    """Time step violates the enforced stability bound."""


class SolverDivergedError(BifiError):
    """Non-finite values appeared while time stepping."""

    def __init__(self, solver: str, step: int, sample: int = None):
        self.solver = solver
        self.step = step
        self.sample = sample
        where = f" (sample {sample})" if sample is not None else ""
        super().__init__(f"{solver} solver diverged at step {step}{where}")

    def __reduce__(self):
        return self.__class__, (self.solver, self.step, self.sample)


class SurrogateConstructionError(BifiError):
    """The selected low-fidelity basis cannot be factorized."""


class DegenerateSampleError(BifiError):
    """A sample has zero norm where a relative quantity is needed."""


class PhaseError(BifiError):
    """Failure inside one phase of an experiment pipeline."""

    def __init__(self, phase: str, cause: Exception):
        self.phase = phase
        self.cause = cause
        super().__init__(f"phase '{phase}' failed: {cause}")

    def __reduce__(self):
        return self.__class__, (self.phase, self.cause)
