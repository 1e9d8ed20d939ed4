"""Exception hierarchy shared by every qtotal module."""


class QTotalError(Exception):
    """Base class for all errors raised by qtotal."""


class NonFiniteError(QTotalError, ValueError):
    """A matrix contains NaN or infinite entries."""


class DimensionMismatchError(QTotalError, ValueError):
    """Operands have incompatible shapes."""


class DimensionOverflowError(QTotalError, ValueError):
    """A tensor product would exceed the configured maximum dimension."""


class BadSlotError(QTotalError, IndexError):
    """A subsystem slot index is out of range."""


class InvariantViolation(QTotalError, ValueError):
    """An object failed validation.

    Attributes
    ----------
    invariant : str
        Short name of the broken invariant (``"hermitian"``, ``"psd"``, ...).
    magnitude : float
        How far the input is from satisfying it.
    """

    def __init__(self, invariant: str, magnitude: float, message: str = ""):
        self.invariant = invariant
        self.magnitude = float(magnitude)
        text = message or f"{invariant} violated by {self.magnitude:.3g}"
        super().__init__(text)


class NonHermitianError(InvariantViolation):
    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("hermitian", magnitude, message)


class NotPSDError(InvariantViolation):
    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("psd", magnitude, message)


class TraceNotOneError(InvariantViolation):
    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("unit-trace", magnitude, message)


class InvalidPovmError(InvariantViolation):
    """A POVM element has eigenvalues outside [0, 1]."""

    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("povm-element", magnitude, message)


class IncompletePovmError(InvariantViolation):
    """POVM elements do not sum to the identity."""

    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("completeness", magnitude, message)


class NotUnitaryError(InvariantViolation):
    def __init__(self, magnitude: float, message: str = ""):
        super().__init__("unitary", magnitude, message)


class InvalidEntanglerError(NotUnitaryError):
    pass


class NonRealProbabilityError(QTotalError, ValueError):
    """A trace that should be a probability has a significant imaginary part."""


class OutcomeProbabilityZeroError(QTotalError, ValueError):
    """Conditioning on an outcome whose probability is below ``p_min``."""


class InvalidJointError(QTotalError, ValueError):
    """A classical joint table is negative or not normalised."""


class _KeyMessage(QTotalError, KeyError):
    # KeyError would repr() the message
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class UnknownScenarioError(_KeyMessage):
    pass


class UnknownParameterError(_KeyMessage):
    pass


class ScenarioParseError(QTotalError, ValueError):
    """A scenario document could not be parsed.

    ``location`` is a JSON path (``state.amplitudes[2]``) or ``line:col``.
    """

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class CheckExecutionError(QTotalError, RuntimeError):
    """A requested check cannot be run on the given scenario."""


class ScenarioValidationError(QTotalError, ValueError):
    """A parsed scenario field holds an invalid domain object.

    Carries the field path plus the invariant name and magnitude of the
    underlying violation when there is one.
    """

    def __init__(self, location: str, cause: Exception):
        self.location = location
        self.invariant = getattr(cause, "invariant", type(cause).__name__)
        self.magnitude = getattr(cause, "magnitude", None)
        super().__init__(f"{location}: {cause}")
