import math


class StirapOCError(Exception):
    """
    Base class of every error raised by stirapoc.
    """


class DegenerateChartError(StirapOCError):
    """
    Raised when a spherical chart is evaluated at a coordinate degeneracy
    (a pole of the sphere, where cot(theta) is undefined).
    """

    def __init__(self, angle_name, angle, guard):
        self.angle_name = angle_name
        self.angle = angle
        msg = (
            f"Chart degeneracy: sin({angle_name}) = {abs(math.sin(angle)):.3e} "
            f"is below the pole guard {guard:g} ({angle_name} = {angle!r})"
        )
        super().__init__(msg)


class ZeroVectorError(StirapOCError):
    """
    Raised when spherical coordinates are requested for the zero vector.
    """

    def __init__(self):
        super().__init__("Cannot convert the zero vector to spherical coordinates")


class IntegrationError(StirapOCError):
    """
    Raised when the adaptive integrator cannot reach the requested horizon.
    """

    def __init__(self, time, reason):
        self.time = time
        msg = f"Integration failed at t = {time:.6g}: {reason}"
        super().__init__(msg)


class NonFiniteDerivativeError(IntegrationError):
    """
    Raised when a vector field returns NaN or infinite components.
    """

    def __init__(self, time):
        super().__init__(time, "vector field returned a non-finite value")


class ConservationDriftError(StirapOCError):
    """
    Raised when a constant of motion drifts beyond the accepted threshold.
    """

    def __init__(self, quantity, drift, threshold):
        self.quantity = quantity
        self.drift = drift
        msg = (
            f"Relative drift of {quantity} reached {drift:.3e} "
            f"(threshold {threshold:.1e})"
        )
        super().__init__(msg)


class SingularParameterError(StirapOCError):
    """
    Raised when a formula would divide by a vanishing parameter.
    """

    def __init__(self, name, detail=""):
        self.name = name
        msg = f"Parameter {name} must be non-zero"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvalidParameterError(StirapOCError):
    """
    Raised when a parameter lies outside the domain of an operation.
    """

    def __init__(self, name, value, reason):
        self.name = name
        self.value = value
        msg = f"Invalid value for {name}: {value!r}, {reason}"
        super().__init__(msg)


class ConstraintViolationError(StirapOCError):
    """
    Raised when a point does not satisfy the reduced phase-space constraints.
    """

    def __init__(self, residual, tolerance):
        self.residual = residual
        msg = (
            f"Reduced point is off the constrained space: residual "
            f"{residual:.3e} exceeds {tolerance:.1e}"
        )
        super().__init__(msg)


class ShootingError(StirapOCError):
    """
    Raised when the flow started from a candidate costate fails.
    """

    def __init__(self, costates, cause):
        self.costates = dict(costates)
        self.cause = cause
        values = ", ".join(f"{k}={v:.10g}" for k, v in self.costates.items())
        msg = f"Shooting failed for costates ({values}): {cause}"
        super().__init__(msg)


class InsufficientSamplesError(StirapOCError):
    """
    Raised when a trajectory is too short to compute control metrics.
    """

    def __init__(self, n_samples, required):
        msg = f"Metrics need at least {required} samples, trajectory has {n_samples}"
        super().__init__(msg)


class ConfigError(StirapOCError):
    """
    Raised when a scenario configuration does not match the schema.
    """

    def __init__(self, message, line=None):
        self.line = line
        msg = f"line {line}: {message}" if line is not None else message
        super().__init__(msg)


class InvalidOutputFormat(StirapOCError):
    """
    Raised when an unexpected output format is requested.
    """

    def __init__(self, format):
        msg = f"Invalid output format extension: .{format}"
        super().__init__(msg)
