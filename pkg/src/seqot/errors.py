"""Exception types raised across the package."""


class ProblemViolation(ValueError):
    """One violated well-formedness condition of a problem instance."""


class NonStochasticMarginal(ProblemViolation):
    pass


class NegativeCost(ProblemViolation):
    pass


class ShapeMismatch(ProblemViolation):
    pass


class InvalidProblem(ValueError):
    """Raised by :func:`seqot.core.validate_problem`; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NonPositiveEpsilon(ValueError):
    pass


class WrongChainLength(ValueError):
    pass


class DegenerateDimensions(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class NonPositiveEntry(ValueError):
    pass


class ZeroDenominatorWithPositiveMass(ValueError):
    pass


class NumericalUnderflow(ArithmeticError):
    pass


class ZeroKernelEntry(NumericalUnderflow):
    """A Gibbs kernel entry fell below the smallest normal double."""


class MaxItersExceeded(RuntimeError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"no convergence within {report.state.n} iterations")


class ZeroMassInput(ValueError):
    pass


class TargetNotDistribution(ValueError):
    pass


class ScaleExceeded(ValueError):
    pass


class InfeasibleSupplies(ValueError):
    pass


class ReferenceNotConverged(RuntimeError):
    pass


class DeltaExceedsCostWarning(UserWarning):
    """The target suboptimality is not below the composed cost's max entry."""
