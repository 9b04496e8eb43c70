"""Exception types shared across the package."""


class TracialError(Exception):
    """Base class for all package-specific failures."""


class ConvergenceError(TracialError):
    """An iterative factorization exhausted its budget or missed its residual contract."""


class FlagValidationError(TracialError):
    """A flag violated a structural invariant (idempotency, nesting, traces)."""

    def __init__(self, index: int, kind: str, defect: float):
        self.index = index
        self.kind = kind
        self.defect = defect
        super().__init__(
            f"flag invariant '{kind}' violated at projection {index}: defect {defect:.3e}"
        )


class BudgetError(TracialError):
    """A supplier's invariance defect exceeded the stage's delta budget."""

    def __init__(self, defect: float, delta: float, context: str = ""):
        self.defect = defect
        self.delta = delta
        where = f" ({context})" if context else ""
        super().__init__(
            f"supplier defect {defect:.3e} >= delta budget {delta:.3e}{where}; "
            "raise eps or improve the supplier"
        )


class StageError(TracialError):
    """A compression stage failed its perturbation budget."""

    def __init__(self, stage: int, block: int, message: str):
        self.stage = stage
        self.block = block
        super().__init__(f"stage {stage}, block {block}: {message}")


class PipelineError(TracialError):
    """A compression report violated one of its output contracts."""


class GradientCheckError(TracialError):
    """Analytic gradient disagreed with central finite differences."""

    def __init__(self, point: int, rel_error: float):
        self.point = point
        self.rel_error = rel_error
        super().__init__(
            f"gradient check failed at probe frame {point}: relative error {rel_error:.3e}"
        )


class SpectrumGapError(TracialError):
    """Eigenvalues too close to enumerate a finite invariant lattice."""

    def __init__(self, gap: float, threshold: float):
        self.gap = gap
        self.threshold = threshold
        super().__init__(
            f"minimal eigenvalue gap {gap:.3e} below threshold {threshold:.3e}; "
            "lattice enumeration requires distinct eigenvalues"
        )


class LatticeError(TracialError):
    """A lattice map failed verification (matching, injectivity, join/meet)."""
