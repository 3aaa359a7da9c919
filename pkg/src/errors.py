"""
Exception hierarchy for the quasihelm pipeline
Every error carries the tag of the module that raised it so the CLI can report it
"""
from typing import Optional, Sequence


class QuasiHelmError(Exception):
    """Base class for all pipeline failures"""

    module = "quasihelm"

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class ConfigError(QuasiHelmError, ValueError):
    module = "cli"


class MediumError(QuasiHelmError, ValueError):
    module = "media"


class AssemblyError(QuasiHelmError, ValueError):
    module = "fem-core"


class SingularSystemError(QuasiHelmError, RuntimeError):
    """Constrained system could not be factorized"""

    module = "fem-core"

    def __init__(self, message: str, min_pivot: float, module: Optional[str] = None):
        super().__init__(f"{message} (smallest pivot magnitude {min_pivot:.3e})", module)
        self.min_pivot = min_pivot


class QepError(QuasiHelmError, RuntimeError):
    module = "riccati"

    def __init__(self, message: str, min_singular_value: float):
        super().__init__(f"{message} (smallest singular value of T10 {min_singular_value:.3e})")
        self.min_singular_value = min_singular_value


class SelectionError(QuasiHelmError, RuntimeError):
    """Unit-disk selection did not find exactly N eigenvalues"""

    module = "riccati"

    def __init__(self, message: str, inside_count: int, nearest_circle: Sequence[complex]):
        nearest = ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in nearest_circle)
        super().__init__(f"{message}: {inside_count} inside; nearest the unit circle: {nearest}")
        self.inside_count = inside_count
        self.nearest_circle = list(nearest_circle)


class DiagonalizabilityError(QuasiHelmError, RuntimeError):
    module = "riccati"

    def __init__(self, condition: float, threshold: float):
        super().__init__(f"diagonalizability assumption violated: cond(Psi) = {condition:.3e} > {threshold:.1e}")
        self.condition = condition


class PairingError(QuasiHelmError, RuntimeError):
    """QEP eigenvalues are not closed under lambda -> 1/lambda"""

    module = "riccati"

    def __init__(self, defect: float, tolerance: float):
        super().__init__(f"eigenvalue pairing defect {defect:.2e} exceeds {tolerance:.0e}")
        self.defect = defect


class RiccatiResidualError(QuasiHelmError, RuntimeError):
    module = "riccati"


class DtnSignError(QuasiHelmError, RuntimeError):
    module = "halfguide"


class TruncationError(QuasiHelmError, RuntimeError):
    """Truncated reference domain exceeds the memory budget"""

    module = "oracle-harness"

    def __init__(self, message: str, suggested_target: float):
        super().__init__(f"{message}; try target >= {suggested_target:.1e}")
        self.suggested_target = suggested_target


class OracleError(QuasiHelmError, RuntimeError):
    module = "oracle-harness"
