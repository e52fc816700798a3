from typing import Any, Dict, Optional


class SpinBathError(Exception):
    """Base class for every domain error raised by the services"""

    def to_detail(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self)}


class InvalidParameters(SpinBathError, ValueError):
    """Physical configuration, state or grid rejected at a model boundary"""


class SingularMap(SpinBathError):
    """The time-local generator does not exist at t (F(t) not invertible)"""

    def __init__(self, t: float, magnitude: float, quantity: str):
        self.t = t
        self.magnitude = magnitude
        self.quantity = quantity
        super().__init__(f"Map not invertible at t={t}: |{quantity}|={magnitude:.3e}")


class NotCompletelyPositive(SpinBathError):
    """Choi state not positive, so no Kraus decomposition exists"""

    def __init__(self, inequality: str, value: float):
        self.inequality = inequality
        self.value = value
        super().__init__(f"Choi positivity violated: {inequality} (value {value:.3e})")


class PureStateSingularity(SpinBathError):
    """Entropy derivative evaluated at a pure state (x = 1)"""

    def __init__(self, t: Optional[float], x: float, dx_dt: float):
        self.t = t
        self.x = x
        self.dx_dt = dx_dt
        where = "" if t is None else f" at t={t}"
        super().__init__(f"Pure state{where}: x={x!r}, dx/dt={dx_dt:.3e}")

    @property
    def limit(self) -> float:
        """One-sided limit of sigma: -inf/+inf by the sign of dx/dt, 0 if stationary"""
        if self.dx_dt > 0:
            return float("-inf")
        if self.dx_dt < 0:
            return float("inf")
        return 0.0


class DimensionCap(SpinBathError):
    """Full-space oracle refused: 2^(N+1) exceeds the configured cap"""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(f"Brute-force oracle limited to N <= {cap}, got N={n}")


class StepFailure(SpinBathError):
    """RK4 step halving could not reach the local tolerance"""

    def __init__(self, t: float, error: float):
        self.t = t
        self.error = error
        super().__init__(f"RK4 error control failed at t={t}: local error {error:.3e}")


class UndefinedFractionExceeded(SpinBathError):
    """Too many grid samples where the quantity is undefined"""

    def __init__(self, fraction: float, limit: float):
        self.fraction = fraction
        self.limit = limit
        super().__init__(f"{fraction:.2%} of samples undefined (limit {limit:.2%})")


class VerificationFailed(SpinBathError):
    """At least one verification suite failed"""

    def __init__(self, report: Optional[Dict[str, Any]] = None):
        self.report = report or {}
        failed = [name for name, suite in self.report.items() if not suite.get("passed", False)]
        super().__init__(f"Verification failed: {', '.join(failed) or 'unknown'}")
