"""Parameter record and admissible-range predicates.

Everything downstream is about the regularized gradient flow

    u_t = (|Du|^2 + eps)^(gamma/2) * (lap(u) + (p - 2) * ilap(u) / (|Du|^2 + eps))

with ilap(u) = <Du, D2u Du> the unnormalized infinity Laplacian, p > 1 and
gamma > -1.  The exponent s parametrizes the weight |Du|^(p-2+s) whose
weighted Hessian integrability the toolkit probes; epsilon >= 0 is the
gradient regularization.  This module owns the raw ranges, the planar
second-order regularity region, and the range condition under which the
smooth-weight selection exists.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass

from .errors import RangeError

#: Upper gamma threshold for the case (ii) weight selection.
SQRT2_MINUS_HALF = math.sqrt(2.0) - 0.5


class TheoremCase(enum.Enum):
    """Which planar regularity regime a (p, gamma) pair falls in."""

    CASE_I = "case_i"
    CASE_II = "case_ii"
    BOTH = "both"
    NEITHER = "neither"


@dataclass(frozen=True)
class Params:
    """Problem parameters (n, p, gamma, s, epsilon).

    Construction does not validate; call validate() to enforce ranges.  n = 1
    is admitted here (the one dimensional coefficient check uses it) but
    rejected by range_condition_smooth.
    """

    n: int
    p: float
    gamma: float
    s: float
    epsilon: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @staticmethod
    def from_json(text: str) -> "Params":
        obj = json.loads(text)
        return Params(
            n=int(obj["n"]),
            p=float(obj["p"]),
            gamma=float(obj["gamma"]),
            s=float(obj["s"]),
            epsilon=float(obj["epsilon"]),
        )


def validate(params: Params) -> None:
    """Raise RangeError naming the violated bound, if any.

    Bounds: n >= 1 integer, p > 1, gamma > -1, epsilon >= 0, s finite.
    """
    if not isinstance(params.n, int) or params.n < 1:
        raise RangeError(f"n must be an integer >= 1 (got {params.n!r})")
    if not (params.p > 1.0) or not math.isfinite(params.p):
        raise RangeError(f"p must be > 1 (got {params.p!r})")
    if not (params.gamma > -1.0) or not math.isfinite(params.gamma):
        raise RangeError(f"gamma must be > -1 (got {params.gamma!r})")
    if not math.isfinite(params.s):
        raise RangeError(f"s must be finite (got {params.s!r})")
    if not (params.epsilon >= 0.0) or not math.isfinite(params.epsilon):
        raise RangeError(f"epsilon must be >= 0 (got {params.epsilon!r})")


def range_condition_smooth(params: Params) -> bool:
    """Whether s clears both lower thresholds for the smooth-weight selection.

    Requires n >= 2.  The condition is strict:

        s > max(-1 - (p - 1)/(n - 1), gamma + 1 - p)

    With n = 2 and s = 2 - p it reduces to gamma < 1.
    """
    validate(params)
    if params.n < 2:
        raise RangeError(f"n must be >= 2 for the smooth range condition (got {params.n})")
    lower = max(-1.0 - (params.p - 1.0) / (params.n - 1.0), params.gamma + 1.0 - params.p)
    return params.s > lower


def theorem_case(p: float, gamma: float) -> TheoremCase:
    """Classify (p, gamma) against the two planar regularity regimes.

    Case (i): 1 < p <= 5 and -1 < gamma < 1.
    Case (ii): p > 1 and -1 < gamma < sqrt(2) - 1/2.
    """
    if not (p > 1.0) or not math.isfinite(p):
        raise RangeError(f"p must be > 1 (got {p!r})")
    if not (gamma > -1.0) or not math.isfinite(gamma):
        raise RangeError(f"gamma must be > -1 (got {gamma!r})")
    case_i = p <= 5.0 and gamma < 1.0
    case_ii = gamma < SQRT2_MINUS_HALF
    if case_i and case_ii:
        return TheoremCase.BOTH
    if case_i:
        return TheoremCase.CASE_I
    if case_ii:
        return TheoremCase.CASE_II
    return TheoremCase.NEITHER
