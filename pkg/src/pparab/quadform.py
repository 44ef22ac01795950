"""Coefficient assembly and uniform positive-definiteness certification.

A weighted combination of the two divergence structures turns the flow's
second-order energy into

    pref * ( c1 |D2u|^2 + c2 dt_grad_sq + n11 delta_t^2
             + 2 n12 delta_t ilap_n + n22 ilap_n^2 )

with pref = (|Du|^2 + eps)^((p-2+s)/2) and coefficients depending on
theta = |Du|^2/(|Du|^2 + eps) through kappa = 1 - theta:

    c1 = w1 + w3 kappa
    c2 = (w1 (p-2+s) + w3 (p-4+s) kappa) theta
    c3 = w2 + w4 kappa
    c4 = (w2 (p-2+s-gamma) + w4 (p-4+s-gamma) kappa) theta

The certificate is a uniform-in-theta lower bound: if 2c1 + c2, c3, m11 and
det M stay above a positive floor on all of theta in [0, 1], the combination
dominates lambda * pref * |D2u|^2 pointwise in the plane.  M is the 2x2 form
acting on (delta_t, ilap_n) after the |D2u|^2 coercivity is peeled off,

    M = [[c3, m12], [m12, (c3 + c4) p_theta]],
    m12 = (c3 p_theta + (c3 + c4) - (2 c1 + c2)) / 2,

and N = M - c1 * I is the raw form before peeling.

Weight selections: the degenerate pair (w1, 2, 0, 0) with w1 just above
(sqrt(p-1) - sqrt(1-gamma))^2, the uniform pair (p - gamma, 2, 4 - p + gamma, 2)
whose mixed term cancels identically at s = 2 - p, and the smooth-flow pair
whose w2 sits inside an explicit root window.

Everything here is plain algebra on floats; no discretization enters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeError
from .params import Params, TheoremCase, range_condition_smooth, theorem_case

DEFAULT_GRID_POINTS = 4097
DEFAULT_ETA = 0.05


@dataclass(frozen=True)
class Weights:
    """Combination weights (w1, w2) for the main pair and (w3, w4) for the
    epsilon-weighted pair."""

    w1: float
    w2: float
    w3: float
    w4: float

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4"):
            if not math.isfinite(getattr(self, name)):
                raise RangeError(f"{name} must be finite")

    @property
    def sup_norm(self) -> float:
        return max(abs(self.w1), abs(self.w2), abs(self.w3), abs(self.w4))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)


@dataclass(frozen=True)
class CoefficientSet:
    c1: float
    c2: float
    c3: float
    c4: float
    theta: float
    kappa: float
    p_theta: float


@dataclass(frozen=True)
class SymForm2:
    """Symmetric 2x2 form [[m11, m12], [m12, m22]]."""

    m11: float
    m12: float
    m22: float

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    @property
    def fro_norm(self) -> float:
        return math.sqrt(self.m11**2 + 2.0 * self.m12**2 + self.m22**2)


@dataclass(frozen=True)
class CertReport:
    """Outcome of a uniform-in-theta certification run.

    ok implies the four tracked minima are all >= the requested floor (> 0)
    and lambda_ > 0.  floor_c is the achieved bound min(min_2c1_c2, min_c3,
    min_m11, min_detM).  lambda_ folds in the infimum of c1, which is the
    actual coercivity in front of |D2u|^2 (for the eta-perturbed degenerate
    weights it can be far below 1).
    """

    ok: bool
    floor_c: float
    lambda_: float
    min_2c1_c2: float
    min_c3: float
    min_detM: float
    min_m11: float
    min_c3c4: float
    min_c1: float
    argmin_theta: dict[str, float]
    norm_M: float
    norm_N: float
    norm_c2: float

    def to_json(self) -> str:
        obj = {
            "ok": self.ok,
            "floor_c": self.floor_c,
            "lambda": self.lambda_,
            "min_2c1_c2": self.min_2c1_c2,
            "min_c3": self.min_c3,
            "min_detM": self.min_detM,
            "min_m11": self.min_m11,
            "min_c3c4": self.min_c3c4,
            "min_c1": self.min_c1,
            "argmin_theta": self.argmin_theta,
            "norms": {"M": self.norm_M, "N": self.norm_N, "c2": self.norm_c2},
        }
        return json.dumps(obj, indent=2)


def coefficients(w: Weights, params: Params, theta: float) -> CoefficientSet:
    """The four theta-dependent coefficients at a single theta in [0, 1]."""
    if not (0.0 <= theta <= 1.0):
        raise RangeError(f"theta must lie in [0, 1] (got {theta!r})")
    p, s, gamma = params.p, params.s, params.gamma
    kappa = 1.0 - theta
    c1 = w.w1 + w.w3 * kappa
    c2 = (w.w1 * (p - 2.0 + s) + w.w3 * (p - 4.0 + s) * kappa) * theta
    c3 = w.w2 + w.w4 * kappa
    c4 = (w.w2 * (p - 2.0 + s - gamma) + w.w4 * (p - 4.0 + s - gamma) * kappa) * theta
    return CoefficientSet(
        c1=c1, c2=c2, c3=c3, c4=c4,
        theta=theta, kappa=kappa, p_theta=(p - 2.0) * theta + 1.0,
    )


def coefficient_arrays(w: Weights, params: Params, theta: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized coefficients over a theta array (no range check)."""
    p, s, gamma = params.p, params.s, params.gamma
    kappa = 1.0 - theta
    c1 = w.w1 + w.w3 * kappa
    c2 = (w.w1 * (p - 2.0 + s) + w.w3 * (p - 4.0 + s) * kappa) * theta
    c3 = w.w2 + w.w4 * kappa
    c4 = (w.w2 * (p - 2.0 + s - gamma) + w.w4 * (p - 4.0 + s - gamma) * kappa) * theta
    p_theta = (p - 2.0) * theta + 1.0
    m12 = 0.5 * (c3 * p_theta + (c3 + c4) - (2.0 * c1 + c2))
    return {
        "theta": theta, "kappa": kappa, "p_theta": p_theta,
        "c1": c1, "c2": c2, "c3": c3, "c4": c4,
        "m11": c3, "m12": m12, "m22": (c3 + c4) * p_theta,
    }


def matrix_M_regularized(c: CoefficientSet) -> SymForm2:
    """The peeled 2x2 form on (delta_t, ilap_n) at coefficient set c."""
    m12 = 0.5 * (c.c3 * c.p_theta + (c.c3 + c.c4) - (2.0 * c.c1 + c.c2))
    return SymForm2(m11=c.c3, m12=m12, m22=(c.c3 + c.c4) * c.p_theta)


def matrix_N(c: CoefficientSet) -> SymForm2:
    """The raw form before peeling: N = M - c1 * I."""
    m = matrix_M_regularized(c)
    return SymForm2(m11=c.c3 - c.c1, m12=m.m12, m22=(c.c3 + c.c4) * c.p_theta - c.c1)


def matrix_M_smooth(n: int, p: float, gamma: float, s: float, w1: float, w2: float) -> SymForm2:
    """The smooth-flow 2x2 form for general dimension n >= 2.

        m11 = w2 - ((n-2)/(n-1)) w1
        m12 = (w2 (2p - 2 + s - gamma) - w1 (p + s)) / 2
        m22 = w2 (p - 1)(p - 1 + s - gamma)
    """
    if n < 2:
        raise RangeError(f"n must be >= 2 (got {n})")
    return SymForm2(
        m11=w2 - ((n - 2.0) / (n - 1.0)) * w1,
        m12=0.5 * (w2 * (2.0 * p - 2.0 + s - gamma) - w1 * (p + s)),
        m22=w2 * (p - 1.0) * (p - 1.0 + s - gamma),
    )


def mixed_term_poly(w: Weights, p: float, gamma: float) -> tuple[float, float, float]:
    """Kappa-polynomial of twice the mixed entry at s = 2 - p.

    2 m12 = a2 kappa^2 + a1 kappa + a0 with

        a2 = (4 - p + gamma) w4 - 2 w3
        a1 = (p - 2 - gamma) (w4 - w2)
        a0 = (p - gamma) w2 - 2 w1

    All three vanish identically (exact float zeros) for the uniform pair.
    """
    a2 = (4.0 - p + gamma) * w.w4 - 2.0 * w.w3
    a1 = (p - 2.0 - gamma) * (w.w4 - w.w2)
    a0 = (p - gamma) * w.w2 - 2.0 * w.w1
    return (a2, a1, a0)


def x1x2_bounds(p: float, gamma: float) -> tuple[float, float, float | None]:
    """Extremes of X1 = (sqrt(p_theta) - sqrt(r_theta))^2 and
    X2 = (sqrt(p_theta) + sqrt(r_theta))^2 over theta in [0, 1], with
    r_theta = 1 - gamma theta.

    Returns (sup_x1, inf_x2, theta2) where

        sup_x1 = (sqrt(p-1) - sqrt(1-gamma))^2     (attained at theta = 1)
        inf_x2 = min(4, (sqrt(p-1) + sqrt(1-gamma))^2)

    and theta2 = (p - 2 - gamma)/((p - 2) gamma) is X2's interior stationary
    point when (p - 2) gamma > 0 places it inside (0, 1); there
    X2 = (p-2)/gamma + gamma/(p-2) + 2 >= 4, so it never lowers the infimum.
    Requires gamma < 1 (else r_theta degenerates).
    """
    if not (p > 1.0):
        raise RangeError(f"p must be > 1 (got {p!r})")
    if not (-1.0 < gamma < 1.0):
        raise RangeError(f"gamma must lie in (-1, 1) (got {gamma!r})")
    rp = math.sqrt(p - 1.0)
    rg = math.sqrt(1.0 - gamma)
    sup_x1 = (rp - rg) ** 2
    inf_x2 = min(4.0, (rp + rg) ** 2)
    theta2: float | None = None
    if (p - 2.0) * gamma > 0.0:
        cand = (p - 2.0 - gamma) / ((p - 2.0) * gamma)
        if 0.0 < cand < 1.0:
            theta2 = cand
    return (sup_x1, inf_x2, theta2)


def weights_case_i(p: float, gamma: float, eta: float = DEFAULT_ETA) -> Weights:
    """Degenerate-regime weights (w1, 2, 0, 0).

        w1 = p - gamma - 2 sqrt((p-1)(1-gamma)) + eta

    Requires gamma < 1, eta > 0, and w1 to clear X2's infimum:
    sup_x1 + eta < inf_x2.  Since sup_x1 always sits strictly below
    (sqrt(p-1) + sqrt(1-gamma))^2, the eta -> 0 admissibility condition is
    exactly 4 > (sqrt(p-1) - sqrt(1-gamma))^2.
    """
    if not (eta > 0.0):
        raise RangeError(f"eta must be > 0 (got {eta!r})")
    sup_x1, inf_x2, _ = x1x2_bounds(p, gamma)
    if not (sup_x1 + eta < inf_x2):
        raise RangeError(
            f"inadmissible (p, gamma, eta): need sup_x1 + eta < inf_x2, "
            f"got {sup_x1!r} + {eta!r} >= {inf_x2!r}"
        )
    w1 = p - gamma - 2.0 * math.sqrt((p - 1.0) * (1.0 - gamma)) + eta
    return Weights(w1, 2.0, 0.0, 0.0)


def weights_case_ii(p: float, gamma: float, strict: bool = True) -> Weights:
    """Uniform-regime weights (p - gamma, 2, 4 - p + gamma, 2).

    Their mixed term cancels identically at s = 2 - p, and the diagonal
    minimum 2(1 - gamma) - 1/(2(2 + gamma)) is positive exactly for
    gamma < sqrt(2) - 1/2; strict construction refuses gamma at or past that
    threshold.  strict=False returns the formula weights anyway so the
    certifier can exhibit the failure witness.
    """
    if not (p > 1.0):
        raise RangeError(f"p must be > 1 (got {p!r})")
    if not (gamma > -1.0):
        raise RangeError(f"gamma must be > -1 (got {gamma!r})")
    if strict and gamma >= math.sqrt(2.0) - 0.5:
        raise RangeError(
            f"gamma must be < sqrt(2) - 1/2 = {math.sqrt(2.0) - 0.5!r} (got {gamma!r})"
        )
    return Weights(p - gamma, 2.0, 4.0 - p + gamma, 2.0)


def appendix_quadratic(n: int, p: float, gamma: float, s: float) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of det(M_smooth(w1=1, w2)) as a quadratic in
    x = w2 - (n-2)/(n-1)."""
    P = p - 1.0
    K = gamma + 1.0
    G = p - 1.0 + s - gamma
    E = s + 1.0 + (p - 1.0) / (n - 1.0)
    q = G / (n - 1.0) + K - (n - 2.0) * P / (n - 1.0)
    a = -0.25 * (G - P) ** 2
    b = P * E + 0.5 * (G - P) * q
    c = -0.25 * q * q
    return (a, b, c)


def appendix_roots(n: int, p: float, gamma: float, s: float) -> tuple[float, float, float]:
    """Window of w2 - (n-2)/(n-1) on which the smooth-flow form with w1 = 1 has
    positive determinant.

    Returns (root_plus, root_minus, discriminant) with

        root_pm = (sqrt(P E) -/+ sqrt(G (G/(n-1) + K)))^2 / (G - P)^2,
        discriminant = G P E (G/(n-1) + K),

    P = p - 1, K = gamma + 1, G = p - 1 + s - gamma, E = s + 1 + (p-1)/(n-1).
    The determinant is positive strictly between root_plus and root_minus.
    When G = P (i.e. s = gamma) the quadratic degenerates to a line:
    root_minus = +inf and root_plus is the limit
    (K - (n-3) P/(n-1))^2 / (4 P (P/(n-1) + K)).
    Raises RangeError if any of P, K, G, E is <= 0.
    """
    if n < 2:
        raise RangeError(f"n must be >= 2 (got {n})")
    P = p - 1.0
    K = gamma + 1.0
    G = p - 1.0 + s - gamma
    E = s + 1.0 + (p - 1.0) / (n - 1.0)
    for name, val in (("P", P), ("K", K), ("G", G), ("E", E)):
        if not (val > 0.0):
            raise RangeError(f"{name} must be > 0 (got {val!r}); the root window needs it")
    qg = G / (n - 1.0) + K
    disc = G * P * E * qg
    if G == P:
        root_plus = (K - (n - 3.0) * P / (n - 1.0)) ** 2 / (4.0 * P * (P / (n - 1.0) + K))
        return (root_plus, math.inf, disc)
    sa = math.sqrt(P * E)
    sb = math.sqrt(G * qg)
    denom = (G - P) ** 2
    return ((sa - sb) ** 2 / denom, (sa + sb) ** 2 / denom, disc)


def weights_smooth(n: int, p: float, gamma: float, s: float) -> Weights:
    """Smooth-flow weights (w1, w2, 0, 0) making matrix_M_smooth positive
    definite.

    n = 2: the diagonalizing pair (2p - 2 + s - gamma, p + s).
    n >= 3: w1 = 1 and w2 = (n-2)/(n-1) + the midpoint of the root window
    (capped at root_plus + 10 so the choice stays finite); when the window
    degenerates to a ray (s = gamma), w2 sits 1 above its endpoint.
    Raises RangeError when the range condition fails.
    """
    if not range_condition_smooth(Params(n=n, p=p, gamma=gamma, s=s, epsilon=0.0)):
        raise RangeError(
            f"s = {s!r} violates the smooth range condition for (n, p, gamma) = "
            f"({n}, {p!r}, {gamma!r})"
        )
    if n == 2:
        return Weights(2.0 * p - 2.0 + s - gamma, p + s, 0.0, 0.0)
    root_plus, root_minus, _ = appendix_roots(n, p, gamma, s)
    shift = (n - 2.0) / (n - 1.0)
    if math.isinf(root_minus):
        return Weights(1.0, shift + root_plus + 1.0, 0.0, 0.0)
    x = 0.5 * (root_plus + min(root_minus, root_plus + 10.0))
    return Weights(1.0, shift + x, 0.0, 0.0)


def lambda_select(floor_c: float, norm_M: float, norm_N: float, norm_c2: float) -> float:
    """Explicit admissible coupling constant from a certified floor and norms.

        lambda = (1/2) min(1, c/(norm_c2 + c), c/(norm_N + norm_M),
                           c/(4 (norm_M + norm_N)^2))

    with c = floor_c.  All inputs must be positive.
    """
    for name, val in (
        ("floor_c", floor_c), ("norm_M", norm_M), ("norm_N", norm_N), ("norm_c2", norm_c2),
    ):
        if not (val > 0.0) or not math.isfinite(val):
            raise RangeError(f"{name} must be positive and finite (got {val!r})")
    c = floor_c
    return 0.5 * min(
        1.0,
        c / (norm_c2 + c),
        c / (norm_N + norm_M),
        c / (4.0 * (norm_M + norm_N) ** 2),
    )


def _theta_grid(params: Params, grid_points: int, w: Weights) -> np.ndarray:
    """Certification grid: uniform points plus closed-form stationary points."""
    theta = np.linspace(0.0, 1.0, grid_points)
    extras = []
    # Interior extremum of c3 + c4 (quadratic in theta); for the uniform pair
    # it sits at kappa = 1/(2(2 + gamma)).
    kappa1 = 1.0 / (2.0 * (2.0 + params.gamma))
    if 0.0 < kappa1 < 1.0:
        extras.append(1.0 - kappa1)
    g4 = params.p - 4.0 + params.s - params.gamma
    if w.w4 * g4 != 0.0:
        g2 = params.p - 2.0 + params.s - params.gamma
        cand = (w.w2 * g2 + w.w4 * g4 - w.w4) / (2.0 * w.w4 * g4)
        if 0.0 < cand < 1.0:
            extras.append(cand)
    if -1.0 < params.gamma < 1.0:
        _, _, theta2 = x1x2_bounds(params.p, params.gamma)
        if theta2 is not None:
            extras.append(theta2)
    if extras:
        theta = np.sort(np.concatenate([theta, np.array(extras)]))
    return theta


def certify_uniform(w: Weights, params: Params, floor: float | None = None,
                    grid_points: int = DEFAULT_GRID_POINTS) -> CertReport:
    """Certify uniform-in-theta positivity of the combination's lower bound.

    Scans theta in [0, 1] (uniform grid augmented with the closed-form
    stationary points) and reports the minima of 2c1 + c2, c3, m11, det M and
    c3 + c4 with their argmins, the sup norms of M, N and c2, and the derived
    coupling lambda_.  Never raises on admissible params; failure is reported
    as ok=False with the witness argmin.
    """
    if floor is None:
        floor = 1e-6 * max(1.0, w.sup_norm)
    theta = _theta_grid(params, grid_points, w)
    arr = coefficient_arrays(w, params, theta)
    two_c1_c2 = 2.0 * arr["c1"] + arr["c2"]
    c3c4 = arr["c3"] + arr["c4"]
    det_m = arr["m11"] * arr["m22"] - arr["m12"] ** 2

    def _min_of(vals: np.ndarray) -> tuple[float, float]:
        k = int(np.argmin(vals))
        return float(vals[k]), float(theta[k])

    min_2c1_c2, arg_2c1_c2 = _min_of(two_c1_c2)
    min_c3, arg_c3 = _min_of(arr["c3"])
    min_m11, arg_m11 = _min_of(arr["m11"])
    min_det, arg_det = _min_of(det_m)
    min_c3c4, arg_c3c4 = _min_of(c3c4)
    min_c1 = float(np.min(arr["c1"]))

    norm_M = float(np.max(np.sqrt(arr["m11"] ** 2 + 2.0 * arr["m12"] ** 2 + arr["m22"] ** 2)))
    n11 = arr["c3"] - arr["c1"]
    n22 = arr["m22"] - arr["c1"]
    norm_N = float(np.max(np.sqrt(n11**2 + 2.0 * arr["m12"] ** 2 + n22**2)))
    norm_c2 = float(np.max(np.abs(arr["c2"])))

    floor_c = min(min_2c1_c2, min_c3, min_m11, min_det)
    lam = 0.0
    if floor_c > 0.0 and min_c1 > 0.0:
        # Norms can be exactly zero for trivial weights; lambda_select needs
        # positives, so clamp with the floor itself.
        lam = lambda_select(
            floor_c, max(norm_M, floor_c * 1e-12), max(norm_N, floor_c * 1e-12),
            max(norm_c2, floor_c * 1e-12),
        ) * min_c1
    ok = floor_c >= floor and lam > 0.0
    return CertReport(
        ok=ok, floor_c=floor_c, lambda_=lam,
        min_2c1_c2=min_2c1_c2, min_c3=min_c3, min_detM=min_det, min_m11=min_m11,
        min_c3c4=min_c3c4, min_c1=min_c1,
        argmin_theta={
            "two_c1_c2": arg_2c1_c2, "c3": arg_c3, "m11": arg_m11,
            "detM": arg_det, "c3c4": arg_c3c4,
        },
        norm_M=norm_M, norm_N=norm_N, norm_c2=norm_c2,
    )


def one_dim_coefficient(p: float, gamma: float, s: float, theta: float) -> float:
    """The single scalar coefficient of the one dimensional analogue:

        (p-1)(p-1+s-gamma) theta^2 + (2p-2+s-gamma) theta kappa + kappa^2.

    Its infimum over theta in [0, 1] is positive iff s > gamma + 1 - p.
    """
    if not (0.0 <= theta <= 1.0):
        raise RangeError(f"theta must lie in [0, 1] (got {theta!r})")
    kappa = 1.0 - theta
    return (
        (p - 1.0) * (p - 1.0 + s - gamma) * theta * theta
        + (2.0 * p - 2.0 + s - gamma) * theta * kappa
        + kappa * kappa
    )


def region_map(p_grid, gamma_grid, s: float | None = None, floor: float | None = None,
               eta: float = DEFAULT_ETA) -> list[dict]:
    """Certification sweep over a (p, gamma) grid.

    Per cell: theorem case classification, certification outcome and det
    minimum for the degenerate weights (perturbation clamped to half the
    admissibility margin so the construction never overshoots), certification
    outcome and diagonal minimum for the uniform weights, and the smooth range
    predicate.  s = None means the natural per-cell exponent s = 2 - p, the
    setting in which both weight selections live; an explicit s is used
    everywhere instead.
    """
    rows = []
    for p in p_grid:
        for gamma in gamma_grid:
            s_cell = (2.0 - p) if s is None else s
            params = Params(n=2, p=float(p), gamma=float(gamma), s=float(s_cell), epsilon=0.0)
            tc = theorem_case(float(p), float(gamma))
            w2 = weights_case_ii(float(p), float(gamma), strict=False)
            rep2 = certify_uniform(w2, params, floor)
            case_i_ok = False
            case_i_min_det = math.nan
            if -1.0 < gamma < 1.0:
                sup_x1, inf_x2, _ = x1x2_bounds(float(p), float(gamma))
                margin = inf_x2 - sup_x1
                if margin > 0.0:
                    w1 = weights_case_i(float(p), float(gamma), min(eta, 0.5 * margin))
                    rep1 = certify_uniform(w1, params, floor)
                    case_i_ok = rep1.ok
                    case_i_min_det = rep1.min_detM
            rows.append({
                "p": float(p),
                "gamma": float(gamma),
                "theorem_case": tc.value,
                "case_i_ok": case_i_ok,
                "case_i_min_det": case_i_min_det,
                "case_ii_ok": rep2.ok,
                "case_ii_min_c3c4": rep2.min_c3c4,
                "smooth_range_ok": range_condition_smooth(params),
            })
    return rows


REGION_COLUMNS = (
    "p", "gamma", "theorem_case", "case_i_ok", "case_i_min_det",
    "case_ii_ok", "case_ii_min_c3c4", "smooth_range_ok",
)


def region_map_csv(rows: list[dict]) -> str:
    out = [",".join(REGION_COLUMNS)]
    for row in rows:
        cells = []
        for col in REGION_COLUMNS:
            val = row[col]
            if isinstance(val, bool):
                cells.append("true" if val else "false")
            elif isinstance(val, float):
                cells.append(repr(val))
            else:
                cells.append(str(val))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
