"""Grids, scalar fields, and pointwise derivative quantities.

The derivative bundle collects everything the flow and the integral estimates
consume at a node: gradient, Hessian, Laplacian, the unnormalized and
normalized infinity Laplacians ilap = <Du, D2u Du> and ilap_n = ilap/|Du|^2,
the tangential Laplacian delta_t = lap - ilap_n, and the squared tangential
gradient of |Du|,

    dt_grad_sq = |D2u Du|^2 / |Du|^2 - ilap_n^2  (>= 0).

theta = |Du|^2 / (|Du|^2 + eps) interpolates between the degenerate (theta=1)
and uniformly parabolic (theta=0) regimes; p_theta = (p - 2) theta + 1.

fundamental_gap measures the slack in the pointwise Hessian decomposition

    |H|^2 >= 2 |D_T|g||^2 + (lap_T)^2/(n-1) + ilap_n^2,

which is an identity (gap = 0) for every symmetric 2x2 H and nonzero g.

All discrete derivatives are second-order central differences on uniform
grids; nodes are (x0 + i*hx, y0 + j*hy) with values stored values[i, j].
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryError, RangeError, ZeroGradientError
from .params import Params

#: |Du|^2 below this is treated as an exact zero gradient.
GRAD_CUTOFF = 1e-30


@dataclass(frozen=True)
class Grid2:
    """Uniform tensor grid: nx by ny nodes, spacings hx, hy, origin (x0, y0)."""

    nx: int
    ny: int
    hx: float
    hy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        for name in ("hx", "hy", "x0", "y0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.nx < 3 or self.ny < 3:
            raise RangeError(f"nx and ny must be >= 3 (got {self.nx}, {self.ny})")
        if not (self.hx > 0.0) or not (self.hy > 0.0):
            raise RangeError(f"hx and hy must be > 0 (got {self.hx}, {self.hy})")

    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    @property
    def x_max(self) -> float:
        return self.x0 + self.hx * (self.nx - 1)

    @property
    def y_max(self) -> float:
        return self.y0 + self.hy * (self.ny - 1)


@dataclass
class ScalarField:
    """Grid function with finite float64 values, shape (nx, ny)."""

    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise RangeError(
                f"values shape {v.shape} does not match grid ({self.grid.nx}, {self.grid.ny})"
            )
        if not np.isfinite(v).all():
            raise RangeError("field values must be finite")
        self.values = v

    def to_csv(self) -> str:
        """Header line nx,ny,hx,hy,x0,y0 then one line of values per x-row."""
        g = self.grid
        out = io.StringIO()
        out.write("nx,ny,hx,hy,x0,y0\n")
        out.write(f"{g.nx},{g.ny},{g.hx!r},{g.hy!r},{g.x0!r},{g.y0!r}\n")
        for i in range(g.nx):
            out.write(",".join(repr(float(v)) for v in self.values[i]) + "\n")
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> "ScalarField":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) < 2 or lines[0].split(",")[0] != "nx":
            raise RangeError("malformed field CSV: missing header")
        head = lines[1].split(",")
        nx, ny = int(head[0]), int(head[1])
        grid = Grid2(nx, ny, float(head[2]), float(head[3]), float(head[4]), float(head[5]))
        if len(lines) != 2 + nx:
            raise RangeError(f"malformed field CSV: expected {nx} value rows, got {len(lines) - 2}")
        rows = [np.array([float(v) for v in ln.split(",")]) for ln in lines[2:]]
        return ScalarField(grid, np.vstack(rows))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @staticmethod
    def load(path: str) -> "ScalarField":
        with open(path) as fh:
            return ScalarField.from_csv(fh.read())


@dataclass(frozen=True)
class DerivativeBundle:
    du: np.ndarray        # gradient, shape (2,)
    d2u: np.ndarray       # Hessian, shape (2, 2), symmetric
    lap: float            # trace of d2u
    inf_lap: float        # <Du, D2u Du>, unnormalized
    grad_sq_reg: float    # |Du|^2 + eps
    theta: float          # |Du|^2 / (|Du|^2 + eps)
    kappa: float          # 1 - theta
    p_theta: float        # (p - 2) theta + 1
    inf_lap_norm: float   # inf_lap / |Du|^2, 0 under the gradient cutoff
    dt_grad_sq: float     # |D_T |Du||^2, 0 under the gradient cutoff
    delta_t: float        # lap - inf_lap_norm


def _central_derivatives(v: np.ndarray, hx: float, hy: float):
    """Five central-difference arrays on the interior block (shape nx-2, ny-2)."""
    ux = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * hx)
    uy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * hy)
    uxx = (v[2:, 1:-1] - 2.0 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / (hx * hx)
    uyy = (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / (hy * hy)
    uxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * hx * hy)
    return ux, uy, uxx, uxy, uyy


def bundle_arrays(field: ScalarField, params: Params) -> dict[str, np.ndarray]:
    """Vectorized derivative bundle over all interior nodes.

    Returns a dict of arrays with shape (nx-2, ny-2) keyed by the
    DerivativeBundle field names plus h2sq = |D2u|^2 and the raw components
    ux, uy, uxx, uxy, uyy, grad_sq.
    """
    v = field.values
    eps = params.epsilon
    ux, uy, uxx, uxy, uyy = _central_derivatives(v, field.grid.hx, field.grid.hy)
    grad_sq = ux * ux + uy * uy
    grad_sq_reg = grad_sq + eps
    lap = uxx + uyy
    h2sq = uxx * uxx + 2.0 * uxy * uxy + uyy * uyy
    hg1 = uxx * ux + uxy * uy
    hg2 = uxy * ux + uyy * uy
    inf_lap = ux * hg1 + uy * hg2
    hg_sq = hg1 * hg1 + hg2 * hg2

    live = grad_sq >= GRAD_CUTOFF
    inf_lap_norm = np.zeros_like(grad_sq)
    np.divide(inf_lap, grad_sq, out=inf_lap_norm, where=live)
    dt_grad_sq = np.zeros_like(grad_sq)
    np.divide(hg_sq, grad_sq, out=dt_grad_sq, where=live)
    dt_grad_sq = np.maximum(dt_grad_sq - inf_lap_norm * inf_lap_norm, 0.0)
    dt_grad_sq[~live] = 0.0

    theta = np.zeros_like(grad_sq)
    np.divide(grad_sq, grad_sq_reg, out=theta, where=grad_sq_reg > 0.0)
    return {
        "ux": ux, "uy": uy, "uxx": uxx, "uxy": uxy, "uyy": uyy,
        "grad_sq": grad_sq, "grad_sq_reg": grad_sq_reg,
        "lap": lap, "inf_lap": inf_lap, "h2sq": h2sq,
        "inf_lap_norm": inf_lap_norm, "dt_grad_sq": dt_grad_sq,
        "delta_t": lap - inf_lap_norm,
        "theta": theta, "kappa": 1.0 - theta,
        "p_theta": (params.p - 2.0) * theta + 1.0,
    }


def derivative_bundle(field: ScalarField, params: Params, i: int, j: int) -> DerivativeBundle:
    """Derivative bundle at the strictly interior node (i, j).

    Raises BoundaryError when (i, j) touches the boundary ring.
    """
    g = field.grid
    if not (1 <= i <= g.nx - 2) or not (1 <= j <= g.ny - 2):
        raise BoundaryError(f"node ({i}, {j}) is not interior to a {g.nx}x{g.ny} grid")
    v = field.values
    hx, hy = g.hx, g.hy
    ux = (v[i + 1, j] - v[i - 1, j]) / (2.0 * hx)
    uy = (v[i, j + 1] - v[i, j - 1]) / (2.0 * hy)
    uxx = (v[i + 1, j] - 2.0 * v[i, j] + v[i - 1, j]) / (hx * hx)
    uyy = (v[i, j + 1] - 2.0 * v[i, j] + v[i, j - 1]) / (hy * hy)
    uxy = (v[i + 1, j + 1] - v[i + 1, j - 1] - v[i - 1, j + 1] + v[i - 1, j - 1]) / (4.0 * hx * hy)
    return bundle_from_derivatives(
        np.array([ux, uy]), np.array([[uxx, uxy], [uxy, uyy]]), params
    )


def bundle_from_derivatives(du: np.ndarray, d2u: np.ndarray, params: Params) -> DerivativeBundle:
    """Assemble a bundle from exact (or externally computed) derivatives."""
    du = np.asarray(du, dtype=np.float64)
    d2u = np.asarray(d2u, dtype=np.float64)
    eps = params.epsilon
    grad_sq = float(du @ du)
    grad_sq_reg = grad_sq + eps
    lap = float(np.trace(d2u))
    hg = d2u @ du
    inf_lap = float(du @ hg)
    if grad_sq >= GRAD_CUTOFF:
        inf_lap_norm = inf_lap / grad_sq
        dt_grad_sq = max(float(hg @ hg) / grad_sq - inf_lap_norm**2, 0.0)
    else:
        inf_lap_norm = 0.0
        dt_grad_sq = 0.0
    theta = grad_sq / grad_sq_reg if grad_sq_reg > 0.0 else 0.0
    return DerivativeBundle(
        du=du, d2u=d2u, lap=lap, inf_lap=inf_lap,
        grad_sq_reg=grad_sq_reg, theta=theta, kappa=1.0 - theta,
        p_theta=(params.p - 2.0) * theta + 1.0,
        inf_lap_norm=inf_lap_norm, dt_grad_sq=dt_grad_sq,
        delta_t=lap - inf_lap_norm,
    )


def fundamental_gap(g: np.ndarray, H: np.ndarray) -> float:
    """Slack of the Hessian decomposition inequality at one (g, H) pair.

        gap = |H|^2 - 2|D_T|g||^2 - (lap_T)^2/(n-1) - ilap_n^2

    where ilap_n = <g, Hg>/|g|^2, lap_T = tr(H) - ilap_n, and |D_T|g||^2 =
    |Hg|^2/|g|^2 - ilap_n^2.  Nonnegative for symmetric H; identically zero
    when n = 2.  Raises ZeroGradientError for |g| = 0 and RangeError for n < 2.
    """
    g = np.asarray(g, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    n = g.shape[0]
    if n < 2:
        raise RangeError(f"dimension must be >= 2 (got {n})")
    if H.shape != (n, n):
        raise RangeError(f"H must be {n}x{n} (got {H.shape})")
    gsq = float(g @ g)
    if gsq < GRAD_CUTOFF:
        raise ZeroGradientError("gradient direction required: |g| = 0")
    hg = H @ g
    ilap_n = float(g @ hg) / gsq
    dt_sq = float(hg @ hg) / gsq - ilap_n**2
    lap_t = float(np.trace(H)) - ilap_n
    return float(np.sum(H * H)) - 2.0 * dt_sq - lap_t**2 / (n - 1.0) - ilap_n**2


def fundamental_gap_many(gs: np.ndarray, Hs: np.ndarray) -> np.ndarray:
    """Vectorized fundamental_gap over a batch: gs (m, n), Hs (m, n, n)."""
    gs = np.asarray(gs, dtype=np.float64)
    Hs = np.asarray(Hs, dtype=np.float64)
    m, n = gs.shape
    if n < 2:
        raise RangeError(f"dimension must be >= 2 (got {n})")
    gsq = np.einsum("mi,mi->m", gs, gs)
    if (gsq < GRAD_CUTOFF).any():
        raise ZeroGradientError("gradient direction required: |g| = 0 in batch")
    hg = np.einsum("mij,mj->mi", Hs, gs)
    ilap_n = np.einsum("mi,mi->m", gs, hg) / gsq
    dt_sq = np.einsum("mi,mi->m", hg, hg) / gsq - ilap_n**2
    lap_t = np.einsum("mii->m", Hs) - ilap_n
    h2 = np.einsum("mij,mij->m", Hs, Hs)
    return h2 - 2.0 * dt_sq - lap_t**2 / (n - 1.0) - ilap_n**2


def flux_gradient_sq(bundle: DerivativeBundle, params: Params) -> tuple[float, float]:
    """Pointwise |D((|Du|^2+eps)^((p-2+s)/4) Du)|^2 and its Hessian dominator.

    Returns (lhs, rhs) with

        lhs = A^e (|D2u|^2 + (2e + e^2 theta) theta (dt_grad_sq + ilap_n^2)),
        rhs = A^e |D2u|^2,

    A = |Du|^2 + eps, e = (p - 2 + s)/2.  The chain-rule expansion gives
    lhs <= 2 (1 + e^2) rhs, since theta <= 1 and the |D2u Du|^2 terms are
    dominated by |D2u|^2.
    """
    e = (params.p - 2.0 + params.s) / 2.0
    A = bundle.grad_sq_reg
    h2sq = float(np.sum(bundle.d2u * bundle.d2u))
    if A <= 0.0:
        return (0.0, 0.0)
    base = A**e
    d_sq = bundle.dt_grad_sq + bundle.inf_lap_norm**2
    lhs = base * (h2sq + (2.0 * e + e * e * bundle.theta) * bundle.theta * d_sq)
    rhs = base * h2sq
    return (float(lhs), float(rhs))


def flux_gradient_sq_arrays(arr: dict[str, np.ndarray], params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Array version of flux_gradient_sq over a bundle_arrays dict."""
    e = (params.p - 2.0 + params.s) / 2.0
    A = arr["grad_sq_reg"]
    base = A**e
    d_sq = arr["dt_grad_sq"] + arr["inf_lap_norm"] ** 2
    lhs = base * (arr["h2sq"] + (2.0 * e + e * e * arr["theta"]) * arr["theta"] * d_sq)
    return lhs, base * arr["h2sq"]
