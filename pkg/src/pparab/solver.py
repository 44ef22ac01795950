"""Explicit finite-difference marching for the regularized flow

    u_t = (|Du|^2 + eps)^(gamma/2) (lap(u) + (p - 2) ilap(u) / (|Du|^2 + eps))

on a rectangle, with Dirichlet boundary values supplied by a callable.
Forward Euler in time with an adaptive step

    dt = cfl * min(hx, hy)^2 / (max_interior (|Du|^2 + eps)^(gamma/2) * max(1, p - 1)),

which keeps the scheme inside the parabolic stability region for the frozen
coefficient; eps > 0 is required so the diffusivity never degenerates to 0/0.

Also provides the one parameter family of exact kink solutions

    u(x, y, t) = C t + |x|^alpha,
    alpha = 1 + 1/(gamma + 1),   C = alpha^(gamma+1) (alpha - 1)(p - 1),

which solve the unregularized flow classically away from x = 0 and calibrate
both the residual check and the convergence study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BlowupError, RangeError
from .fields import Grid2, ScalarField
from .params import Params, validate

BoundaryFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class SolveConfig:
    grid: Grid2
    t0: float
    t_end: float
    cfl: float
    epsilon: float
    params: Params

    def __post_init__(self):
        validate(self.params)
        if not (self.t_end > self.t0):
            raise RangeError(f"t_end must exceed t0 (got {self.t0!r} .. {self.t_end!r})")
        if not (0.0 < self.cfl < 1.0):
            raise RangeError(f"cfl must lie in (0, 1) (got {self.cfl!r})")
        if not (self.epsilon > 0.0):
            raise RangeError(f"the solver requires epsilon > 0 (got {self.epsilon!r})")


@dataclass
class Trajectory:
    """Checkpointed solution: strictly increasing times, slices on one grid."""

    times: np.ndarray
    slices: list[ScalarField]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.slices) != self.times.size:
            raise RangeError("times and slices must have equal length")
        if self.times.size >= 2 and not (np.diff(self.times) > 0.0).all():
            raise RangeError("checkpoint times must be strictly increasing")
        g = self.slices[0].grid
        for sl in self.slices[1:]:
            if sl.grid != g:
                raise RangeError("all slices must share one grid")

    @property
    def grid(self) -> Grid2:
        return self.slices[0].grid


def exact_counterexample(p: float, gamma: float):
    """Exact kink solution (alpha, C, u) with u(x, y, t) = C t + |x|^alpha."""
    if not (p > 1.0):
        raise RangeError(f"p must be > 1 (got {p!r})")
    if not (gamma > -1.0):
        raise RangeError(f"gamma must be > -1 (got {gamma!r})")
    alpha = 1.0 + 1.0 / (gamma + 1.0)
    C = alpha ** (gamma + 1.0) * (alpha - 1.0) * (p - 1.0)

    def u(x, y, t):
        x = np.asarray(x, dtype=np.float64)
        return C * np.asarray(t, dtype=np.float64) + np.abs(x) ** alpha

    return alpha, C, u


def _interior_rhs(v: np.ndarray, grid: Grid2, params: Params) -> np.ndarray:
    """Flow right-hand side on the interior block, shape (nx-2, ny-2)."""
    hx, hy = grid.hx, grid.hy
    ux = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * hx)
    uy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * hy)
    uxx = (v[2:, 1:-1] - 2.0 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / (hx * hx)
    uyy = (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / (hy * hy)
    uxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * hx * hy)
    A = ux * ux + uy * uy + params.epsilon
    inf_lap = ux * (uxx * ux + uxy * uy) + uy * (uxy * ux + uyy * uy)
    return A ** (params.gamma / 2.0) * (uxx + uyy + (params.p - 2.0) * inf_lap / A)


def _diffusivity_max(v: np.ndarray, grid: Grid2, params: Params) -> float:
    hx, hy = grid.hx, grid.hy
    ux = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * hx)
    uy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * hy)
    A = ux * ux + uy * uy + params.epsilon
    return float(np.max(A ** (params.gamma / 2.0)))


def stable_dt(field: ScalarField, params: Params, cfl: float) -> float:
    """Adaptive step for the current slice; always > 0 when epsilon > 0."""
    g = field.grid
    a_max = _diffusivity_max(field.values, g, params)
    return cfl * min(g.hx, g.hy) ** 2 / (a_max * max(1.0, params.p - 1.0))

def step(field: ScalarField, boundary: BoundaryFn, params: Params, dt: float,
         t: float) -> ScalarField:
    """One forward Euler step from time t to t + dt.

    Interior nodes advance by dt times the flow's right-hand side; boundary
    nodes are set from boundary(x, y, t + dt).  Raises BlowupError if any
    output value is non-finite.
    """
    if not (dt > 0.0) or not math.isfinite(dt):
        raise RangeError(f"dt must be positive and finite (got {dt!r})")
    g = field.grid
    v = field.values
    new = v.copy()
    new[1:-1, 1:-1] += dt * _interior_rhs(v, g, params)
    tn = t + dt
    xs, ys = g.xs(), g.ys()
    new[0, :] = boundary(np.full(g.ny, xs[0]), ys, tn)
    new[-1, :] = boundary(np.full(g.ny, xs[-1]), ys, tn)
    new[:, 0] = boundary(xs, np.full(g.nx, ys[0]), tn)
    new[:, -1] = boundary(xs, np.full(g.nx, ys[-1]), tn)
    if not np.isfinite(new).all():
        raise BlowupError(f"non-finite state at t = {tn!r}", t=tn)
    return ScalarField(g, new)


def solve(initial: ScalarField, boundary: BoundaryFn, config: SolveConfig,
          output_times: Sequence[float] | None = None) -> Trajectory:
    """March from t0 to t_end, storing slices at the requested output times.

    Default outputs: 11 uniform checkpoints including both endpoints.  The
    last step before each checkpoint is shortened so checkpoint times are hit
    exactly.
    """
    if initial.grid != config.grid:
        raise RangeError("initial slice must live on the config grid")
    if output_times is None:
        targets = np.linspace(config.t0, config.t_end, 11)
    else:
        targets = np.asarray(list(output_times), dtype=np.float64)
        if targets.size == 0:
            raise RangeError("output_times must be nonempty")
        if not (np.diff(targets) > 0.0).all():
            raise RangeError("output_times must be strictly increasing")
        if targets[0] < config.t0 - 1e-12 or targets[-1] > config.t_end + 1e-12:
            raise RangeError("output_times must lie within [t0, t_end]")
    params = replace(config.params, epsilon=config.epsilon)
    t = config.t0
    u = initial
    slices: list[ScalarField] = []
    times: list[float] = []
    steps = 0
    for target in targets:
        while t < target - 1e-14 * max(1.0, abs(target)):
            dt = min(stable_dt(u, params, config.cfl), target - t)
            u = step(u, boundary, params, dt, t)
            t += dt
            steps += 1
            if steps > _MAX_STEPS:
                raise RangeError(f"step budget exhausted marching to t = {target!r}")
        t = float(target)
        times.append(t)
        slices.append(u)
    return Trajectory(times=np.array(times), slices=slices)


def pde_residual(traj: Trajectory, params: Params, k: int) -> tuple[ScalarField, ScalarField]:
    """Discrete residual of slice k against the flow, plus the time-derivative
    ratio field.

    residual = (u_k - u_{k-1})/dt - rhs(u_k) on interior nodes (boundary ring
    zeroed); ratio = |u_t| / ((p + 2)(|Du|^2 + eps)^(gamma/2) |D2u| + 1e-300),
    which the pointwise time-derivative bound keeps at or below 1 up to
    discretization error.  Requires 1 <= k < len(times); IndexError otherwise.
    """
    if not (1 <= k < traj.times.size):
        raise IndexError(f"slice index k = {k} needs 1 <= k < {traj.times.size}")
    g = traj.grid
    dt = float(traj.times[k] - traj.times[k - 1])
    vk = traj.slices[k].values
    vp = traj.slices[k - 1].values
    ut = (vk[1:-1, 1:-1] - vp[1:-1, 1:-1]) / dt
    rhs = _interior_rhs(vk, g, params)
    residual = np.zeros_like(vk)
    residual[1:-1, 1:-1] = ut - rhs

    hx, hy = g.hx, g.hy
    ux = (vk[2:, 1:-1] - vk[:-2, 1:-1]) / (2.0 * hx)
    uy = (vk[1:-1, 2:] - vk[1:-1, :-2]) / (2.0 * hy)
    uxx = (vk[2:, 1:-1] - 2.0 * vk[1:-1, 1:-1] + vk[:-2, 1:-1]) / (hx * hx)
    uyy = (vk[1:-1, 2:] - 2.0 * vk[1:-1, 1:-1] + vk[1:-1, :-2]) / (hy * hy)
    uxy = (vk[2:, 2:] - vk[2:, :-2] - vk[:-2, 2:] + vk[:-2, :-2]) / (4.0 * hx * hy)
    A = ux * ux + uy * uy + params.epsilon
    h2 = np.sqrt(uxx * uxx + 2.0 * uxy * uxy + uyy * uyy)
    ratio = np.zeros_like(vk)
    ratio[1:-1, 1:-1] = np.abs(ut) / (
        (params.p + 2.0) * A ** (params.gamma / 2.0) * h2 + 1e-300
    )
    return ScalarField(g, residual), ScalarField(g, ratio)


def sine_initial(grid: Grid2, amplitude: float = 0.5, drift: float = 0.5):
    """Smooth default data: drift * x + amplitude * sin(pi x^) sin(pi y^) with
    hatted coordinates normalized to the grid extent.  Returns the initial
    slice and the matching (time-frozen) boundary callable."""
    lx = grid.x_max - grid.x0
    ly = grid.y_max - grid.y0

    def profile(x, y, t):
        xh = (np.asarray(x) - grid.x0) / lx
        yh = (np.asarray(y) - grid.y0) / ly
        return drift * np.asarray(x) + amplitude * np.sin(np.pi * xh) * np.sin(np.pi * yh)

    X, Y = np.meshgrid(grid.xs(), grid.ys(), indexing="ij")
    return ScalarField(grid, profile(X, Y, 0.0)), profile
