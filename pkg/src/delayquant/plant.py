"""The simulated cascade: Crank-Nicolson reaction-diffusion solver coupled
at x = 1 to an exactly propagated transport delay line.

The delay line is a ring buffer over the input timeline, not a
discretized hyperbolic solve: the transport equation is a pure delay, and
an exact buffer keeps numerical dispersion out of the stability
verification.  Alignment (delay an integer multiple of dt, and that
multiple an integer multiple of nx) is enforced at construction so every
characteristic lands on a stored sample.

State convention: the diffusion array keeps its Dirichlet boundary nodes
in sync (u[0] = 0, u[nx] = v(t, 0)); initial data u0(1) is overwritten by
v0(0) accordingly.  At t = 0 the x = 1 actuator node keeps the initial
profile value v0(1) (the characteristic seam belongs to the initial
datum), so an input issued at step 0 first enters the sampled state one
step later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .kernels import ParameterError
from .transforms import CascadePair, quadrature_weights

__all__ = [
    "SpatialGrid",
    "AlignmentError",
    "PlantState",
    "open_loop_bound_check",
]


class AlignmentError(ParameterError):
    """dt, delay and nx do not admit an exact delay-line alignment."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform nodes over [0, 1]."""

    nx: int

    def __post_init__(self):
        if self.nx < 50:
            raise ParameterError(f"nx = {self.nx} too coarse; need nx >= 50")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx + 1)


def delay_steps(delay: float, dt: float, nx: int) -> tuple[int, int]:
    """Return (K, K // nx) checking both alignment constraints."""
    k_float = delay / dt
    k = int(round(k_float))
    if k < 1 or abs(k_float - k) > 1e-9 * max(1.0, k_float):
        raise AlignmentError(f"delay/dt = {k_float} is not a positive integer")
    if k % nx != 0:
        raise AlignmentError(
            f"delay/(dt*nx) = {k / nx} is not an integer; characteristics "
            "would fall between stored samples"
        )
    return k, k // nx


class PlantState:
    """Current simulation state: time, diffusion field, input history."""

    def __init__(self, grid: SpatialGrid, lam: float, delay: float, dt: float,
                 u0: np.ndarray, v0, gamma_w=None, g_w=None):
        """``v0`` is a callable evaluated on the characteristic grid (it may
        be right-piecewise-continuous); ``u0`` is sampled on the nodes.

        gamma_w / g_w are the predictor weight rows; zero when the plant
        is run open loop.
        """
        if dt <= 0:
            raise ParameterError("dt must be positive")
        k, vstride = delay_steps(delay, dt, grid.nx)
        u0 = np.asarray(u0, dtype=float)
        if u0.size != grid.nx + 1:
            raise ParameterError("u0 sampled on the wrong grid")
        # ring slot of timeline index i is i mod (k+1); initial data occupies
        # indices -k..0, i.e. slots 1..k then 0
        profile = np.asarray(v0(np.arange(k + 1) / k), dtype=float)
        ring = np.empty(k + 1)
        ring[0] = profile[k]
        ring[1:] = profile[:k]
        n_nodes = grid.nx + 1
        zeros = np.zeros(n_nodes)
        self.grid = grid
        self.lam = float(lam)
        self.delay = float(delay)
        self.dt = float(dt)
        self.kdelay = k
        self.core = backend.StepperCore(
            u0, ring, grid.nx, k, vstride, dt, grid.h, lam,
            quadrature_weights(n_nodes, grid.h),
            zeros if gamma_w is None else np.asarray(gamma_w, dtype=float),
            zeros if g_w is None else np.asarray(g_w, dtype=float),
        )

    @property
    def t(self) -> float:
        return self.core.m * self.dt

    @property
    def step_index(self) -> int:
        return self.core.m

    def u_samples(self) -> np.ndarray:
        return np.array(self.core.u)

    def v_samples(self) -> np.ndarray:
        """The actuator state on the grid at the current instant."""
        return np.array(self.core.v_grid())

    def pair(self) -> CascadePair:
        return CascadePair.from_arrays(self.u_samples(), self.v_samples())

    def l2_u(self) -> float:
        u = self.core.u
        return float(np.sqrt(np.sum(self.core.l2w * u * u)))

    def sup_v(self) -> float:
        return float(np.max(np.abs(self.core.v_grid())))

    def step(self, u_now: float = 0.0, nsteps: int = 1):
        """Advance with an externally supplied constant input."""
        none = np.empty(0)
        none_i = np.empty(0, dtype=np.int64)
        self.core.run(nsteps, backend.MODE_EXTERNAL, 1.0,
                      backend.DETECT_NONE, 0.0, 1.0, 1, 0.0,
                      2 ** 62, none_i, none, none, none, 0, -1, u_now)


def open_loop_bound_check(grid, lam, delay, dt, u0, v0, horizon,
                          mbar1, sigma1, stride=100, slack=1.05):
    """Simulate with U = 0 and compare against the open-loop growth bound.

    Returns (worst_ratio, times, joints, bounds); the bound is
    mbar1 * exp(sigma1 t) * (joint norm at t = 0), checked at every
    record with the multiplicative slack.
    """
    plant = PlantState(grid, lam, delay, dt, u0, v0)
    nsteps = int(round(horizon / dt))
    cap = nsteps // stride + 2
    rec_m = np.empty(cap, dtype=np.int64)
    rec_l2u = np.empty(cap)
    rec_supv = np.empty(cap)
    rec_ctrl = np.empty(cap)
    _, _, count = plant.core.run(
        nsteps, backend.MODE_ZERO, 1.0, backend.DETECT_NONE, 0.0,
        1.0, 1, 0.0, stride, rec_m, rec_l2u, rec_supv, rec_ctrl, 0, -1, 0.0)
    times = rec_m[:count] * dt
    joints = rec_l2u[:count] + rec_supv[:count]
    bounds = mbar1 * np.exp(sigma1 * times) * joints[0]
    worst = float(np.max(joints / bounds))
    ok = bool(np.all(joints <= bounds * slack))
    return ok, worst, times, joints, bounds
