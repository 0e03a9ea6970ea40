"""Backstepping transformations between (u, v) and the target pair (w, z).

The four integral operators with series kernels (the full-range gamma and
delta maps, and the Volterra g and p maps) are assembled mode by mode:
each exponential/sine mode is integrated exactly against the piecewise
linear interpolant of the field.  Plain nodal trapezoid quadrature is
kept for the smooth Bessel kernels k and l.  The series kernels
concentrate near the diagonal on a scale 1/(D n^2 pi^2) that a feasible
grid cannot resolve, so nodal quadrature of those tables loses several
orders of accuracy; per-mode exact weights do not.

All operators are dense matrices built once per table set, after which a
transform is two or three mat-vecs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelTables

__all__ = [
    "Field",
    "CascadePair",
    "GridMismatchError",
    "TransformOperators",
    "l2_norm",
    "sup_norm",
    "joint_norm",
    "quadrature_weights",
    "build_operators",
    "direct_transform",
    "inverse_transform",
]

L2 = "L2"
SUP = "SUP"


class GridMismatchError(ValueError):
    """Fields and tables disagree on the spatial grid."""


@dataclass(frozen=True)
class Field:
    """Samples of a spatial function on the uniform grid, with a norm role."""

    samples: np.ndarray
    role: str = L2

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.role not in (L2, SUP):
            raise ValueError(f"unknown norm role {self.role!r}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field samples must be finite")


@dataclass(frozen=True)
class CascadePair:
    """The coupled state: diffusion field u (L2 role), actuator field v (sup role)."""

    u: Field
    v: Field

    def __post_init__(self):
        if self.u.role != L2 or self.v.role != SUP:
            raise ValueError("cascade pair requires u with L2 role and v with SUP role")
        if self.u.samples.size != self.v.samples.size:
            raise GridMismatchError("u and v sampled on different grids")

    @classmethod
    def from_arrays(cls, u, v):
        return cls(Field(u, L2), Field(v, SUP))


def quadrature_weights(n_nodes: int, h: float) -> np.ndarray:
    """Composite-trapezoid weights over the full interval [0, 1]."""
    w = np.full(n_nodes, h)
    w[0] = w[-1] = h / 2.0
    return w


def l2_norm(f: Field, h: float | None = None) -> float:
    if f.role != L2:
        raise ValueError("l2_norm expects a field with L2 role")
    samples = f.samples
    if h is None:
        h = 1.0 / (samples.size - 1)
    w = quadrature_weights(samples.size, h)
    return float(np.sqrt(np.sum(w * samples * samples)))


def sup_norm(f: Field) -> float:
    if f.role != SUP:
        raise ValueError("sup_norm expects a field with SUP role")
    return float(np.max(np.abs(f.samples)))


def joint_norm(pair: CascadePair, h: float | None = None) -> float:
    """The cascade norm ||u||_2 + ||v||_inf."""
    return l2_norm(pair.u, h) + sup_norm(pair.v)


def _trapezoid_volterra(table: np.ndarray, h: float) -> np.ndarray:
    """Row i integrates over nodes 0..i with endpoint-adjusted weights."""
    n1 = table.shape[0]
    w = np.full((n1, n1), h)
    w[:, 0] = h / 2.0
    idx = np.arange(n1)
    w[idx, idx] = h / 2.0
    w = np.where(np.arange(n1)[None, :] <= idx[:, None], w, 0.0)
    w[0, :] = 0.0
    out = w * table
    return out


def _exp_hat_volterra(x: np.ndarray, rates: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """W[i,j] = sum_n amps_n * int_0^{x_i} exp(rates_n (x_i - y)) hat_j(y) dy.

    Closed-form integrals of each exponential mode against the hat basis;
    the rate * spacing products stay O(1) here so the formulas are
    evaluated directly, with a short Taylor fallback near zero.
    """
    n1 = x.size
    h = x[1] - x[0]
    s = x[:, None] - x[None, :]
    strict_lower = s > 0.0
    idx = np.arange(n1)
    W = np.zeros((n1, n1))
    for a, amp in zip(rates, amps):
        ah = a * h
        if abs(ah) < 1e-4:
            full = h * (1.0 + ah * ah / 12.0)
            right = h / 2.0 * (1.0 + ah / 3.0 + ah * ah / 12.0)
            left = h / 2.0 * (1.0 - ah / 3.0 + ah * ah / 12.0)
        else:
            full = 2.0 * (np.cosh(ah) - 1.0) / (a * a * h)
            right = (np.exp(ah) - 1.0 - ah) / (a * a * h)
            left = (np.exp(-ah) - 1.0 + ah) / (a * a * h)
        decay = np.exp(np.where(strict_lower, a * s, 0.0))
        term = amp * full * np.where(strict_lower, decay, 0.0)
        term[:, 0] = 0.0
        term[idx, idx] = 0.0
        W += term
        W[idx, idx] += amp * right
        W[1:, 0] += amp * left * np.exp(a * x[1:])
    W[0, :] = 0.0
    return W


def _sin_hat_weights(x: np.ndarray, n_modes: int) -> np.ndarray:
    """sigma[n-1, j] = int_0^1 sin(n pi y) hat_j(y) dy."""
    h = x[1] - x[0]
    n = np.arange(1, n_modes + 1)[:, None]
    k = n * np.pi
    sig = np.sin(k * x[None, :]) * (4.0 * np.sin(k * h / 2.0) ** 2 / (k * k * h))
    edge = ((k * h - np.sin(k * h)) / (k * k * h)).ravel()
    sig[:, 0] = edge
    sig[:, -1] = -(((-1.0) ** n).ravel()) * edge
    return sig


@dataclass(frozen=True)
class TransformOperators:
    """Dense matrices realizing the direct and inverse transformations.

    op_g and op_p already carry the leading delay factor D of the
    transformation formulas.
    """

    x: np.ndarray
    h: float
    weights: np.ndarray
    op_k: np.ndarray
    op_l: np.ndarray
    op_gamma: np.ndarray
    op_g: np.ndarray
    op_delta: np.ndarray
    op_p: np.ndarray

    @property
    def nx(self) -> int:
        return self.x.size - 1


def build_operators(tables: KernelTables) -> TransformOperators:
    x, h, lam, delay = tables.x, tables.h, tables.lam, tables.delay
    n_modes = tables.truncation.mode_count
    n = np.arange(1, n_modes + 1)
    rate_gamma = delay * (lam - n * n * np.pi**2)
    rate_delta = -delay * n * n * np.pi**2
    amp_g = -2.0 * n * np.pi * ((-1.0) ** n) * tables.coeffs_k
    amp_p = -2.0 * n * np.pi * ((-1.0) ** n) * tables.coeffs_l

    sig = _sin_hat_weights(x, n_modes)
    op_gamma = (np.exp(np.outer(x, rate_gamma)) * (2.0 * tables.coeffs_k)) @ sig
    op_delta = (np.exp(np.outer(x, rate_delta)) * (2.0 * tables.coeffs_l)) @ sig

    return TransformOperators(
        x=x,
        h=h,
        weights=quadrature_weights(x.size, h),
        op_k=_trapezoid_volterra(tables.k_grid, h),
        op_l=_trapezoid_volterra(tables.l_grid, h),
        op_gamma=op_gamma,
        op_g=delay * _exp_hat_volterra(x, rate_gamma, amp_g),
        op_delta=op_delta,
        op_p=delay * _exp_hat_volterra(x, rate_delta, amp_p),
    )


def _check_grid(samples: np.ndarray, ops: TransformOperators):
    if samples.size != ops.x.size:
        raise GridMismatchError(
            f"field has {samples.size} samples, operators expect {ops.x.size}"
        )


def direct_transform(pair: CascadePair, ops: TransformOperators) -> tuple[Field, Field]:
    """Map (u, v) to the target pair (w, z)."""
    u = pair.u.samples
    v = pair.v.samples
    _check_grid(u, ops)
    w = u - ops.op_k @ u
    z = v - ops.op_g @ v - ops.op_gamma @ u
    return Field(w, L2), Field(z, SUP)


def inverse_transform(wz: tuple[Field, Field], ops: TransformOperators) -> CascadePair:
    """Map a target pair (w, z) back to the physical pair (u, v)."""
    w = wz[0].samples
    z = wz[1].samples
    _check_grid(w, ops)
    u = w + ops.op_l @ w
    v = z + ops.op_delta @ w + ops.op_p @ z
    return CascadePair.from_arrays(u, v)
