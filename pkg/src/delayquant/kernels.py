"""Closed-form and series-defined kernels of the boundary feedback design.

The forward/inverse Volterra kernels have Bessel closed forms; the
predictor kernels are sine series whose coefficients are moments of the
boundary traces.  Everything here is deterministic: series are truncated
at a fixed mode count so that tables rebuild bit-for-bit from the same
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "DomainError",
    "ParameterError",
    "SeriesTruncation",
    "KernelTables",
    "bessel_i1",
    "bessel_j1",
    "kernel_k",
    "kernel_l",
    "sine_coefficients",
    "kernel_gamma",
    "kernel_g",
    "kernel_delta",
    "kernel_p",
    "build_tables",
]

# Below this value of lam*(x^2 - y^2) the ratio I1(z)/z is replaced by its
# limit 1/2; keeps the relative error of the diagonal branch under 1e-12.
_DIAG_GUARD = 1e-12

_SERIES_MAX_TERMS = 200


class DomainError(ValueError):
    """Argument outside the kernel's domain of definition."""


class ParameterError(ValueError):
    """Plant/truncation parameters violate a standing assumption."""


def _i1_over_z(z2):
    """Evaluate I1(sqrt(z2))/sqrt(z2) by power series, elementwise.

    ``z2`` is the *squared* argument, which is what the kernels produce
    naturally; the series in z2 has no square roots and no 0/0 at z2 = 0.
    Terms are added until the next one falls below 1e-16 of the partial
    sum everywhere.
    """
    z2 = np.asarray(z2, dtype=float)
    quarter = z2 / 4.0
    term = np.full_like(z2, 0.5)
    total = term.copy()
    for m in range(1, _SERIES_MAX_TERMS):
        term = term * quarter / (m * (m + 1))
        total += term
        if np.all(np.abs(term) <= 1e-16 * np.abs(total)):
            break
    return total


def _j1_over_z(z2):
    """As :func:`_i1_over_z` for J1 (alternating series)."""
    z2 = np.asarray(z2, dtype=float)
    quarter = z2 / 4.0
    term = np.full_like(z2, 0.5)
    total = term.copy()
    for m in range(1, _SERIES_MAX_TERMS):
        term = -term * quarter / (m * (m + 1))
        total += term
        if np.all(np.abs(term) <= 1e-16 * np.abs(total)):
            break
    return total


def bessel_i1(z: float) -> float:
    """Modified Bessel function of the first kind, order 1, by power series."""
    if z < 0:
        raise DomainError(f"bessel_i1 requires z >= 0, got {z}")
    return float(z * _i1_over_z(z * z))


def bessel_j1(z: float) -> float:
    """Bessel function of the first kind, order 1, by power series."""
    if z < 0:
        raise DomainError(f"bessel_j1 requires z >= 0, got {z}")
    return float(z * _j1_over_z(z * z))


def kernel_k(x: float, y: float, lam: float) -> float:
    """Forward Volterra kernel -lam*y*I1(sqrt(lam(x^2-y^2)))/sqrt(...)."""
    _check_triangle(x, y)
    arg = lam * (x * x - y * y)
    if arg < _DIAG_GUARD:
        return -lam * x / 2.0
    return float(-lam * y * _i1_over_z(arg))


def kernel_l(x: float, y: float, lam: float) -> float:
    """Inverse Volterra kernel; J1 in place of I1, same diagonal limit."""
    _check_triangle(x, y)
    arg = lam * (x * x - y * y)
    if arg < _DIAG_GUARD:
        return -lam * x / 2.0
    return float(-lam * y * _j1_over_z(arg))


def _check_triangle(x, y):
    if not (0.0 <= y <= x <= 1.0):
        raise DomainError(f"(x, y) = ({x}, {y}) outside 0 <= y <= x <= 1")


@dataclass(frozen=True)
class SeriesTruncation:
    """Fixed truncation of the predictor kernel series.

    mode_count is the number of sine modes retained; quadrature_points the
    number of Simpson intervals used for the coefficient integrals (at
    least 20 per mode, so the fastest integrand is resolved);
    tail_tolerance the relative truncation error requested from the
    N-doubling convergence study.
    """

    mode_count: int = 60
    quadrature_points: int = 1200
    tail_tolerance: float = 1e-2

    def __post_init__(self):
        if self.mode_count < 1:
            raise ParameterError("mode_count must be >= 1")
        if self.quadrature_points < 20 * self.mode_count:
            raise ParameterError(
                f"quadrature_points = {self.quadrature_points} does not resolve "
                f"{self.mode_count} modes (need >= {20 * self.mode_count})"
            )
        if self.tail_tolerance < 0:
            raise ParameterError("tail_tolerance must be nonnegative")


def check_resonance(lam: float, mode_count: int, tol: float = 1e-6):
    """Reject lam within ``tol`` of n^2 pi^2 for any retained mode n."""
    for n in range(1, mode_count + 1):
        if abs(lam - n * n * np.pi**2) <= tol:
            raise ParameterError(
                f"lambda = {lam} resonates with mode n = {n} "
                f"(n^2 pi^2 = {n * n * np.pi ** 2:.9g}); the design excludes this case"
            )


def sine_coefficients(trace: np.ndarray, n_modes: int) -> np.ndarray:
    """Moments integral(sin(n pi z) * trace(z) dz) for n = 1..n_modes.

    ``trace`` must be sampled on a uniform grid over [0, 1] with an even
    number of intervals (composite Simpson).
    """
    trace = np.asarray(trace, dtype=float)
    npts = trace.size
    if npts < 3 or (npts - 1) % 2 != 0:
        raise ParameterError("trace must be sampled on an even number of intervals")
    if npts - 1 < 20 * n_modes:
        raise ParameterError(
            f"{n_modes} modes are not resolvable from {npts} samples "
            f"(need >= {20 * n_modes} intervals)"
        )
    zeta = np.linspace(0.0, 1.0, npts)
    n = np.arange(1, n_modes + 1)
    integrand = np.sin(np.pi * np.outer(n, zeta)) * trace
    return simpson(integrand, x=zeta, axis=1)


def _mode_rates_gamma(lam: float, delay: float, n_modes: int) -> np.ndarray:
    n = np.arange(1, n_modes + 1)
    return delay * (lam - n * n * np.pi**2)


def _mode_rates_delta(delay: float, n_modes: int) -> np.ndarray:
    n = np.arange(1, n_modes + 1)
    return -delay * n * n * np.pi**2


def kernel_gamma(x, y, lam, delay, coeffs):
    """Series kernel 2 sum_n exp(D(lam - n^2 pi^2) x) sin(n pi y) c_n."""
    rates = _mode_rates_gamma(lam, delay, len(coeffs))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ex = np.exp(np.multiply.outer(x, rates))
    sy = np.sin(np.pi * np.multiply.outer(y, np.arange(1, len(coeffs) + 1)))
    return 2.0 * np.einsum("...n,...n->...", ex * coeffs, sy)


def kernel_g(s, lam, delay, coeffs):
    """Series kernel g(x, y), a function of s = x - y only.

    Termwise y-derivative of the gamma series evaluated at second
    argument 1: -2 sum_n exp(D(lam - n^2 pi^2) s) n pi (-1)^n c_n.
    """
    n = np.arange(1, len(coeffs) + 1)
    rates = _mode_rates_gamma(lam, delay, len(coeffs))
    amps = -2.0 * n * np.pi * ((-1.0) ** n) * coeffs
    s = np.asarray(s, dtype=float)
    return np.exp(np.multiply.outer(s, rates)) @ amps


def kernel_delta(x, y, delay, coeffs_l):
    """Series kernel 2 sum_n exp(-D n^2 pi^2 x) sin(n pi y) d_n."""
    rates = _mode_rates_delta(delay, len(coeffs_l))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ex = np.exp(np.multiply.outer(x, rates))
    sy = np.sin(np.pi * np.multiply.outer(y, np.arange(1, len(coeffs_l) + 1)))
    return 2.0 * np.einsum("...n,...n->...", ex * coeffs_l, sy)


def kernel_p(s, delay, coeffs_l):
    """Series kernel p(x, y) = -delta_y(x - y, 1), a function of s = x - y."""
    n = np.arange(1, len(coeffs_l) + 1)
    rates = _mode_rates_delta(delay, len(coeffs_l))
    amps = -2.0 * n * np.pi * ((-1.0) ** n) * coeffs_l
    s = np.asarray(s, dtype=float)
    return np.exp(np.multiply.outer(s, rates)) @ amps


@dataclass(frozen=True)
class KernelTables:
    """Grid discretisations of all six kernels plus boundary traces.

    Triangular tables (k, l, g, p) are stored dense with zeros above the
    diagonal.  ``gamma1``/``g1`` are the x = 1 traces entering the
    feedback law; ``coeffs_k``/``coeffs_l`` the sine moments of the
    boundary traces k(1,.) and l(1,.).
    """

    x: np.ndarray
    h: float
    lam: float
    delay: float
    truncation: SeriesTruncation
    k_grid: np.ndarray
    l_grid: np.ndarray
    gamma_grid: np.ndarray
    delta_grid: np.ndarray
    g_grid: np.ndarray
    p_grid: np.ndarray
    gamma1: np.ndarray
    g1: np.ndarray
    coeffs_k: np.ndarray
    coeffs_l: np.ndarray

    @property
    def nx(self) -> int:
        return self.x.size - 1


def _nodal_k_table(x: np.ndarray, lam: float, over_z) -> np.ndarray:
    """Lower-triangular table of -lam*y*F(lam(x^2-y^2)) with diagonal limit."""
    col = x[np.newaxis, :]
    row = x[:, np.newaxis]
    arg = lam * (row * row - col * col)
    near_diag = arg < _DIAG_GUARD
    ratio = np.where(near_diag, 0.5, over_z(np.where(near_diag, 0.0, arg)))
    vals = np.where(near_diag, -lam * row / 2.0 + 0.0 * col, -lam * col * ratio)
    vals[:, 0] = 0.0
    return np.where(col <= row, vals, 0.0)


def build_tables(nx: int, lam: float, delay: float,
                 truncation: SeriesTruncation | None = None) -> KernelTables:
    """Populate every kernel table on the uniform grid with nx intervals."""
    if nx < 50:
        raise ParameterError(f"nx = {nx} too coarse; need nx >= 50")
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if delay <= 0:
        raise ParameterError(f"delay must be positive, got {delay}")
    truncation = truncation or SeriesTruncation()
    check_resonance(lam, truncation.mode_count)

    x = np.linspace(0.0, 1.0, nx + 1)
    h = 1.0 / nx

    k_grid = _nodal_k_table(x, lam, _i1_over_z)
    l_grid = _nodal_k_table(x, lam, _j1_over_z)

    qp = truncation.quadrature_points
    zeta = np.linspace(0.0, 1.0, qp + 1)
    arg1 = lam * (1.0 - zeta * zeta)
    k_trace = np.where(arg1 >= _DIAG_GUARD, -lam * zeta * _i1_over_z(arg1), -lam * zeta * 0.5)
    l_trace = np.where(arg1 >= _DIAG_GUARD, -lam * zeta * _j1_over_z(arg1), -lam * zeta * 0.5)
    coeffs_k = sine_coefficients(k_trace, truncation.mode_count)
    coeffs_l = sine_coefficients(l_trace, truncation.mode_count)

    gamma_grid = kernel_gamma(x[:, None], x[None, :], lam, delay, coeffs_k)
    delta_grid = kernel_delta(x[:, None], x[None, :], delay, coeffs_l)

    s = x[:, None] - x[None, :]
    lower = s >= 0.0
    g_grid = np.where(lower, kernel_g(np.where(lower, s, 0.0), lam, delay, coeffs_k), 0.0)
    p_grid = np.where(lower, kernel_p(np.where(lower, s, 0.0), delay, coeffs_l), 0.0)

    gamma1 = kernel_gamma(1.0, x, lam, delay, coeffs_k)
    g1 = kernel_g(1.0 - x, lam, delay, coeffs_k)

    return KernelTables(
        x=x, h=h, lam=lam, delay=delay, truncation=truncation,
        k_grid=k_grid, l_grid=l_grid,
        gamma_grid=gamma_grid, delta_grid=delta_grid,
        g_grid=g_grid, p_grid=p_grid,
        gamma1=gamma1, g1=g1,
        coeffs_k=coeffs_k, coeffs_l=coeffs_l,
    )
