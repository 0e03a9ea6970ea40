"""Standalone verification routines behind the verify-* subcommands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .gains import compute_spectral_constants
from .kernels import SeriesTruncation, bessel_i1, bessel_j1, build_tables
from .plant import SpatialGrid, open_loop_bound_check
from .transforms import quadrature_weights


@dataclass
class VerifyReport:
    passed: bool
    text: str


def series_distance(tables) -> tuple[float, float]:
    """L2 grid distances between the series traces at x = 0 and the
    closed-form boundary traces they expand."""
    w = quadrature_weights(tables.x.size, tables.h)
    dk = tables.gamma_grid[0, :] - tables.k_grid[-1, :]
    dl = tables.delta_grid[0, :] - tables.l_grid[-1, :]
    return (float(np.sqrt(np.sum(w * dk * dk))),
            float(np.sqrt(np.sum(w * dl * dl))))


def verify_kernels(lam: float, delay: float, nx: int, modes: int) -> VerifyReport:
    """Bessel spot checks, diagonal/edge limits, and an N-doubling study."""
    lines = []
    ok = True

    for z in (0.5, 1.0, 2.0, 3.0):
        di = abs(bessel_i1(z) - special.iv(1, z))
        dj = abs(bessel_j1(z) - special.jv(1, z))
        ok &= di < 1e-12 and dj < 1e-12
        lines.append(f"bessel z={z}: |I1 - scipy| = {di:.2e}, |J1 - scipy| = {dj:.2e}")

    tab = build_tables(nx, lam, delay, SeriesTruncation(modes, 20 * modes))
    diag = np.diagonal(tab.k_grid)
    expect = -lam * tab.x / 2.0
    exact_diag = bool(np.all(diag == expect)) and bool(np.all(tab.k_grid[:, 0] == 0.0))
    ok &= exact_diag
    lines.append(f"diagonal limit and y=0 column exact: {exact_diag}")

    dists = []
    for n in (modes, 2 * modes):
        t = tab if n == modes else build_tables(nx, lam, delay,
                                                SeriesTruncation(n, 20 * n))
        dk, dl = series_distance(t)
        dists.append((n, dk, dl))
        lines.append(f"N={n}: |gamma(0,.)-k(1,.)|_2 = {dk:.4f}, "
                     f"|delta(0,.)-l(1,.)|_2 = {dl:.4f}")
    monotone = dists[1][1] < dists[0][1] and dists[1][2] < dists[0][2]
    ok &= monotone
    lines.append(f"distances decrease when N doubles: {monotone}")
    lines.append(f"g-trace maximum (table, N={modes}): "
                 f"{np.max(np.abs(tab.g1)):.4g} (grows with N; see gains ledger)")
    lines.append(f"verify-kernels: {'PASS' if ok else 'FAIL'}")
    return VerifyReport(ok, "\n".join(lines))


def verify_open_loop(count: int = 20, horizon: float = 1.0, seed: int = 0,
                     lam: float = 11.0, delay: float = 0.1, nx: int = 200,
                     dt: float = 1e-4, slack: float = 1.05) -> VerifyReport:
    """Random-IC sweep of the open-loop growth bound."""
    sigma1, _, _, mbar1 = compute_spectral_constants(lam)
    rng = np.random.default_rng(seed)
    grid = SpatialGrid(nx)
    lines = []
    worst_all = 0.0
    ok = True
    for i in range(count):
        coeffs = rng.normal(size=6) / np.arange(1, 7)
        ends = np.sort(rng.uniform(0.1, 1.0, size=4))
        ends[-1] = 1.0
        vals = rng.uniform(-1.0, 1.0, size=4)

        def u0(x, c=coeffs):
            return np.sin(np.pi * np.outer(x, np.arange(1, 7))) @ c

        def v0(x, e=ends, v=vals):
            idx = np.searchsorted(e, np.asarray(x, dtype=float), side="right")
            return v[np.minimum(idx, v.size - 1)]

        good, worst, *_ = open_loop_bound_check(
            grid, lam, delay, dt, u0(grid.nodes), v0, horizon, mbar1, sigma1,
            slack=slack)
        worst_all = max(worst_all, worst)
        ok &= good
    lines.append(f"open-loop bound over {count} random ICs, horizon {horizon}: "
                 f"worst ratio {worst_all:.4f} (allowed {slack})")
    lines.append(f"verify-openloop: {'PASS' if ok else 'FAIL'}")
    return VerifyReport(ok, "\n".join(lines))
