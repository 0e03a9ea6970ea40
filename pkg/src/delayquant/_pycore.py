"""Pure-numpy stepping core: reference implementation of the hot loop.

Mirrors the compiled extension `_fastcore` exactly; selected as a
fallback when the extension is unavailable (see `backend`).  Per step it
runs one Crank-Nicolson solve of the diffusion field, materializes the
actuator state from the exact delay ring, evaluates the requested
control law, and optionally checks the detection event.

Modes: 0 zero input, 1 exact predictor, 2 state-quantized predictor,
3 input-quantized predictor, 4 externally supplied constant input.
Detection: 0 none, 1 event on quantized norms, 2 event on exact norms.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

BACKEND_NAME = "python"


class StepperCore:
    """Owns the diffusion samples, the input ring, and the CN solver."""

    def __init__(self, u0, ring0, nx, kdelay, vstride, dt, h, lam,
                 l2w, gamma_w, g_w):
        self.u = np.array(u0, dtype=float)
        self.ring = np.array(ring0, dtype=float)
        if self.ring.size != kdelay + 1:
            raise ValueError("ring must hold exactly kdelay + 1 samples")
        self.nx = int(nx)
        self.kdelay = int(kdelay)
        self.vstride = int(vstride)
        self.dt = float(dt)
        self.h = float(h)
        self.lam = float(lam)
        self.l2w = np.asarray(l2w, dtype=float)
        self.gamma_w = np.asarray(gamma_w, dtype=float)
        self.g_w = np.asarray(g_w, dtype=float)
        self.m = 0
        r = dt / (2.0 * h * h)
        q = dt * lam / 2.0
        self._r = r
        self._bmid = 1.0 - 2.0 * r + q
        ni = nx - 1
        ab = np.zeros((3, ni))
        ab[0, 1:] = -r
        ab[1, :] = 1.0 + 2.0 * r - q
        ab[2, :-1] = -r
        self._ab = ab
        self._vwork = np.empty(nx + 1)
        # state convention: u[0] = 0 and u[nx] = v(t, 0) at all times
        self.u[0] = 0.0
        self.u[self.nx] = self.ring[self._slot(-self.kdelay)]

    # -- ring helpers ----------------------------------------------------

    def _slot(self, i):
        return i % (self.kdelay + 1)

    def last_input(self) -> float:
        """Inflow value at the current sample instant (left limit at m)."""
        return float(self.ring[self._slot(self.m - 1)]) if self.m > 0 \
            else float(self.ring[self._slot(0)])

    def v_grid(self, boundary=None) -> np.ndarray:
        """Materialize v(t, .) on the spatial grid from the ring.

        ``boundary`` overrides the x = 1 node (the current input); by
        default the most recent inflow (left limit) is used.
        """
        idx = self.m - self.kdelay + self.vstride * np.arange(self.nx + 1)
        v = self.ring[idx % (self.kdelay + 1)]
        v[-1] = self.last_input() if boundary is None else boundary
        return v

    # -- norms -------------------------------------------------------

    def _l2(self, f):
        return float(np.sqrt(np.sum(self.l2w * f * f)))

    # -- the hot loop ------------------------------------------------

    def run(self, nsteps, mode, mu, detect, thresh,
            qstep, qkmax, qdead,
            rec_stride, rec_m, rec_l2u, rec_supv, rec_ctrl,
            rec_count, rec_skip_below, ext_input=0.0):
        """Advance up to ``nsteps`` steps; stop early when detection fires.

        Returns (steps_done, fired, rec_count).  When detection fires the
        state is left untouched at the firing instant.
        """
        u = self.u
        ring = self.ring
        nx, K, R = self.nx, self.kdelay, self.kdelay + 1
        scaled_step = mu * qstep
        for n in range(nsteps):
            m = self.m
            v = self.v_grid()
            qu = qv = None
            if detect == 1:
                qu, qv = self._quantize_pair(u, v, scaled_step, qkmax, qdead * mu, self.l2w)
                if self._l2(qu) + np.max(np.abs(qv)) <= thresh:
                    return n, True, rec_count
            elif detect == 2:
                if self._l2(u) + np.max(np.abs(v)) <= thresh:
                    return n, True, rec_count
            if mode == 0:
                u_now = 0.0
            elif mode == 1:
                u_now = float(self.gamma_w @ u + self.g_w @ v)
            elif mode == 2:
                if qu is None:
                    qu, qv = self._quantize_pair(u, v, scaled_step, qkmax, qdead * mu, self.l2w)
                u_now = float(self.gamma_w @ qu + self.g_w @ qv)
            elif mode == 3:
                u_nom = float(self.gamma_w @ u + self.g_w @ v)
                if abs(u_nom) <= qdead * mu:
                    u_now = 0.0
                else:
                    k = min(max(np.rint(u_nom / scaled_step), -qkmax), qkmax)
                    u_now = float(k * scaled_step)
            else:
                u_now = float(ext_input)
            if m > 0:
                ring[self._slot(m)] = u_now
            if m % rec_stride == 0 and m > rec_skip_below:
                sup_v = max(float(np.max(np.abs(v[:nx]))), abs(u_now)) if m > 0 \
                    else float(np.max(np.abs(v)))
                rec_m[rec_count] = m
                rec_l2u[rec_count] = self._l2(u)
                rec_supv[rec_count] = sup_v
                rec_ctrl[rec_count] = u_now
                rec_count += 1
            # Crank-Nicolson step to t_{m+1}
            b_old = ring[self._slot(m - K)]
            b_new = ring[self._slot(m + 1 - K)]
            r, bmid = self._r, self._bmid
            rhs = r * u[:-2] + bmid * u[1:-1] + r * u[2:]
            rhs[-1] += r * b_new
            u[1:-1] = solve_banded((1, 1), self._ab, rhs)
            u[0] = 0.0
            u[nx] = b_new
            self.m = m + 1
        return nsteps, False, rec_count

    @staticmethod
    def _quantize_pair(u, v, scaled_step, qkmax, dead_abs, l2w):
        ku = np.clip(np.rint(u / scaled_step), -qkmax, qkmax)
        kv = np.clip(np.rint(v / scaled_step), -qkmax, qkmax)
        qu = ku * scaled_step
        qv = kv * scaled_step
        if np.sqrt(np.sum(l2w * qu * qu)) + np.max(np.abs(qv)) <= dead_abs:
            qu = np.zeros_like(qu)
            qv = np.zeros_like(qv)
        return qu, qv
