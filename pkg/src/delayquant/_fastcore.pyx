"""Compiled stepping core: hot loop of the closed-loop simulation.

Semantics mirror `_pycore.StepperCore` exactly; see that module for the
mode/detection conventions.  One call advances up to ``nsteps`` steps
entirely in C: Crank-Nicolson solve (precomputed Thomas factorization),
exact delay-ring reads, mid-tread zoom quantization, predictor dot
products, detection tests, and stride recording.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, llrint, sqrt
from libc.stdint cimport int64_t

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline Py_ssize_t smod(Py_ssize_t i, Py_ssize_t r) nogil:
    cdef Py_ssize_t m = i % r
    return m + r if m < 0 else m


cdef inline double clip_level(double x, long long kmax) nogil:
    cdef long long k = llrint(x)
    if k > kmax:
        k = kmax
    elif k < -kmax:
        k = -kmax
    return <double> k


cdef class StepperCore:
    cdef object u_arr, ring_arr, l2w_arr, gamma_arr, g_arr
    cdef double[::1] u_mv, ring_mv, l2w_mv, gamma_mv, g_mv
    cdef double[::1] vwork, quwork, qvwork, rhs, ywork, cp, di
    cdef readonly Py_ssize_t nx, kdelay, vstride
    cdef public Py_ssize_t m
    cdef readonly double dt, h, lam
    cdef double r, bmid

    def __init__(self, u0, ring0, nx, kdelay, vstride, dt, h, lam,
                 l2w, gamma_w, g_w):
        self.u_arr = np.array(u0, dtype=np.float64)
        self.ring_arr = np.array(ring0, dtype=np.float64)
        if self.ring_arr.size != kdelay + 1:
            raise ValueError("ring must hold exactly kdelay + 1 samples")
        self.l2w_arr = np.ascontiguousarray(l2w, dtype=np.float64)
        self.gamma_arr = np.ascontiguousarray(gamma_w, dtype=np.float64)
        self.g_arr = np.ascontiguousarray(g_w, dtype=np.float64)
        self.u_mv = self.u_arr
        self.ring_mv = self.ring_arr
        self.l2w_mv = self.l2w_arr
        self.gamma_mv = self.gamma_arr
        self.g_mv = self.g_arr
        self.nx = nx
        self.kdelay = kdelay
        self.vstride = vstride
        self.dt = dt
        self.h = h
        self.lam = lam
        self.m = 0
        self.r = dt / (2.0 * h * h)
        self.bmid = 1.0 - 2.0 * self.r + dt * lam / 2.0
        cdef Py_ssize_t ni = nx - 1
        self.vwork = np.empty(nx + 1)
        self.quwork = np.empty(nx + 1)
        self.qvwork = np.empty(nx + 1)
        self.rhs = np.empty(ni)
        self.ywork = np.empty(ni)
        cp_arr = np.empty(ni)
        di_arr = np.empty(ni)
        cdef double[::1] cp = cp_arr
        cdef double[::1] di = di_arr
        cdef double bdiag = 1.0 + 2.0 * self.r - dt * lam / 2.0
        cdef double denom = bdiag
        cp[0] = -self.r / denom
        di[0] = 1.0 / denom
        cdef Py_ssize_t i
        for i in range(1, ni):
            denom = bdiag + self.r * cp[i - 1]
            cp[i] = -self.r / denom
            di[i] = 1.0 / denom
        self.cp = cp_arr
        self.di = di_arr
        self.u_mv[0] = 0.0
        self.u_mv[nx] = self.ring_mv[smod(-kdelay, kdelay + 1)]

    # -- python-level accessors (cold paths) ------------------------------

    @property
    def u(self):
        return self.u_arr

    @property
    def l2w(self):
        return self.l2w_arr

    def last_input(self):
        if self.m > 0:
            return float(self.ring_mv[smod(self.m - 1, self.kdelay + 1)])
        return float(self.ring_mv[0])

    def v_grid(self, boundary=None):
        out = np.empty(self.nx + 1)
        cdef double[::1] o = out
        self._fill_v(o)
        if boundary is not None:
            out[self.nx] = boundary
        return out

    # -- C internals -------------------------------------------------------

    cdef void _fill_v(self, double[::1] out) nogil:
        cdef Py_ssize_t j, ring_size = self.kdelay + 1
        cdef Py_ssize_t idx = smod(self.m - self.kdelay, ring_size)
        for j in range(self.nx):
            out[j] = self.ring_mv[idx]
            idx += self.vstride
            if idx >= ring_size:
                idx -= ring_size
        if self.m > 0:
            out[self.nx] = self.ring_mv[smod(self.m - 1, ring_size)]
        else:
            out[self.nx] = self.ring_mv[0]

    cdef double _l2(self, double[::1] f) nogil:
        cdef double acc = 0.0
        cdef Py_ssize_t j
        for j in range(f.shape[0]):
            acc += self.l2w_mv[j] * f[j] * f[j]
        return sqrt(acc)

    cdef double _sup(self, double[::1] f, Py_ssize_t n) nogil:
        cdef double best = 0.0
        cdef Py_ssize_t j
        for j in range(n):
            if fabs(f[j]) > best:
                best = fabs(f[j])
        return best

    cdef void _quantize_pair(self, double scaled_step, long long kmax,
                             double dead_abs) nogil:
        cdef Py_ssize_t j, n = self.nx + 1
        cdef double inv = 1.0 / scaled_step
        for j in range(n):
            self.quwork[j] = clip_level(self.u_mv[j] * inv, kmax) * scaled_step
            self.qvwork[j] = clip_level(self.vwork[j] * inv, kmax) * scaled_step
        if self._l2(self.quwork) + self._sup(self.qvwork, n) <= dead_abs:
            for j in range(n):
                self.quwork[j] = 0.0
                self.qvwork[j] = 0.0

    # -- the hot loop ------------------------------------------------------

    def run(self, Py_ssize_t nsteps, int mode, double mu, int detect,
            double thresh, double qstep, long long qkmax, double qdead,
            Py_ssize_t rec_stride, int64_t[::1] rec_m, double[::1] rec_l2u,
            double[::1] rec_supv, double[::1] rec_ctrl,
            Py_ssize_t rec_count, Py_ssize_t rec_skip_below,
            double ext_input=0.0):
        cdef Py_ssize_t n, j, m, ni = self.nx - 1
        cdef Py_ssize_t nx = self.nx, K = self.kdelay, R = self.kdelay + 1
        cdef double scaled_step = mu * qstep
        cdef double dead_abs = qdead * mu
        cdef double u_now = 0.0
        cdef double u_nom, b_new, sup_v
        cdef bint have_q, fired = False
        cdef Py_ssize_t steps_done = 0
        cdef double r = self.r, bmid = self.bmid

        with nogil:
            for n in range(nsteps):
                m = self.m
                self._fill_v(self.vwork)
                have_q = False
                if detect == 1:
                    self._quantize_pair(scaled_step, qkmax, dead_abs)
                    have_q = True
                    if self._l2(self.quwork) + self._sup(self.qvwork, nx + 1) <= thresh:
                        fired = True
                        break
                elif detect == 2:
                    if self._l2(self.u_mv) + self._sup(self.vwork, nx + 1) <= thresh:
                        fired = True
                        break
                if mode == 0:
                    u_now = 0.0
                elif mode == 1:
                    u_now = 0.0
                    for j in range(nx + 1):
                        u_now += self.gamma_mv[j] * self.u_mv[j] \
                            + self.g_mv[j] * self.vwork[j]
                elif mode == 2:
                    if not have_q:
                        self._quantize_pair(scaled_step, qkmax, dead_abs)
                    u_now = 0.0
                    for j in range(nx + 1):
                        u_now += self.gamma_mv[j] * self.quwork[j] \
                            + self.g_mv[j] * self.qvwork[j]
                elif mode == 3:
                    u_nom = 0.0
                    for j in range(nx + 1):
                        u_nom += self.gamma_mv[j] * self.u_mv[j] \
                            + self.g_mv[j] * self.vwork[j]
                    if fabs(u_nom) <= dead_abs:
                        u_now = 0.0
                    else:
                        u_now = clip_level(u_nom / scaled_step, qkmax) * scaled_step
                else:
                    u_now = ext_input
                if m > 0:
                    self.ring_mv[smod(m, R)] = u_now
                if m % rec_stride == 0 and m > rec_skip_below:
                    if m > 0:
                        sup_v = self._sup(self.vwork, nx)
                        if fabs(u_now) > sup_v:
                            sup_v = fabs(u_now)
                    else:
                        sup_v = self._sup(self.vwork, nx + 1)
                    rec_m[rec_count] = m
                    rec_l2u[rec_count] = self._l2(self.u_mv)
                    rec_supv[rec_count] = sup_v
                    rec_ctrl[rec_count] = u_now
                    rec_count += 1
                # Crank-Nicolson step to t_{m+1}
                b_new = self.ring_mv[smod(m + 1 - K, R)]
                for j in range(ni):
                    self.rhs[j] = r * self.u_mv[j] + bmid * self.u_mv[j + 1] \
                        + r * self.u_mv[j + 2]
                self.rhs[ni - 1] += r * b_new
                self.ywork[0] = self.rhs[0] * self.di[0]
                for j in range(1, ni):
                    self.ywork[j] = (self.rhs[j] + r * self.ywork[j - 1]) * self.di[j]
                self.u_mv[nx - 1] = self.ywork[ni - 1]
                for j in range(ni - 2, -1, -1):
                    self.u_mv[j + 1] = self.ywork[j] - self.cp[j] * self.u_mv[j + 2]
                self.u_mv[0] = 0.0
                self.u_mv[nx] = b_new
                self.m = m + 1
                steps_done += 1

        return steps_done, bool(fired), rec_count
