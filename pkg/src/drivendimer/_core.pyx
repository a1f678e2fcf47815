# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: banded Lindblad generator, RK4 drivers, mean-field flow.

Mirrors the signatures and semantics of ``drivendimer._core_py``.  The
Lindblad right-hand side is a fused banded stencil (H0 and G tridiagonal,
K = G^dag G pentadiagonal).  All operator bands are real, so the complex
stacks are processed through interleaved re/im views with purely real
multiplier loops, which the C compiler vectorizes; stack items are
independent and parallelize with bit-identical results for any thread
count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport M_PI, acos, atan2, cos, fabs, fmod, sin, sqrt
from openmp cimport omp_get_max_threads, omp_get_thread_num

BACKEND_NAME = "c"

POLE_SWITCH = 1e-6
POLE_STAGE = 1e-9

cdef double _POLE_SWITCH = 1e-6
cdef double _POLE_STAGE = 1e-9

# band_table rows, fixed by drivendimer.model.BAND_ROWS: h bands at 1+k,
# tilt diagonal at 3, g bands at 5+k, k bands at 9+k.


cdef void _rhs(double[:, :, ::1] out, double[:, :, ::1] x,
               const double[:, ::1] bands, double eps, double gamma,
               double[:, ::1] scratch, int nthreads) noexcept nogil:
    # out, x: (M, d, 2d) interleaved re/im rows; scratch: one 2d row per
    # thread.  Output rows (c, i) are disjoint and each is produced by
    # sequential arithmetic, so the flattened parallel loop gives
    # bit-identical results for any thread count.
    cdef Py_ssize_t m = x.shape[0], d = bands.shape[1], w2 = 2 * d
    cdef Py_ssize_t c, i, ii, jj, k, l, q, jlo, jhi, ci, tid
    cdef double w, a, re
    for ci in prange(m * d, schedule="static", num_threads=nthreads):
        c = ci // d
        i = ci - c * d
        tid = omp_get_thread_num()
        for q in range(w2):
            out[c, i, q] = 0.0
            scratch[tid, q] = 0.0
        # commutator accumulation: (H x - x H)[i, :], H = H0 + eps*tilt
        for k in range(-1, 2):
            ii = i + k
            if 0 <= ii < d:
                w = bands[1 + k, i]
                if k == 0:
                    w = w + eps * bands[3, i]
                if w != 0.0:
                    for q in range(w2):
                        scratch[tid, q] = scratch[tid, q] + w * x[c, ii, q]
        for jj in range(d):
            w = bands[1, jj] + eps * bands[3, jj]
            scratch[tid, 2 * jj] = scratch[tid, 2 * jj] - w * x[c, i, 2 * jj]
            scratch[tid, 2 * jj + 1] = (
                scratch[tid, 2 * jj + 1] - w * x[c, i, 2 * jj + 1]
            )
        for k in range(-1, 2, 2):
            jlo = k if k > 0 else 0
            jhi = d + k if k < 0 else d
            for jj in range(jlo, jhi):
                w = bands[1 + k, jj - k]
                scratch[tid, 2 * jj] = (
                    scratch[tid, 2 * jj] - w * x[c, i, 2 * (jj - k)]
                )
                scratch[tid, 2 * jj + 1] = (
                    scratch[tid, 2 * jj + 1] - w * x[c, i, 2 * (jj - k) + 1]
                )
        if gamma != 0.0:
            # 2 gamma (G x G^T)[i, j] = sum_{k,l} G[i,i+k] G[j,j+l] x[i+k, j+l]
            for k in range(-1, 2):
                ii = i + k
                if 0 <= ii < d:
                    a = 2.0 * gamma * bands[5 + k, i]
                    if a != 0.0:
                        for l in range(-1, 2):
                            jlo = -l if l < 0 else 0
                            jhi = d - l if l > 0 else d
                            for jj in range(jlo, jhi):
                                w = a * bands[5 + l, jj]
                                out[c, i, 2 * jj] = (
                                    out[c, i, 2 * jj]
                                    + w * x[c, ii, 2 * (jj + l)]
                                )
                                out[c, i, 2 * jj + 1] = (
                                    out[c, i, 2 * jj + 1]
                                    + w * x[c, ii, 2 * (jj + l) + 1]
                                )
            # -gamma (K x + x K), K pentadiagonal
            for k in range(-2, 3):
                ii = i + k
                if 0 <= ii < d:
                    w = -gamma * bands[9 + k, i]
                    if w != 0.0:
                        for q in range(w2):
                            out[c, i, q] = out[c, i, q] + w * x[c, ii, q]
            for k in range(-2, 3):
                jlo = k if k > 0 else 0
                jhi = d + k if k < 0 else d
                for jj in range(jlo, jhi):
                    w = gamma * bands[9 + k, jj - k]
                    out[c, i, 2 * jj] = (
                        out[c, i, 2 * jj] - w * x[c, i, 2 * (jj - k)]
                    )
                    out[c, i, 2 * jj + 1] = (
                        out[c, i, 2 * jj + 1] - w * x[c, i, 2 * (jj - k) + 1]
                    )
        # fuse: out += -1j * scratch  (re += im_s, im -= re_s)
        for jj in range(d):
            re = scratch[tid, 2 * jj]
            out[c, i, 2 * jj] = out[c, i, 2 * jj] + scratch[tid, 2 * jj + 1]
            out[c, i, 2 * jj + 1] = out[c, i, 2 * jj + 1] - re


cdef inline double[:, :, ::1] _reim(object arr):
    return arr.view(np.float64)


cdef inline int _nthreads(Py_ssize_t work) noexcept nogil:
    # cross-thread sync costs tens of microseconds per region on this
    # scale; parallelize only when each region carries real work
    if work < 100000:
        return 1
    return omp_get_max_threads()


def lindblad_rhs(out not None, x not None, bands not None, double eps,
                 double gamma):
    """out = -i[H0 + eps*tilt, x] + gamma(2 G x G^T - K x - x K), per item."""
    cdef double[:, :, ::1] ov = _reim(out)
    cdef double[:, :, ::1] xv = _reim(x)
    cdef const double[:, ::1] bv = bands
    cdef Py_ssize_t m = xv.shape[0], d = bv.shape[1]
    scratch_arr = np.empty((omp_get_max_threads(), 2 * d + 16), dtype=np.float64)
    cdef double[:, ::1] scratch = scratch_arr
    cdef int nt = _nthreads(m * d * d)
    with nogil:
        _rhs(ov, xv, bv, eps, gamma, scratch, nt)
    return out


cdef void _comb1(double[:, :, ::1] acc, double[:, :, ::1] stage,
                 double[:, :, ::1] x, double[:, :, ::1] k, double h, int nthreads) noexcept nogil:
    # acc = (h/6) k ; stage = x + (h/2) k
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], w2 = x.shape[2]
    cdef Py_ssize_t c, i, q
    cdef double kv
    for c in prange(m, schedule="static", num_threads=nthreads):
        for i in range(d):
            for q in range(w2):
                kv = k[c, i, q]
                acc[c, i, q] = (h / 6.0) * kv
                stage[c, i, q] = x[c, i, q] + (0.5 * h) * kv


cdef void _comb2(double[:, :, ::1] acc, double[:, :, ::1] stage,
                 double[:, :, ::1] x, double[:, :, ::1] k, double h,
                 double cstage, int nthreads) noexcept nogil:
    # acc += (h/3) k ; stage = x + cstage k
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], w2 = x.shape[2]
    cdef Py_ssize_t c, i, q
    cdef double kv
    for c in prange(m, schedule="static", num_threads=nthreads):
        for i in range(d):
            for q in range(w2):
                kv = k[c, i, q]
                acc[c, i, q] = acc[c, i, q] + (h / 3.0) * kv
                stage[c, i, q] = x[c, i, q] + cstage * kv


cdef void _comb3(double[:, :, ::1] x, double[:, :, ::1] acc,
                 double[:, :, ::1] k, double h, int nthreads) noexcept nogil:
    # x += acc + (h/6) k
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], w2 = x.shape[2]
    cdef Py_ssize_t c, i, q
    for c in prange(m, schedule="static", num_threads=nthreads):
        for i in range(d):
            for q in range(w2):
                x[c, i, q] = x[c, i, q] + acc[c, i, q] + (h / 6.0) * k[c, i, q]


def rk4_lindblad(x not None, bands not None, double t0, double h,
                 Py_ssize_t nsteps, double mu0, double mu1, double omega,
                 double gamma):
    """Advance the stack in place by ``nsteps`` RK4 steps; absolute stage times."""
    cdef double[:, :, ::1] xv = _reim(x)
    cdef const double[:, ::1] bv = bands
    cdef Py_ssize_t m = xv.shape[0], d = bv.shape[1]
    k_arr = np.empty((m, d, 2 * d), dtype=np.float64)
    acc_arr = np.empty((m, d, 2 * d), dtype=np.float64)
    stage_arr = np.empty((m, d, 2 * d), dtype=np.float64)
    scratch_arr = np.empty((omp_get_max_threads(), 2 * d + 16), dtype=np.float64)
    cdef double[:, :, ::1] k = k_arr, acc = acc_arr, stage = stage_arr
    cdef double[:, ::1] scratch = scratch_arr
    cdef double tn, eps_mid
    cdef Py_ssize_t n
    cdef int nt = _nthreads(m * d * d)
    with nogil:
        for n in range(nsteps):
            tn = t0 + n * h
            _rhs(k, xv, bv, mu0 + mu1 * sin(omega * tn), gamma, scratch, nt)
            _comb1(acc, stage, xv, k, h, nt)
            eps_mid = mu0 + mu1 * sin(omega * (tn + 0.5 * h))
            _rhs(k, stage, bv, eps_mid, gamma, scratch, nt)
            _comb2(acc, stage, xv, k, h, 0.5 * h, nt)
            _rhs(k, stage, bv, eps_mid, gamma, scratch, nt)
            _comb2(acc, stage, xv, k, h, h, nt)
            _rhs(k, stage, bv, mu0 + mu1 * sin(omega * (tn + h)), gamma, scratch, nt)
            _comb3(xv, acc, k, h, nt)
    return t0 + nsteps * h


cdef inline double _eps_at(double t, double mu0, double mu1, double omega) noexcept nogil:
    return mu0 + mu1 * sin(omega * t)


cdef bint _angle_step(double* th, double* ph, double tn, double h, double j,
                      double un, double gn, double mu0, double mu1,
                      double omega) noexcept nogil:
    # one RK4 step in the (theta, phi) chart; False if a stage hit a pole
    cdef double t0 = th[0], p0 = ph[0]
    cdef double kt[4]
    cdef double kp[4]
    cdef double tt, pp, st, ct, sp, cp, eps
    cdef int s
    cdef double ts[4]
    cdef double ct_arr[4]
    ts[0] = tn; ts[1] = tn + 0.5 * h; ts[2] = tn + 0.5 * h; ts[3] = tn + h
    ct_arr[0] = 0.0; ct_arr[1] = 0.5 * h; ct_arr[2] = 0.5 * h; ct_arr[3] = h
    for s in range(4):
        if s == 0:
            tt = t0; pp = p0
        else:
            tt = t0 + ct_arr[s] * kt[s - 1]; pp = p0 + ct_arr[s] * kp[s - 1]
        st = sin(tt)
        if fabs(st) < _POLE_STAGE:
            return False
        ct = cos(tt); sp = sin(pp); cp = cos(pp)
        eps = _eps_at(ts[s], mu0, mu1, omega)
        kt[s] = 2.0 * j * sp + 4.0 * gn * cp * ct
        kp[s] = 2.0 * j * (ct / st) * cp - 2.0 * eps + un * ct - 4.0 * gn * sp / st
    th[0] = t0 + (h / 6.0) * (kt[0] + 2.0 * kt[1] + 2.0 * kt[2] + kt[3])
    ph[0] = p0 + (h / 6.0) * (kp[0] + 2.0 * kp[1] + 2.0 * kp[2] + kp[3])
    return True


cdef void _cart_rhs(double t, double x, double y, double z, double j, double un,
                    double gn, double mu0, double mu1, double omega,
                    double* dx, double* dy, double* dz) noexcept nogil:
    cdef double eps = _eps_at(t, mu0, mu1, omega)
    dx[0] = 2.0 * eps * y - 2.0 * un * y * z + 2.0 * gn * (1.0 - 4.0 * x * x)
    dy[0] = -2.0 * eps * x + 2.0 * un * x * z + 2.0 * j * z - 8.0 * gn * x * y
    dz[0] = -2.0 * j * y - 8.0 * gn * x * z


cdef void _cart_step(double* th, double* ph, double tn, double h, double j,
                     double un, double gn, double mu0, double mu1,
                     double omega) noexcept nogil:
    cdef double st = sin(th[0]), ct = cos(th[0])
    cdef double x = 0.5 * cos(ph[0]) * st, y = 0.5 * sin(ph[0]) * st, z = 0.5 * ct
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z, r, zz
    _cart_rhs(tn, x, y, z, j, un, gn, mu0, mu1, omega, &k1x, &k1y, &k1z)
    _cart_rhs(tn + 0.5 * h, x + 0.5 * h * k1x, y + 0.5 * h * k1y,
              z + 0.5 * h * k1z, j, un, gn, mu0, mu1, omega, &k2x, &k2y, &k2z)
    _cart_rhs(tn + 0.5 * h, x + 0.5 * h * k2x, y + 0.5 * h * k2y,
              z + 0.5 * h * k2z, j, un, gn, mu0, mu1, omega, &k3x, &k3y, &k3z)
    _cart_rhs(tn + h, x + h * k3x, y + h * k3y, z + h * k3z,
              j, un, gn, mu0, mu1, omega, &k4x, &k4y, &k4z)
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    z += (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    r = sqrt(x * x + y * y + z * z)
    zz = z / r
    if zz > 1.0:
        zz = 1.0
    elif zz < -1.0:
        zz = -1.0
    th[0] = acos(zz)
    ph[0] = atan2(y, x)


cdef void _canonical(double* th, double* ph) noexcept nogil:
    cdef double t = fmod(th[0], 2.0 * M_PI), p = ph[0]
    if t < 0.0:
        t += 2.0 * M_PI
    if t > M_PI:
        t = 2.0 * M_PI - t
        p += M_PI
    p = fmod(p, 2.0 * M_PI)
    if p < 0.0:
        p += 2.0 * M_PI
    th[0] = t
    ph[0] = p


def mf_propagate(double theta, double phi, double t0, double h,
                 Py_ssize_t nsteps, double j, double un, double gn,
                 double mu0, double mu1, double omega, Py_ssize_t rec_stride,
                 double[::1] rec_theta, double[::1] rec_phi):
    """Classical RK4 flow; see the fallback docstring for the contract."""
    cdef Py_ssize_t n, nrec = 0
    cdef double tn
    with nogil:
        for n in range(nsteps):
            tn = t0 + n * h
            if fabs(sin(theta)) < _POLE_SWITCH:
                _cart_step(&theta, &phi, tn, h, j, un, gn, mu0, mu1, omega)
            elif not _angle_step(&theta, &phi, tn, h, j, un, gn, mu0, mu1, omega):
                _cart_step(&theta, &phi, tn, h, j, un, gn, mu0, mu1, omega)
            _canonical(&theta, &phi)
            if rec_stride > 0 and (n + 1) % rec_stride == 0:
                rec_theta[nrec] = theta
                rec_phi[nrec] = phi
                nrec += 1
    return theta, phi, nrec
