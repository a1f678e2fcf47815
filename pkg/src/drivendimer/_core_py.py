"""Pure-NumPy kernels: fallback backend for the compiled core.

Same call signatures and semantics as the Cython module ``_core``; selected
at import time by :mod:`drivendimer.backend` when the extension is missing
or explicitly disabled.  The Lindblad generator is applied through the
banded structure of the model operators (H0 and G tridiagonal, G^dag G
pentadiagonal), never through dense d^2 x d^2 products.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

# band_table row indices, fixed by drivendimer.model.BAND_ROWS
_H_M1, _H_0, _H_P1, _TILT = 0, 1, 2, 3
_G_M1, _G_0, _G_P1 = 4, 5, 6
_K_M2, _K_M1, _K_0, _K_P1, _K_P2 = 7, 8, 9, 10, 11

POLE_SWITCH = 1e-6  # |sin(theta)| below which a step runs in the Cartesian chart
POLE_STAGE = 1e-9  # |sin(theta)| below which an angle-form stage is rejected


def _add_left(out, x, band, off, scale):
    """out += scale * (A @ x) for one diagonal A[i, i+off] = band[i]."""
    d = x.shape[1]
    if off == 0:
        out += scale * band[None, :, None] * x
    elif off > 0:
        out[:, : d - off, :] += scale * band[: d - off, None] * x[:, off:, :]
    else:
        out[:, -off:, :] += scale * band[-off:, None] * x[:, :off, :]


def _add_right(out, x, band, off, scale):
    """out += scale * (x @ A) for one diagonal A[i, i+off] = band[i]."""
    d = x.shape[1]
    if off == 0:
        out += scale * band[None, None, :] * x
    elif off > 0:
        # (x @ A)[.., j] += band[j-off] * x[.., j-off] for j >= off
        out[:, :, off:] += scale * band[None, None, : d - off] * x[:, :, : d - off]
    else:
        out[:, :, :off] += scale * band[None, None, -off:] * x[:, :, -off:]


def lindblad_rhs(out, x, bands, eps, gamma):
    """Lindblad generator applied to a stack of matrices, banded form.

    out, x : (M, d, d) complex128, C-contiguous
    bands  : (12, d) float64 band table from the operator set
    Computes out = -i [H0 + eps*tilt, x] + gamma (2 G x G^T - K x - x K)
    for every stack item, where K = G^dag G and all bands are real.
    """
    d = x.shape[1]
    out[:] = 0.0
    hd = bands[_H_0] + eps * bands[_TILT]
    _add_left(out, x, bands[_H_M1], -1, -1j)
    _add_left(out, x, hd, 0, -1j)
    _add_left(out, x, bands[_H_P1], 1, -1j)
    _add_right(out, x, bands[_H_M1], -1, 1j)
    _add_right(out, x, hd, 0, 1j)
    _add_right(out, x, bands[_H_P1], 1, 1j)
    if gamma != 0.0:
        t = np.zeros_like(x)
        _add_left(t, x, bands[_G_M1], -1, 1.0)
        _add_left(t, x, bands[_G_0], 0, 1.0)
        _add_left(t, x, bands[_G_P1], 1, 1.0)
        # right-multiply t by G^T: (t G^T)[.., j] = sum_l G[j, j+l] t[.., j+l]
        g = 2.0 * gamma
        out[:, :, : d - 1] += g * bands[_G_P1][None, None, : d - 1] * t[:, :, 1:]
        out += g * bands[_G_0][None, None, :] * t
        out[:, :, 1:] += g * bands[_G_M1][None, None, 1:] * t[:, :, : d - 1]
        for off, row in ((-2, _K_M2), (-1, _K_M1), (0, _K_0), (1, _K_P1), (2, _K_P2)):
            _add_left(out, x, bands[row], off, -gamma)
            _add_right(out, x, bands[row], off, -gamma)
    return out


def rk4_lindblad(x, bands, t0, h, nsteps, mu0, mu1, omega, gamma):
    """Advance the stack ``x`` in place by ``nsteps`` classical RK4 steps.

    Stage times are absolute (t0 + n*h + c*h), so composed calls reproduce a
    single longer call on the same step grid.  Returns the final time.
    """
    k = np.empty_like(x)
    acc = np.empty_like(x)
    stage = np.empty_like(x)
    for n in range(nsteps):
        tn = t0 + n * h
        lindblad_rhs(k, x, bands, mu0 + mu1 * math.sin(omega * tn), gamma)
        np.multiply(k, h / 6.0, out=acc)
        np.multiply(k, 0.5 * h, out=stage)
        stage += x
        eps_mid = mu0 + mu1 * math.sin(omega * (tn + 0.5 * h))
        lindblad_rhs(k, stage, bands, eps_mid, gamma)
        acc += (h / 3.0) * k
        np.multiply(k, 0.5 * h, out=stage)
        stage += x
        lindblad_rhs(k, stage, bands, eps_mid, gamma)
        acc += (h / 3.0) * k
        np.multiply(k, h, out=stage)
        stage += x
        lindblad_rhs(k, stage, bands, mu0 + mu1 * math.sin(omega * (tn + h)), gamma)
        acc += (h / 6.0) * k
        x += acc
    return t0 + nsteps * h


def _mf_angle_rhs(t, th, ph, j, un, gn, mu0, mu1, omega):
    st = math.sin(th)
    if abs(st) < POLE_STAGE:
        raise _PoleHit
    ct = math.cos(th)
    sp, cp = math.sin(ph), math.cos(ph)
    eps = mu0 + mu1 * math.sin(omega * t)
    thdot = 2.0 * j * sp + 4.0 * gn * cp * ct
    phdot = 2.0 * j * (ct / st) * cp - 2.0 * eps + un * ct - 4.0 * gn * sp / st
    return thdot, phdot


def _mf_cart_rhs(t, x, y, z, j, un, gn, mu0, mu1, omega):
    eps = mu0 + mu1 * math.sin(omega * t)
    dx = 2.0 * eps * y - 2.0 * un * y * z + 2.0 * gn * (1.0 - 4.0 * x * x)
    dy = -2.0 * eps * x + 2.0 * un * x * z + 2.0 * j * z - 8.0 * gn * x * y
    dz = -2.0 * j * y - 8.0 * gn * x * z
    return dx, dy, dz


class _PoleHit(Exception):
    pass


def _canonical(th, ph):
    th = math.fmod(th, 2.0 * math.pi)
    if th < 0.0:
        th += 2.0 * math.pi
    if th > math.pi:
        th = 2.0 * math.pi - th
        ph += math.pi
    ph = math.fmod(ph, 2.0 * math.pi)
    if ph < 0.0:
        ph += 2.0 * math.pi
    return th, ph


def _cart_step(th, ph, tn, h, j, un, gn, mu0, mu1, omega):
    st, ct = math.sin(th), math.cos(th)
    x, y, z = 0.5 * math.cos(ph) * st, 0.5 * math.sin(ph) * st, 0.5 * ct
    k1 = _mf_cart_rhs(tn, x, y, z, j, un, gn, mu0, mu1, omega)
    k2 = _mf_cart_rhs(
        tn + 0.5 * h,
        x + 0.5 * h * k1[0],
        y + 0.5 * h * k1[1],
        z + 0.5 * h * k1[2],
        j, un, gn, mu0, mu1, omega,
    )
    k3 = _mf_cart_rhs(
        tn + 0.5 * h,
        x + 0.5 * h * k2[0],
        y + 0.5 * h * k2[1],
        z + 0.5 * h * k2[2],
        j, un, gn, mu0, mu1, omega,
    )
    k4 = _mf_cart_rhs(
        tn + h,
        x + h * k3[0],
        y + h * k3[1],
        z + h * k3[2],
        j, un, gn, mu0, mu1, omega,
    )
    x += (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    y += (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    z += (h / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    r = math.sqrt(x * x + y * y + z * z)
    th = math.acos(max(-1.0, min(1.0, z / r)))
    ph = math.atan2(y, x)
    return th, ph


def mf_propagate(theta, phi, t0, h, nsteps, j, un, gn, mu0, mu1, omega,
                 rec_stride, rec_theta, rec_phi):
    """Fixed-step RK4 for the classical Bloch-sphere flow, in place of angles.

    Advances (theta, phi) by ``nsteps`` steps of size ``h`` from absolute
    time ``t0``.  A step starting within POLE_SWITCH of a coordinate pole
    (or whose angle-form stage lands within POLE_STAGE of one) is taken in
    the Cartesian chart instead and re-canonicalized.  When
    ``rec_stride > 0`` the state after every ``rec_stride``-th step is
    written to rec_theta/rec_phi.  Returns (theta, phi, n_recorded).
    """
    nrec = 0
    for n in range(nsteps):
        tn = t0 + n * h
        if abs(math.sin(theta)) < POLE_SWITCH:
            theta, phi = _cart_step(theta, phi, tn, h, j, un, gn, mu0, mu1, omega)
        else:
            try:
                k1t, k1p = _mf_angle_rhs(tn, theta, phi, j, un, gn, mu0, mu1, omega)
                k2t, k2p = _mf_angle_rhs(
                    tn + 0.5 * h, theta + 0.5 * h * k1t, phi + 0.5 * h * k1p,
                    j, un, gn, mu0, mu1, omega)
                k3t, k3p = _mf_angle_rhs(
                    tn + 0.5 * h, theta + 0.5 * h * k2t, phi + 0.5 * h * k2p,
                    j, un, gn, mu0, mu1, omega)
                k4t, k4p = _mf_angle_rhs(
                    tn + h, theta + h * k3t, phi + h * k3p,
                    j, un, gn, mu0, mu1, omega)
                theta = theta + (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
                phi = phi + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            except _PoleHit:
                theta, phi = _cart_step(theta, phi, tn, h, j, un, gn, mu0, mu1, omega)
        theta, phi = _canonical(theta, phi)
        if rec_stride > 0 and (n + 1) % rec_stride == 0:
            rec_theta[nrec] = theta
            rec_phi[nrec] = phi
            nrec += 1
    return theta, phi, nrec
