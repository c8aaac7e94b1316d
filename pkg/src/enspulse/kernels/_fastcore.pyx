# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation/recursion core.

Same contract as :mod:`enspulse.kernels.pyref`; see that module for the
convention table.  Loops run per grid point over all steps, which keeps the
working set in registers for long pulses.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, hypot, sin, sqrt, atan, fabs

cnp.import_array()


def spinor_propagate(u, v, double dt, omega, eps, theta, alpha0, beta0, bint hard_pulse=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_ = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_ = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ep = np.ascontiguousarray(eps, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] al = np.array(alpha0, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] be = np.array(beta0, dtype=np.complex128)
    cdef bint has_theta = theta is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] th
    if has_theta:
        th = np.ascontiguousarray(theta, dtype=np.float64)
    else:
        th = np.zeros(0, dtype=np.float64)

    cdef Py_ssize_t nsteps = u_.shape[0]
    cdef Py_ssize_t npts = om.shape[0]
    cdef Py_ssize_t i, k
    cdef double uk, vk, ue, ve, ct, st
    cdef double rx, ry, rz, ang, c, sc, sx, sy, sz
    cdef double amp, phi, ch, sh
    cdef double complex a, b, an, bn, zh, big_s, rot

    # the rf phase of a theta-shifted step separates: (u+iv) e^{-i theta},
    # so amplitude and unit phase per step can be hoisted out of the loop
    cdef cnp.ndarray[cnp.float64_t, ndim=1] amp_k = np.hypot(u_, v_)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] unit_k = np.where(
        amp_k > 0.0, (u_ + 1j * v_) / np.where(amp_k > 0.0, amp_k, 1.0), 1.0 + 0j
    )

    for i in range(npts):
        a = al[i]
        b = be[i]
        if has_theta:
            ct = cos(th[i])
            st = sin(th[i])
        else:
            ct = 1.0
            st = 0.0
        rot = ct - 1j * st  # exp(-i theta_i)
        if hard_pulse:
            zh = cos(0.5 * om[i] * dt) - 1j * sin(0.5 * om[i] * dt)
            for k in range(nsteps):
                a = a * zh
                b = b * zh.conjugate()
                phi = ep[i] * amp_k[k] * dt
                ch = cos(0.5 * phi)
                sh = sin(0.5 * phi)
                big_s = -1j * unit_k[k] * rot * sh
                an = ch * a - big_s.conjugate() * b
                bn = big_s * a + ch * b
                a = an
                b = bn
        else:
            for k in range(nsteps):
                uk = u_[k]
                vk = v_[k]
                ue = uk * ct + vk * st
                ve = -uk * st + vk * ct
                rx = ep[i] * ue * dt
                ry = ep[i] * ve * dt
                rz = om[i] * dt
                ang = sqrt(rx * rx + ry * ry + rz * rz)
                c = cos(0.5 * ang)
                if ang > 0.0:
                    sc = sin(0.5 * ang) / ang
                else:
                    sc = 0.5
                sx = sc * rx
                sy = sc * ry
                sz = sc * rz
                an = (c - 1j * sz) * a + (-1j * sx - sy) * b
                bn = (-1j * sx + sy) * a + (c + 1j * sz) * b
                a = an
                b = bn
        al[i] = a
        be[i] = b
    return al, be


def bloch_propagate(u, v, double dt, omega, eps, theta, xyz0, bint hard_pulse=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_ = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_ = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ep = np.ascontiguousarray(eps, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xyz = np.array(xyz0, dtype=np.float64)
    cdef bint has_theta = theta is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] th
    if has_theta:
        th = np.ascontiguousarray(theta, dtype=np.float64)
    else:
        th = np.zeros(0, dtype=np.float64)

    cdef Py_ssize_t nsteps = u_.shape[0]
    cdef Py_ssize_t npts = om.shape[0]
    cdef Py_ssize_t i, k
    cdef double uk, vk, ue, ve, ct, st
    cdef double x, y, z

    for i in range(npts):
        x = xyz[i, 0]
        y = xyz[i, 1]
        z = xyz[i, 2]
        if has_theta:
            ct = cos(th[i])
            st = sin(th[i])
        else:
            ct = 1.0
            st = 0.0
        for k in range(nsteps):
            uk = u_[k]
            vk = v_[k]
            ue = uk * ct + vk * st
            ve = -uk * st + vk * ct
            if hard_pulse:
                x, y, z = _rot(x, y, z, 0.0, 0.0, om[i] * dt)
                x, y, z = _rot(x, y, z, ep[i] * ve * dt, ep[i] * ue * dt, 0.0)
            else:
                x, y, z = _rot(x, y, z, ep[i] * ve * dt, ep[i] * ue * dt, om[i] * dt)
        xyz[i, 0] = x
        xyz[i, 1] = y
        xyz[i, 2] = z
    return xyz


cdef inline (double, double, double) _rot(double x, double y, double z,
                                          double rx, double ry, double rz):
    cdef double ang = sqrt(rx * rx + ry * ry + rz * rz)
    if ang == 0.0:
        return x, y, z
    cdef double nx = rx / ang
    cdef double ny = ry / ang
    cdef double nz = rz / ang
    cdef double c = cos(ang)
    cdef double s = sin(ang)
    cdef double ndot = nx * x + ny * y + nz * z
    cdef double cx = ny * z - nz * y
    cdef double cy = nz * x - nx * z
    cdef double cz = nx * y - ny * x
    cdef double omc = 1.0 - c
    return (x * c + cx * s + nx * ndot * omc,
            y * c + cy * s + ny * ndot * omc,
            z * c + cz * s + nz * ndot * omc)


def slr_forward(chalf, shalf):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c_ = np.ascontiguousarray(chalf, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] s_ = np.ascontiguousarray(shalf, dtype=np.complex128)
    cdef Py_ssize_t n = c_.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] p = np.zeros(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] q = np.zeros(n, dtype=np.complex128)
    cdef Py_ssize_t k, j
    cdef double complex c, s, sc, pj, qjm

    p[0] = 1.0
    for k in range(n):
        c = c_[k]
        s = s_[k]
        sc = s.conjugate()
        # descending j keeps the degree-shifted q read one slot behind
        for j in range(k, -1, -1):
            pj = p[j]
            qjm = q[j - 1] if j > 0 else 0.0
            p[j] = c * pj - sc * qjm
            q[j] = s * pj + c * qjm
    return p, q


def slr_inverse(p, q):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] pw = np.array(p, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] qw = np.array(q, dtype=np.complex128)
    cdef Py_ssize_t n = pw.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phi = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] theta = np.zeros(n, dtype=np.float64)
    cdef double res_lead = 0.0
    cdef double res_low = 0.0
    cdef double final_dev = 0.0
    cdef Py_ssize_t length, j
    cdef double complex p0, q0, pl, ql, r, rot, s, pn, qn, prev_q
    cdef double half, c, absr, th

    # the step rotation is read off the constant coefficients (ratio S/C) or
    # the leading ones (ratio -conj(S)/C); use whichever pair is healthier
    for length in range(n, 0, -1):
        p0 = pw[0]
        q0 = qw[0]
        pl = pw[length - 1]
        ql = qw[length - 1]
        if length >= 2 and abs(ql) > abs(p0):
            r = pl / ql
            absr = abs(r)
            half = atan(absr)
            if absr > 0.0:
                rot = -1j * r.conjugate()
                th = atan2(rot.imag, rot.real)
            else:
                th = 0.0
        else:
            if abs(p0) < 1e-14:
                if abs(q0) > 1e-14:
                    phi[length - 1] = float("nan")
                    return phi, theta, res_lead, res_low, float("inf")
                r = 0.0
            else:
                r = q0 / p0
            absr = abs(r)
            half = atan(absr)
            if absr > 0.0:
                rot = 1j * r
                th = atan2(rot.imag, rot.real)
            else:
                th = 0.0
        phi[length - 1] = 2.0 * half
        theta[length - 1] = th
        c = cos(half)
        s = -1j * (cos(th) + 1j * sin(th)) * sin(half)
        # in-place degree reduction: new P drops its leading term, new Q is
        # the shifted remainder after its low-order term drops out
        prev_q = -s * pw[0] + c * qw[0]
        if abs(prev_q) > res_low:
            res_low = abs(prev_q)
        for j in range(length):
            pn = c * pw[j] + s.conjugate() * qw[j]
            qn = -s * pw[j] + c * qw[j]
            if j > 0:
                qw[j - 1] = qn
            if j == length - 1:
                if length == 1:
                    # last reduction leaves the constant pair, nominally (1, 0)
                    final_dev = abs(pn - 1.0)
                elif abs(pn) > res_lead:
                    res_lead = abs(pn)
            else:
                pw[j] = pn
        if length > 1:
            pw[length - 1] = 0.0
            qw[length - 1] = 0.0
    return phi, theta, res_lead, res_low, final_dev
