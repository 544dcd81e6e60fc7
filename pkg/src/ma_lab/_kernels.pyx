# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched eigenvalue kernels for 1x1, 2x2 and 3x3 Hermitian matrices.

Closed form for 2x2; Householder tridiagonalization plus implicit-shift QL
for 3x3 (eigenvalues only).  Pencil spectra go through a small Cholesky
congruence.  The numpy backend in _kernels_np.py mirrors this contract.
"""

from libc.math cimport fabs, sqrt, hypot, copysign

BACKEND_NAME = "compiled"

cdef double EPS = 2.220446049250313e-16


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline void eig2(double a00, double a11, double complex a10,
                      double *lo, double *hi) noexcept nogil:
    cdef double mid = 0.5 * (a00 + a11)
    cdef double rad = hypot(0.5 * (a00 - a11), sqrt(cabs2(a10)))
    lo[0] = mid - rad
    hi[0] = mid + rad


cdef void tridiag3(double complex a[3][3], double d[3], double e[2]) noexcept nogil:
    # Reduce a Hermitian 3x3 (lower triangle used) to real tridiagonal d, e
    # with the same spectrum.  Off-diagonal moduli are spectrum-determining.
    cdef double complex a10 = a[1][0]
    cdef double complex a20 = a[2][0]
    cdef double complex a21 = a[2][1]
    cdef double a00 = a[0][0].real
    cdef double a11 = a[1][1].real
    cdef double a22 = a[2][2].real
    cdef double nrm2 = cabs2(a10) + cabs2(a20)
    cdef double alpha, vv, tau, mu, scale
    cdef double complex v0, v1, ph, p0, p1, q0, q1, b01

    d[0] = a00
    if cabs2(a20) == 0.0:
        d[1] = a11
        d[2] = a22
        e[0] = sqrt(cabs2(a10))
        e[1] = sqrt(cabs2(a21))
        return

    alpha = sqrt(nrm2)
    scale = sqrt(cabs2(a10))
    if scale > 0.0:
        ph = a10 / scale
    else:
        ph = 1.0
    v0 = a10 + ph * alpha
    v1 = a20
    vv = cabs2(v0) + cabs2(v1)
    tau = 2.0 / vv

    # p = B v for the trailing Hermitian block B = [[a11, conj(a21)], [a21, a22]]
    b01 = a21.conjugate()
    p0 = a11 * v0 + b01 * v1
    p1 = a21 * v0 + a22 * v1
    mu = (v0.conjugate() * p0 + v1.conjugate() * p1).real
    q0 = tau * p0 - (0.5 * tau * tau * mu) * v0
    q1 = tau * p1 - (0.5 * tau * tau * mu) * v1

    # B' = B - v q^H - q v^H
    d[1] = a11 - 2.0 * (v0 * q0.conjugate()).real
    d[2] = a22 - 2.0 * (v1 * q1.conjugate()).real
    e[0] = alpha
    e[1] = sqrt(cabs2(a21 - v1 * q0.conjugate() - q1 * v0.conjugate()))


cdef int ql3(double d[3], double e[2]) noexcept nogil:
    # Implicit-shift QL for a real symmetric tridiagonal of size 3.
    cdef double ework[3]
    cdef int l, m, i, it
    cdef double dd, g, r, s, c, p, f, b

    ework[0] = e[0]
    ework[1] = e[1]
    ework[2] = 0.0

    for l in range(3):
        it = 0
        while True:
            m = l
            while m < 2:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(ework[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * ework[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + ework[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * ework[i]
                b = c * ework[i]
                r = hypot(f, g)
                ework[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ework[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            else:
                d[l] -= p
                ework[l] = g
                ework[m] = 0.0
    return 0


cdef inline void sort3(double d[3]) noexcept nogil:
    cdef double t
    if d[0] > d[1]:
        t = d[0]; d[0] = d[1]; d[1] = t
    if d[1] > d[2]:
        t = d[1]; d[1] = d[2]; d[2] = t
    if d[0] > d[1]:
        t = d[0]; d[0] = d[1]; d[1] = t


cdef int eig3(double complex a[3][3], double w[3]) noexcept nogil:
    cdef double d[3]
    cdef double e[2]
    tridiag3(a, d, e)
    if ql3(d, e) != 0:
        return -1
    sort3(d)
    w[0] = d[0]
    w[1] = d[1]
    w[2] = d[2]
    return 0


cdef int chol3(double complex a[3][3], double complex L[3][3]) noexcept nogil:
    # Lower Cholesky of a Hermitian 3x3; nonzero return means not PD.
    cdef double t = a[0][0].real
    if t <= 0.0:
        return 1
    L[0][0] = sqrt(t)
    L[1][0] = a[1][0] / L[0][0].real
    L[2][0] = a[2][0] / L[0][0].real
    t = a[1][1].real - cabs2(L[1][0])
    if t <= 0.0:
        return 1
    L[1][1] = sqrt(t)
    L[2][1] = (a[2][1] - L[2][0] * L[1][0].conjugate()) / L[1][1].real
    t = a[2][2].real - cabs2(L[2][0]) - cabs2(L[2][1])
    if t <= 0.0:
        return 1
    L[2][2] = sqrt(t)
    return 0


cdef void congruence3(double complex L[3][3], double complex a[3][3],
                      double complex b[3][3]) noexcept nogil:
    # b = L^{-1} a L^{-H} via two forward substitutions.
    cdef double complex y[3][3]
    cdef int j
    cdef double l00 = L[0][0].real
    cdef double l11 = L[1][1].real
    cdef double l22 = L[2][2].real

    for j in range(3):
        y[0][j] = a[0][j] / l00
        y[1][j] = (a[1][j] - L[1][0] * y[0][j]) / l11
        y[2][j] = (a[2][j] - L[2][0] * y[0][j] - L[2][1] * y[1][j]) / l22
    # now solve L z = y^H, store b = z^H (rows of z are columns of b conj)
    for j in range(3):
        b[j][0] = (y[j][0].conjugate() / l00).conjugate()
        b[j][1] = ((y[j][1].conjugate() - L[1][0] * b[j][0].conjugate()) / l11).conjugate()
        b[j][2] = ((y[j][2].conjugate() - L[2][0] * b[j][0].conjugate()
                    - L[2][1] * b[j][1].conjugate()) / l22).conjugate()


def eigvalsh_batch(double complex[:, :, ::1] a, double[:, ::1] out):
    """Fill out[p] with ascending eigenvalues of a[p].  Returns -1 or a bad index."""
    cdef Py_ssize_t P = a.shape[0]
    cdef int n = a.shape[1]
    cdef Py_ssize_t p
    cdef double lo = 0.0, hi = 0.0
    cdef double complex m3[3][3]
    cdef double w[3]
    cdef int i, j

    if n == 1:
        for p in range(P):
            out[p, 0] = a[p, 0, 0].real
        return -1
    if n == 2:
        for p in range(P):
            eig2(a[p, 0, 0].real, a[p, 1, 1].real, a[p, 1, 0], &lo, &hi)
            out[p, 0] = lo
            out[p, 1] = hi
        return -1
    for p in range(P):
        for i in range(3):
            for j in range(3):
                m3[i][j] = a[p, i, j]
        if eig3(m3, w) != 0:
            return p
        out[p, 0] = w[0]
        out[p, 1] = w[1]
        out[p, 2] = w[2]
    return -1


def pencil_eigvalsh_batch(double complex[:, :, ::1] chi,
                          double complex[:, :, ::1] omega,
                          double[:, ::1] out):
    """Pencil spectra det(omega - lam chi) = 0.  Returns -1, or the flat index
    of the first point where chi fails to be positive definite (as -2 - index),
    or the index where the eigensolve failed (encoded as index + 2**40)."""
    cdef Py_ssize_t P = chi.shape[0]
    cdef int n = chi.shape[1]
    cdef Py_ssize_t p
    cdef double base, lo = 0.0, hi = 0.0
    cdef double complex c2[2][2]
    cdef double complex m3[3][3]
    cdef double complex L3[3][3]
    cdef double complex b3[3][3]
    cdef double complex l00, l10, l11, b00, b10, b11
    cdef double t0, t1
    cdef double w[3]
    cdef int i, j

    if n == 1:
        for p in range(P):
            base = chi[p, 0, 0].real
            if base <= 0.0:
                return -2 - p
            out[p, 0] = omega[p, 0, 0].real / base
        return -1
    if n == 2:
        for p in range(P):
            t0 = chi[p, 0, 0].real
            if t0 <= 0.0:
                return -2 - p
            l00 = sqrt(t0)
            l10 = chi[p, 1, 0] / l00.real
            t1 = chi[p, 1, 1].real - cabs2(l10)
            if t1 <= 0.0:
                return -2 - p
            l11 = sqrt(t1)
            # y = L^{-1} A, then b = y L^{-H} = (L^{-1} y^H)^H
            c2[0][0] = omega[p, 0, 0] / l00.real
            c2[0][1] = omega[p, 0, 1] / l00.real
            c2[1][0] = (omega[p, 1, 0] - l10 * c2[0][0]) / l11.real
            c2[1][1] = (omega[p, 1, 1] - l10 * c2[0][1]) / l11.real
            b00 = c2[0][0] / l00.real
            b10 = c2[1][0] / l00.real
            b11 = (c2[1][1] - l10.conjugate() * b10) / l11.real
            eig2(b00.real, b11.real, b10, &lo, &hi)
            out[p, 0] = lo
            out[p, 1] = hi
        return -1
    for p in range(P):
        for i in range(3):
            for j in range(3):
                m3[i][j] = chi[p, i, j]
        if chol3(m3, L3) != 0:
            return -2 - p
        for i in range(3):
            for j in range(3):
                m3[i][j] = omega[p, i, j]
        congruence3(L3, m3, b3)
        if eig3(b3, w) != 0:
            return p + (<Py_ssize_t> 1 << 40)
        out[p, 0] = w[0]
        out[p, 1] = w[1]
        out[p, 2] = w[2]
    return -1
