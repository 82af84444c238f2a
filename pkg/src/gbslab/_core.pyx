# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.

Every public function here has a pure-Python twin in :mod:`gbslab._fallback`
with the same signature and semantics; :mod:`gbslab._backend` picks one at
import. Never build this module with ``-ffast-math``: it reassociates the
compensated sums away.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx


cdef struct Acc:
    double s
    double c
    double a


cdef inline void acc_add(Acc* acc, double x) noexcept nogil:
    # Neumaier variant of Kahan summation
    cdef double t = acc.s + x
    if fabs(acc.s) >= fabs(x):
        acc.c += (acc.s - t) + x
    else:
        acc.c += (x - t) + acc.s
    acc.s = t
    acc.a += fabs(x)


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cmul_conj(cplx a, cplx b) noexcept nogil:
    # a * conj(b)
    return (a.real * b.real + a.imag * b.imag) + 1j * (a.imag * b.real - a.real * b.imag)


cdef int _border(const cplx* M, int n2, cplx* L, int* rows, int p,
                 int g0, int g1, double* d0, double* d1) noexcept nogil:
    """Append rows p, p+1 (global rows g0, g1 of M) to the Cholesky factor L."""
    cdef int rc, r, c, q, gr
    cdef cplx s
    cdef double d
    rows[p] = g0
    rows[p + 1] = g1
    for rc in range(2):
        r = p + rc
        gr = rows[r]
        for c in range(r):
            s = M[gr * n2 + rows[c]]
            for q in range(c):
                s = s - cmul_conj(L[r * n2 + q], L[c * n2 + q])
            L[r * n2 + c] = s / L[c * n2 + c].real
        d = M[gr * n2 + gr].real
        for q in range(r):
            d -= abs2(L[r * n2 + q])
        if not d > 0.0:
            return -1
        L[r * n2 + r] = sqrt(d)
    d0[0] = L[p * n2 + p].real
    d1[0] = L[(p + 1) * n2 + p + 1].real
    return 0


cdef int _tor_dfs(const cplx* M, int n2, int k, int start, int depth,
                  cplx* L, int* rows, double inv_sqrt_det, Acc* acc) noexcept nogil:
    cdef int i
    cdef double d0 = 0.0, d1 = 0.0, val
    for i in range(start, k):
        if _border(M, n2, L, rows, 2 * depth, 2 * i, 2 * i + 1, &d0, &d1) != 0:
            return -1
        val = inv_sqrt_det / (d0 * d1)
        if ((k - depth - 1) & 1) == 1:
            acc_add(acc, -val)
        else:
            acc_add(acc, val)
        if i + 1 < k:
            if _tor_dfs(M, n2, k, i + 1, depth + 1, L, rows, val, acc) != 0:
                return -1
    return 0


def torontonian_chunk(cnp.ndarray[cplx, ndim=2, mode="c"] M not None, int root):
    """Signed inverse-root-determinant sum over all subsets whose smallest mode is ``root``.

    ``M`` is I - O in interleaved order. Returns ``(sum, compensation, abs_sum)``.
    Raises ``ArithmeticError`` when a principal submatrix is not positive definite.
    """
    cdef int n2 = M.shape[0]
    cdef int k = n2 // 2
    cdef Acc acc
    cdef int status = 0
    cdef double d0 = 0.0, d1 = 0.0, val
    cdef cplx* L
    cdef int* rows
    cdef const cplx* mp = <const cplx*> M.data
    if root < 0 or root >= k:
        raise IndexError("root out of range")
    acc.s = 0.0
    acc.c = 0.0
    acc.a = 0.0
    L = <cplx*> malloc(n2 * n2 * sizeof(cplx))
    rows = <int*> malloc(n2 * sizeof(int))
    if L == NULL or rows == NULL:
        free(L)
        free(rows)
        raise MemoryError()
    with nogil:
        if _border(mp, n2, L, rows, 0, 2 * root, 2 * root + 1, &d0, &d1) != 0:
            status = -1
        else:
            val = 1.0 / (d0 * d1)
            if ((k - 1) & 1) == 1:
                acc_add(&acc, -val)
            else:
                acc_add(&acc, val)
            if root + 1 < k:
                status = _tor_dfs(mp, n2, k, root + 1, 1, L, rows, val, &acc)
    free(L)
    free(rows)
    if status != 0:
        raise ArithmeticError("principal submatrix is not positive definite")
    return acc.s, acc.c, acc.a


def permanent(cnp.ndarray[cplx, ndim=2, mode="c"] A not None):
    """Ryser inclusion-exclusion with Gray-code row-sum updates."""
    cdef int n = A.shape[0]
    cdef Acc re, im
    cdef cplx* rowsum
    cdef const cplx* a = <const cplx*> A.data
    cdef long long g, prev, cur, diff, total
    cdef int j, i, bit
    cdef cplx prod
    if n == 0:
        return 1.0 + 0j
    re.s = re.c = re.a = 0.0
    im.s = im.c = im.a = 0.0
    rowsum = <cplx*> malloc(n * sizeof(cplx))
    if rowsum == NULL:
        raise MemoryError()
    total = (<long long> 1) << n
    with nogil:
        for i in range(n):
            rowsum[i] = 0
        prev = 0
        for g in range(1, total):
            cur = g ^ (g >> 1)
            diff = cur ^ prev
            j = 0
            while (diff >> j) != 1:
                j += 1
            if cur & diff:
                for i in range(n):
                    rowsum[i] = rowsum[i] + a[i * n + j]
            else:
                for i in range(n):
                    rowsum[i] = rowsum[i] - a[i * n + j]
            prev = cur
            prod = 1
            for i in range(n):
                prod = prod * rowsum[i]
            # sign (-1)^(n - |S|)
            bit = 0
            diff = cur
            while diff:
                diff &= diff - 1
                bit += 1
            if ((n - bit) & 1) == 1:
                acc_add(&re, -prod.real)
                acc_add(&im, -prod.imag)
            else:
                acc_add(&re, prod.real)
                acc_add(&im, prod.imag)
    free(rowsum)
    return (re.s + re.c) + 1j * (im.s + im.c)


cdef void _haf_rec(const cplx* A, int n, int* used, cplx partial,
                   Acc* re, Acc* im) noexcept nogil:
    cdef int i = 0, j
    while i < n and used[i]:
        i += 1
    if i == n:
        acc_add(re, partial.real)
        acc_add(im, partial.imag)
        return
    used[i] = 1
    for j in range(i + 1, n):
        if not used[j]:
            used[j] = 1
            _haf_rec(A, n, used, partial * A[i * n + j], re, im)
            used[j] = 0
    used[i] = 0


def hafnian(cnp.ndarray[cplx, ndim=2, mode="c"] A not None):
    """Sum over perfect matchings by direct enumeration; ``A`` has even size."""
    cdef int n = A.shape[0]
    cdef Acc re, im
    cdef int* used
    cdef int j
    cdef const cplx* a = <const cplx*> A.data
    if n == 0:
        return 1.0 + 0j
    re.s = re.c = re.a = 0.0
    im.s = im.c = im.a = 0.0
    used = <int*> malloc(n * sizeof(int))
    if used == NULL:
        raise MemoryError()
    with nogil:
        for j in range(n):
            used[j] = 0
        _haf_rec(a, n, used, 1.0, &re, &im)
    free(used)
    return (re.s + re.c) + 1j * (im.s + im.c)


def mh_chain(cnp.ndarray[double, ndim=1, mode="c"] w_prop not None,
             cnp.ndarray[double, ndim=1, mode="c"] u not None,
             double w0):
    """Independence Metropolis acceptance loop.

    ``w_prop[t]`` is the importance weight p/q of proposal t, ``u[t]`` a
    uniform draw, ``w0`` the weight of the starting state. Returns a uint8
    array of acceptance flags.
    """
    cdef Py_ssize_t t, n = w_prop.shape[0]
    cdef double cur = w0
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] acc = np.zeros(n, dtype=np.uint8)
    with nogil:
        for t in range(n):
            # zero-weight proposals are always rejected
            if w_prop[t] > 0.0 and (cur <= 0.0 or u[t] * cur < w_prop[t]):
                acc[t] = 1
                cur = w_prop[t]
    return acc
