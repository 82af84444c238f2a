"""Pure-Python kernels, selected when the compiled extension is unavailable.

Mirrors :mod:`gbslab._core` function for function. Plain Python lists of
complex numbers beat numpy for the tiny per-node work done here.
"""

import math

import numpy as np


class _Acc:
    # Neumaier variant of Kahan summation
    __slots__ = ("s", "c", "a")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0
        self.a = 0.0

    def add(self, x):
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t
        self.a += abs(x)


def _border(M, L, rows, p, g0, g1):
    rows[p] = g0
    rows[p + 1] = g1
    for r in (p, p + 1):
        gr = rows[r]
        Mr = M[gr]
        Lr = L[r]
        for c in range(r):
            s = Mr[rows[c]]
            Lc = L[c]
            for q in range(c):
                s -= Lr[q] * Lc[q].conjugate()
            Lr[c] = s / Lc[c].real
        d = Mr[gr].real
        for q in range(r):
            z = Lr[q]
            d -= z.real * z.real + z.imag * z.imag
        if not d > 0.0:
            raise ArithmeticError("principal submatrix is not positive definite")
        Lr[r] = complex(math.sqrt(d))
    return L[p][p].real, L[p + 1][p + 1].real


def _tor_dfs(M, k, start, depth, L, rows, inv_sqrt_det, acc):
    for i in range(start, k):
        d0, d1 = _border(M, L, rows, 2 * depth, 2 * i, 2 * i + 1)
        val = inv_sqrt_det / (d0 * d1)
        acc.add(-val if (k - depth - 1) & 1 else val)
        if i + 1 < k:
            _tor_dfs(M, k, i + 1, depth + 1, L, rows, val, acc)


def torontonian_chunk(M, root):
    M = np.asarray(M, dtype=complex)
    n2 = M.shape[0]
    k = n2 // 2
    if not 0 <= root < k:
        raise IndexError("root out of range")
    Ml = M.tolist()
    L = [[0j] * n2 for _ in range(n2)]
    rows = [0] * n2
    acc = _Acc()
    d0, d1 = _border(Ml, L, rows, 0, 2 * root, 2 * root + 1)
    val = 1.0 / (d0 * d1)
    acc.add(-val if (k - 1) & 1 else val)
    if root + 1 < k:
        _tor_dfs(Ml, k, root + 1, 1, L, rows, val, acc)
    return acc.s, acc.c, acc.a


def permanent(A):
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    cols = A.T.tolist()
    rowsum = [0j] * n
    re, im = _Acc(), _Acc()
    prev = 0
    for g in range(1, 1 << n):
        cur = g ^ (g >> 1)
        diff = cur ^ prev
        j = diff.bit_length() - 1
        col = cols[j]
        if cur & diff:
            rowsum = [a + b for a, b in zip(rowsum, col)]
        else:
            rowsum = [a - b for a, b in zip(rowsum, col)]
        prev = cur
        prod = 1 + 0j
        for x in rowsum:
            prod *= x
        if (n - bin(cur).count("1")) & 1:
            prod = -prod
        re.add(prod.real)
        im.add(prod.imag)
    return complex(re.s + re.c, im.s + im.c)


def hafnian(A):
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    a = A.tolist()
    re, im = _Acc(), _Acc()
    used = [False] * n

    def rec(partial):
        i = 0
        while i < n and used[i]:
            i += 1
        if i == n:
            re.add(partial.real)
            im.add(partial.imag)
            return
        used[i] = True
        row = a[i]
        for j in range(i + 1, n):
            if not used[j]:
                used[j] = True
                rec(partial * row[j])
                used[j] = False
        used[i] = False

    rec(1 + 0j)
    return complex(re.s + re.c, im.s + im.c)


def mh_chain(w_prop, u, w0):
    w_prop = np.asarray(w_prop, dtype=float).tolist()
    u = np.asarray(u, dtype=float).tolist()
    acc = np.zeros(len(w_prop), dtype=np.uint8)
    cur = float(w0)
    for t, (w, r) in enumerate(zip(w_prop, u)):
        if w > 0.0 and (cur <= 0.0 or r * cur < w):
            acc[t] = 1
            cur = w
    return acc
