"""Independent reference implementations used only by the tests.

Nothing here imports the package's kernels; each oracle is the textbook
definition written as plainly as possible, so it is slow but easy to audit.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def det_cofactor(A):
    """Determinant by Laplace expansion along the first row."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return A[0, 0]
    total = 0j
    for j in range(n):
        minor = np.delete(np.delete(A, 0, axis=0), j, axis=1)
        total += (-1) ** j * A[0, j] * det_cofactor(minor)
    return total


def hafnian_recursive(A):
    """haf(A) = sum_j A[0, j] haf(A without rows/cols 0 and j)."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n % 2:
        return 0j
    total = 0j
    for j in range(1, n):
        keep = [i for i in range(n) if i not in (0, j)]
        total += A[0, j] * hafnian_recursive(A[np.ix_(keep, keep)])
    return total


def permanent_bruteforce(M):
    """Sum over all permutations of prod_i M[i, sigma(i)]."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    return sum((math.prod(M[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n))),
               start=0j)


def permanent_minors(M):
    """Permanent by expansion along the first row (signless Laplace)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    return sum(M[0, j] * permanent_minors(np.delete(np.delete(M, 0, 0), j, 1)) for j in range(n))


def torontonian_definition(O):
    """Sum over subsets Z of (-1)^(k-|Z|) / sqrt(det((I - O) on Z and Z + k)), using numpy.linalg.det."""
    O = np.asarray(O, dtype=complex)
    k = O.shape[0] // 2
    M = np.eye(2 * k) - O
    total = 0.0
    for size in range(k + 1):
        for Z in itertools.combinations(range(k), size):
            idx = list(Z) + [z + k for z in Z]
            d = np.linalg.det(M[np.ix_(idx, idx)]).real if idx else 1.0
            total += (-1) ** (k - size) / math.sqrt(d)
    return total


# --- closed forms -----------------------------------------------------------------


def smss_vacuum(r):
    return 1 / math.cosh(r)


def smss_fock(r, n):
    """|<n|SMSS(r)>|^2; zero for odd n."""
    if n % 2:
        return 0.0
    k = n // 2
    return math.tanh(r) ** n * math.factorial(n) / (4**k * math.factorial(k) ** 2 * math.cosh(r))


def tmss_fock(r, n):
    """P(n, n) of a two-mode squeezed vacuum."""
    return math.tanh(r) ** (2 * n) / math.cosh(r) ** 2


def thermal_click(nbar):
    return nbar / (nbar + 1)


def two_mode_covariance(P):
    """Click-click covariance from a 2x2 table P[a, b] of click indicators."""
    pa = P[1, 0] + P[1, 1]
    pb = P[0, 1] + P[1, 1]
    return P[1, 1] - pa * pb


def random_unitary(m, rng):
    """Haar unitary by a route different from the package's: scipy's unitary_group."""
    from scipy.stats import unitary_group

    if m == 1:
        # U(1) is a uniform phase; scipy only handles m >= 2
        return np.exp(2j * np.pi * np.array([[rng.random()]]))
    return unitary_group.rvs(m, random_state=rng)


def random_hermitian_pd(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T + np.eye(n)
