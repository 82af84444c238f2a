"""Matrix functions behind threshold and photon-number statistics.

The Torontonian is evaluated as a signed sum of inverse square-root
determinants over all subsets of the clicked modes. The default ``"dfs"``
route walks subsets depth first and grows one Cholesky factor by two rows per
added mode, so each subset costs O(k^2) instead of O(k^3). ``"gray"`` (Gray-code
order, fresh Cholesky per subset) and ``"naive"`` are kept as reference routes.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from gbslab import _backend
from gbslab.state import InvalidStateError

EPS = np.finfo(float).eps


@dataclass
class KernelLimits:
    max_clicks: int = 26
    max_hafnian: int = 16
    max_permanent: int = 20
    workers: int = 1


LIMITS = KernelLimits()


class KernelLimitError(RuntimeError):
    """Refusal to run a kernel above its configured size."""

    def __init__(self, message, size=None, estimated_seconds=None):
        super().__init__(message)
        self.size = size
        self.estimated_seconds = estimated_seconds


def estimated_torontonian_seconds(k: int) -> float:
    """Rough wall time on commodity hardware, about 1 s at k=20 compiled."""
    base = 1.0 if _backend.BACKEND == "cython" else 200.0
    return base * 2.2 ** (k - 20)


class CompensatedSum:
    """Running Neumaier-compensated sum that also tracks the sum of magnitudes.

    ``naive_bound`` is the classical worst-case error of plain recursive
    summation of the same terms, gamma_{n-1} * sum|x_i|. It bounds the gap
    between a naive accumulation and this one.
    """

    def __init__(self):
        self.s = 0.0
        self.c = 0.0
        self.abs_sum = 0.0
        self.n = 0

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t
        self.abs_sum += abs(x)
        self.n += 1

    def merge(self, s: float, c: float, abs_sum: float, n: int = 1) -> None:
        """Fold in a partial ``(sum, compensation, abs_sum)`` from another accumulator."""
        self.add(s)
        self.c += c
        self.abs_sum += abs_sum - abs(s)
        self.n += n - 1

    @property
    def value(self) -> float:
        return self.s + self.c

    @property
    def error(self) -> float:
        # compensated summation leaves O(eps) relative to the result plus O(n eps^2) * sum|x|
        return 2 * EPS * abs(self.value) + self.n * EPS**2 * self.abs_sum

    @property
    def naive_bound(self) -> float:
        n = max(self.n - 1, 0)
        return n * EPS / (1 - n * EPS) * self.abs_sum


def det_hpd(M: np.ndarray) -> float:
    """Determinant of a Hermitian positive-definite matrix via Cholesky."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 1.0
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise InvalidStateError("matrix is not Hermitian positive definite") from exc
    d = np.real(np.diag(L))
    return float(np.prod(d * d))


def kernel_matrix(Q_inv: np.ndarray, clicked) -> np.ndarray:
    """O restricted to ``clicked`` modes, given the full inverse Husimi matrix."""
    m = Q_inv.shape[0] // 2
    clicked = np.asarray(clicked, dtype=int)
    idx = np.concatenate([clicked, clicked + m])
    return np.eye(len(idx)) - Q_inv[np.ix_(idx, idx)]


def _interleave(A: np.ndarray) -> np.ndarray:
    k = A.shape[0] // 2
    perm = np.arange(2 * k).reshape(2, k).T.ravel()
    return np.ascontiguousarray(A[np.ix_(perm, perm)], dtype=complex)


def _check_kernel(O: np.ndarray, max_clicks: int | None) -> np.ndarray:
    O = np.asarray(O, dtype=complex)
    if O.ndim != 2 or O.shape[0] != O.shape[1] or O.shape[0] % 2:
        raise ValueError(f"kernel matrix must be 2k x 2k, got {O.shape}")
    k = O.shape[0] // 2
    limit = LIMITS.max_clicks if max_clicks is None else max_clicks
    if k > limit:
        est = estimated_torontonian_seconds(k)
        raise KernelLimitError(
            f"{k} clicks exceeds the kernel limit of {limit} (estimated {est:.3g} s)",
            size=k, estimated_seconds=est)
    if O.size and np.max(np.abs(O - O.conj().T)) > 1e-10:
        raise ValueError("kernel matrix is not Hermitian")
    return O


def _tor_dfs(O, workers):
    k = O.shape[0] // 2
    M = _interleave(np.eye(2 * k) - O)
    chunk = _backend.impl.torontonian_chunk
    acc = CompensatedSum()
    acc.add(-1.0 if k & 1 else 1.0)
    try:
        if workers > 1 and k > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda r: chunk(M, r), range(k)))
        else:
            parts = [chunk(M, r) for r in range(k)]
    except ArithmeticError as exc:
        raise InvalidStateError("non-positive-definite principal submatrix in Torontonian") from exc
    # fixed merge order regardless of worker count
    for r, (s, c, a) in enumerate(parts):
        acc.merge(s, c, a, n=1 << (k - 1 - r))
    return acc


def _subset_term(M, Z, k):
    idx = list(Z) + [z + k for z in Z]
    sub = M[np.ix_(idx, idx)]
    try:
        L = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError as exc:
        raise InvalidStateError("non-positive-definite principal submatrix in Torontonian") from exc
    return 1.0 / float(np.prod(np.real(np.diag(L))))


def _tor_gray(O):
    k = O.shape[0] // 2
    M = np.eye(2 * k) - O
    acc = CompensatedSum()
    for g in range(1 << k):
        code = g ^ (g >> 1)
        Z = [i for i in range(k) if code >> i & 1]
        val = _subset_term(M, Z, k) if Z else 1.0
        acc.add(-val if (k - len(Z)) & 1 else val)
    return acc


def _tor_naive(O):
    k = O.shape[0] // 2
    M = np.eye(2 * k) - O
    acc = CompensatedSum()
    for size in range(k + 1):
        for Z in itertools.combinations(range(k), size):
            val = _subset_term(M, Z, k) if Z else 1.0
            acc.add(-val if (k - size) & 1 else val)
    return acc


def torontonian(O: np.ndarray, *, method: str = "dfs", return_error: bool = False,
                max_clicks: int | None = None, workers: int | None = None):
    """Torontonian of a 2k x 2k kernel matrix O = I - (Q^-1 restricted to clicked modes).

    Rows and columns pair as (i, i+k). Returns a float, or ``(value, error)``
    when ``return_error`` is set; ``error`` estimates the accumulated floating
    point error from per-term evaluation and summation.

    Raises
    ------
    KernelLimitError
        k above the configured limit.
    InvalidStateError
        A principal submatrix of I - O is not positive definite.
    """
    O = _check_kernel(O, max_clicks)
    k = O.shape[0] // 2
    if k == 0:
        return (1.0, 0.0) if return_error else 1.0
    if method == "dfs":
        acc = _tor_dfs(O, LIMITS.workers if workers is None else workers)
    elif method == "gray":
        acc = _tor_gray(O)
    elif method == "naive":
        acc = _tor_naive(O)
    else:
        raise ValueError(f"unknown method {method!r}")
    value = acc.value
    if not return_error:
        return value
    # each term carries O(k eps) relative error from its Cholesky factor
    err = (4 * k + 4) * EPS * acc.abs_sum + acc.error
    return value, err


def hafnian(A: np.ndarray, *, max_size: int | None = None) -> complex:
    """Hafnian by enumerating all (n-1)!! perfect matchings."""
    A = np.ascontiguousarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"hafnian needs a square matrix, got {A.shape}")
    if A.size and np.max(np.abs(A - A.T)) > 1e-10:
        raise ValueError("hafnian needs a symmetric matrix")
    n = A.shape[0]
    limit = LIMITS.max_hafnian if max_size is None else max_size
    if n > limit:
        raise KernelLimitError(f"hafnian of size {n} exceeds limit {limit}", size=n)
    if n % 2:
        warnings.warn("hafnian of an odd-dimensional matrix is 0", stacklevel=2)
        return 0j
    return complex(_backend.impl.hafnian(A))


def permanent(M: np.ndarray, *, max_size: int | None = None) -> complex:
    """Permanent by Ryser's formula with Gray-code column updates."""
    M = np.ascontiguousarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got {M.shape}")
    n = M.shape[0]
    limit = LIMITS.max_permanent if max_size is None else max_size
    if n > limit:
        raise KernelLimitError(f"permanent of size {n} exceeds limit {limit}", size=n)
    return complex(_backend.impl.permanent(M))


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1
