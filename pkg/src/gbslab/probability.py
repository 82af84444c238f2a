"""Detector-outcome probabilities of Gaussian states.

Click patterns are length-m 0/1 vectors, bit i for detector i. Whole
distributions are indexed by the integer whose binary string (detector 0
first, most significant) is the pattern, so index order matches string order.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

import numpy as np

from gbslab import kernels
from gbslab.kernels import KernelLimitError, det_hpd, torontonian
from gbslab.state import GaussianState, ExperimentSpec, InvalidStateError, reduce

MAX_FULL_MODES = 14


def as_pattern(pattern, m: int | None = None) -> np.ndarray:
    """Coerce a string like ``"0110"`` or a 0/1 sequence into a uint8 vector."""
    if isinstance(pattern, str):
        if set(pattern) - {"0", "1"}:
            raise ValueError(f"pattern string must be 0/1, got {pattern!r}")
        bits = np.frombuffer(pattern.encode(), dtype=np.uint8) - ord("0")
    else:
        bits = np.asarray(pattern)
        if bits.size and not np.all((bits == 0) | (bits == 1)):
            raise ValueError("click pattern entries must be 0 or 1")
        bits = bits.astype(np.uint8)
    if m is not None and bits.shape != (m,):
        raise ValueError(f"pattern has {bits.size} detectors, state has {m} modes")
    return bits


def pattern_string(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def pattern_index(bits) -> int:
    return int(pattern_string(bits), 2) if len(bits) else 0


def index_bits(index: int, m: int) -> np.ndarray:
    return np.array([(index >> (m - 1 - i)) & 1 for i in range(m)], dtype=np.uint8)


def all_patterns(m: int) -> np.ndarray:
    """All 2^m patterns as a (2^m, m) uint8 array in index order."""
    idx = np.arange(1 << m)
    shifts = np.arange(m - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


class ClickModel:
    """Cached inverse Husimi matrix and normalization of one state.

    Use it when evaluating many patterns of the same state.
    """

    def __init__(self, state: GaussianState):
        self.state = state
        self.m = state.m
        Q = state.Q
        self.sqrt_det_Q = math.sqrt(det_hpd(Q))
        self.Q_inv = np.linalg.inv(Q)
        self.Q_inv = (self.Q_inv + self.Q_inv.conj().T) / 2
        self.evaluations = 0

    def probability(self, pattern, *, return_error: bool = False):
        bits = as_pattern(pattern, self.m)
        clicked = np.flatnonzero(bits)
        O = kernels.kernel_matrix(self.Q_inv, clicked)
        self.evaluations += 1
        try:
            tor, err = torontonian(O, return_error=True)
        except KernelLimitError as exc:
            exc.pattern = pattern_string(bits)
            exc.args = (f"{exc.args[0]} for pattern {exc.pattern}",)
            raise
        p = tor / self.sqrt_det_Q
        if return_error:
            return p, err / self.sqrt_det_Q
        return p


def click_probability(state: GaussianState, pattern, *, return_error: bool = False):
    """Threshold-detector probability Tor(O_S) / sqrt(det Q)."""
    return ClickModel(state).probability(pattern, return_error=return_error)


def silent_probability(state: GaussianState, subset: Sequence[int]) -> float:
    """Probability that every mode in ``subset`` registers no click."""
    subset = list(subset)
    if not subset:
        warnings.warn("empty subset: silent probability is 1", stacklevel=2)
        return 1.0
    sub = reduce(state, subset)
    return 1.0 / math.sqrt(det_hpd(sub.Q))


def two_point_theory(state: GaussianState, i: int, j: int) -> float:
    """Click-click covariance C_ij = <Pi_i Pi_j> - <Pi_i><Pi_j>."""
    if i == j:
        raise ValueError("two-point correlation needs i != j")
    return (silent_probability(state, [i, j])
            - silent_probability(state, [i]) * silent_probability(state, [j]))


def click_rates(state: GaussianState) -> np.ndarray:
    return np.array([1.0 - silent_probability(state, [i]) for i in range(state.m)])


def full_distribution(state: GaussianState, *, method: str = "torontonian") -> np.ndarray:
    """Probability of every click pattern, in index order.

    ``method="torontonian"`` evaluates each pattern with the kernel;
    ``method="mobius"`` inverts the 2^m all-silent marginals instead.
    """
    m = state.m
    if m > MAX_FULL_MODES:
        mem = (1 << m) * 8
        raise KernelLimitError(
            f"full distribution over {m} modes refused (limit {MAX_FULL_MODES}, "
            f"needs {mem / 2**20:.3g} MiB and 3^{m} subset terms); sample instead",
            size=m)
    if method == "torontonian":
        model = ClickModel(state)
        pats = all_patterns(m)
        return np.array([model.probability(p) for p in pats])
    if method == "mobius":
        return _mobius_distribution(state)
    raise ValueError(f"unknown method {method!r}")


def _mobius_distribution(state: GaussianState) -> np.ndarray:
    m = state.m
    Q = state.Q
    # F[C] = P(all modes outside C silent); bit of mode i is 1 << (m-1-i)
    F = np.empty(1 << m)
    for c in range(1 << m):
        silent = [i for i in range(m) if not (c >> (m - 1 - i)) & 1]
        if silent:
            idx = state.mode_indices(silent)
            F[c] = 1.0 / math.sqrt(det_hpd(Q[np.ix_(idx, idx)]))
        else:
            F[c] = 1.0
    for i in range(m):
        bit = 1 << i
        for c in range(1 << m):
            if c & bit:
                F[c] -= F[c ^ bit]
    return F


def state_space_dimension(m: int, n_max: int) -> int:
    """Number of click patterns with at most ``n_max`` clicks, exactly."""
    if m < 0 or m > 1000:
        raise ValueError("m must lie in [0, 1000]")
    n_max = min(max(n_max, -1), m)
    return sum(math.comb(m, k) for k in range(n_max + 1))


# --- photon-number statistics -------------------------------------------------


def _repeat_indices(occupations: Sequence[int]) -> list:
    return [i for i, n in enumerate(occupations) for _ in range(int(n))]


def fock_probability(state: GaussianState, pattern: Sequence[int]) -> float:
    """Photon-number-resolved probability from the hafnian law.

    For pure states the N x N pairing block suffices (|haf|^2); mixed states use
    the full 2N x 2N matrix X O with rows/columns repeated per occupation.
    """
    occ = np.asarray(pattern, dtype=int)
    if occ.shape != (state.m,) or np.any(occ < 0):
        raise ValueError("Fock pattern must be m nonnegative integers")
    N = int(occ.sum())
    m = state.m
    Q = state.Q
    O = np.eye(2 * m) - np.linalg.inv(Q)
    norm = math.sqrt(det_hpd(Q)) * math.prod(math.factorial(int(n)) for n in occ)
    rep = _repeat_indices(occ)
    if state.is_pure():
        if N % 2:
            return 0.0
        B = O[m:, :m]
        B = (B + B.T) / 2
        h = kernels.hafnian(B[np.ix_(rep, rep)])
        return float(abs(h) ** 2 / norm)
    A = np.zeros_like(O)
    A[:m] = O[m:]
    A[m:] = O[:m]
    A = (A + A.T) / 2
    idx = rep + [i + m for i in rep]
    h = kernels.hafnian(A[np.ix_(idx, idx)])
    return float(h.real / norm)


def _source_series(src, truncation):
    """(local occupations, amplitude) pairs of one lossless source up to ``truncation`` photons."""
    if src.kind == "VACUUM":
        return [((0,), 1.0)]
    t = math.tanh(src.r)
    ch = math.cosh(src.r)
    phase = np.exp(1j * src.phi)
    out = []
    if src.kind == "SMSS":
        for n in range(truncation // 2 + 1):
            c = (-phase * t) ** n * math.sqrt(math.factorial(2 * n)) / (2**n * math.factorial(n))
            out.append(((2 * n,), c / math.sqrt(ch)))
    elif src.kind == "TMSS":
        for n in range(truncation // 2 + 1):
            out.append(((n, n), (phase * t) ** n / ch))
    else:
        raise ValueError(f"Fock oracle handles pure sources only, got {src.kind}")
    return out


def fock_input_amplitudes(spec: ExperimentSpec, truncation: int) -> dict:
    """Input Fock amplitudes (occupation tuple -> amplitude) with at most ``truncation`` photons."""
    m = spec.m
    amps = {(0,) * m: 1.0 + 0j}
    for src in spec.sources:
        nxt = {}
        for occ, a in amps.items():
            used = sum(occ)
            for local, c in _source_series(src, truncation):
                if used + sum(local) > truncation:
                    continue
                new = list(occ)
                for mode, n in zip(src.modes, local):
                    new[mode] = n
                nxt[tuple(new)] = a * c
        amps = nxt
    return amps


def fock_oracle(spec: ExperimentSpec, pattern: Sequence[int], truncation: int = 12,
                *, return_bound: bool = False):
    """Photon-number probability by propagating Fock amplitudes through U.

    Transition amplitudes are permanents of U with rows repeated per output
    occupation and columns per input occupation. Independent of the covariance
    route; the reported bound is the input norm discarded by truncation.
    """
    if spec.m > 4 or truncation > 12:
        raise KernelLimitError("Fock oracle is limited to m <= 4 and truncation <= 12")
    if not spec.is_lossless():
        raise ValueError("Fock oracle needs a lossless spec")
    out = np.asarray(pattern, dtype=int)
    if out.shape != (spec.m,) or np.any(out < 0):
        raise ValueError("Fock pattern must be m nonnegative integers")
    N = int(out.sum())
    if N > truncation:
        raise ValueError(f"pattern has {N} photons, above truncation {truncation}")
    amps = fock_input_amplitudes(spec, truncation)
    bound = max(0.0, 1.0 - sum(abs(a) ** 2 for a in amps.values()))
    rows = _repeat_indices(out)
    out_fact = math.prod(math.factorial(int(n)) for n in out)
    U = spec.unitary
    amp = 0j
    for occ, c in amps.items():
        if sum(occ) != N:
            continue
        cols = _repeat_indices(occ)
        in_fact = math.prod(math.factorial(n) for n in occ)
        per = kernels.permanent(U[np.ix_(rows, cols)]) if N else 1.0
        amp += c * per / math.sqrt(in_fact * out_fact)
    p = float(abs(amp) ** 2)
    return (p, bound) if return_bound else p


def fock_patterns(m: int, max_photons: int) -> Iterable[tuple]:
    """All occupation tuples of ``m`` modes with total at most ``max_photons``."""
    for occ in itertools.product(range(max_photons + 1), repeat=m):
        if sum(occ) <= max_photons:
            yield occ


def fock_distribution(state: GaussianState, max_photons: int) -> dict:
    return {occ: fock_probability(state, occ) for occ in fock_patterns(state.m, max_photons)}


def click_from_fock(fock_dist: Mapping[tuple, float]) -> dict:
    """Threshold each occupation pattern (n >= 1 clicks) and merge probabilities."""
    out = defaultdict(float)
    for occ, p in fock_dist.items():
        out[tuple(int(n > 0) for n in occ)] += p
    return dict(out)


def write_distribution_csv(path, probs: np.ndarray, m: int, header: Mapping[str, object] = (),
                           skip_zero: bool = False) -> None:
    """CSV with columns (pattern, probability); ``#key=value`` header lines first.

    With ``skip_zero`` the rows whose probability is exactly 0.0 are left out.
    """
    with open(path, "w", newline="\n") as fh:
        for key, val in dict(header).items():
            fh.write(f"#{key}={val}\n")
        fh.write("pattern,probability\n")
        for idx, p in enumerate(probs):
            if skip_zero and p == 0.0:
                continue
            fh.write(f"{pattern_string(index_bits(idx, m))},{p:.17g}\n")


def read_distribution_csv(path) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`write_distribution_csv`; omitted patterns read back as 0."""
    meta = {}
    entries = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key] = val
            elif line and not line.startswith("pattern,"):
                pat, p = line.split(",")
                entries.append((pat, float(p)))
    m = int(meta["m"]) if "m" in meta else (len(entries[0][0]) if entries else 0)
    probs = np.zeros(1 << m)
    for pat, p in entries:
        probs[int(pat, 2) if pat else 0] = p
    return probs, meta


__all__ = [
    "ClickModel", "InvalidStateError", "KernelLimitError", "all_patterns", "as_pattern",
    "click_from_fock", "click_probability", "click_rates", "fock_distribution", "fock_oracle",
    "fock_patterns", "fock_probability", "full_distribution", "index_bits", "pattern_index",
    "pattern_string", "silent_probability", "state_space_dimension", "two_point_theory",
]
