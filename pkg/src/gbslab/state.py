"""Zero-mean Gaussian states in the creation/annihilation basis.

A state of ``m`` modes is stored as the 2m x 2m symmetrized second-moment
matrix ``sigma`` in the operator ordering (a_1..a_m, a_1^dag..a_m^dag), so
that vacuum is ``I/2`` and ``Q = sigma + I/2`` is the Husimi matrix.

Squeezing conventions: a single-mode squeezer has ``<aa> = -e^{i phi} sinh(2r)/2``;
a two-mode squeezer has ``<a_a a_b> = +e^{i phi} sinh(2r)/2``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-8

SOURCE_KINDS = ("SMSS", "TMSS", "THERMAL", "VACUUM")


class InvalidStateError(ValueError):
    """A covariance matrix violates a Gaussian-state invariant."""


def _block_swap(m: int) -> np.ndarray:
    X = np.zeros((2 * m, 2 * m))
    X[:m, m:] = np.eye(m)
    X[m:, :m] = np.eye(m)
    return X


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Immutable zero-mean Gaussian state.

    Parameters
    ----------
    sigma : ndarray
        2m x 2m complex covariance matrix.
    validate : bool
        Check all invariants on construction.
    """

    sigma: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=complex)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] % 2:
            raise InvalidStateError(f"covariance must be 2m x 2m, got shape {sigma.shape}")
        if sigma.shape[0] == 0:
            raise InvalidStateError("a state needs at least one mode")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        if self.validate:
            self.check()

    @property
    def m(self) -> int:
        return self.sigma.shape[0] // 2

    @property
    def Q(self) -> np.ndarray:
        return self.sigma + np.eye(2 * self.m) / 2

    def check(self) -> None:
        """Raise :class:`InvalidStateError` if any invariant fails."""
        s = self.sigma
        dev = np.max(np.abs(s - s.conj().T))
        if dev > HERMITIAN_TOL:
            raise InvalidStateError(f"covariance not Hermitian (max deviation {dev:.3e})")
        X = _block_swap(self.m)
        dev = np.max(np.abs(s - X @ s.conj() @ X))
        if dev > HERMITIAN_TOL:
            raise InvalidStateError(f"covariance breaks conjugation symmetry ({dev:.3e})")
        try:
            np.linalg.cholesky(self.Q)
        except np.linalg.LinAlgError as exc:
            raise InvalidStateError("Q = sigma + I/2 is not positive definite") from exc

    def mode_indices(self, modes: Sequence[int]) -> np.ndarray:
        """Row/column indices (i, i+m) of ``modes`` in sigma, annihilation block first."""
        modes = np.asarray(modes, dtype=int)
        return np.concatenate([modes, modes + self.m])

    def occupied(self, mode: int) -> bool:
        idx = self.mode_indices([mode])
        block = self.sigma[np.ix_(idx, idx)]
        if not np.allclose(block, np.eye(2) / 2, atol=HERMITIAN_TOL):
            return True
        others = np.setdiff1d(np.arange(2 * self.m), idx)
        return bool(np.any(np.abs(self.sigma[np.ix_(idx, others)]) > HERMITIAN_TOL))

    def is_pure(self, tol: float = 1e-9) -> bool:
        # pure zero-mean states have O = I - Q^-1 with a vanishing upper-left block
        O = np.eye(2 * self.m) - np.linalg.inv(self.Q)
        return bool(np.max(np.abs(O[: self.m, : self.m])) < tol)

    def mean_photons(self) -> np.ndarray:
        return np.real(np.diag(self.sigma)[: self.m]) - 0.5

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.sigma).tobytes()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, GaussianState):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.sigma, other.sigma)

    def allclose(self, other: "GaussianState", atol: float = 1e-10) -> bool:
        return self.m == other.m and np.allclose(self.sigma, other.sigma, atol=atol, rtol=0)


def vacuum(m: int) -> GaussianState:
    if m < 1:
        raise ValueError("vacuum needs m >= 1")
    return GaussianState(np.eye(2 * m) / 2)


def _check_mode(state: GaussianState, mode: int) -> int:
    if not 0 <= mode < state.m:
        raise IndexError(f"mode {mode} out of range for {state.m} modes")
    if state.occupied(mode):
        raise ValueError(f"mode {mode} is already occupied")
    return int(mode)


def with_smss(state: GaussianState, mode: int, r: float, phi: float = 0.0) -> GaussianState:
    """Place a single-mode squeezed vacuum on an empty ``mode``."""
    mode = _check_mode(state, mode)
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    m = state.m
    s = np.array(state.sigma)
    s[mode, mode] = s[mode + m, mode + m] = np.cosh(2 * r) / 2
    aa = -np.exp(1j * phi) * np.sinh(2 * r) / 2
    s[mode, mode + m] = aa
    s[mode + m, mode] = np.conj(aa)
    return GaussianState(s)


def with_tmss(state: GaussianState, mode_a: int, mode_b: int, r: float, phi: float = 0.0) -> GaussianState:
    """Place a two-mode squeezed vacuum on the empty pair (mode_a, mode_b)."""
    if mode_a == mode_b:
        raise ValueError("two-mode squeezing needs two distinct modes")
    a = _check_mode(state, mode_a)
    b = _check_mode(state, mode_b)
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    m = state.m
    s = np.array(state.sigma)
    for i in (a, b):
        s[i, i] = s[i + m, i + m] = np.cosh(2 * r) / 2
    ab = np.exp(1j * phi) * np.sinh(2 * r) / 2
    s[a, b + m] = s[b, a + m] = ab
    s[b + m, a] = s[a + m, b] = np.conj(ab)
    return GaussianState(s)


def with_thermal(state: GaussianState, mode: int, mean_photons: float) -> GaussianState:
    mode = _check_mode(state, mode)
    if mean_photons < 0:
        raise ValueError("mean photon number must be >= 0")
    m = state.m
    s = np.array(state.sigma)
    s[mode, mode] = s[mode + m, mode + m] = mean_photons + 0.5
    return GaussianState(s)


def check_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"unitary must be square, got shape {U.shape}")
    dev = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0]))) if U.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max |UU^dag - I| = {dev:.3e})")
    return U


def apply_unitary(state: GaussianState, U: np.ndarray) -> GaussianState:
    U = check_unitary(U)
    if U.shape[0] != state.m:
        raise ValueError(f"unitary acts on {U.shape[0]} modes, state has {state.m}")
    m = state.m
    big = np.zeros((2 * m, 2 * m), dtype=complex)
    big[:m, :m] = U
    big[m:, m:] = U.conj()
    s = big @ state.sigma @ big.conj().T
    return GaussianState((s + s.conj().T) / 2)


def apply_loss(state: GaussianState, etas) -> GaussianState:
    """Pure-loss channel with per-mode transmissions (scalar broadcasts)."""
    etas = np.broadcast_to(np.asarray(etas, dtype=float), (state.m,))
    if np.any(etas < 0) or np.any(etas > 1):
        raise ValueError("transmissions must lie in [0, 1]")
    d = np.sqrt(np.concatenate([etas, etas]))
    s = d[:, None] * state.sigma * d[None, :] + np.diag(1 - d**2) / 2
    return GaussianState(s)


def reduce(state: GaussianState, subset: Sequence[int]) -> GaussianState:
    subset = [int(i) for i in subset]
    if not subset:
        raise ValueError("subset must be nonempty")
    if len(set(subset)) != len(subset):
        raise ValueError("subset has duplicate modes")
    if min(subset) < 0 or max(subset) >= state.m:
        raise IndexError("subset index out of range")
    idx = state.mode_indices(subset)
    return GaussianState(state.sigma[np.ix_(idx, idx)])


@dataclass(frozen=True)
class SourceSpec:
    """One light source feeding the interferometer.

    ``modes`` lists the interferometer input modes the source occupies (two for
    TMSS, one otherwise). ``purity`` is carried as metadata only.
    """

    kind: str
    modes: tuple
    r: float = 0.0
    phi: float = 0.0
    mean_photons: float = 0.0
    eta_collect: float = 1.0
    purity: float = 1.0

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "modes", tuple(int(i) for i in self.modes))
        if kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.r < 0:
            raise ValueError("squeezing parameter must be >= 0")
        if self.mean_photons < 0:
            raise ValueError("mean photon number must be >= 0")
        for name in ("eta_collect", "purity"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        need = 2 if kind == "TMSS" else 1
        if len(self.modes) != need:
            raise ValueError(f"{kind} source occupies {need} mode(s), got {self.modes}")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("TMSS arms must be distinct modes")

    def mean_photons_per_mode(self) -> float:
        """Mean photon number in each occupied mode before collection loss."""
        if self.kind == "THERMAL":
            return self.mean_photons
        if self.kind == "VACUUM":
            return 0.0
        return float(np.sinh(self.r) ** 2)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Sources, interferometer and loss budget of one device."""

    sources: tuple
    unitary: np.ndarray
    eta_network: np.ndarray = 1.0
    eta_detector: np.ndarray = 1.0

    def __post_init__(self):
        U = check_unitary(self.unitary)
        U.setflags(write=False)
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "sources", tuple(self.sources))
        m = U.shape[0]
        for name in ("eta_network", "eta_detector"):
            eta = np.array(np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (m,)))
            if np.any(eta < 0) or np.any(eta > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
            eta.setflags(write=False)
            object.__setattr__(self, name, eta)
        seen = set()
        for src in self.sources:
            for mode in src.modes:
                if not 0 <= mode < m:
                    raise ValueError(f"source mode {mode} out of range for {m} modes")
                if mode in seen:
                    raise ValueError(f"mode {mode} assigned to more than one source arm")
                seen.add(mode)

    @property
    def m(self) -> int:
        return self.unitary.shape[0]

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def mode_map(self) -> dict:
        return {i: mode for i, src in enumerate(self.sources) for mode in src.modes}

    def input_etas(self) -> np.ndarray:
        eta = np.ones(self.m)
        for src in self.sources:
            for mode in src.modes:
                eta[mode] = src.eta_collect
        return eta

    def output_etas(self) -> np.ndarray:
        return self.eta_network * self.eta_detector

    def is_lossless(self) -> bool:
        return bool(np.all(self.input_etas() == 1) and np.all(self.output_etas() == 1))

    def digest(self) -> str:
        """Stable hash of every physical parameter."""
        h = hashlib.sha256()
        for src in self.sources:
            h.update(repr((src.kind, src.modes, float(src.r), float(src.phi), float(src.mean_photons),
                           float(src.eta_collect), float(src.purity))).encode())
        for arr in (self.unitary, self.eta_network, self.eta_detector):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentSpec":
        fields = dict(sources=self.sources, unitary=self.unitary,
                      eta_network=self.eta_network, eta_detector=self.eta_detector)
        fields.update(changes)
        return ExperimentSpec(**fields)


def prepare_sources(spec: ExperimentSpec) -> GaussianState:
    """Input state with every source placed, before any loss."""
    state = vacuum(spec.m)
    for src in spec.sources:
        if src.kind == "SMSS":
            state = with_smss(state, src.modes[0], src.r, src.phi)
        elif src.kind == "TMSS":
            state = with_tmss(state, src.modes[0], src.modes[1], src.r, src.phi)
        elif src.kind == "THERMAL":
            state = with_thermal(state, src.modes[0], src.mean_photons)
    return state


def build(spec: ExperimentSpec) -> GaussianState:
    """Final pre-detection state.

    Order: sources, per-source collection loss, interferometer, network loss,
    detector loss.
    """
    state = prepare_sources(spec)
    state = apply_loss(state, spec.input_etas())
    state = apply_unitary(state, spec.unitary)
    state = apply_loss(state, spec.eta_network)
    return apply_loss(state, spec.eta_detector)


def tmss_spec(m: int, r, unitary=None, phi=0.0, eta_collect=1.0, eta_network=1.0,
              eta_detector=1.0) -> ExperimentSpec:
    """Spec with TMSS sources on consecutive mode pairs (0,1), (2,3), ...

    This is the H/V pairing of the hybrid spatial-polarization encoding.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    phi = np.broadcast_to(np.asarray(phi, dtype=float), r.shape)
    if 2 * len(r) > m:
        raise ValueError(f"{len(r)} TMSS sources need {2 * len(r)} modes, have {m}")
    sources = [SourceSpec("TMSS", (2 * i, 2 * i + 1), r=float(ri), phi=float(pi), eta_collect=eta_collect)
               for i, (ri, pi) in enumerate(zip(r, phi))]
    U = np.eye(m) if unitary is None else unitary
    return ExperimentSpec(sources, U, eta_network, eta_detector)
