"""Classical null-hypothesis models of the device.

Nothing here may import the ideal probability engine (``gbslab.probability``
or ``gbslab.kernels``); the hypotheses must stay independent of the model they
are tested against.
"""

from __future__ import annotations

import math

import numpy as np

from gbslab.state import ExperimentSpec, SourceSpec


def photon_routing(spec: ExperimentSpec) -> np.ndarray:
    """W[i, j]: probability that a photon born in input mode i clicks output j.

    Includes collection loss on the input side and network/detector loss on
    the output side; rows sum to at most 1.
    """
    U = spec.unitary
    W = (np.abs(U) ** 2).T * spec.input_etas()[:, None] * spec.output_etas()[None, :]
    return W


def thermal_equivalent_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """Replace every squeezed source by thermal light of equal mean photon number per mode."""
    sources = []
    for src in spec.sources:
        if src.kind in ("SMSS", "TMSS"):
            n = src.mean_photons_per_mode()
            for mode in src.modes:
                sources.append(SourceSpec("THERMAL", (mode,), mean_photons=n,
                                          eta_collect=src.eta_collect, purity=src.purity))
        else:
            sources.append(src)
    return spec.replace(sources=tuple(sources))


def thermal_mock_sampler(spec: ExperimentSpec, n_samples: int, rng: np.random.Generator,
                         batch: int = 65536) -> np.ndarray:
    """Click patterns of thermal light, drawn through its coherent-state decomposition.

    Each input carries a circular Gaussian field of variance equal to its
    (collected) mean photon number; fields propagate classically through U and
    detector j clicks with probability 1 - exp(-eta_j |beta_j|^2).
    """
    m = spec.m
    nbar = np.zeros(m)
    for src in thermal_equivalent_spec(spec).sources:
        for mode in src.modes:
            nbar[mode] = src.mean_photons * src.eta_collect
    scale = np.sqrt(nbar / 2)
    U = spec.unitary
    eta_out = spec.output_etas()
    out = np.empty((n_samples, m), dtype=np.uint8)
    for start in range(0, n_samples, batch):
        size = min(batch, n_samples - start)
        alpha = scale * (rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m)))
        beta = alpha @ U.T
        p_click = 1.0 - np.exp(-eta_out * np.abs(beta) ** 2)
        out[start:start + size] = rng.random((size, m)) < p_click
    return out


def _pair_counts(src: SourceSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """Photons emitted into each of the source's modes, shape (size, len(src.modes))."""
    if src.kind == "VACUUM" or (src.kind != "THERMAL" and src.r == 0):
        return np.zeros((size, len(src.modes)), dtype=np.int64)
    if src.kind == "TMSS":
        t2 = math.tanh(src.r) ** 2
        n = rng.geometric(1.0 - t2, size) - 1
        return np.stack([n, n], axis=1)
    if src.kind == "SMSS":
        t2 = math.tanh(src.r) ** 2
        n = rng.negative_binomial(0.5, 1.0 - t2, size)
        return (2 * n)[:, None]
    if src.mean_photons == 0:
        return np.zeros((size, 1), dtype=np.int64)
    n = rng.geometric(1.0 / (1.0 + src.mean_photons), size) - 1
    return n[:, None]


def distinguishable_mock_sampler(spec: ExperimentSpec, n_samples: int,
                                 rng: np.random.Generator) -> np.ndarray:
    """Click patterns when photons from different sources never interfere.

    Pair numbers follow each source's photon statistics; every photon is then
    routed on its own with probabilities |U_ji|^2 and survives losses
    independently.
    """
    m = spec.m
    W = photon_routing(spec)
    hits = np.zeros((n_samples, m), dtype=np.int64)
    for src in spec.sources:
        counts = _pair_counts(src, n_samples, rng)
        for col, mode in enumerate(src.modes):
            pvals = np.append(W[mode], max(0.0, 1.0 - W[mode].sum()))
            pvals = pvals / pvals.sum()
            hits += rng.multinomial(counts[:, col], pvals)[:, :m]
    return (hits > 0).astype(np.uint8)


def uniform_sampler(m: int, n_clicks: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Patterns uniform over the C(m, n_clicks) outcomes with exactly ``n_clicks`` clicks."""
    if not 0 <= n_clicks <= m:
        raise ValueError(f"n_clicks must lie in [0, {m}]")
    out = np.zeros((n_samples, m), dtype=np.uint8)
    if n_clicks and n_samples:
        keys = rng.random((n_samples, m))
        chosen = np.argsort(keys, axis=1)[:, :n_clicks]
        np.put_along_axis(out, chosen, 1, axis=1)
    return out


def _silent_generating(spec: ExperimentSpec, silent: np.ndarray) -> np.ndarray:
    """P(all outputs flagged in each row of ``silent`` stay dark) under the distinguishable model."""
    W = photon_routing(spec)
    w = silent.astype(float) @ W.T
    x = 1.0 - w
    p = np.ones(silent.shape[0])
    for src in spec.sources:
        if src.kind == "TMSS":
            t2 = math.tanh(src.r) ** 2
            a, b = src.modes
            p *= (1 - t2) / (1 - t2 * x[:, a] * x[:, b])
        elif src.kind == "SMSS":
            t2 = math.tanh(src.r) ** 2
            a = src.modes[0]
            p *= np.sqrt((1 - t2) / (1 - t2 * x[:, a] ** 2))
        elif src.kind == "THERMAL":
            p /= 1 + src.mean_photons * w[:, src.modes[0]]
    return p


def distinguishable_distribution(spec: ExperimentSpec, max_modes: int = 20) -> np.ndarray:
    """Exact click-pattern pmf of the distinguishable model, in pattern-index order."""
    m = spec.m
    if m > max_modes:
        raise ValueError(f"exact mock distribution limited to {max_modes} modes")
    idx = np.arange(1 << m)
    # bit of mode i in an index is 1 << (m-1-i); a set bit marks a mode allowed to click
    bits = 1 << np.arange(m - 1, -1, -1)
    F = _silent_generating(spec, (idx[:, None] & bits[None, :]) == 0)
    for i in range(m):
        bit = 1 << i
        sel = idx[(idx & bit) != 0]
        F[sel] -= F[sel ^ bit]
    return np.clip(F, 0.0, None)
