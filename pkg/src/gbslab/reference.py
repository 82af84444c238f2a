"""Reference device configurations.

The per-source squeezing values of the real device are not available, so the
source list here is SYNTHETIC: r uniform in [1.0, 1.8] and phases uniform,
drawn from a fixed seed. Efficiencies are the measured averages of the
100-mode device: source collection 0.628, interferometer transmission 0.977,
detectors 0.81.
"""

from __future__ import annotations

import numpy as np

from gbslab.state import ExperimentSpec, SourceSpec
from gbslab.validation import haar_generate

ETA_COLLECT = 0.628
ETA_NETWORK = 0.977
ETA_DETECTOR = 0.81
SOURCE_PURITY = 0.938

DEVICE_MODES = 100
DEVICE_SOURCES = 25


def synthetic_sources(n: int, seed: int = 2020, r_range=(1.0, 1.8)) -> list:
    """(r, phi) pairs for ``n`` TMSS sources; synthetic, not measured values."""
    rng = np.random.Generator(np.random.PCG64(seed))
    r = rng.uniform(*r_range, size=n)
    phi = rng.uniform(0, 2 * np.pi, size=n)
    return list(zip(r.tolist(), phi.tolist()))


def tmss_sources(params, eta_collect=ETA_COLLECT, purity=SOURCE_PURITY) -> list:
    """TMSS sources on mode pairs (2s, 2s+1): the H and V modes of spatial mode s."""
    return [SourceSpec("TMSS", (2 * s, 2 * s + 1), r=r, phi=phi, eta_collect=eta_collect, purity=purity)
            for s, (r, phi) in enumerate(params)]


def device_spec(seed: int = 2020) -> ExperimentSpec:
    """Full-size 25-source, 100-mode configuration (far beyond exact simulation)."""
    sources = tmss_sources(synthetic_sources(DEVICE_SOURCES, seed))
    return ExperimentSpec(sources, haar_generate(DEVICE_MODES, seed), ETA_NETWORK, ETA_DETECTOR)


def reference_spec(m: int, n_sources: int | None = None, seed: int = 2020,
                   r_range=(1.0, 1.8), lossy: bool = True) -> ExperimentSpec:
    """Desk-scale spec: ``n_sources`` TMSS into a Haar m-mode interferometer.

    The default ``m // 4`` sources fill half the input modes, as 25 pair
    sources fill 50 of the device's 100 modes; with the device losses this
    gives roughly the device's click density.
    """
    n_sources = max(1, m // 4) if n_sources is None else n_sources
    params = synthetic_sources(n_sources, seed, r_range)
    if lossy:
        return ExperimentSpec(tmss_sources(params), haar_generate(m, seed + m), ETA_NETWORK, ETA_DETECTOR)
    return ExperimentSpec(tmss_sources(params, eta_collect=1.0), haar_generate(m, seed + m))


def easy_regime_spec(m: int = 6, config: int = 0, r: float = 0.4, seed: int = 2020) -> ExperimentSpec:
    """Three TMSS sources, the low-click regime used for full-distribution checks.

    ``config`` picks one of many random interferometers, so a list of configs
    reproduces a multi-configuration study.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(config,))))
    phis = rng.uniform(0, 2 * np.pi, size=3)
    params = [(r, float(p)) for p in phis]
    return ExperimentSpec(tmss_sources(params), haar_generate(m, seed * 1000 + config),
                          ETA_NETWORK, ETA_DETECTOR)
