"""Click-pattern samplers for the ideal device and its null hypotheses."""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from gbslab import __version__, _backend, mocks
from gbslab.kernels import LIMITS, KernelLimitError
from gbslab.probability import ClickModel, as_pattern, full_distribution, pattern_string
from gbslab.state import ExperimentSpec, GaussianState, build, reduce

MODELS = ("IDEAL_ENUM", "IDEAL_CHAIN", "IDEAL_MCMC", "THERMAL", "DISTINGUISHABLE", "UNIFORM")
RNG_NAME = "PCG64"


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Seeded PCG64 generator; ``stream`` selects an independent substream.

    Substreams come from SeedSequence spawn keys, a fixed hash of (seed, stream).
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass
class SampleSet:
    """Recorded click patterns in draw order plus provenance.

    ``meta`` holds at least ``model``, ``seed`` and ``spec_hash``;
    ``wall_time`` is kept in memory only and never written to disk.
    """

    m: int
    patterns: np.ndarray
    meta: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def __post_init__(self):
        self.patterns = np.asarray(self.patterns, dtype=np.uint8).reshape(-1, self.m)
        model = self.meta.get("model")
        if model is not None and model not in MODELS:
            raise ValueError(f"unknown model tag {model!r}")

    def __len__(self):
        return self.patterns.shape[0]

    @property
    def records(self) -> list:
        """(pattern string, count) pairs sorted by pattern."""
        counts = Counter(pattern_string(p) for p in self.patterns)
        return sorted(counts.items())

    @property
    def click_numbers(self) -> np.ndarray:
        return self.patterns.sum(axis=1).astype(int)

    def indices(self) -> np.ndarray:
        weights = 1 << np.arange(self.m - 1, -1, -1, dtype=np.int64)
        return self.patterns.astype(np.int64) @ weights

    def empirical(self) -> np.ndarray:
        """Empirical distribution over all 2^m patterns (index order)."""
        counts = np.bincount(self.indices(), minlength=1 << self.m)
        return counts / max(len(self), 1)

    def in_band(self, lo: int, hi: int) -> "SampleSet":
        keep = (self.click_numbers >= lo) & (self.click_numbers <= hi)
        return SampleSet(self.m, self.patterns[keep], dict(self.meta, band=f"{lo}-{hi}"))

    def write(self, path) -> None:
        header = {"model": self.meta.get("model", ""), "seed": self.meta.get("seed", ""),
                  "m": self.m, "spec_hash": self.meta.get("spec_hash", ""),
                  "version": self.meta.get("version", __version__), "n": len(self)}
        extra = {k: v for k, v in sorted(self.meta.items()) if k not in header}
        with open(path, "w", newline="\n") as fh:
            for key, val in {**header, **extra}.items():
                fh.write(f"#{key}={val}\n")
            for p in self.patterns:
                fh.write(pattern_string(p) + "\n")

    @classmethod
    def read(cls, path) -> "SampleSet":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, val = line[1:].partition("=")
                    meta[key] = val
                elif line:
                    rows.append(as_pattern(line))
        m = int(meta["m"])
        for key in ("seed", "m", "n"):
            if key in meta and meta[key] != "":
                meta[key] = int(meta[key])
        meta.pop("m", None)
        meta.pop("n", None)
        return cls(m, np.array(rows, dtype=np.uint8).reshape(-1, m), meta)


def _finish(m, patterns, model, seed, spec_hash, t0, **extra):
    meta = {"model": model, "seed": seed, "spec_hash": spec_hash, "version": __version__}
    meta.update(extra)
    return SampleSet(m, patterns, meta, wall_time=time.perf_counter() - t0)


def _index_patterns(idx: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def enumerate_sampler(state: GaussianState, n_samples: int, seed: int, *,
                      spec_hash: str = "") -> SampleSet:
    """Inverse-CDF sampling from the exact full distribution (m <= 14)."""
    t0 = time.perf_counter()
    probs = np.clip(full_distribution(state), 0.0, None)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = make_rng(seed)
    idx = np.searchsorted(cdf, rng.random(n_samples), side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    return _finish(state.m, _index_patterns(idx, state.m), "IDEAL_ENUM", seed,
                   spec_hash or state.digest(), t0)


def chain_rule_sampler(state: GaussianState, n_samples: int, seed: int, *,
                       spec_hash: str = "") -> SampleSet:
    """Exact sampling mode by mode from prefix marginals.

    The marginal of a prefix pattern on modes 0..t is the click probability of
    the state reduced to those modes. Samples sharing a prefix share one
    conditional, so kernel work scales with the number of distinct prefixes.
    """
    t0 = time.perf_counter()
    m = state.m
    rng = make_rng(seed)
    models = [ClickModel(reduce(state, range(t + 1))) for t in range(m)]
    cache = {(): 1.0}

    def prefix_prob(prefix):
        p = cache.get(prefix)
        if p is None:
            p = max(models[len(prefix) - 1].probability(prefix), 0.0)
            cache[prefix] = p
        return p

    prefixes = [()] * n_samples
    alive = np.ones(n_samples, dtype=bool)
    worst = 0.0
    aborted = []
    for t in range(m):
        u = rng.random(n_samples)
        groups = {}
        for s in np.flatnonzero(alive):
            groups.setdefault(prefixes[s], []).append(s)
        for prefix, members in groups.items():
            try:
                p0 = prefix_prob(prefix + (0,))
                p1 = prefix_prob(prefix + (1,))
            except KernelLimitError as exc:
                aborted.append(f"{pattern_string(prefix)}: {exc}")
                alive[members] = False
                continue
            parent = prefix_prob(prefix)
            if parent > 0:
                worst = max(worst, abs(p0 + p1 - parent) / parent)
            cond = p1 / (p0 + p1) if p0 + p1 > 0 else 0.0
            if not -1e-9 <= cond <= 1 + 1e-9:
                raise ArithmeticError(f"conditional {cond} outside [0, 1] at prefix {prefix}")
            for s in members:
                prefixes[s] = prefix + ((1,) if u[s] < cond else (0,))
    patterns = np.array([prefixes[s] for s in np.flatnonzero(alive)], dtype=np.uint8).reshape(-1, m)
    extra = {"torontonian_evaluations": len(cache) - 1,
             "max_conditional_normalization_error": f"{worst:.3e}"}
    if aborted:
        extra["aborted"] = int((~alive).sum())
    out = _finish(m, patterns, "IDEAL_CHAIN", seed, spec_hash or state.digest(), t0, **extra)
    out.diagnostics = aborted
    return out


def mcmc_sampler(state: GaussianState, n_samples: int, seed: int, burn_in: int = 1000,
                 thinning: int = 100, *, proposal: np.ndarray | None = None,
                 spec: ExperimentSpec | None = None, chains: int = 1, block: int = 1 << 20,
                 spec_hash: str = "") -> SampleSet:
    """Independence Metropolis sampler over click patterns.

    The proposal is the exact pmf of the distinguishable-photon model of
    ``spec`` unless ``proposal`` (a pmf over all 2^m patterns) is given. Each
    chain step evaluates the target at one candidate pattern; values are cached
    so repeated candidates cost nothing, but every step is counted.
    """
    t0 = time.perf_counter()
    m = state.m
    if proposal is None:
        if spec is None:
            raise ValueError("mcmc_sampler needs a proposal pmf or a spec")
        proposal = mocks.distinguishable_distribution(spec)
    q = np.asarray(proposal, dtype=float)
    if q.shape != (1 << m,):
        raise ValueError("proposal must be a pmf over all 2^m patterns")
    q = q / q.sum()
    qcdf = np.cumsum(q)
    qcdf /= qcdf[-1]
    model = ClickModel(state)
    weights = np.full(1 << m, np.nan)

    def fill(idx):
        todo = np.unique(idx[np.isnan(weights[idx])])
        for i in todo:
            p = max(model.probability(_index_patterns(np.array([i]), m)[0]), 0.0)
            weights[i] = p / q[i] if q[i] > 0 else 0.0

    per_chain = [n_samples // chains + (c < n_samples % chains) for c in range(chains)]
    kept_all = []
    steps_total = accepted_total = 0
    for c, n_keep in enumerate(per_chain):
        rng = make_rng(seed, c)
        steps = burn_in + n_keep * thinning
        cur_idx, cur_w = -1, 0.0
        kept = []
        done = 0
        while done < steps:
            size = min(block, steps - done)
            props = np.searchsorted(qcdf, rng.random(size), side="right")
            props = np.minimum(props, len(qcdf) - 1)
            u = rng.random(size)
            fill(props)
            w_prop = np.ascontiguousarray(weights[props])
            acc = _mh_chain(w_prop, u, cur_w)
            accepted_total += int(acc.sum())
            # state after each step: last accepted proposal so far
            pos = np.where(acc.astype(bool), np.arange(size), -1)
            pos = np.maximum.accumulate(pos)
            states = np.where(pos >= 0, props[np.maximum(pos, 0)], cur_idx)
            step_no = done + np.arange(1, size + 1)
            sel = (step_no > burn_in) & ((step_no - burn_in) % thinning == 0)
            kept.append(states[sel])
            if pos[-1] >= 0:
                cur_idx = int(props[pos[-1]])
                cur_w = float(weights[cur_idx])
            done += size
        kept = np.concatenate(kept) if kept else np.zeros(0, dtype=np.int64)
        if np.any(kept < 0):
            raise ArithmeticError("chain never accepted a positive-probability state")
        kept_all.append(kept)
        steps_total += steps
    idx = np.concatenate(kept_all) if kept_all else np.zeros(0, dtype=np.int64)
    extra = {
        "burn_in": burn_in,
        "thinning": thinning,
        "chains": chains,
        "acceptance_rate": f"{accepted_total / max(steps_total, 1):.6f}",
        "torontonians_per_sample": f"{steps_total / max(n_samples, 1):.3f}",
        "unique_torontonian_evaluations": model.evaluations,
    }
    return _finish(m, _index_patterns(idx, m), "IDEAL_MCMC", seed,
                   spec_hash or state.digest(), t0, **extra)


def _mh_chain(w_prop, u, w0):
    return _backend.impl.mh_chain(w_prop, np.ascontiguousarray(u), float(w0))


def thermal_mock_sampler(spec: ExperimentSpec, n_samples: int, seed: int) -> SampleSet:
    t0 = time.perf_counter()
    pats = mocks.thermal_mock_sampler(spec, n_samples, make_rng(seed))
    return _finish(spec.m, pats, "THERMAL", seed, spec.digest(), t0)


def distinguishable_mock_sampler(spec: ExperimentSpec, n_samples: int, seed: int) -> SampleSet:
    t0 = time.perf_counter()
    pats = mocks.distinguishable_mock_sampler(spec, n_samples, make_rng(seed))
    return _finish(spec.m, pats, "DISTINGUISHABLE", seed, spec.digest(), t0)


def uniform_sampler(m: int, n_clicks: int, n_samples: int, seed: int, *,
                    spec_hash: str = "") -> SampleSet:
    t0 = time.perf_counter()
    pats = mocks.uniform_sampler(m, n_clicks, n_samples, make_rng(seed))
    return _finish(m, pats, "UNIFORM", seed, spec_hash, t0, n_clicks=n_clicks)


def ideal_sampler(spec: ExperimentSpec, n_samples: int, seed: int, method: str = "auto") -> SampleSet:
    """Ideal samples of ``spec`` by the cheapest exact route available."""
    state = build(spec)
    if method == "auto":
        method = "enum" if state.m <= 12 else "chain"
    if method == "enum":
        return enumerate_sampler(state, n_samples, seed, spec_hash=spec.digest())
    if method == "chain":
        return chain_rule_sampler(state, n_samples, seed, spec_hash=spec.digest())
    if method == "mcmc":
        return mcmc_sampler(state, n_samples, seed, spec=spec, spec_hash=spec.digest())
    raise ValueError(f"unknown ideal sampling method {method!r}")


def expected_clicks_ok(state: GaussianState) -> bool:
    """Whether typical patterns stay within the kernel click limit."""
    from gbslab.probability import click_rates

    rates = click_rates(state)
    mean = rates.sum()
    sd = math.sqrt(float((rates * (1 - rates)).sum()))
    return mean + 3 * sd <= LIMITS.max_clicks
