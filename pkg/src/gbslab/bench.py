"""Kernel timing, exponential cost fits and the classical-cost estimate.

Timings are measured serially on one lane; no two kernels run at once. The
fitted model is ``log2 t(k) = slope * k + intercept``, so ``2 ** slope`` is
the cost ratio per added click.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from gbslab import _backend, kernels
from gbslab.samplers import make_rng
from gbslab.state import ExperimentSpec, build

# Anchors for the supercomputer cost model: one Torontonian takes ~0.03 s at
# 30 clicks and ~2 days at 50 clicks.
ANCHOR_K = (30, 50)
ANCHOR_SECONDS = (0.03, 2 * 86400.0)
TORONTONIANS_PER_SAMPLE = 100

# Shape of the recorded click histogram: mean 43 clicks with 3,097,810 events,
# and a single event at the maximum of 76 clicks.
DEVICE_MEAN_CLICKS = 43
DEVICE_PEAK_COUNTS = 3_097_810
DEVICE_MAX_CLICKS = 76


@dataclass
class TimingRecord:
    """Median wall time of one Torontonian at ``k`` clicks."""

    k: int
    wall_seconds: float
    value: float
    error_estimate: float
    repetitions: int
    min_seconds: float = 0.0
    max_seconds: float = 0.0

    def __post_init__(self):
        if self.wall_seconds <= 0:
            raise ValueError("wall_seconds must be positive")
        if self.repetitions < 3:
            raise ValueError("at least 3 repetitions are required")


def _kernel_for(Q_inv: np.ndarray, m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    clicked = np.sort(rng.choice(m, size=k, replace=False))
    return kernels.kernel_matrix(Q_inv, clicked)


def time_torontonian(k_range: Iterable[int], spec: ExperimentSpec | None = None, seed: int = 0,
                     repetitions: int = 3, method: str = "dfs") -> list[TimingRecord]:
    """Time the Torontonian on random k-click kernels drawn from ``spec``.

    ``spec`` defaults to the 100-mode device configuration. Each k gets its
    own clicked subset; the same kernel is timed ``repetitions`` times and the
    median is reported.

    Raises
    ------
    KernelLimitError
        Any k above the kernel limit, checked before timing starts.
    """
    from gbslab.reference import device_spec

    ks = [int(k) for k in k_range]
    spec = spec if spec is not None else device_spec(seed)
    for k in ks:
        if k > kernels.LIMITS.max_clicks:
            raise kernels.KernelLimitError(
                f"k={k} exceeds the kernel limit of {kernels.LIMITS.max_clicks} clicks",
                size=k, estimated_seconds=kernels.estimated_torontonian_seconds(k))
        if k > spec.m:
            raise ValueError(f"k={k} exceeds the spec's {spec.m} modes")
    state = build(spec)
    Q_inv = np.linalg.inv(state.Q)
    rng = make_rng(seed, 0xBE7C)
    records = []
    for k in ks:
        O = _kernel_for(Q_inv, spec.m, k, rng)
        times = []
        value = err = 0.0
        for _ in range(max(3, repetitions)):
            t0 = time.perf_counter()
            value, err = kernels.torontonian(O, method=method, return_error=True, workers=1)
            times.append(max(time.perf_counter() - t0, 1e-9))
        records.append(TimingRecord(k, statistics.median(times), float(value), float(err),
                                    len(times), min(times), max(times)))
    return records


@dataclass
class ScalingFit:
    """Least-squares line through log2(time) against k."""

    slope: float
    intercept: float
    r2: float
    slope_stderr: float = 0.0
    n: int = 0
    k_min: int = 0
    k_max: int = 0
    flags: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return 2.0 ** self.slope

    def ratio_interval(self, level: float = 0.95) -> tuple[float, float]:
        """Confidence band of the per-click ratio from the slope's t interval."""
        if self.n <= 2:
            return self.ratio, self.ratio
        half = stats.t.ppf(0.5 + level / 2, self.n - 2) * self.slope_stderr
        return 2.0 ** (self.slope - half), 2.0 ** (self.slope + half)

    def seconds(self, k) -> np.ndarray:
        return 2.0 ** (self.slope * np.asarray(k, dtype=float) + self.intercept)

    def extrapolated(self, k: int) -> bool:
        return not self.k_min <= k <= self.k_max


def fit_scaling(records: Sequence) -> ScalingFit:
    """Fit log2(seconds) = slope * k + intercept.

    ``records`` holds TimingRecords or ``(k, seconds)`` pairs. When every time
    is equal the slope is 0 and r² is set to 0 with a ``constant-times`` flag.

    Raises
    ------
    ValueError
        Fewer than 5 records or fewer than 2 distinct k.
    """
    pairs = [(r.k, r.wall_seconds) if isinstance(r, TimingRecord) else (r[0], r[1]) for r in records]
    if len(pairs) < 5:
        raise ValueError("fit_scaling needs at least 5 records")
    k = np.array([p[0] for p in pairs], dtype=float)
    t = np.array([p[1] for p in pairs], dtype=float)
    if np.ptp(k) == 0:
        raise ValueError("degenerate k range: all records share one k")
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    y = np.log2(t)
    res = stats.linregress(k, y)
    flags = []
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y**2))):
        slope, intercept, r2, se = 0.0, float(y.mean()), 0.0, 0.0
        flags.append("constant-times")
    else:
        slope, intercept, se = float(res.slope), float(res.intercept), float(res.stderr)
        r2 = float(res.rvalue ** 2)
    return ScalingFit(slope, intercept, r2, se, len(pairs), int(k.min()), int(k.max()), flags)


def anchored_model(k_points=ANCHOR_K, seconds=ANCHOR_SECONDS) -> ScalingFit:
    """Exponential model through two (k, seconds) anchors."""
    (k0, k1), (t0, t1) = k_points, seconds
    slope = (math.log2(t1) - math.log2(t0)) / (k1 - k0)
    return ScalingFit(slope, math.log2(t0) - slope * k0, 1.0, 0.0, 2, k0, k1)


def anchored_ratio() -> float:
    """Per-click cost ratio implied by the anchors, (2 days / 0.03 s) ** (1/20)."""
    return anchored_model().ratio


def normalize_hardware(fit: ScalingFit, k_ref: int = ANCHOR_K[0], seconds=ANCHOR_SECONDS[0]) -> ScalingFit:
    """Shift the intercept so the model predicts ``seconds`` at ``k_ref``; the slope is kept."""
    intercept = math.log2(seconds) - fit.slope * k_ref
    return ScalingFit(fit.slope, intercept, fit.r2, fit.slope_stderr, fit.n, fit.k_min, fit.k_max,
                      list(fit.flags))


@dataclass
class CostRow:
    N: int
    counts: float
    t_model_seconds: float
    cost_seconds: float
    cost_err: float
    extrapolated: bool


@dataclass
class CostTable:
    rows: list
    torontonians_per_sample: int

    @property
    def total(self) -> float:
        return float(math.fsum(r.cost_seconds for r in self.rows))

    @property
    def total_err(self) -> float:
        # independent Poisson counts add in quadrature
        return float(math.sqrt(math.fsum(r.cost_err ** 2 for r in self.rows)))

    @property
    def peak(self) -> int | None:
        if not self.rows:
            return None
        return max(self.rows, key=lambda r: r.cost_seconds).N

    def table(self):
        yield ["N", "counts", "t_model_seconds", "cost_seconds", "cost_err", "label"]
        for r in self.rows:
            yield [str(r.N), f"{r.counts:.10g}", f"{r.t_model_seconds:.10g}", f"{r.cost_seconds:.10g}",
                   f"{r.cost_err:.10g}", "EXTRAPOLATED" if r.extrapolated else "MEASURED"]


def _histogram_items(click_histogram) -> list:
    if isinstance(click_histogram, Mapping):
        items = [(int(n), float(c)) for n, c in click_histogram.items()]
    else:
        items = [(n, float(c)) for n, c in enumerate(np.asarray(click_histogram).ravel())]
    return sorted((n, c) for n, c in items if c > 0)


def estimate_classical_cost(click_histogram, fit: ScalingFit,
                            torontonians_per_sample: int = TORONTONIANS_PER_SAMPLE) -> CostTable:
    """cost(N) = counts(N) * torontonians_per_sample * t_model(N), per N and in total.

    ``click_histogram`` maps click number to counts, or is an array indexed by
    click number. Rows outside the fit's measured k range are labelled
    EXTRAPOLATED. The error bar on each row is sqrt(counts) times the per-event cost.
    """
    rows = []
    for n, c in _histogram_items(click_histogram):
        t = float(fit.seconds(n))
        per_event = torontonians_per_sample * t
        rows.append(CostRow(n, c, t, c * per_event, math.sqrt(c) * per_event, fit.extrapolated(n)))
    return CostTable(rows, torontonians_per_sample)


def device_like_histogram(mean: int = DEVICE_MEAN_CLICKS, peak_counts: int = DEVICE_PEAK_COUNTS,
                          max_clicks: int = DEVICE_MAX_CLICKS) -> dict:
    """Gaussian click histogram with ``peak_counts`` at ``mean`` and about one event at ``max_clicks``.

    The width follows from those two facts alone:
    peak * exp(-(max - mean)^2 / (2 s^2)) = 1.
    """
    s2 = (max_clicks - mean) ** 2 / (2 * math.log(peak_counts))
    hist = {}
    for n in range(0, max_clicks + 1):
        c = round(peak_counts * math.exp(-((n - mean) ** 2) / (2 * s2)))
        if c > 0:
            hist[n] = c
    hist[max_clicks] = max(hist.get(max_clicks, 0), 1)
    return hist


def compare_backends(k_range: Iterable[int] = range(6, 15, 2), seed: int = 0, repetitions: int = 3) -> list:
    """Median seconds of the compiled and pure-Python Torontonian on identical kernels.

    Returns rows ``(k, cython_seconds, python_seconds, speedup, max_rel_diff)``;
    the compiled column is NaN when the extension is not built.
    """
    from gbslab.reference import device_spec

    _, py = _backend.load("python")
    try:
        name, cy = _backend.load("cython")
    except ImportError:
        name, cy = "python", None
    if name != "cython":
        cy = None
    spec = device_spec(seed)
    Q_inv = np.linalg.inv(build(spec).Q)
    rng = make_rng(seed, 0xBAC0)
    rows = []
    for k in k_range:
        O = _kernel_for(Q_inv, spec.m, int(k), rng)
        M = kernels._interleave(np.eye(2 * k) - O)
        timings, values = {}, {}
        for label, impl in (("cython", cy), ("python", py)):
            if impl is None:
                timings[label], values[label] = float("nan"), float("nan")
                continue
            ts = []
            for _ in range(max(3, repetitions)):
                t0 = time.perf_counter()
                acc = kernels.CompensatedSum()
                acc.add(-1.0 if k & 1 else 1.0)
                for root in range(k):
                    acc.merge(*impl.torontonian_chunk(M, root))
                ts.append(time.perf_counter() - t0)
            timings[label], values[label] = statistics.median(ts), acc.value
        diff = abs(values["cython"] - values["python"]) / max(abs(values["python"]), 1e-300)
        rows.append((int(k), timings["cython"], timings["python"], timings["python"] / timings["cython"], diff))
    return rows
