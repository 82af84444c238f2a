"""Command-line entry point: ``gbslab {simulate,sample,validate,bench,haar,report}``.

Exit codes: 0 success, 2 configuration error, 3 scale refusal, 4 numerical
validity failure. Every file written carries the spec hash, seed and package
version in ``#key=value`` header lines.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys

import numpy as np

from gbslab import __version__, bench, kernels
from gbslab.config import ConfigError, RunOptions, resolve_spec, write_unitary
from gbslab.state import InvalidStateError

log = logging.getLogger("gbslab")

EXIT_OK, EXIT_CONFIG, EXIT_SCALE, EXIT_NUMERIC = 0, 2, 3, 4
MODEL_NAMES = ("ideal", "thermal", "distinguishable", "uniform")
REPORT_INPUTS = ("report.csv", "cij_hist.csv", "click_hist.csv", "hog_trajectory.csv", "prob_curve.csv",
                 "bench.csv", "fit.csv", "cost.csv", "cost_anchored.csv", "haar_report.csv", "unitary.csv")


class NumericalError(RuntimeError):
    """A computed result failed its own validity check."""


def _band(text: str | None):
    if text is None:
        return None
    try:
        lo, _, hi = text.partition("-")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise ConfigError(f"--clicks-band: expected LO-HI, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise ConfigError(f"--clicks-band: invalid range {text!r}")
    return lo, hi


def _expand_specs(names: list) -> list:
    """Spec arguments with ``easy:A-B`` ranges expanded into one entry per config."""
    out = []
    for name in names:
        kind, _, arg = name.partition(":")
        if kind == "easy" and "-" in arg and not os.path.exists(name):
            a, _, b = arg.partition("-")
            try:
                out.extend(f"easy:{k}" for k in range(int(a), int(b) + 1))
            except ValueError:
                raise ConfigError(f"bad config range {name!r}") from None
        else:
            out.append(name)
    return out


def _load(args) -> list:
    if not args.spec:
        raise ConfigError("--spec is required")
    return [(name, *resolve_spec(name)) for name in _expand_specs(args.spec)]


def _apply_kernel_options(args, opts: RunOptions) -> None:
    if "max_clicks" in opts.kernel:
        kernels.LIMITS.max_clicks = int(opts.kernel["max_clicks"])
    # chunks are rooted at each clicked mode, so the partition count only sets parallelism
    for key in ("chunks", "workers"):
        if key in opts.kernel:
            kernels.LIMITS.workers = max(1, int(opts.kernel[key]))
    if args.kernel_max_clicks is not None:
        kernels.LIMITS.max_clicks = args.kernel_max_clicks
    if args.workers is not None:
        kernels.LIMITS.workers = max(1, args.workers)


def _header(spec_hash: str, seed, **extra) -> dict:
    return {"spec_hash": spec_hash, "seed": seed, "version": __version__, **extra}


# --- commands -----------------------------------------------------------------------


def cmd_simulate(args) -> int:
    from gbslab.probability import full_distribution, write_distribution_csv
    from gbslab.state import build
    from gbslab.validation import write_table

    loaded = _load(args)
    os.makedirs(args.out, exist_ok=True)
    for i, (name, spec, opts) in enumerate(loaded):
        _apply_kernel_options(args, opts)
        state = build(spec)
        probs = full_distribution(state)
        total = float(np.sum(probs))
        suffix = "" if len(loaded) == 1 else f"_{i:02d}"
        head = _header(spec.digest(), args.seed, m=spec.m, spec=name)
        write_distribution_csv(os.path.join(args.out, f"distribution{suffix}.csv"), probs, spec.m,
                               head, skip_zero=True)
        rows = [["name", "value"], ["total", f"{total:.17g}"], ["deviation", f"{abs(total - 1):.3e}"],
                ["min_probability", f"{float(probs.min()):.17g}"], ["patterns", str(len(probs))]]
        write_table(os.path.join(args.out, f"normalization{suffix}.csv"), rows, head)
        print(f"{name}: {spec.m} modes, total probability {total:.15f}")
        if abs(total - 1) > 1e-9 or probs.min() < -1e-12:
            raise NumericalError(f"{name}: distribution sums to {total!r} (min {probs.min():.3g})")
    return EXIT_OK


def cmd_sample(args) -> int:
    from gbslab import samplers
    from gbslab.state import build
    from gbslab.validation import expected_clicks, uniform_band_patterns

    (name, spec, opts), *rest = _load(args)
    if rest:
        raise ConfigError("sample takes a single --spec")
    _apply_kernel_options(args, opts)
    models = [m.strip().lower() for m in args.models.split(",") if m.strip()]
    bad = [m for m in models if m not in MODEL_NAMES]
    if bad:
        raise ConfigError(f"--models: unknown model(s) {', '.join(bad)}; choose from {', '.join(MODEL_NAMES)}")
    n = args.samples
    if n < 0:
        raise ConfigError("--samples must be >= 0")
    band = _band(args.clicks_band)
    method = args.method or opts.sampler.get("method", "auto")
    os.makedirs(args.out, exist_ok=True)
    h = spec.digest()
    for k, model in enumerate(models):
        seed = args.seed + k
        if model == "ideal":
            s = samplers.ideal_sampler(spec, n, seed, method=method)
        elif model == "thermal":
            s = samplers.thermal_mock_sampler(spec, n, seed)
        elif model == "distinguishable":
            s = samplers.distinguishable_mock_sampler(spec, n, seed)
        else:
            if band is None:
                clicks = int(round(expected_clicks(build(spec))))
                s = samplers.uniform_sampler(spec.m, clicks, n, seed, spec_hash=h)
            else:
                pats = uniform_band_patterns(spec.m, band, n, seed)
                s = samplers.SampleSet(spec.m, pats, {"model": "UNIFORM", "seed": seed, "spec_hash": h,
                                                      "version": __version__, "band": f"{band[0]}-{band[1]}"})
        s.meta["spec_hash"] = h
        if band is not None and model != "uniform":
            s.meta["band"] = f"{band[0]}-{band[1]}"
        path = os.path.join(args.out, f"samples_{model}.txt")
        s.write(path)
        print(f"{model}: {len(s)} samples -> {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from gbslab.samplers import SampleSet
    from gbslab.validation import DEFAULT_BAND, validate_samples

    missing = []
    if not args.spec:
        missing.append("--spec")
    if not args.samples_file:
        missing.append("--samples-file")
    else:
        missing += [f"samples file {p}" for p in args.samples_file.split(",") if not os.path.exists(p)]
    if missing:
        raise ConfigError("validate is missing inputs: " + "; ".join(missing))
    (name, spec, opts), *rest = _load(args)
    if rest:
        raise ConfigError("validate takes a single --spec")
    _apply_kernel_options(args, opts)
    band = _band(args.clicks_band) or _band(opts.validation.get("clicks_band")) or DEFAULT_BAND
    kw = {}
    for key in ("n_reference", "hog_samples", "curve_bins"):
        if key in opts.validation:
            kw[key] = int(opts.validation[key])
    paths = args.samples_file.split(",")
    status = EXIT_OK
    for path in paths:
        samples = SampleSet.read(path)
        if samples.m != spec.m:
            raise ConfigError(f"{path}: {samples.m} modes, spec has {spec.m}")
        if samples.meta.get("spec_hash") not in ("", None, spec.digest()):
            log.warning("%s was drawn from spec %s, validating against %s", path,
                        samples.meta["spec_hash"], spec.digest())
        report = validate_samples(spec, samples, band=band, seed=args.seed, **kw)
        out = args.out if len(paths) == 1 else os.path.join(args.out, os.path.splitext(os.path.basename(path))[0])
        report.write(out)
        print(f"{path}:")
        for key, ok in report.verdicts.items():
            print(f"  {key:32s} {'PASS' if ok else 'FAIL'}")
    return status


def cmd_bench(args) -> int:
    from gbslab.samplers import SampleSet
    from gbslab.validation import write_table

    _apply_kernel_options(args, RunOptions())
    lo, hi = _band(args.k_range)
    records = bench.time_torontonian(range(lo, hi + 1), seed=args.seed, repetitions=args.repetitions)
    os.makedirs(args.out, exist_ok=True)
    from gbslab.reference import device_spec

    head = _header(device_spec(args.seed).digest(), args.seed)
    rows = [["k", "median_seconds", "min", "max", "value", "error_estimate"]]
    for r in records:
        rows.append([str(r.k), f"{r.wall_seconds:.6g}", f"{r.min_seconds:.6g}", f"{r.max_seconds:.6g}",
                     f"{r.value:.17g}", f"{r.error_estimate:.3g}"])
    write_table(os.path.join(args.out, "bench.csv"), rows, head)

    if args.samples_file:
        s = SampleSet.read(args.samples_file)
        hist = dict(enumerate(np.bincount(s.click_numbers, minlength=s.m + 1).tolist()))
        hist_name = args.samples_file
    else:
        hist, hist_name = bench.device_like_histogram(), "device-like"
    anchored = bench.anchored_model()
    fit = bench.fit_scaling(records) if len(records) >= 5 else None
    fit_rows = [["name", "value"], ["anchored_ratio", f"{anchored.ratio:.6g}"]]
    if fit is not None:
        lo_r, hi_r = fit.ratio_interval()
        fit_rows += [["slope_log2", f"{fit.slope:.6g}"], ["ratio", f"{fit.ratio:.6g}"],
                     ["ratio_ci_low", f"{lo_r:.6g}"], ["ratio_ci_high", f"{hi_r:.6g}"],
                     ["r2", f"{fit.r2:.6g}"], ["flags", ";".join(fit.flags)],
                     ["anchored_ratio_in_band", str(lo_r <= anchored.ratio <= hi_r)]]
        cost = bench.estimate_classical_cost(hist, fit)
        write_table(os.path.join(args.out, "cost.csv"), list(cost.table()),
                    dict(head, model="fit", histogram=hist_name))
    write_table(os.path.join(args.out, "fit.csv"), fit_rows, head)
    cost_a = bench.estimate_classical_cost(hist, anchored)
    write_table(os.path.join(args.out, "cost_anchored.csv"), list(cost_a.table()),
                dict(head, model="anchored", histogram=hist_name))
    print(f"anchored model: total {cost_a.total:.3g} s, peak at N={cost_a.peak}")
    if fit is not None:
        print(f"fitted ratio {fit.ratio:.3f} per click (r2 {fit.r2:.4f}); anchored {anchored.ratio:.3f}")
    return EXIT_OK


def cmd_haar(args) -> int:
    from gbslab.validation import haar_checks, haar_generate, write_table

    if args.modes is None or args.modes < 1:
        raise ConfigError("--modes must be a positive integer")
    U = haar_generate(args.modes, args.seed)
    os.makedirs(args.out, exist_ok=True)
    h = hashlib.sha256(np.ascontiguousarray(U).tobytes()).hexdigest()[:16]
    head = _header(h, args.seed, m=args.modes)
    write_unitary(os.path.join(args.out, "unitary.csv"), U, head)
    rep = haar_checks(U)
    write_table(os.path.join(args.out, "haar_report.csv"), list(rep.rows()), head)
    print(f"unitarity residual {rep.unitarity_residual:.3g}; amplitude p {rep.amplitude_p:.3g}; "
          f"phase p {rep.phase_p:.3g}")
    if rep.unitarity_residual > 1e-12:
        raise NumericalError(f"unitarity residual {rep.unitarity_residual:.3g} above 1e-12")
    return EXIT_OK


def cmd_report(args) -> int:
    from gbslab import plots

    present = [f for f in REPORT_INPUTS if os.path.exists(os.path.join(args.out, f))]
    if not present:
        raise ConfigError(f"no report inputs in {args.out}; expected any of: " + ", ".join(REPORT_INPUTS))
    for path in plots.render_directory(args.out, present):
        print(path)
    return EXIT_OK


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", action="append", default=[],
                        help="spec file, or builtin reference:<m>, lossless:<m>, easy:<k>[-<j>], device")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="random seed (recorded in every output)")
    common.add_argument("--workers", type=int, default=None, help="kernel worker threads")
    common.add_argument("--kernel-max-clicks", type=int, default=None, help="Torontonian size limit")
    common.add_argument("--models", default="ideal", help="comma list of " + ",".join(MODEL_NAMES))
    common.add_argument("--samples", type=int, default=1000, help="number of samples to draw")
    common.add_argument("--clicks-band", default=None, help="click-number band LO-HI")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gbslab", description="Gaussian boson sampling laboratory")
    parser.add_argument("--version", action="version", version=f"gbslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="exact click distribution (m <= 14)")
    p = sub.add_parser("sample", parents=[common], help="draw samples under each model")
    p.add_argument("--method", default=None, choices=("auto", "enum", "chain", "mcmc"))
    p = sub.add_parser("validate", parents=[common], help="run the hypothesis tests on a sample file")
    p.add_argument("--samples-file", default=None, help="sample file(s), comma separated")
    p = sub.add_parser("bench", parents=[common], help="time the Torontonian kernel and estimate cost")
    p.add_argument("--k-range", default="4-20", help="click range LO-HI")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--samples-file", default=None, help="take the click histogram from a sample file")
    p = sub.add_parser("haar", parents=[common], help="generate and check a Haar unitary")
    p.add_argument("--modes", type=int, default=100)
    sub.add_parser("report", parents=[common], help="render CSVs in --out to SVG")
    return parser


COMMANDS = {"simulate": cmd_simulate, "sample": cmd_sample, "validate": cmd_validate,
            "bench": cmd_bench, "haar": cmd_haar, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    saved = (kernels.LIMITS.max_clicks, kernels.LIMITS.workers)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"gbslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except kernels.KernelLimitError as exc:
        print(f"gbslab: refused: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (NumericalError, InvalidStateError, ArithmeticError) as exc:
        print(f"gbslab: numerical validity failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"gbslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        kernels.LIMITS.max_clicks, kernels.LIMITS.workers = saved


if __name__ == "__main__":
    sys.exit(main())
