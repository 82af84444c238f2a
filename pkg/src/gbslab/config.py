"""Spec and run-configuration files.

A spec file is sectioned ``key = value`` text read with :mod:`configparser`::

    [experiment]
    modes = 10

    [source.0]
    kind = TMSS          ; SMSS, TMSS, THERMAL or VACUUM
    modes = 0, 1
    r = 1.2
    phi = 0.5
    eta = 0.628          ; collection efficiency
    purity = 0.938       ; metadata only

    [network]
    haar_seed = 2030     ; or: unitary_file = U.csv, or: unitary = identity
    eta = 0.977          ; one value or one per mode

    [detector]
    eta = 0.81

Optional run sections ``[sampler]``, ``[validation]`` and ``[kernels]`` carry
command parameters. Unknown sections and keys are rejected.

A unitary file has m rows of 2m comma-separated numbers: the real and
imaginary parts of each element, interleaved.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from gbslab.state import ExperimentSpec, SourceSpec


class ConfigError(ValueError):
    """A spec or run file that cannot be used; the message names the section."""


SOURCE_KEYS = {"kind", "modes", "r", "phi", "eta", "mean_photons", "purity"}
SECTION_KEYS = {
    "experiment": {"modes"},
    "network": {"unitary_file", "unitary", "haar_seed", "eta"},
    "detector": {"eta"},
    "sampler": {"method", "burn_in", "thinning", "chains"},
    "validation": {"clicks_band", "n_reference", "curve_bins", "hog_samples"},
    "kernels": {"max_clicks", "workers", "chunks"},
}


@dataclass
class RunOptions:
    """Command parameters read from the optional run sections."""

    sampler: dict = field(default_factory=dict)
    validation: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)


def _floats(text: str, section: str, key: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected number(s), got {text!r}") from None


def _int(text: str, section: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {text!r}") from None


def _eta(text: str, section: str, m: int):
    eta = _floats(text, section, "eta")
    if len(eta) not in (1, m):
        raise ConfigError(f"[{section}] eta: expected 1 or {m} values, got {len(eta)}")
    return eta[0] if len(eta) == 1 else eta


def read_unitary(path) -> np.ndarray:
    """Unitary stored as m rows of interleaved real/imaginary parts."""
    try:
        data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"unitary file {path}: {exc}") from None
    m = data.shape[0]
    if data.shape[1] != 2 * m:
        raise ConfigError(f"unitary file {path}: expected {2 * m} columns, got {data.shape[1]}")
    return data[:, 0::2] + 1j * data[:, 1::2]


def write_unitary(path, U: np.ndarray, header: dict | None = None) -> None:
    """Write ``U`` so that :func:`read_unitary` recovers it bit for bit."""
    U = np.asarray(U, dtype=complex)
    with open(path, "w", newline="\n") as fh:
        for key, value in (header or {}).items():
            fh.write(f"#{key}={value}\n")
        for row in U:
            fh.write(",".join(f"{repr(float(z.real))},{repr(float(z.imag))}" for z in row) + "\n")


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"),
                                     empty_lines_in_values=False)


def parse_spec(text: str, base_dir: str = ".") -> tuple[ExperimentSpec, RunOptions]:
    """Spec and run options from spec-file text; relative paths resolve against ``base_dir``."""
    from gbslab.validation import haar_generate

    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed spec file: {exc}") from None

    for sec in cp.sections():
        allowed = SOURCE_KEYS if sec.startswith("source.") else SECTION_KEYS.get(sec)
        if allowed is None:
            raise ConfigError(f"[{sec}]: unknown section")
        extra = set(cp[sec]) - allowed
        if extra:
            raise ConfigError(f"[{sec}]: unknown key(s) {', '.join(sorted(extra))}")

    if "network" not in cp:
        raise ConfigError("[network]: section missing")
    net = cp["network"]
    choices = [k for k in ("unitary_file", "unitary", "haar_seed") if k in net]
    if len(choices) != 1:
        raise ConfigError("[network]: give exactly one of unitary_file, unitary, haar_seed")
    m = None
    if "experiment" in cp and "modes" in cp["experiment"]:
        m = _int(cp["experiment"]["modes"], "experiment", "modes")
        if m < 1:
            raise ConfigError("[experiment] modes: must be >= 1")
    if "unitary_file" in net:
        U = read_unitary(os.path.join(base_dir, net["unitary_file"]))
        if m is not None and U.shape[0] != m:
            raise ConfigError(f"[network] unitary_file: {U.shape[0]} modes, [experiment] says {m}")
    else:
        if m is None:
            raise ConfigError("[experiment] modes: required unless [network] unitary_file is given")
        if "haar_seed" in net:
            U = haar_generate(m, _int(net["haar_seed"], "network", "haar_seed"))
        elif net["unitary"].strip().lower() == "identity":
            U = np.eye(m, dtype=complex)
        else:
            raise ConfigError(f"[network] unitary: only 'identity' is recognised, got {net['unitary']!r}")
    m = U.shape[0]

    sources = []
    names = sorted((s for s in cp.sections() if s.startswith("source.")),
                   key=lambda s: (len(s), s))
    for sec in names:
        body = cp[sec]
        if "kind" not in body or "modes" not in body:
            raise ConfigError(f"[{sec}]: kind and modes are required")
        try:
            modes = tuple(int(v) for v in body["modes"].split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"[{sec}] modes: expected integers") from None
        kw = {}
        for key, name in (("r", "r"), ("phi", "phi"), ("mean_photons", "mean_photons"),
                          ("eta", "eta_collect"), ("purity", "purity")):
            if key in body:
                vals = _floats(body[key], sec, key)
                if len(vals) != 1:
                    raise ConfigError(f"[{sec}] {key}: expected one number")
                kw[name] = float(vals[0])
        try:
            sources.append(SourceSpec(body["kind"].strip(), modes, **kw))
        except ValueError as exc:
            raise ConfigError(f"[{sec}]: {exc}") from None

    eta_net = _eta(net["eta"], "network", m) if "eta" in net else 1.0
    eta_det = _eta(cp["detector"]["eta"], "detector", m) if "detector" in cp and "eta" in cp["detector"] else 1.0
    try:
        spec = ExperimentSpec(sources, U, eta_net, eta_det)
    except ValueError as exc:
        raise ConfigError(f"[network]/[source.*]: {exc}") from None

    opts = RunOptions()
    for sec, target in (("sampler", opts.sampler), ("validation", opts.validation), ("kernels", opts.kernel)):
        if sec in cp:
            target.update(dict(cp[sec]))
    return spec, opts


def load_spec(path) -> tuple[ExperimentSpec, RunOptions]:
    """Read a spec file; see the module docstring for the schema."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read spec file {path}: {exc.strerror}") from None
    return parse_spec(text, os.path.dirname(os.path.abspath(path)))


def format_spec(spec: ExperimentSpec, unitary_file: str | None = None, haar_seed: int | None = None) -> str:
    """Spec-file text for ``spec``.

    Exactly one of ``unitary_file`` (written separately by the caller) or
    ``haar_seed`` (which must regenerate ``spec.unitary``) names the network.
    """
    lines = ["[experiment]", f"modes = {spec.m}", ""]
    for i, src in enumerate(spec.sources):
        lines += [f"[source.{i}]", f"kind = {src.kind}", f"modes = {', '.join(map(str, src.modes))}"]
        if src.kind in ("SMSS", "TMSS"):
            lines += [f"r = {src.r!r}", f"phi = {src.phi!r}"]
        if src.kind == "THERMAL":
            lines.append(f"mean_photons = {src.mean_photons!r}")
        lines += [f"eta = {src.eta_collect!r}", f"purity = {src.purity!r}", ""]

    def eta_text(eta):
        eta = np.asarray(eta, dtype=float)
        if np.all(eta == eta[0]):
            return repr(float(eta[0]))
        return ", ".join(repr(float(v)) for v in eta)

    lines.append("[network]")
    if (unitary_file is None) == (haar_seed is None):
        raise ValueError("give exactly one of unitary_file and haar_seed")
    lines.append(f"unitary_file = {unitary_file}" if unitary_file else f"haar_seed = {haar_seed}")
    lines += [f"eta = {eta_text(spec.eta_network)}", "", "[detector]", f"eta = {eta_text(spec.eta_detector)}", ""]
    return "\n".join(lines)


def save_spec(spec: ExperimentSpec, path, unitary_file: str | None = None) -> None:
    """Write ``spec`` and its unitary (next to it, as ``unitary_file``) so it reloads exactly."""
    unitary_file = unitary_file or os.path.splitext(os.path.basename(path))[0] + "_unitary.csv"
    write_unitary(os.path.join(os.path.dirname(os.path.abspath(path)), unitary_file), spec.unitary)
    with open(path, "w", newline="\n") as fh:
        fh.write(format_spec(spec, unitary_file=unitary_file))


def builtin_spec(name: str) -> ExperimentSpec:
    """Named configurations: ``reference:<m>``, ``lossless:<m>``, ``easy:<config>`` and ``device``."""
    from gbslab import reference

    kind, _, arg = name.partition(":")
    try:
        if kind == "reference":
            return reference.reference_spec(int(arg))
        if kind == "lossless":
            return reference.reference_spec(int(arg), lossy=False)
        if kind == "easy":
            return reference.easy_regime_spec(config=int(arg or 0))
        if kind == "device" and not arg:
            return reference.device_spec()
    except ValueError as exc:
        raise ConfigError(f"builtin spec {name!r}: {exc}") from None
    raise ConfigError(f"unknown builtin spec {name!r}")


def resolve_spec(path_or_name: str) -> tuple[ExperimentSpec, RunOptions]:
    """A spec file path, or a builtin name when no such file exists."""
    if os.path.exists(path_or_name):
        return load_spec(path_or_name)
    if ":" in path_or_name or path_or_name == "device":
        return builtin_spec(path_or_name), RunOptions()
    raise ConfigError(f"spec file {path_or_name} not found")
