import os
import subprocess
import sys

import numpy as np
import pytest

from gbslab import _backend


def run_python(code, backend=None):
    env = dict(os.environ)
    env.pop("GBSLAB_BACKEND", None)
    if backend is not None:
        env["GBSLAB_BACKEND"] = backend
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_load_python():
    name, mod = _backend.load("python")
    assert name == "python" and hasattr(mod, "torontonian_chunk")


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.load("fortran")


def test_environment_forces_fallback():
    assert run_python("import gbslab; print(gbslab.BACKEND)", backend="python") == "python"


def test_same_values_either_backend():
    code = ("import numpy as np; from gbslab.reference import reference_spec; from gbslab.state import build; "
            "from gbslab.probability import click_probability; s = build(reference_spec(8)); "
            "print(repr(click_probability(s, [1, 0, 1, 1, 0, 0, 1, 0])))")
    py = float(run_python(code, backend="python"))
    default = float(run_python(code))
    assert py == pytest.approx(default, rel=1e-12)
    assert np.isfinite(py) and py > 0


def test_kernel_api_identical():
    _, py = _backend.load("python")
    if _backend.BACKEND != "cython":
        pytest.skip("compiled extension not built")
    cy = _backend.impl
    for fn in ("torontonian_chunk", "hafnian", "permanent"):
        assert callable(getattr(cy, fn)) and callable(getattr(py, fn))
