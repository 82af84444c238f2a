import textwrap

import numpy as np
import pytest

from gbslab.config import (
    ConfigError,
    builtin_spec,
    format_spec,
    load_spec,
    parse_spec,
    read_unitary,
    resolve_spec,
    save_spec,
    write_unitary,
)
from gbslab.reference import reference_spec
from gbslab.state import tmss_spec
from gbslab.validation import haar_generate

from oracles import random_unitary

MINIMAL = textwrap.dedent("""
    [experiment]
    modes = 4

    [source.0]
    kind = TMSS
    modes = 0, 1
    r = 0.8
    phi = 0.25
    eta = 0.9

    [network]
    haar_seed = 7
    eta = 0.95

    [detector]
    eta = 0.8, 0.8, 0.7, 0.7
""")


class TestParse:
    def test_minimal(self):
        spec, opts = parse_spec(MINIMAL)
        assert spec.m == 4
        (src,) = spec.sources
        assert src.kind == "TMSS" and src.modes == (0, 1)
        assert src.r == 0.8 and src.eta_collect == 0.9
        np.testing.assert_array_equal(spec.unitary, haar_generate(4, 7))
        np.testing.assert_allclose(spec.eta_detector, [0.8, 0.8, 0.7, 0.7])
        assert opts.sampler == {} and opts.kernel == {}

    def test_identity_network(self):
        spec, _ = parse_spec("[experiment]\nmodes = 3\n[network]\nunitary = identity\n")
        np.testing.assert_array_equal(spec.unitary, np.eye(3))
        assert len(spec.sources) == 0

    def test_run_sections(self):
        text = MINIMAL + "\n[sampler]\nmethod = chain\n[kernels]\nmax_clicks = 20\nchunks = 4\n"
        _, opts = parse_spec(text)
        assert opts.sampler == {"method": "chain"}
        assert opts.kernel == {"max_clicks": "20", "chunks": "4"}

    def test_sources_ordered_numerically(self):
        blocks = "".join(f"[source.{i}]\nkind = SMSS\nmodes = {i}\nr = 0.{i + 1}\n" for i in (10, 2, 0))
        spec, _ = parse_spec("[experiment]\nmodes = 11\n[network]\nunitary = identity\n" + blocks)
        assert [s.modes[0] for s in spec.sources] == [0, 2, 10]

    @pytest.mark.parametrize("text, section", [
        (MINIMAL + "\n[laser]\npower = 1\n", "[laser]"),
        (MINIMAL.replace("phi = 0.25", "phase = 0.25"), "[source.0]"),
        (MINIMAL.replace("haar_seed = 7", "haar_seed = seven"), "[network]"),
        (MINIMAL.replace("haar_seed = 7", "haar_seed = 7\nunitary = identity"), "[network]"),
        (MINIMAL.replace("kind = TMSS", "kind = LASER"), "[source.0]"),
        (MINIMAL.replace("modes = 0, 1", "modes = 0, 9"), "[network]"),
        (MINIMAL.replace("0.8, 0.8, 0.7, 0.7", "0.8, 0.7"), "[detector]"),
        (MINIMAL.replace("r = 0.8", "r = 0.8, 0.9"), "[source.0]"),
        (MINIMAL.replace("modes = 4", "modes = 0"), "[experiment]"),
        ("[experiment]\nmodes = 2\n", "[network]"),
        ("[network]\nhaar_seed = 1\n", "[experiment]"),
    ])
    def test_errors_name_section(self, text, section):
        with pytest.raises(ConfigError) as info:
            parse_spec(text)
        assert section in str(info.value)

    def test_malformed(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_spec("modes = 3\n")

    def test_config_error_is_value_error(self):
        assert issubclass(ConfigError, ValueError)


class TestRoundTrip:
    def test_haar_seed_digest(self):
        spec = reference_spec(6)
        np.testing.assert_array_equal(spec.unitary, haar_generate(6, 2026))
        back, _ = parse_spec(format_spec(spec, haar_seed=2026))
        assert back.digest() == spec.digest()

    def test_save_and_load(self, tmp_path):
        rng = np.random.default_rng(4)
        spec = tmss_spec(6, [0.7, 1.1, 0.4], unitary=random_unitary(6, rng),
                         eta_network=rng.uniform(0.5, 1.0, size=6), eta_detector=0.81)
        path = tmp_path / "exp.ini"
        save_spec(spec, path)
        assert (tmp_path / "exp_unitary.csv").exists()
        back, _ = load_spec(path)
        assert back.digest() == spec.digest()

    def test_format_needs_one_network(self):
        with pytest.raises(ValueError):
            format_spec(tmss_spec(2, [0.5]))

    def test_unitary_file_exact(self, tmp_path):
        U = random_unitary(5, np.random.default_rng(1))
        write_unitary(tmp_path / "U.csv", U, {"seed": 1})
        np.testing.assert_array_equal(read_unitary(tmp_path / "U.csv"), U)

    def test_unitary_file_shape(self, tmp_path):
        (tmp_path / "U.csv").write_text("1,0,0\n0,0,1\n")
        with pytest.raises(ConfigError, match="columns"):
            read_unitary(tmp_path / "U.csv")

    def test_unitary_file_relative_to_spec(self, tmp_path):
        write_unitary(tmp_path / "net.csv", np.eye(2))
        (tmp_path / "s.ini").write_text("[network]\nunitary_file = net.csv\n")
        spec, _ = load_spec(tmp_path / "s.ini")
        assert spec.m == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_spec(tmp_path / "nope.ini")


class TestBuiltins:
    @pytest.mark.parametrize("name, m", [("reference:8", 8), ("lossless:6", 6), ("device", 100)])
    def test_names(self, name, m):
        assert builtin_spec(name).m == m

    def test_lossless(self):
        spec = builtin_spec("lossless:6")
        assert np.all(spec.eta_network == 1) and np.all(spec.eta_detector == 1)
        assert all(s.eta_collect == 1 for s in spec.sources)

    @pytest.mark.parametrize("name", ["reference:x", "bogus:3", "device:2"])
    def test_bad_names(self, name):
        with pytest.raises(ConfigError):
            builtin_spec(name)

    def test_resolve_prefers_files(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text(MINIMAL)
        assert resolve_spec(str(path))[0].m == 4
        assert resolve_spec("reference:4")[0].m == 4
        with pytest.raises(ConfigError, match="not found"):
            resolve_spec(str(tmp_path / "missing.ini"))
