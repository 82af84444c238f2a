import filecmp
import os
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gbslab import kernels
from gbslab.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_SCALE, REPORT_INPUTS, main
from gbslab.config import read_unitary
from gbslab.samplers import SampleSet
from gbslab.validation import read_table

GOLDEN = Path(__file__).parent / "golden"

VACUUM = "[experiment]\nmodes = 3\n\n[network]\nunitary = identity\n"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def vacuum_spec(tmp_path):
    path = tmp_path / "vacuum.ini"
    path.write_text(VACUUM)
    return path


def data_lines(path):
    return [line for line in Path(path).read_text().splitlines() if not line.startswith("#")]


class TestExitCodes:
    def test_ok(self, tmp_path, vacuum_spec):
        assert run("simulate", "--spec", vacuum_spec, "--out", tmp_path / "o") == EXIT_OK

    def test_config_error_names_section(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text(VACUUM + "\n[source.0]\nkind = TMSS\nmodes = 0, 1\nr = lots\n")
        assert run("simulate", "--spec", bad, "--out", tmp_path) == EXIT_CONFIG
        assert "[source.0]" in capsys.readouterr().err

    def test_missing_spec(self, tmp_path, capsys):
        assert run("simulate", "--out", tmp_path) == EXIT_CONFIG
        assert "--spec" in capsys.readouterr().err

    def test_scale_refusal(self, tmp_path, capsys):
        assert run("simulate", "--spec", "reference:16", "--out", tmp_path) == EXIT_SCALE
        assert "refused" in capsys.readouterr().err

    def test_kernel_limit_refusal(self, tmp_path, capsys):
        assert run("bench", "--k-range", "4-9", "--kernel-max-clicks", 6, "--out", tmp_path) == EXIT_SCALE
        assert "k=7" in capsys.readouterr().err
        assert not (tmp_path / "bench.csv").exists()

    def test_numerical_failure(self, tmp_path, monkeypatch, capsys):
        import gbslab.validation as validation

        monkeypatch.setattr(validation, "haar_generate", lambda m, seed: np.full((m, m), 0.5 + 0j))
        assert run("haar", "--modes", 4, "--out", tmp_path) == EXIT_NUMERIC
        assert "residual" in capsys.readouterr().err

    def test_limits_restored(self, tmp_path, vacuum_spec):
        before = kernels.LIMITS.max_clicks
        run("simulate", "--spec", vacuum_spec, "--kernel-max-clicks", 5, "--out", tmp_path)
        assert kernels.LIMITS.max_clicks == before


class TestSimulate:
    def test_vacuum_one_line(self, tmp_path, vacuum_spec):
        run("simulate", "--spec", vacuum_spec, "--out", tmp_path)
        lines = data_lines(tmp_path / "distribution.csv")
        assert lines[0].startswith("pattern")
        assert len(lines) == 2
        pattern, prob = lines[1].split(",")[:2]
        assert pattern == "000" and float(prob) == 1.0

    def test_config_list(self, tmp_path):
        assert run("simulate", "--spec", "easy:0-2", "--out", tmp_path) == EXIT_OK
        assert sorted(p.name for p in tmp_path.glob("distribution_*.csv")) == [
            "distribution_00.csv", "distribution_01.csv", "distribution_02.csv"]

    def test_headers(self, tmp_path):
        run("simulate", "--spec", "easy:0", "--seed", 9, "--out", tmp_path)
        _, meta = read_table(tmp_path / "normalization.csv")
        assert {"spec_hash", "seed", "version"} <= set(meta) and meta["seed"] == "9"


class TestSample:
    def test_zero_samples_header_only(self, tmp_path):
        run("sample", "--spec", "reference:6", "--samples", 0, "--out", tmp_path)
        text = (tmp_path / "samples_ideal.txt").read_text().splitlines()
        assert text and all(line.startswith("#") for line in text)

    def test_four_models(self, tmp_path):
        run("sample", "--spec", "reference:6", "--samples", 50, "--models",
            "ideal,thermal,distinguishable,uniform", "--out", tmp_path)
        sets = [SampleSet.read(tmp_path / f"samples_{m}.txt") for m in
                ("ideal", "thermal", "distinguishable", "uniform")]
        assert {s.m for s in sets} == {6}
        assert len({s.meta["spec_hash"] for s in sets}) == 1

    def test_byte_identical_reruns(self, tmp_path):
        for d in ("a", "b"):
            run("sample", "--spec", "reference:6", "--samples", 200, "--models", "ideal,uniform",
                "--seed", 4, "--out", tmp_path / d)
        for name in ("samples_ideal.txt", "samples_uniform.txt"):
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)

    def test_unknown_model(self, tmp_path):
        assert run("sample", "--spec", "reference:6", "--models", "boson", "--out", tmp_path) == EXIT_CONFIG

    def test_band(self, tmp_path):
        run("sample", "--spec", "reference:8", "--samples", 100, "--models", "uniform",
            "--clicks-band", "2-4", "--out", tmp_path)
        s = SampleSet.read(tmp_path / "samples_uniform.txt")
        assert set(s.click_numbers) <= {2, 3, 4}


@pytest.fixture(scope="module")
def sampled(tmp_path_factory):
    d = tmp_path_factory.mktemp("val")
    main(["sample", "--spec", "reference:10", "--samples", "3000", "--models", "ideal,thermal",
          "--seed", "1", "--out", str(d)])
    main(["sample", "--spec", "reference:10", "--samples", "1000", "--models", "uniform",
          "--clicks-band", "6-10", "--seed", "1", "--out", str(d)])
    return d


def report_values(path):
    rows, _ = read_table(path / "report.csv")
    return {r[0]: r[1] for r in rows}


class TestValidate:
    def test_missing_inputs_listed(self, tmp_path, capsys):
        assert run("validate", "--samples-file", tmp_path / "x.txt", "--out", tmp_path) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "--spec" in err and "x.txt" in err

    def test_ideal_consistency_verdicts_pass(self, sampled, tmp_path):
        assert run("validate", "--spec", "reference:10", "--samples-file", sampled / "samples_ideal.txt",
                   "--out", tmp_path) == EXIT_OK
        verdicts = {k: v for k, v in report_values(tmp_path).items()
                    if k.startswith("verdict.") and not k.startswith("verdict.peak_shift")}
        assert len(verdicts) == 10 and set(verdicts.values()) == {"PASS"}, verdicts

    @pytest.mark.xfail(strict=True, reason="the mocks' click-number peaks coincide with the ideal peak at m=10")
    def test_ideal_all_verdicts_pass(self, sampled, tmp_path):
        run("validate", "--spec", "reference:10", "--samples-file", sampled / "samples_ideal.txt",
            "--out", tmp_path)
        verdicts = {k: v for k, v in report_values(tmp_path).items() if k.startswith("verdict.")}
        assert set(verdicts.values()) == {"PASS"}, verdicts

    def test_thermal_fails_hog(self, sampled, tmp_path):
        run("validate", "--spec", "reference:10", "--samples-file", sampled / "samples_thermal.txt",
            "--out", tmp_path)
        values = report_values(tmp_path)
        assert float(values["hog_confidence_thermal"]) < 0.01
        assert values["verdict.hog_vs_thermal"] == "FAIL"

    def test_uniform_rejected_by_curve(self, sampled, tmp_path):
        run("validate", "--spec", "reference:10", "--samples-file", sampled / "samples_uniform.txt",
            "--out", tmp_path)
        values = report_values(tmp_path)
        assert values["verdict.curve_matches_ideal"] == "FAIL"
        assert float(values["curve_ks_p_ideal"]) < 0.01

    def test_empty_band_reported(self, sampled, tmp_path):
        # uniform samples were drawn with 6 to 10 clicks
        run("validate", "--spec", "reference:10", "--samples-file", sampled / "samples_uniform.txt",
            "--clicks-band", "0-1", "--out", tmp_path)
        values = report_values(tmp_path)
        assert values["samples_in_band"] == "0"
        assert values["verdict.band_populated"] == "FAIL"

    def test_mode_mismatch(self, sampled, tmp_path):
        assert run("validate", "--spec", "reference:8", "--samples-file", sampled / "samples_ideal.txt",
                   "--out", tmp_path) == EXIT_CONFIG


class TestBenchHaarReport:
    def test_bench_rows(self, tmp_path):
        assert run("bench", "--k-range", "4-20", "--out", tmp_path) == EXIT_OK
        rows, _ = read_table(tmp_path / "bench.csv")
        assert [int(r[0]) for r in rows[1:]] == list(range(4, 21))
        assert (tmp_path / "cost.csv").exists() and (tmp_path / "cost_anchored.csv").exists()

    def test_haar_100(self, tmp_path):
        assert run("haar", "--modes", 100, "--seed", 3, "--out", tmp_path) == EXIT_OK
        U = read_unitary(tmp_path / "unitary.csv")
        assert np.max(np.abs(U @ U.conj().T - np.eye(100))) <= 1e-12
        rows, _ = read_table(tmp_path / "haar_report.csv")
        residual = dict((r[0], r[1]) for r in rows[1:])["unitarity_residual"]
        assert float(residual) <= 1e-12

    def test_report_empty_directory(self, tmp_path, capsys):
        assert run("report", "--out", tmp_path) != EXIT_OK
        err = capsys.readouterr().err
        assert all(name in err for name in REPORT_INPUTS)

    def test_report_renders(self, tmp_path):
        run("haar", "--modes", 20, "--out", tmp_path)
        assert run("report", "--out", tmp_path) == EXIT_OK
        assert list(tmp_path.glob("*.svg"))


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gbslab", "haar", "--modes", "6", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "unitarity residual" in out.stdout


# --- golden files -----------------------------------------------------------------------
# Every command with fixed seeds reproduces the stored outputs byte for byte. Kernel
# timings vary run to run, so bench contributes only its timing-free cost table.

GOLDEN_RUNS = {
    "simulate": [["simulate", "--spec", "easy:0", "--seed", "5"]],
    "sample": [["sample", "--spec", "reference:8", "--samples", "300", "--seed", "7",
                "--models", "ideal,thermal,distinguishable,uniform"]],
    "haar": [["haar", "--modes", "8", "--seed", "11"]],
    "validate": [["sample", "--spec", "reference:8", "--samples", "1500", "--seed", "2"],
                 ["validate", "--spec", "reference:8", "--samples-file", "{out}/samples_ideal.txt", "--seed", "3"]],
    "bench": [["bench", "--k-range", "4-8", "--seed", "1"]],
}
GOLDEN_SKIP = {"bench.csv", "fit.csv", "cost.csv"}


def run_golden(name, out):
    for argv in GOLDEN_RUNS[name]:
        argv = [a.replace("{out}", str(out)) for a in argv]
        assert main(argv + ["--out", str(out)]) == EXIT_OK
    if name in ("haar", "validate"):
        assert main(["report", "--out", str(out)]) == EXIT_OK
    return sorted(p.name for p in out.iterdir() if p.name not in GOLDEN_SKIP)


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden(name, tmp_path, update_golden):
    out = tmp_path / name
    files = run_golden(name, out)
    golden = GOLDEN / name
    if update_golden:
        shutil.rmtree(golden, ignore_errors=True)
        golden.mkdir(parents=True)
        for f in files:
            shutil.copyfile(out / f, golden / f)
    if not golden.exists():
        pytest.fail(f"no golden files for {name}; run pytest --update-golden")
    assert sorted(os.listdir(golden)) == files
    for f in files:
        assert (out / f).read_bytes() == (golden / f).read_bytes(), f


@pytest.mark.parametrize("name", ["validate", "haar"])
def test_rerun_byte_identical(name, tmp_path):
    a = run_golden(name, tmp_path / "a")
    b = run_golden(name, tmp_path / "b")
    assert a == b
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", a, shallow=False)
    assert not mismatch and not errors
