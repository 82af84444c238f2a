import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gbslab.probability import full_distribution
from gbslab.samplers import (
    SampleSet,
    chain_rule_sampler,
    enumerate_sampler,
    ideal_sampler,
    make_rng,
    mcmc_sampler,
    thermal_mock_sampler,
    uniform_sampler,
)
from gbslab.state import ExperimentSpec, SourceSpec, build, tmss_spec, vacuum
from gbslab.validation import fidelity_tvd


def tvd(a, b):
    return fidelity_tvd(a, b)[1]


class TestRng:
    def test_reproducible(self):
        assert make_rng(5, 2).random() == make_rng(5, 2).random()

    def test_streams_differ(self):
        assert make_rng(5, 0).random() != make_rng(5, 1).random()


class TestSampleSet:
    def test_round_trip(self, tmp_path):
        s = enumerate_sampler(build(tmss_spec(4, [0.8, 0.5], eta_network=0.6)), 300, 4, spec_hash="abc")
        path = tmp_path / "s.txt"
        s.write(path)
        back = SampleSet.read(path)
        np.testing.assert_array_equal(back.patterns, s.patterns)
        assert back.meta["seed"] == 4 and back.meta["spec_hash"] == "abc"
        assert back.meta["model"] == "IDEAL_ENUM"
        back.write(tmp_path / "again.txt")
        assert (tmp_path / "again.txt").read_bytes() == path.read_bytes()

    def test_header(self, tmp_path):
        path = tmp_path / "u.txt"
        uniform_sampler(5, 2, 3, seed=1, spec_hash="ff").write(path)
        lines = path.read_text().splitlines()
        assert lines[:4] == ["#model=UNIFORM", "#seed=1", "#m=5", "#spec_hash=ff"]
        assert all(len(l) == 5 and set(l) <= {"0", "1"} for l in lines if not l.startswith("#"))

    def test_records_cover_all_samples(self):
        s = uniform_sampler(4, 2, 500, seed=0)
        rec = s.records
        assert sum(c for _, c in rec) == 500
        assert all(c >= 1 for _, c in rec)
        assert [p for p, _ in rec] == sorted(p for p, _ in rec)

    def test_in_band(self):
        s = SampleSet(3, [[0, 0, 0], [1, 1, 0], [1, 1, 1]])
        assert len(s.in_band(1, 2)) == 1

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            SampleSet(2, np.zeros((1, 2)), {"model": "QUANTUM"})

    def test_indices_msb_first(self):
        s = SampleSet(3, [[1, 0, 0], [0, 0, 1]])
        np.testing.assert_array_equal(s.indices(), [4, 1])


class TestEnumerate:
    def test_vacuum(self):
        s = enumerate_sampler(vacuum(3), 200, 0)
        assert not s.patterns.any()

    def test_deterministic(self, ref8_state):
        a = enumerate_sampler(ref8_state, 500, 9)
        b = enumerate_sampler(ref8_state, 500, 9)
        np.testing.assert_array_equal(a.patterns, b.patterns)
        assert a.meta == b.meta

    @pytest.mark.slow
    def test_converges(self, ref8_state):
        s = enumerate_sampler(ref8_state, 100_000, 0)
        assert tvd(s.empirical(), full_distribution(ref8_state)) <= 0.02

    def test_single_clicks_absent_for_lossless_tmss(self):
        state = build(tmss_spec(4, [1.0]))
        p = full_distribution(state)
        assert max(p[0b1000], p[0b0100]) <= 1e-12
        s = enumerate_sampler(state, 2000, 1)
        assert not np.any(s.click_numbers % 2)


class TestChainRule:
    def test_vacuum(self):
        assert not chain_rule_sampler(vacuum(4), 50, 0).patterns.any()

    def test_matches_exact(self):
        state = build(tmss_spec(5, [0.9, 0.6], unitary=np.roll(np.eye(5), 1, axis=0), eta_network=0.7))
        s = chain_rule_sampler(state, 20_000, 3)
        assert tvd(s.empirical(), full_distribution(state)) <= 0.03

    def test_deterministic(self, ref8_state):
        a = chain_rule_sampler(ref8_state, 100, 2)
        b = chain_rule_sampler(ref8_state, 100, 2)
        np.testing.assert_array_equal(a.patterns, b.patterns)


class TestMcmc:
    def test_exact_proposal_always_accepts(self, ref8_state):
        p = full_distribution(ref8_state)
        s = mcmc_sampler(ref8_state, 200, 0, burn_in=10, thinning=2, proposal=p)
        assert float(s.meta["acceptance_rate"]) == pytest.approx(1.0, abs=1e-9)

    def test_torontonians_per_sample(self, ref8, ref8_state):
        # every chain step costs one evaluation; burn-in amortizes over the samples
        s = mcmc_sampler(ref8_state, 5000, 0, spec=ref8)
        assert float(s.meta["torontonians_per_sample"]) == pytest.approx(100 + 1000 / 5000, abs=1e-3)
        assert float(s.meta["torontonians_per_sample"]) == pytest.approx(100, rel=0.01)
        assert s.meta["burn_in"] == 1000 and s.meta["thinning"] == 100

    def test_needs_proposal(self, ref8_state):
        with pytest.raises(ValueError):
            mcmc_sampler(ref8_state, 10, 0)

    def test_chains_reproducible(self, ref8, ref8_state):
        a = mcmc_sampler(ref8_state, 300, 5, spec=ref8, chains=3, thinning=10, burn_in=50)
        b = mcmc_sampler(ref8_state, 300, 5, spec=ref8, chains=3, thinning=10, burn_in=50)
        np.testing.assert_array_equal(a.patterns, b.patterns)
        assert len(a) == 300

    @pytest.mark.slow
    def test_converges(self, ref8, ref8_state):
        s = mcmc_sampler(ref8_state, 20_000, 1, spec=ref8, thinning=20)
        assert tvd(s.empirical(), full_distribution(ref8_state)) <= 0.05


class TestThermalMock:
    def test_zero_photons(self):
        spec = ExperimentSpec([SourceSpec("THERMAL", (0,), mean_photons=0.0)], np.eye(3))
        assert not thermal_mock_sampler(spec, 100, 0).patterns.any()

    def test_click_rate(self):
        spec = ExperimentSpec([SourceSpec("THERMAL", (0,), mean_photons=1.0)], np.eye(1))
        s = thermal_mock_sampler(spec, 10_000, 0)
        assert s.patterns.mean() == pytest.approx(0.5, abs=0.01)


class TestUniform:
    def test_no_clicks(self):
        assert not uniform_sampler(6, 0, 20, 0).patterns.any()

    def test_all_click(self):
        assert uniform_sampler(6, 6, 20, 0).patterns.all()

    @given(m=st.integers(1, 12), data=st.data())
    def test_click_number_fixed(self, m, data):
        k = data.draw(st.integers(0, m))
        s = uniform_sampler(m, k, 30, data.draw(st.integers(0, 1000)))
        assert np.all(s.click_numbers == k)

    @pytest.mark.slow
    def test_flat_over_252_patterns(self):
        s = uniform_sampler(10, 5, 100_000, 0)
        counts = np.bincount(s.indices(), minlength=1024)
        counts = counts[np.array([bin(i).count("1") == 5 for i in range(1024)])]
        assert len(counts) == 252
        mean = 100_000 / 252
        sigma = np.sqrt(100_000 * (1 / 252) * (1 - 1 / 252))
        assert np.max(np.abs(counts - mean)) <= 3 * sigma
        assert stats.chisquare(counts).pvalue > 0.01

    def test_bad_click_number(self):
        with pytest.raises(ValueError):
            uniform_sampler(3, 4, 1, 0)


class TestIdealSampler:
    @pytest.mark.parametrize("method", ["enum", "chain", "mcmc"])
    def test_methods_tag(self, method):
        spec = tmss_spec(4, [0.7], eta_network=0.8)
        s = ideal_sampler(spec, 20, 0, method=method)
        assert s.meta["model"] == f"IDEAL_{method.upper()}"
        assert s.meta["spec_hash"] == spec.digest()

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            ideal_sampler(tmss_spec(2, [0.5]), 1, 0, method="quantum")
