import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps
from scipy.special import betainc

from fiiss.analytic import FiissParams, lil_constant
from fiiss.errors import DomainError
from fiiss.sampling import EmpiricalSample, RandomSource
from fiiss.stats import (
    ReportEntry, VerificationReport, dynkin_lamperti_cdf, ks_one_sample, ks_two_sample, lil_ratio_scan,
    loglog_slope, moment_estimate,
)

samples = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40)


# --- KS -----------------------------------------------------------------------

def test_ks_two_sample_hand_values():
    assert ks_two_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).statistic == 0.0
    assert ks_two_sample([1.0, 3.0], [2.0, 4.0]).statistic == 0.5
    assert ks_two_sample([1.0, 2.0], [5.0, 6.0]).statistic == 1.0
    with pytest.raises(DomainError):
        ks_two_sample([], [1.0])


@settings(max_examples=200)
@given(samples, samples)
def test_ks_two_sample_symmetry_range_and_scipy(a, b):
    d = ks_two_sample(a, b)
    assert 0 <= d.statistic <= 1 and 0 <= d.p_value <= 1
    assert d.statistic == ks_two_sample(b, a).statistic
    assert d.statistic == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-12)


@given(st.lists(st.integers(-100, 100), min_size=1, max_size=40), st.lists(st.integers(-100, 100), min_size=1, max_size=40))
def test_ks_two_sample_invariant_under_monotone_map(a, b):
    f = lambda x: np.exp(np.asarray(x, dtype=float) / 30.0) * 3 - 7
    assert ks_two_sample(f(a), f(b)).statistic == pytest.approx(ks_two_sample(a, b).statistic, abs=1e-12)


def test_ks_two_sample_asymptotic_p_value():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=3000), rng.normal(0.05, size=2000)
    ref = sps.ks_2samp(a, b, method="asymp")
    got = ks_two_sample(a, b)
    assert got.statistic == pytest.approx(ref.statistic)
    assert got.p_value == pytest.approx(ref.pvalue, rel=0.05)


def test_ks_one_sample_hand_values():
    cdf = sps.norm.cdf
    assert ks_one_sample([0.0], cdf).statistic == 0.5
    assert ks_one_sample([0.0, 1.0], lambda x: np.ones_like(x)).statistic == 1.0


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60))
def test_ks_one_sample_matches_scipy(a):
    assert ks_one_sample(a, sps.norm.cdf).statistic == pytest.approx(sps.kstest(a, "norm").statistic, abs=1e-12)


def test_ks_one_sample_calibrated():
    src = RandomSource(1)
    accepted = sum(ks_one_sample(src.substream(i).uniform(10_000), lambda x: x).p_value > 0.01 for i in range(100))
    assert accepted >= 98


# --- estimators -------------------------------------------------------------

def test_moment_estimate_values():
    assert moment_estimate([2.0, 2.0, 2.0], 3) == (8.0, 0.0)
    assert moment_estimate([1.0, 2.0, 3.0], 1)[0] == 2.0
    assert moment_estimate([1.0, 2.0, 3.0], 2)[0] == pytest.approx(14 / 3)
    assert moment_estimate([1.0, 2.0, 3.0], 1)[1] == pytest.approx(1 / math.sqrt(3))
    with pytest.raises(DomainError):
        moment_estimate([1.0], 0)


def test_loglog_slope_values():
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    fit = loglog_slope(x, 3 * x**2)
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert loglog_slope(x, np.full(5, 7.0)).slope == pytest.approx(0.0, abs=1e-12)
    lin = loglog_slope(x, 2 * x + 1, log_x=False, log_y=False)
    assert lin.slope == pytest.approx(2.0) and lin.intercept == pytest.approx(1.0)
    with pytest.raises(DomainError):
        loglog_slope([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        loglog_slope([1.0, -2.0, 3.0], [1.0, 2.0, 3.0])


@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0.01, 1), st.integers(3, 30))
def test_loglog_slope_recovers_planted_exponent(k, c, x0, m):
    x = x0 * np.geomspace(1, 100, m)
    assert abs(loglog_slope(x, c * x**k).slope - k) < 1e-12


# --- Dynkin-Lamperti law --------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0))
def test_dynkin_lamperti_cdf_matches_incomplete_beta(a, x):
    assert dynkin_lamperti_cdf(a, x) == pytest.approx(betainc(1 - a, a, x), abs=1e-9)


def test_dynkin_lamperti_cdf_edges_and_vector():
    assert dynkin_lamperti_cdf(0.5, -1.0) == 0.0 and dynkin_lamperti_cdf(0.5, 2.0) == 1.0
    v = dynkin_lamperti_cdf(0.5, np.array([0.25, 0.5]))
    assert v.shape == (2,) and v[1] == pytest.approx(0.5, abs=1e-12)


# --- LIL envelope -------------------------------------------------------------

def test_lil_scan_pilot():
    p = FiissParams(0.75, 0.5)
    scan = lil_ratio_scan(p, np.geomspace(10, 1e3, 60), 30, RandomSource(2))
    c = lil_constant(p)
    assert 0.3 * c < scan.max_ratio < 3 * c
    assert scan.median_at(30) < c
    assert scan.min_path_max <= scan.max_ratio
    assert json.dumps(scan.as_dict())
    with pytest.raises(DomainError):
        lil_ratio_scan(p, [2.0, 10.0], 1, RandomSource(2))
    with pytest.raises(DomainError):
        lil_ratio_scan(FiissParams(0.5, -0.6), [10.0, 20.0], 1, RandomSource(2))


# --- reports ------------------------------------------------------------------

def test_report_entry_relations():
    assert ReportEntry("a", 0.01, 0.05, "<").passed
    assert not ReportEntry("b", 0.06, 0.05, "<").passed
    assert ReportEntry("c", 1.5, [1.0, 2.0], "in").passed
    assert not ReportEntry("d", 2.5, [1.0, 2.0], "in").passed
    assert ReportEntry("e", 1.0, True, "true").passed
    assert not ReportEntry("f", float("nan"), 1.0, "<").passed
    with pytest.raises(DomainError):
        ReportEntry("g", 1.0, 1.0, "~")


def test_report_json_stable():
    r = VerificationReport(meta={"seed": 1})
    r.add(ReportEntry("a", 0.01, 0.05, "<", n=10, seed=1, params={"alpha": 0.5}))
    r.add(ReportEntry("b", 0.5, 0.05, "<"))
    text = r.to_json()
    assert text == r.to_json()
    data = json.loads(text)
    assert list(data) == ["meta", "passed", "entries"] and data["passed"] is False
    assert list(data["entries"][0]) == ["name", "statistic", "relation", "threshold", "passed", "n", "seed", "params", "meta"]
