"""Acceptance criteria, one marked group per criterion.

A one-line PASS/FAIL per criterion is printed at the end of the run (see
conftest.py). Criterion 7 runs only with POVS_FULL_SCALE=1.
"""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from povs.cli import main
from povs.report import read_results_csv
from povs.rng import MT19937, Distribution, derive_seed, std_normals, transform_deviate
from povs.sample import PartiallyOverlappingSample, ingest_csv
from povs.simulation import CampaignConfig, aggregate_power, load_config, run_campaign
from povs.stats import ALL_METHODS, DegenerateStatisticError, Method, run_test
from povs.transforms import pooled_ranks

HERE = Path(__file__).parent
DATA = HERE / "data"
CONFIGS = Path(__file__).parents[1] / "src" / "povs" / "configs"


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# -- 1 ------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_golden_matches_committed_oracle():
    want = json.loads((DATA / "golden_expected.json").read_text())
    sample = ingest_csv((DATA / "golden_sample.csv").read_text())
    for m in ALL_METHODS:
        r = run_test(sample, m)
        for key in ("statistic", "df", "p_value"):
            assert abs(getattr(r, key) - want[m.value][key]) <= 1e-10, (m, key)


@pytest.mark.criterion(1)
def test_oracle_script_reproduces_committed_file():
    out = subprocess.run([sys.executable, str(HERE / "oracle" / "straight_line.py"),
                          str(DATA / "golden_sample.csv")],
                         capture_output=True, text=True, check=True).stdout
    fresh = json.loads(out)
    committed = json.loads((DATA / "golden_expected.json").read_text())
    for m, triple in committed.items():
        for key, value in triple.items():
            assert abs(fresh[m][key] - value) <= 1e-10


# -- 2 ------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_reduction_suite():
    rng = np.random.default_rng(2017)
    for i in range(1000):
        if i % 2 == 0:
            n_a, n_b = (int(k) for k in rng.integers(2, 60, size=2))
            a = rng.normal(rng.normal(), rng.uniform(0.2, 5), size=n_a)
            b = rng.normal(rng.normal(), rng.uniform(0.2, 5), size=n_b)
            s = PartiallyOverlappingSample([], a, b)
            pooled = sps.ttest_ind(a, b)
            welch = sps.ttest_ind(a, b, equal_var=False)
            r1, r2 = run_test(s, Method.NEW1), run_test(s, Method.NEW2)
            assert rel_close(r1.statistic, pooled.statistic, 1e-12)
            assert rel_close(r1.df, pooled.df, 1e-12)
            assert rel_close(r2.statistic, welch.statistic, 1e-12)
            assert rel_close(r2.df, welch.df, 1e-12)
            assert abs(r1.p_value - pooled.pvalue) <= 1e-12
            assert abs(r2.p_value - welch.pvalue) <= 1e-12
        else:
            n_c = int(rng.integers(3, 60))
            s = PartiallyOverlappingSample(rng.normal(size=(n_c, 2)) * rng.uniform(0.2, 5), [], [])
            for m in ALL_METHODS:
                assert run_test(s, m).df == n_c - 1


# -- 3 ------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_mt19937_reference_vectors():
    lines = (DATA / "mt19937_seed5489.txt").read_text().splitlines()
    want = [int(x) for x in lines if not x.startswith("#")]
    assert len(want) == 1000
    assert MT19937(5489).random_raw(1000).tolist() == want


# -- 4 ------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_desk_h0_wide_band(desk_h0):
    rows = read_results_csv(desk_h0 / "results.csv")
    assert {r.dist for r in rows} == {Distribution.NORMAL, Distribution.GUMBEL}
    assert {r.replicates for r in rows} == {2000}
    for m in ALL_METHODS:
        rates = [r.nhrr for r in rows if r.method is m]
        assert len(rates) == 162
        inside = sum(0.02 <= x <= 0.08 for x in rates)
        assert inside >= 0.95 * len(rates), (m, inside)


@pytest.mark.slow
@pytest.mark.criterion(4)
def test_desk_h0_every_cell_at_10000():
    cfg = load_config(CONFIGS / "h0_desk.json").with_(replicates=10_000)
    bad = [(r.n_a, r.n_b, r.n_c, r.rho, r.dist.value, r.method.value, r.nhrr)
           for r in run_campaign(cfg).rows() if not 0.025 <= r.nhrr <= 0.075]
    assert bad == []


# -- 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_new2_liberal_on_unequal_lognormal():
    cfg = CampaignConfig(n_a=(5, 100), n_b=(5, 100), n_c=(5,), rho=(-0.5, 0.0, 0.5),
                         distributions=("Lognormal",), replicates=10_000,
                         methods=("NEW2", "RNK2", "INT2"))
    rows = [r for r in run_campaign(cfg).rows() if {r.n_a, r.n_b} == {5, 100}]
    assert len(rows) == 6 * 3
    rate = {(r.n_a, r.rho, r.method): r.nhrr for r in rows}
    assert max(v for (_, _, m), v in rate.items() if m is Method.NEW2) > 0.075
    for (n_a, rho, m), v in rate.items():
        if m is not Method.NEW2:
            assert 0.025 <= v <= 0.075, (n_a, rho, m, v)


# -- 6 ------------------------------------------------------------------------

def _cell_power(dist):
    cfg = CampaignConfig(n_a=(10,), n_b=(10,), n_c=(10,), rho=(0.5,), delta=0.5,
                         distributions=(dist,), replicates=10_000,
                         methods=("NEW1", "RNK1", "INT1"))
    return {r.method: r.nhrr for r in run_campaign(cfg).rows()}


@pytest.mark.criterion(6)
def test_power_ordering_lognormal():
    p = _cell_power("Lognormal")
    assert p[Method.INT1] - p[Method.NEW1] >= 0.10
    assert p[Method.RNK1] - p[Method.NEW1] >= 0.10
    assert abs(p[Method.INT1] - p[Method.RNK1]) <= 0.05


@pytest.mark.criterion(6)
def test_power_ordering_normal():
    p = _cell_power("Normal")
    assert p[Method.NEW1] >= p[Method.INT1] - 0.02


# -- 7 ------------------------------------------------------------------------

@pytest.mark.fullscale
@pytest.mark.criterion(7)
def test_full_scale_power_table(tmp_path):
    for name in ("h0", "h1"):
        assert main(["simulate", "--config", f"{name}_full.json", "--out", str(tmp_path / name)]) == 0
    h0 = read_results_csv(tmp_path / "h0" / "results.csv")
    h1 = read_results_csv(tmp_path / "h1" / "results.csv")
    assert len({(r.n_a, r.n_b, r.n_c, r.rho) for r in h0}) == 1512
    got = {(g["dist"].value, g["sizes"], g["rho"]): g for g in aggregate_power(h1, h0)}
    misses = []
    for entry in json.loads((DATA / "reference_power.json").read_text()):
        if entry["dist"] == "Lognormal":
            continue
        ours = got[(entry["dist"], entry["sizes"], entry["rho"])]
        for m, want in entry["power"].items():
            if want is None:
                # reference gaps follow the whole-group exclusion rule
                if ours["whole_group"][Method.parse(m)] is not None:
                    misses.append((entry["dist"], entry["sizes"], entry["rho"], m, "gap", "value"))
                continue
            have = ours["per_cell"][Method.parse(m)]
            if have is None or abs(have - want) > 0.02:
                misses.append((entry["dist"], entry["sizes"], entry["rho"], m, want, have))
    assert misses == []


# -- 8 ------------------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def samples(draw, min_each=2):
    n_c = draw(st.integers(0, 8))
    n_a = draw(st.integers(max(0, min_each - n_c), 8))
    n_b = draw(st.integers(max(0, min_each - n_c), 8))
    paired = draw(st.lists(st.tuples(finite, finite), min_size=n_c, max_size=n_c))
    a = draw(st.lists(finite, min_size=n_a, max_size=n_a))
    b = draw(st.lists(finite, min_size=n_b, max_size=n_b))
    return PartiallyOverlappingSample(paired, a, b)


def _flat(t):
    return np.concatenate([t.paired.ravel(), t.unpaired_a, t.unpaired_b])


@pytest.mark.criterion(8)
@given(samples(min_each=0))
def test_rank_sum_identity(s):
    n = s.n_a + s.n_b + 2 * s.n_c
    assert abs(_flat(pooled_ranks(s)).sum() - n * (n + 1) / 2) <= 1e-9


@pytest.mark.criterion(8)
@settings(max_examples=200)
@given(samples(), st.sampled_from(["exp", "cube", "affine"]))
def test_monotone_invariance(s, kind):
    # rescale first so exp and cube stay finite and strictly increasing in floats
    base = s.map(lambda v: v / 1e6)
    g = {"exp": np.exp, "cube": lambda v: v ** 3 + v, "affine": lambda v: 2.5 * v - 1.0}[kind]
    moved = base.map(g)
    if len(np.unique(_flat(base))) != len(np.unique(_flat(moved))):
        return  # float rounding merged two values; not a strictly increasing map here
    for m in (Method.RNK1, Method.RNK2, Method.INT1, Method.INT2):
        try:
            want = run_test(base, m)
        except DegenerateStatisticError:
            continue
        assert run_test(moved, m) == want


@pytest.mark.criterion(8)
@settings(max_examples=200)
@given(samples())
def test_swap_antisymmetry(s):
    for m in ALL_METHODS:
        try:
            a = run_test(s, m)
        except DegenerateStatisticError:
            continue
        b = run_test(s.swapped(), m)
        assert b.statistic == pytest.approx(-a.statistic, rel=1e-9, abs=1e-9)
        assert b.df == pytest.approx(a.df, rel=1e-12)
        assert b.p_value == pytest.approx(a.p_value, rel=1e-9, abs=1e-12)


@pytest.fixture(scope="module")
def million_normals():
    g = MT19937([derive_seed(8, 0, r) for r in range(1000)])
    return std_normals(g, 1000).ravel()


@pytest.mark.criterion(8)
@pytest.mark.parametrize("dist", ["Normal", "Gumbel"])
def test_moments_table_values(million_normals, dist):
    d = Distribution.parse(dist)
    x = transform_deviate(million_normals, d)
    assert abs(sps.skew(x) - d.skewness) <= 0.05
    assert abs(sps.kurtosis(x, fisher=False) - d.kurtosis) <= 0.5


@pytest.mark.criterion(8)
def test_moments_exponential(million_normals):
    x = transform_deviate(million_normals, Distribution.EXPONENTIAL)
    assert abs(sps.skew(x) - 2.0) <= 0.05


@pytest.mark.criterion(8)
def test_moments_lognormal(million_normals):
    x = transform_deviate(million_normals, Distribution.LOGNORMAL)
    assert abs(sps.skew(x) - 6.18) <= 1.0
    assert math.isclose(np.median(x), 1.0, abs_tol=0.01)
