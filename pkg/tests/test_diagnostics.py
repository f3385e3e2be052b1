import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feelgood.core import Explicit, Tabular
from feelgood.diagnostics import (
    DEFAULT_GAMMA_GRID,
    GdcInstance,
    check_prop1,
    check_prop2,
    check_variance_sum_lemma,
    elliptical_potential_check,
    elliptical_sweep,
    empirical_mgf_check,
    gdc_per_gamma,
    gen_eluder_dim,
    linear_dc_bound,
    mgf_report,
    min_gdc_bruteforce,
    random_linear_instance,
    random_tabular_instance,
    variance_sum_sweep,
)


def test_variance_sum_examples():
    assert check_variance_sum_lemma([1.0]) == (1.0, 2.0, True)
    lhs, rhs, ok = check_variance_sum_lemma([1, 1, 1, 1])
    assert lhs == pytest.approx(1 + 1 / math.sqrt(2) + 1 / math.sqrt(3) + 0.5)
    assert lhs == pytest.approx(2.78446, abs=1e-5)
    assert (rhs, ok) == (4.0, True)
    with pytest.raises(ValueError):
        check_variance_sum_lemma([1.0, 0.0])


@given(st.lists(st.floats(1e-4, 1e4), min_size=1, max_size=200))
def test_variance_sum_property(s):
    assert check_variance_sum_lemma(s)[2]


def test_elliptical_examples():
    lhs, logdet, bound, ok = elliptical_potential_check(np.ones((3, 1)), [1, 1, 1], 1.0, 1.0)
    assert lhs == pytest.approx(1 + 1 / 2 + 1 / 3)
    assert bound == pytest.approx(2 * math.log(4))
    assert logdet == pytest.approx(2 * math.log(4))
    assert ok
    assert elliptical_potential_check(np.zeros((0, 2)), [], 1.0, 1.0) == (0.0, 0.0, 0.0, True)


def test_elliptical_validation():
    with pytest.raises(ValueError):
        elliptical_potential_check(np.ones((1, 1)), [2.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        elliptical_potential_check(np.full((1, 2), 1.0), [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        elliptical_potential_check(np.ones((1, 1)), [1.0], 0.0, 1.0)


def _exhaustive_gdc(inst, gammas):
    """Enumerate every sequence (f_1..f_T) and evaluate the definition directly."""
    g = inst.values - inst.values[inst.star]
    best = -np.inf
    for gamma in gammas:
        for seq in itertools.product(range(inst.size), repeat=inst.T):
            lhs = sum(g[f, t] for t, f in enumerate(seq))
            hist = sum(gamma / inst.beta[t] * sum(inst.beta[s] * g[f, s] ** 2 for s in range(t))
                       for t, f in enumerate(seq))
            val = (lhs - hist - gamma * inst.lam * np.sum(1 / inst.beta)) / (1 + 1 / (4 * gamma))
            best = max(best, val)
    return max(best, 0.0)


def test_gdc_singleton_is_zero():
    inst = GdcInstance(np.array([[0.3, 0.7, 0.1]]), 0, [1.0, 0.5, 2.0], 1.0, 2.0)
    assert min_gdc_bruteforce(inst) == 0.0
    assert gen_eluder_dim(inst) == 0.0


def test_gdc_single_round_closed_form():
    inst = GdcInstance(np.array([[0.2], [0.9], [0.5]]), 0, [0.5], 0.3, 1.0)
    best = max(max(f - 0.2 - gam * 0.3 / 0.5 for f in (0.2, 0.9, 0.5)) / (1 + 1 / (4 * gam))
               for gam in DEFAULT_GAMMA_GRID)
    assert min_gdc_bruteforce(inst) == pytest.approx(max(best, 0.0), abs=1e-12)
    assert min_gdc_bruteforce(inst) == pytest.approx(_exhaustive_gdc(inst, DEFAULT_GAMMA_GRID), abs=1e-12)


def test_gdc_two_function_repeated_point():
    inst = GdcInstance(np.array([[0.0, 0.0], [0.5, 0.5]]), 0, [1.0, 1.0], 1.0, 1.0)
    assert min_gdc_bruteforce(inst) == pytest.approx(_exhaustive_gdc(inst, DEFAULT_GAMMA_GRID), abs=1e-12)


@given(st.integers(0, 2**31))
def test_gdc_decomposition_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    m, T = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    eps = float(rng.uniform(0.1, 3))
    inst = GdcInstance(rng.random((m, T)), int(rng.integers(m)), rng.uniform(0.05, 1, T) * eps,
                       float(rng.choice([0.1, 1.0])), eps)
    grid = DEFAULT_GAMMA_GRID[::8]
    assert min_gdc_bruteforce(inst, grid) == pytest.approx(_exhaustive_gdc(inst, grid), abs=1e-12)


def test_gdc_empty_grid():
    inst = GdcInstance(np.array([[0.0]]), 0, [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        min_gdc_bruteforce(inst, [])
    with pytest.raises(ValueError):
        gdc_per_gamma(inst, [0.0])


@given(st.integers(0, 2**31))
def test_gdc_monotone_in_class(seed):
    rng = np.random.default_rng(seed)
    inst = random_tabular_instance(rng)
    extra = rng.random((3, inst.T))
    bigger = GdcInstance(np.vstack([inst.values, extra]), inst.star, inst.beta, inst.lam, inst.epsilon)
    assert min_gdc_bruteforce(bigger) >= min_gdc_bruteforce(inst) - 1e-12


def test_eluder_examples():
    one = GdcInstance(np.array([[0.0], [1.0]]), 0, [1.0], 1.0, 1.0)
    assert gen_eluder_dim(one) == pytest.approx(1.0)
    two = GdcInstance(np.array([[0.0, 0.0], [1.0, 1.0]]), 0, [1.0, 1.0], 1.0, 1.0)
    assert gen_eluder_dim(two) == pytest.approx(1.5)
    assert min_gdc_bruteforce(two) <= 1.5


@given(st.integers(0, 2**31))
def test_eluder_at_most_T(seed):
    inst = random_tabular_instance(np.random.default_rng(seed))
    assert 0.0 <= gen_eluder_dim(inst) <= inst.T


def test_eluder_pairwise_oracle():
    rng = np.random.default_rng(3)
    inst = random_tabular_instance(rng, max_size=6, max_T=5)
    v, b = inst.values, inst.beta
    total = 0.0
    for t in range(inst.T):
        D2 = 0.0
        for i, j in itertools.product(range(inst.size), repeat=2):
            den = inst.lam + sum(b[s] * (v[i, s] - v[j, s]) ** 2 for s in range(t))
            D2 = max(D2, (v[i, t] - v[j, t]) ** 2 / den)
        total += min(1.0, b[t] * D2)
    assert gen_eluder_dim(inst) == pytest.approx(total, abs=1e-12)


def test_from_functions():
    fs = [Tabular([[0.1, 0.9]]), Tabular([[0.5, 0.5]])]
    acts = Explicit(np.eye(2))
    pts = [(acts.feature(1), 1, 0), (acts.feature(0), 0, 0)]
    inst = GdcInstance.from_functions(fs, pts, [1.0, 1.0], 1.0)
    np.testing.assert_allclose(inst.values, [[0.9, 0.1], [0.5, 0.5]])


def test_prop1_d1_example():
    inst = GdcInstance(np.linspace(-1, 1, 21)[:, None] * 1.0, 10, [1.0], 1.0, 1.0, dim=1)
    bound = linear_dc_bound(1, 1, 1.0, 1.0)
    assert bound == pytest.approx(2 * math.log(2))
    assert bound == pytest.approx(1.38629, abs=1e-5)
    assert min_gdc_bruteforce(inst) <= bound


def test_random_instances_well_formed():
    for i in range(20):
        lin = random_linear_instance(np.random.default_rng(i))
        assert lin.size <= 64 and lin.T <= 8 and 1 <= lin.dim <= 3
        assert np.all(lin.values[lin.star] == 0.0)
        tab = random_tabular_instance(np.random.default_rng(i))
        assert tab.size <= 16 and tab.T <= 6
        assert np.all((0 <= tab.values) & (tab.values <= 1))


def test_sweeps_pure_and_passing():
    for fn, n in ((check_prop1, 40), (check_prop2, 40), (variance_sum_sweep, 50), (elliptical_sweep, 50)):
        a, b = fn(n, seed=11), fn(n, seed=11)
        assert a.to_dict() == b.to_dict()
        assert a.holds and a.instances == n


def test_mgf_conventions():
    norm = lambda g, n: g.standard_normal(n)
    ok = empirical_mgf_check(norm, 4.0, [-1, -0.5, 0.5, 1], 100_000)
    assert ok["holds"]
    for row in ok["rows"]:
        assert row["log_mgf"] == pytest.approx(row["lambda"] ** 2 / 2, abs=0.02)
    assert not empirical_mgf_check(norm, 1.0, [-1, -0.5, 0.5, 1], 100_000)["holds"]
    assert empirical_mgf_check(norm, 1.0, [-1, 1], 100_000, convention="half")["holds"]
    zero = empirical_mgf_check(lambda g, n: np.zeros(n), 0.0, [-1, 1], 100_000)
    assert zero["holds"] and all(r["log_mgf"] == 0.0 for r in zero["rows"])


def test_mgf_out_of_range_and_validation():
    res = empirical_mgf_check(lambda g, n: g.standard_normal(n), 4.0, [0.5, 1e4], 100_000)
    assert res["out_of_range"] == [1e4]
    with pytest.raises(ValueError):
        empirical_mgf_check(lambda g, n: g.standard_normal(n), 4.0, [1.0], 10)
    with pytest.raises(ValueError):
        empirical_mgf_check(lambda g, n: g.standard_normal(n), 4.0, [1.0], 100_000, convention="x")


def test_mgf_report_json():
    rep = mgf_report()
    d = rep.to_dict()
    assert set(d) >= {"checker", "instances", "failures", "max_ratio", "holds"}
    assert d["holds"]
    assert not mgf_report(1.0).holds
