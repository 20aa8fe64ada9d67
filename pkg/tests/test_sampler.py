import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gmschauder.keyed import keyed_normal, keyed_uniform
from gmschauder.measures import empirical_moments
from gmschauder.process import DegenerateIncrementError, covariance, make_custom, make_ou, make_wiener
from gmschauder.sampler import (
    PathSample,
    SeedKey,
    conditional_expectation_path,
    initial_path,
    refine,
    refine_cells,
    sample_by_refinement,
    sample_coefficients,
    sample_paths,
    synthesize_path,
)
from gmschauder.tree import flat_index, make_tree, prefix_order_times, uniform_tree

TEST_SEED = 0


def test_keyed_draws_are_pure():
    a = sample_coefficients(5, [0, 1, 2], 6)
    b = sample_coefficients(5, [0, 1, 2], 6)
    assert np.array_equal(a, b)
    assert np.array_equal(sample_coefficients(5, [1], 6)[0], a[1])
    assert not np.array_equal(sample_coefficients(6, [0], 6)[0], a[0])
    assert SeedKey(5, 2, 3, 1).normal() == a[2, flat_index(3, 1)]


def test_level_extension_keeps_draws():
    a = sample_coefficients(9, np.arange(4), 5)
    b = sample_coefficients(9, np.arange(4), 6)
    assert np.array_equal(b[:, :32], a)


def test_uniforms_open_interval():
    u = keyed_uniform(0, np.arange(10_000), 3)
    assert np.all((u > 0) & (u < 1))
    assert np.all(np.isfinite(keyed_normal(2**63 - 1, [-1, 0, 2**40], 2**29)))


def test_keyed_normal_moments():
    x = keyed_normal(TEST_SEED, np.arange(100_000), flat_index(4, 3))
    assert abs(x.mean()) <= 0.02
    assert abs(x.var(ddof=1) - 1) <= 0.03
    assert stats.kstest(x, "norm").pvalue > 1e-3


def test_independent_nodes_uncorrelated():
    x = sample_coefficients(TEST_SEED, np.arange(50_000), 4)
    c = np.corrcoef(x.T)
    off = c[~np.eye(16, dtype=bool)]
    assert np.max(np.abs(off)) < 4.5 / math.sqrt(50_000)


def test_synthesize_basic():
    spec, tree = make_wiener(), uniform_tree(4)
    zero = synthesize_path(spec, tree, np.zeros(16), 4)
    assert np.all(zero.values == 0)
    xi = np.zeros(16)
    xi[0] = 1.0
    unit = synthesize_path(spec, tree, xi, 4)
    np.testing.assert_allclose(unit.values[0], unit.times, atol=1e-16)


def test_synthesize_against_dense_schauder_sum():
    spec, tree = make_wiener(), uniform_tree(5)
    rng = np.random.default_rng(3)
    xi = rng.normal(size=32)
    t = np.sort(rng.uniform(0, 1, 50))
    expected = xi[0] * t
    for n in range(1, 6):
        for k in range(2 ** (n - 1)):
            l, m, r = 2 * k * 2.0**-n, (2 * k + 1) * 2.0**-n, (2 * k + 2) * 2.0**-n
            tri = np.clip(np.minimum(t - l, r - t), 0, None) * 2 ** ((n - 1) / 2)
            expected += xi[flat_index(n, k)] * tri
    got = synthesize_path(spec, tree, xi, 5, t).values[0]
    np.testing.assert_allclose(got, expected, atol=1e-14)


def test_pinned_origin_and_dyadic_exactness():
    spec, tree = make_ou(1.1), uniform_tree(9)
    ids = np.arange(20)
    low = sample_paths(spec, tree, 4, 11, ids)
    assert np.all(low.values[:, 0] == 0.0)
    for N in (5, 7, 9):
        high = sample_paths(spec, tree, N, 11, ids).restrict(low.times)
        np.testing.assert_allclose(high.values, low.values, atol=1e-14)


def test_wiener_variance_at_half():
    p = sample_paths(make_wiener(), uniform_tree(8), 8, TEST_SEED, np.arange(100_000), grid=[0.5])
    var = p.values[:, 0].var(ddof=1)
    assert abs(var - 0.5) <= 3 * math.sqrt(2) * 0.5 / math.sqrt(100_000)


def test_gaussian_marginal_ks():
    spec = make_ou(0.8)
    t = 0.37
    p = sample_paths(spec, uniform_tree(10), 10, TEST_SEED, np.arange(10_000), grid=[t])
    from gmschauder.basis import partial_covariance

    sd = math.sqrt(partial_covariance(spec, uniform_tree(10), 10, t, t))
    assert stats.kstest(p.values[:, 0] / sd, "norm").pvalue > 1e-3


def test_covariance_law_ou():
    spec, tree = make_ou(-1.0), uniform_tree(3)
    m = empirical_moments(sample_paths(spec, tree, 3, TEST_SEED, np.arange(50_000)))
    exact = covariance(spec, m.times[:, None], m.times[None, :])
    assert np.all(np.abs(m.cov - exact) <= 3.5 * m.se_cov)


def test_conditional_expectation():
    w = make_wiener()
    Z = conditional_expectation_path(w, [0.0, 1.0], [0.0, 1.0])
    t = np.linspace(0, 1, 9)
    np.testing.assert_allclose(Z(t), t, atol=1e-16)
    spec, tree = make_ou(1.4), uniform_tree(3)
    times = prefix_order_times(tree, 3)
    assert np.all(conditional_expectation_path(spec, times, np.zeros(9))(t) == 0)
    vals = sample_paths(spec, tree, 3, 1, [0]).values[0]
    Z = conditional_expectation_path(spec, times, vals)
    assert np.array_equal(Z(times), vals)
    # continuity at the knots
    eps = 1e-9
    inner = times[1:-1]
    np.testing.assert_allclose(Z(inner - eps), Z(inner + eps), atol=1e-6)


def test_conditional_expectation_matches_gaussian_regression():
    spec = make_ou(0.6)
    times = np.array([0.0, 0.3, 0.55, 1.0])
    vals = np.array([0.0, 0.4, -0.2, 0.9])
    t = 0.42
    grid = np.array([0.3, 0.55, 1.0])
    C = covariance(spec, grid[:, None], grid[None, :])
    c = covariance(spec, t, grid)
    expected = c @ np.linalg.solve(C, vals[1:])
    assert conditional_expectation_path(spec, times, vals)(t) == pytest.approx(expected, abs=1e-12)


def test_refine_is_synthesis_pathwise():
    for spec in (make_wiener(), make_ou(2.0), make_ou(-0.7)):
        for tree in (uniform_tree(7), make_tree(7, 0.3)):
            ids = np.arange(50)
            a = sample_by_refinement(spec, tree, 7, 4, ids)
            b = sample_paths(spec, tree, 7, 4, ids)
            np.testing.assert_allclose(a.values, b.values, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 6), st.integers(0, 2**40), st.floats(-2, 2))
def test_refine_restriction_is_bit_exact(N, seed, alpha):
    spec, tree = make_ou(alpha), uniform_tree(7)
    path = sample_paths(spec, tree, N, seed, np.arange(5))
    fine = refine(spec, tree, path)
    assert fine.level == N + 1
    assert np.array_equal(fine.restrict(path.times).values, path.values)


def test_refine_midpoint_law():
    spec, tree = make_wiener(), uniform_tree(2)
    ids = np.arange(100_000)
    vals, _ = refine_cells(spec, tree, TEST_SEED, ids, 2, 0, 0.0, 0.0)
    se_mean = math.sqrt(0.125 / ids.size)
    se_var = math.sqrt(2) * 0.125 / math.sqrt(ids.size)
    assert abs(vals.mean()) <= 3 * se_mean
    assert abs(vals.var(ddof=1) - 0.125) <= 3 * se_var


def test_refine_order_and_thread_independence():
    spec, tree = make_ou(0.5), uniform_tree(6)
    ids = np.arange(64)
    whole = sample_by_refinement(spec, tree, 6, 21, ids)
    with ThreadPoolExecutor(4) as pool:
        parts = list(pool.map(lambda c: sample_by_refinement(spec, tree, 6, 21, c), np.array_split(ids[::-1], 8)))
    values = np.concatenate([p.values for p in parts])[::-1]
    assert np.array_equal(values, whole.values)


def test_refine_rejects_bad_input():
    spec, tree = make_wiener(), uniform_tree(3)
    path = sample_paths(spec, tree, 3, 0, [0])
    with pytest.raises(ValueError):
        refine(spec, tree, path)
    with pytest.raises(ValueError):
        refine(spec, uniform_tree(5), sample_paths(spec, make_tree(5, 0.3), 2, 0, [0]))


def test_degenerate_refinement_propagates():
    flat = make_custom(lambda t: np.where(t < 0.5, 1.0, 0.0), lambda t: 1.0 + t)
    tree = uniform_tree(3)
    path = sample_by_refinement(flat, tree, 3, 0, np.arange(10))
    assert path.degenerate
    right = path.times >= 0.5
    # on the flat stretch X_t / g(t) stays constant
    scaled = path.values[:, right] / (1.0 + path.times[right])
    np.testing.assert_allclose(scaled, np.broadcast_to(scaled[:, :1], scaled.shape), rtol=1e-12)


def test_initial_path_degenerate():
    flat = make_custom(lambda t: np.zeros_like(t), lambda t: np.ones_like(t))
    with pytest.raises(DegenerateIncrementError):
        initial_path(flat, uniform_tree(1), 0, [0])


def test_path_sample_validation():
    with pytest.raises(ValueError):
        PathSample(np.array([0.0, 0.5, 0.5]), np.zeros((1, 3)), np.array([0]), 1, 0)
    with pytest.raises(ValueError):
        PathSample(np.array([0.0, 1.0]), np.zeros((2, 2)), np.array([0]), 0, 0)
    p = sample_paths(make_wiener(), uniform_tree(2), 2, 0, [0])
    with pytest.raises(ValueError):
        p.restrict([0.3])
    with pytest.raises(TypeError):
        sample_paths(make_wiener(), uniform_tree(2), 2, 0, [0.5])
