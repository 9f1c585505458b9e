import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcid import (
    KernelSpec,
    cross_gram,
    gaussian_kernel,
    gram,
    kernel_eval,
    linear_kernel,
    resolve_bandwidth,
)
from mcid.errors import DegenerateCovariates, DimensionMismatch
from mcid.kernels import resolve

vectors = st.lists(
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    min_size=2,
    max_size=12,
)


def test_bandwidth_single_pair():
    assert resolve_bandwidth([[0.0, 0.0], [3.0, 4.0]]) == pytest.approx(5.0)


def test_bandwidth_median_of_three():
    assert resolve_bandwidth([[0.0], [1.0], [3.0]]) == pytest.approx(2.0)


def test_bandwidth_even_count_averages():
    # distances: 1, 2, 3, 1, 2, 1 -> sorted (1,1,1,2,2,3) -> median 1.5
    assert resolve_bandwidth([[0.0], [1.0], [2.0], [3.0]]) == pytest.approx(1.5)


def test_bandwidth_squared_option():
    assert resolve_bandwidth([[0.0, 0.0], [3.0, 4.0]], squared=True) == pytest.approx(25.0)


def test_bandwidth_degenerate():
    with pytest.raises(DegenerateCovariates):
        resolve_bandwidth([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateCovariates):
        resolve_bandwidth([[2.0]])


@given(vectors)
def test_bandwidth_permutation_invariant(rows):
    z = np.asarray(rows)
    perm = np.random.default_rng(0).permutation(len(rows))
    try:
        base = resolve_bandwidth(z)
    except DegenerateCovariates:
        with pytest.raises(DegenerateCovariates):
            resolve_bandwidth(z[perm])
        return
    assert resolve_bandwidth(z[perm]) == pytest.approx(base, rel=1e-12)


def test_eval_pinned_values():
    assert kernel_eval(linear_kernel(), [1.0, 2.0], [3.0, -1.0]) == pytest.approx(1.0)
    g = gaussian_kernel(2.0)
    assert kernel_eval(g, [1.0, 1.0], [1.0, 1.0]) == 1.0
    assert kernel_eval(g, [0.0, 0.0], [2.0, 0.0]) == pytest.approx(np.exp(-1.0))


def test_eval_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernel_eval(linear_kernel(), [1.0], [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        cross_gram(gaussian_kernel(1.0), np.zeros((3, 2)), np.zeros((2, 3)))


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("cubic")
    with pytest.raises(ValueError):
        KernelSpec("gaussian", -1.0)
    with pytest.raises(ValueError):
        KernelSpec("linear", 2.0)


@given(vectors)
@settings(max_examples=60)
def test_gram_matches_eval(rows):
    z = np.asarray(rows)
    for spec in (linear_kernel(), gaussian_kernel(1.7)):
        k = gram(spec, z)
        assert np.array_equal(k.values, k.values.T)
        for i in range(len(rows)):
            for j in range(len(rows)):
                assert k.values[i, j] == pytest.approx(
                    kernel_eval(k.spec, z[i], z[j]), abs=1e-12
                )


def test_gram_resolves_median_bandwidth():
    z = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    k = gram(gaussian_kernel(), z)
    assert k.spec.sigma2 == pytest.approx(5.0)  # distances 5, 10, 5
    assert np.all(np.diag(k.values) == 1.0)


def test_gaussian_gram_psd_and_positive():
    rng = np.random.default_rng(3)
    z = rng.normal(size=(50, 3))
    k = gram(gaussian_kernel(), z)
    assert np.all(k.values > 0.0)
    eigs = np.linalg.eigvalsh(k.values)
    assert eigs.min() >= -1e-8


def test_linear_gram_psd_with_slack():
    rng = np.random.default_rng(4)
    z = rng.normal(size=(30, 2))
    eigs = np.linalg.eigvalsh(gram(linear_kernel(), z).values)
    assert eigs.min() >= -1e-8


def test_cross_gram_consistent_with_gram():
    rng = np.random.default_rng(5)
    z = rng.normal(size=(8, 2))
    for spec in (linear_kernel(), gaussian_kernel(0.9)):
        k = gram(spec, z)
        kx = cross_gram(k.spec, z, z)
        assert np.allclose(kx, k.values, atol=1e-12)


def test_resolve_keeps_fixed_bandwidth():
    spec = gaussian_kernel(3.5)
    assert resolve(spec, np.zeros((4, 2))) is spec
    assert resolve(linear_kernel(), np.zeros((4, 2))).kind == "linear"
