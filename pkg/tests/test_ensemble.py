"""Innovation laws, per-row substreams, row generation, binary cache."""

import math

import numpy as np
import pytest

import gramspec
from gramspec import ensemble
from gramspec.errors import DomainError, MemoryBudgetError

from _oracles import ar1_covariance


M = 200_000  # Monte-Carlo draws per law check
TOL = 5.0 / math.sqrt(M)


# ---------------------------------------------------------------------------
# innovation laws: standardized to mean 0, variance 1


LAWS = {
    "gaussian": gramspec.gaussian_law,
    "rademacher": gramspec.rademacher_law,
    "uniform": gramspec.uniform_law,
    "student_t": lambda: gramspec.student_t_law(8.0),
    "martingale_sign": gramspec.martingale_sign_law,
}


@pytest.mark.parametrize("name", sorted(LAWS))
def test_law_mean_zero_variance_one(name):
    law = LAWS[name]()
    x = law.sample(np.random.default_rng(7), M)
    assert x.shape == (M,)
    assert abs(float(np.mean(x))) < TOL
    assert abs(float(np.var(x)) - 1.0) < 5.0 * TOL


def test_rademacher_values_are_signs():
    x = gramspec.rademacher_law().sample(np.random.default_rng(1), 5000)
    assert set(np.unique(x)) == {-1.0, 1.0}


def test_uniform_law_is_bounded():
    x = gramspec.uniform_law().sample(np.random.default_rng(1), 5000)
    assert float(np.max(np.abs(x))) <= math.sqrt(3.0) + 1e-12


def test_martingale_sign_is_uncorrelated_sign_sequence():
    x = gramspec.martingale_sign_law().sample(np.random.default_rng(3), M)
    assert set(np.unique(x)) == {-1.0, 1.0}
    # martingale differences: zero mean and no lag-1 correlation, though
    # the sequence is not independent
    assert abs(float(np.mean(x))) < TOL
    lag1 = float(np.mean(x[1:] * x[:-1]))
    assert abs(lag1) < TOL


def test_student_t_requires_finite_variance():
    with pytest.raises(DomainError):
        gramspec.student_t_law(2.0)
    with pytest.raises(DomainError):
        gramspec.student_t_law(1.5)


def test_law_from_spec():
    assert gramspec.law_from_spec({"law": "gaussian"}).tag == "gaussian"
    law = gramspec.law_from_spec({"law": "student_t", "nu": 6})
    assert law.tag == "student_t"
    with pytest.raises(DomainError):
        gramspec.law_from_spec({"law": "cauchy"})
    with pytest.raises(DomainError):
        gramspec.law_from_spec({"law": "student_t"})  # missing nu
    with pytest.raises(DomainError):
        gramspec.law_from_spec({})


# ---------------------------------------------------------------------------
# per-row substreams


def test_row_rng_reproducible_and_distinct():
    a = ensemble.row_rng(11, 3).standard_normal(8)
    b = ensemble.row_rng(11, 3).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    for other in (ensemble.row_rng(11, 4), ensemble.row_rng(12, 3),
                  ensemble.row_rng(11, 3, stream=1)):
        assert not np.array_equal(a, other.standard_normal(8))


def test_row_rng_validates_indices():
    with pytest.raises(DomainError):
        ensemble.row_rng(1, -1)
    with pytest.raises(DomainError):
        ensemble.row_rng(1, 0, stream=1 << 16)


# ---------------------------------------------------------------------------
# row generation


def test_generate_linear_rows_deterministic_and_shaped():
    filt = gramspec.LinearFilter(1, np.array([0.3, 1.0, 0.2]))
    law = gramspec.gaussian_law()
    a = gramspec.generate_linear_rows(filt, law, 20, 50, seed=5)
    b = gramspec.generate_linear_rows(filt, law, 20, 50, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.values.shape == (20, 50)
    assert a.seed == 5
    c = gramspec.generate_linear_rows(filt, law, 20, 50, seed=6)
    assert not np.array_equal(a.values, c.values)


def test_generate_linear_rows_ma1_covariance_statistics():
    # MA(1) x_t = e_t + theta e_{t-1}: autocovariances (1+theta^2, theta, 0)
    theta = 0.6
    filt = gramspec.LinearFilter(0, np.array([1.0, theta]))
    dm = gramspec.generate_linear_rows(filt, gramspec.gaussian_law(),
                                       4000, 64, seed=2)
    x = dm.values
    c0 = float(np.mean(x * x))
    c1 = float(np.mean(x[:, 1:] * x[:, :-1]))
    c2 = float(np.mean(x[:, 2:] * x[:, :-2]))
    tol = 5.0 / math.sqrt(x.size)
    assert abs(c0 - (1 + theta**2)) < 3 * tol
    assert abs(c1 - theta) < 3 * tol
    assert abs(c2) < 3 * tol


def test_generate_linear_rows_row_extension_is_stable():
    # adding rows never changes earlier rows (per-row substreams)
    filt = gramspec.LinearFilter(0, np.array([1.0, 0.5]))
    law = gramspec.rademacher_law()
    small = gramspec.generate_linear_rows(filt, law, 4, 30, seed=9)
    big = gramspec.generate_linear_rows(filt, law, 8, 30, seed=9)
    np.testing.assert_array_equal(big.values[:4], small.values)


def test_generate_toeplitz_gaussian_rows_covariance():
    f = gramspec.ar1_density(0.5, 1.0)
    dm = gramspec.generate_toeplitz_gaussian_rows(f, 4000, 6, seed=3)
    emp = dm.values.T @ dm.values / 4000.0
    tol = 5.0 / math.sqrt(4000)
    for i in range(6):
        for j in range(6):
            assert abs(emp[i, j] - ar1_covariance(i - j, 0.5)) < tol


def test_generate_gaussian_rows_matches_filter_route_statistics():
    # same density through the explicit-filter route and the gaussian
    # route: initial autocovariances must agree statistically
    f = gramspec.ar1_density(0.4, 1.0)
    dm = gramspec.generate_gaussian_rows(f, 3000, 48, seed=4, tail_tol=1e-5)
    x = dm.values
    tol = 5.0 / math.sqrt(x.size)
    assert abs(float(np.mean(x * x)) - ar1_covariance(0, 0.4)) < 3 * tol
    assert abs(float(np.mean(x[:, 1:] * x[:, :-1]))
               - ar1_covariance(1, 0.4)) < 3 * tol


def test_generate_dispatch_matches_direct_calls():
    f = gramspec.ar1_density(0.5, 1.0)
    filt = gramspec.LinearFilter(0, np.array([1.0, 0.5]))
    law = gramspec.gaussian_law()
    cfg = gramspec.EnsembleConfig(kind="filter", n_rows=6, n_cols=20, seed=8,
                                  filt=filt, law=law)
    np.testing.assert_array_equal(
        gramspec.generate(cfg).values,
        gramspec.generate_linear_rows(filt, law, 6, 20, seed=8).values)
    cfg2 = gramspec.EnsembleConfig(kind="toeplitz-gaussian", n_rows=6,
                                   n_cols=20, seed=8, density=f)
    np.testing.assert_array_equal(
        gramspec.generate(cfg2).values,
        gramspec.generate_toeplitz_gaussian_rows(f, 6, 20, seed=8).values)


def test_generate_lower_triangle_rows_are_process_copies():
    filt = gramspec.LinearFilter(0, np.array([1.0, 0.5]))
    law = gramspec.gaussian_law()
    n = 12
    tri = gramspec.generate_stationary_lower_triangle(filt, law, n, seed=7)
    assert tri.shape == (n * (n + 1) // 2,)
    again = gramspec.generate_stationary_lower_triangle(filt, law, n, seed=7)
    np.testing.assert_array_equal(tri, again)


def test_memory_budget_enforced():
    filt = gramspec.LinearFilter(0, np.array([1.0]))
    with pytest.raises(MemoryBudgetError):
        gramspec.generate_linear_rows(filt, gramspec.gaussian_law(),
                                      1000, 1000, seed=1, budget=1024)


# ---------------------------------------------------------------------------
# binary cache round-trip


def test_datamatrix_roundtrip(tmp_path):
    filt = gramspec.LinearFilter(0, np.array([1.0, 0.25]))
    dm = gramspec.generate_linear_rows(filt, gramspec.uniform_law(),
                                       9, 17, seed=42)
    path = tmp_path / "rows.bin"
    gramspec.write_datamatrix(dm, path)
    back = gramspec.read_datamatrix(path)
    np.testing.assert_array_equal(back.values, dm.values)
    assert back.seed == dm.seed
    assert back.n_rows == 9 and back.n_cols == 17


def test_datamatrix_rejects_corrupt_files(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00" * 10)
    with pytest.raises(DomainError):
        gramspec.read_datamatrix(path)
    filt = gramspec.LinearFilter(0, np.array([1.0]))
    dm = gramspec.generate_linear_rows(filt, gramspec.gaussian_law(),
                                       3, 5, seed=1)
    good = tmp_path / "good.bin"
    gramspec.write_datamatrix(dm, good)
    blob = good.read_bytes()
    (tmp_path / "trunc.bin").write_bytes(blob[:-8])
    with pytest.raises(DomainError):
        gramspec.read_datamatrix(tmp_path / "trunc.bin")
    (tmp_path / "magic.bin").write_bytes(b"XX" + blob[2:])
    with pytest.raises(DomainError):
        gramspec.read_datamatrix(tmp_path / "magic.bin")
