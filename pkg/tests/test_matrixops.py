"""Symmetric embeddings, Gram matrices, the hand-rolled eigensolver."""

import math

import numpy as np
import pytest

import gramspec
from gramspec import matrixops
from gramspec.errors import DomainError

from _oracles import charpoly_coefficients


# ---------------------------------------------------------------------------
# lower-triangle embedding and Gram forms


def test_symmetric_from_lower_hand_case():
    # n = 3: entries fill the lower triangle row-major, then scale 1/sqrt(3)
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    m = gramspec.symmetric_from_lower(x, 3)
    expect = np.array([[1.0, 2.0, 4.0],
                       [2.0, 3.0, 5.0],
                       [4.0, 5.0, 6.0]]) / math.sqrt(3.0)
    np.testing.assert_allclose(m.values, expect, rtol=1e-15)


def test_symmetric_from_lower_rejects_wrong_length():
    with pytest.raises(DomainError):
        gramspec.symmetric_from_lower(np.arange(5, dtype=float), 3)


def test_gram_is_normalized_cross_product():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((11, 4))
    g = gramspec.gram(x)
    np.testing.assert_allclose(g.values, x.T @ x / 11.0, rtol=1e-14)
    with pytest.raises(DomainError):
        gramspec.gram(x, n_rows=10)


def test_symmetrize_gram_squares_to_gram_spectrum():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 5))
    sym = gramspec.symmetrize_gram(x)
    assert sym.values.shape == (13, 13)
    sq = np.sort(gramspec.symmetric_eigenvalues(sym).eigs ** 2)
    gram_eigs = np.sort(gramspec.symmetric_eigenvalues(gramspec.gram(x)).eigs)
    # squares of the 13 embedded eigenvalues: the 5 Gram eigenvalues twice
    # (in +/- pairs) plus |N - p| = 3 zeros
    np.testing.assert_allclose(sq[:3], 0.0, atol=1e-12)
    np.testing.assert_allclose(sq[3::2], gram_eigs, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(sq[4::2], gram_eigs, rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------------------
# eigensolver versus an independent dense routine


@pytest.mark.parametrize("n", [1, 2, 3, 5, 16, 64, 128])
def test_eigenvalues_match_lapack(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n))
    a = (a + a.T) / 2.0
    got = gramspec.symmetric_eigenvalues(gramspec.SymMatrix(a)).eigs
    expect = np.linalg.eigvalsh(a)
    scale = max(1.0, float(np.linalg.norm(a)))
    np.testing.assert_allclose(np.sort(got), expect, atol=1e-10 * scale)


def test_eigenvalues_degenerate_and_diagonal():
    d = np.diag([3.0, 3.0, 3.0, -1.0, -1.0, 7.0])
    got = np.sort(gramspec.symmetric_eigenvalues(gramspec.SymMatrix(d)).eigs)
    np.testing.assert_allclose(got, np.sort(np.diag(d)), atol=1e-12)
    rank1 = np.outer(np.ones(5), np.ones(5))
    got1 = np.sort(gramspec.symmetric_eigenvalues(
        gramspec.SymMatrix(rank1)).eigs)
    np.testing.assert_allclose(got1, [0, 0, 0, 0, 5.0], atol=1e-12)


def test_eigenvalues_charpoly_oracle_5x5():
    rng = np.random.default_rng(55)
    a = rng.standard_normal((5, 5))
    a = (a + a.T) / 2.0
    got = np.sort(gramspec.symmetric_eigenvalues(gramspec.SymMatrix(a)).eigs)
    roots = np.sort(np.roots(charpoly_coefficients(a)).real)
    np.testing.assert_allclose(got, roots, atol=1e-10)


def test_symmetric_eigenvalues_accepts_raw_arrays_and_validates():
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    e = gramspec.symmetric_eigenvalues(a)
    np.testing.assert_allclose(np.sort(e.eigs), [1.0, 3.0], atol=1e-13)
    # the lower triangle is authoritative: the upper entry is ignored
    skew = gramspec.symmetric_eigenvalues(np.array([[0.0, 9.0], [0.5, 0.0]]))
    np.testing.assert_allclose(np.sort(skew.eigs), [-0.5, 0.5], atol=1e-13)
    with pytest.raises(DomainError):
        gramspec.symmetric_eigenvalues(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# empirical spectral distribution and its Stieltjes transform


def test_esd_cdf_step_values():
    e = gramspec.Esd(np.array([1.0, 2.0, 2.0, 5.0]))
    assert e.n == 4
    xs = np.array([0.5, 1.0, 1.5, 2.0, 4.9, 5.0, 9.0])
    np.testing.assert_allclose(gramspec.esd_cdf(e, xs),
                               [0, 0.25, 0.25, 0.75, 0.75, 1.0, 1.0])


def test_stieltjes_empirical_is_resolvent_trace():
    rng = np.random.default_rng(4)
    eigs = np.sort(rng.uniform(0.0, 3.0, 12))
    e = gramspec.Esd(eigs)
    z = 0.7 + 0.2j
    got = gramspec.stieltjes_empirical(e, z)
    expect = complex(np.mean(1.0 / (eigs - z)))
    assert abs(got - expect) < 1e-14
    assert got.imag > 0
    with pytest.raises(DomainError):
        gramspec.stieltjes_empirical(e, 0.7 - 0.2j)


def test_gram_stieltjes_identity_agrees_on_random_instances():
    rng = np.random.default_rng(6)
    for _ in range(25):
        n = int(rng.integers(2, 15))
        p = int(rng.integers(2, 15))
        x = rng.standard_normal((n, p))
        z = complex(rng.uniform(-2, 2), rng.uniform(0.05, 2.0))
        lhs, rhs = gramspec.gram_stieltjes_identity(x, z)
        assert abs(lhs - rhs) < 1e-12


# ---------------------------------------------------------------------------
# text exports (deterministic full-precision)


def test_esd_exports_roundtrip(tmp_path):
    eigs = np.array([0.1234567890123456, 1.0, math.pi])
    e = gramspec.Esd(eigs)
    csv_path = tmp_path / "esd.csv"
    matrixops.esd_to_csv(e, csv_path)
    rows = csv_path.read_text().strip().splitlines()
    assert rows[0].lower().startswith("index")
    back = [float(r.split(",")[1]) for r in rows[1:]]
    np.testing.assert_array_equal(back, eigs)
    # byte-determinism
    again = tmp_path / "esd2.csv"
    matrixops.esd_to_csv(e, again)
    assert csv_path.read_bytes() == again.read_bytes()

    txt_path = tmp_path / "esd.txt"
    matrixops.esd_to_text(e, txt_path)
    vals = [float(t) for t in txt_path.read_text().split()]
    np.testing.assert_array_equal(vals, eigs)


def test_stieltjes_curve_export(tmp_path):
    zs = [0.5 + 0.1j, 1.0 + 0.2j]
    vals = [complex(-1.0, 0.5), complex(-0.3, 0.9)]
    path = tmp_path / "curve.csv"
    matrixops.stieltjes_curve_to_csv(path, zs, vals)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == 3
    cells = rows[1].split(",")
    assert float(cells[0]) == 0.5 and float(cells[1]) == 0.1
    assert float(cells[2]) == -1.0 and float(cells[3]) == 0.5
