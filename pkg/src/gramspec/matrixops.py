"""Symmetric-matrix construction, eigendecomposition, ESDs, and empirical
Stieltjes transforms.

The eigensolver is the package's own: Householder tridiagonalization
followed by implicit-shift iteration (numba path) or Sturm bisection
(numpy path), with a 30n sweep cap.  Nothing here calls a library
eigensolver; library routines appear only as independent oracles in the
test suite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, EigenNonConvergence

# Desk-scale cap on dense eigendecompositions.
MAX_ORDER = 4096


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric matrix; the lower triangle is authoritative."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError("SymMatrix needs a square 2-d array")
        if not np.all(np.isfinite(arr)):
            raise DomainError("SymMatrix entries must be finite")
        low = np.tril(arr)
        full = low + low.T - np.diag(np.diag(arr))
        full.flags.writeable = False
        object.__setattr__(self, "values", full)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.values))


@dataclass(frozen=True, eq=False)
class Esd:
    """Sorted eigenvalue list with a step-CDF view."""

    eigs: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.eigs, dtype=float))
        arr.flags.writeable = False
        object.__setattr__(self, "eigs", arr)

    @property
    def n(self) -> int:
        return self.eigs.size

    def cdf(self, x) -> np.ndarray | float:
        return esd_cdf(self, x)


def symmetric_from_lower(x, n: int) -> SymMatrix:
    """Wigner map: place x (row-major lower triangle, len n(n+1)/2) and scale by 1/sqrt(n)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != n * (n + 1) // 2:
        raise DomainError(f"need exactly n(n+1)/2 = {n * (n + 1) // 2} entries")
    a = np.zeros((n, n))
    a[np.tril_indices(n)] = x / math.sqrt(n)
    return SymMatrix(a)


def _as_array(x) -> np.ndarray:
    arr = getattr(x, "values", x)
    return np.asarray(arr, dtype=float)


def gram(x, n_rows: int | None = None) -> SymMatrix:
    """Sample covariance (1/N) X^T X of an N x p data matrix."""
    arr = _as_array(x)
    if arr.ndim != 2:
        raise DomainError("data matrix must be 2-d")
    n = arr.shape[0] if n_rows is None else int(n_rows)
    if n != arr.shape[0]:
        raise DomainError("n_rows must equal the row count")
    return SymMatrix((arr.T @ arr) / n)


def symmetrize_gram(x, n_rows: int | None = None,
                    n_cols: int | None = None) -> SymMatrix:
    """Embed X into the symmetric (N+p) x (N+p) matrix N^{-1/2} [[0, X^T], [X, 0]].

    Its spectrum is symmetric about 0; the squares of its nonzero
    eigenvalues are the nonzero eigenvalues of gram(X).
    """
    arr = _as_array(x)
    nn, pp = arr.shape
    if n_rows is not None and n_rows != nn:
        raise DomainError("n_rows must equal the row count")
    if n_cols is not None and n_cols != pp:
        raise DomainError("n_cols must equal the column count")
    scaled = arr / math.sqrt(nn)
    out = np.zeros((nn + pp, nn + pp))
    out[:pp, pp:] = scaled.T
    out[pp:, :pp] = scaled
    return SymMatrix(out)


def symmetric_eigenvalues(a) -> Esd:
    """All eigenvalues of a symmetric matrix, sorted ascending."""
    arr = _as_array(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError("need a square matrix")
    n = arr.shape[0]
    if n < 1:
        raise DomainError("order must be >= 1")
    if n > MAX_ORDER:
        raise DomainError(f"order {n} exceeds the configured cap {MAX_ORDER}")
    d, e = _kernels.tridiagonalize(arr)
    eigs, status = _kernels.tridiagonal_eigenvalues(d, e, 30 * n)
    if status:
        raise EigenNonConvergence(
            f"implicit-shift iteration exceeded the {30 * n} sweep cap "
            f"while deflating eigenvalue index {status - 1}", status - 1)
    return Esd(eigs)


def esd_cdf(e: Esd, x):
    """Step CDF F(x) = #{eigenvalues <= x} / n."""
    xs = np.asarray(x, dtype=float)
    vals = np.searchsorted(e.eigs, xs, side="right") / e.n
    return float(vals) if np.isscalar(x) or xs.ndim == 0 else vals


def stieltjes_empirical(e: Esd, z: complex) -> complex:
    """(1/n) Tr (A - zI)^{-1} via the eigenvalue form; requires Im z > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("Stieltjes transform is evaluated on Im z > 0 only")
    return complex(np.mean(1.0 / (e.eigs - z)))


def gram_stieltjes_identity(x, z: complex) -> tuple[complex, complex]:
    """Both sides of the Gram/symmetrized-matrix Stieltjes relation.

    lhs: Stieltjes transform of gram(X) at z, via the p x p spectrum.
    rhs: z^{-1/2} (n / 2p) S(√z) + (N - p)/(2 p z) with n = N + p, where S is
    the Stieltjes transform of the symmetrized matrix and √z is the
    principal branch (Im √z > 0 on the upper half-plane).
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("identity needs Im z > 0")
    arr = _as_array(x)
    nn, pp = arr.shape
    lhs = stieltjes_empirical(symmetric_eigenvalues(gram(arr)), z)
    w = np.sqrt(complex(z))  # principal branch maps C+ into the first quadrant
    s_sym = stieltjes_empirical(symmetric_eigenvalues(symmetrize_gram(arr)), w)
    n_tot = nn + pp
    rhs = s_sym * n_tot / (2.0 * pp * w) + (nn - pp) / (2.0 * pp * z)
    return lhs, rhs


def esd_to_text(e: Esd, path) -> None:
    """One eigenvalue per line."""
    with open(path, "w") as fh:
        for v in e.eigs:
            fh.write(f"{v:.17g}\n")


def esd_to_csv(e: Esd, path) -> None:
    """CSV rows (index, lambda)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "lambda"])
        for i, v in enumerate(e.eigs):
            writer.writerow([i, f"{v:.17g}"])


def stieltjes_curve_to_csv(path, zs, values) -> None:
    """CSV rows (re_z, im_z, re_s, im_s)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_z", "im_z", "re_s", "im_s"])
        for z, s in zip(zs, values):
            z = complex(z)
            s = complex(s)
            writer.writerow([f"{z.real:.17g}", f"{z.imag:.17g}",
                             f"{s.real:.17g}", f"{s.imag:.17g}"])
