"""Seeded generation of data matrices with independent stationary rows.

Each row gets its own counter-based substream keyed by (seed, stream, row
index), so any row can be regenerated in isolation and results do not
depend on chunking or worker scheduling.  Rows are linear processes
X_{i,t} = sum_k a_k eps_{i,t-k} driven by a unit-variance innovation law,
or exact Gaussian rows drawn through the PSD square root of the banded
covariance matrix.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, MemoryBudgetError
from .matrixops import SymMatrix
from .spectral import (LinearFilter, SpectralDensity, covariance_sequence,
                       filter_from_density)

# Default generation budget, in float64 slots (1 GiB).
DEFAULT_BUDGET = 2 ** 27

_MAGIC = b"GSPC"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ32s")

_KNOWN_LAWS = ("gaussian", "rademacher", "uniform", "student_t",
               "martingale_sign")


@dataclass(frozen=True)
class InnovationLaw:
    """Unit-variance innovation law for driving linear processes."""

    tag: str
    params: tuple = ()

    def __post_init__(self):
        if self.tag not in _KNOWN_LAWS:
            raise DomainError(f"unknown innovation law {self.tag!r}")
        if self.tag == "student_t":
            if len(self.params) != 1:
                raise DomainError("student_t law takes one parameter")
            nu = float(self.params[0])
            if not nu > 2.0:
                raise DomainError("student_t needs nu > 2 for a finite variance")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.tag == "gaussian":
            return rng.standard_normal(size)
        if self.tag == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.tag == "uniform":
            half = math.sqrt(3.0)
            return rng.uniform(-half, half, size=size)
        if self.tag == "student_t":
            nu = float(self.params[0])
            return rng.standard_t(nu, size=size) * math.sqrt((nu - 2.0) / nu)
        # martingale_sign: eps_t = eta_t * s_{t-1} where eta is Rademacher,
        # s_t = +1 if sum_{u<=t} eta_u >= 0 else -1, s_{-1} = +1.  Each eps_t
        # is conditionally Rademacher given the past, so the law is a
        # martingale-difference sequence with unit conditional variance but
        # is not independent across t.
        eta = 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        signs = np.where(np.cumsum(eta) >= 0.0, 1.0, -1.0)
        lagged = np.empty(size)
        lagged[0] = 1.0
        lagged[1:] = signs[:-1]
        return eta * lagged

    def describe(self) -> str:
        if self.params:
            inner = ",".join(f"{float(v):.17g}" for v in self.params)
            return f"{self.tag}({inner})"
        return self.tag


def gaussian_law() -> InnovationLaw:
    return InnovationLaw("gaussian")


def rademacher_law() -> InnovationLaw:
    return InnovationLaw("rademacher")


def uniform_law() -> InnovationLaw:
    return InnovationLaw("uniform")


def student_t_law(nu: float) -> InnovationLaw:
    return InnovationLaw("student_t", (float(nu),))


def martingale_sign_law() -> InnovationLaw:
    return InnovationLaw("martingale_sign")


def law_from_spec(spec: dict) -> InnovationLaw:
    """Build an innovation law from a config mapping like {"law": "student_t", "nu": 6}."""
    if not isinstance(spec, dict) or "law" not in spec:
        raise DomainError("innovation spec needs a 'law' key")
    tag = spec["law"]
    if tag == "student_t":
        if "nu" not in spec:
            raise DomainError("student_t innovation spec needs 'nu'")
        return student_t_law(float(spec["nu"]))
    if tag in _KNOWN_LAWS:
        return InnovationLaw(tag)
    raise DomainError(f"unknown innovation law {tag!r}")


def row_rng(seed: int, row: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one row's substream."""
    if row < 0 or row >= 1 << 48:
        raise DomainError("row index out of range")
    if stream < 0 or stream >= 1 << 16:
        raise DomainError("stream tag out of range")
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, (stream << 48) | row],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """N x p data matrix plus the provenance needed to regenerate it."""

    values: np.ndarray
    seed: int
    source: str

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise DomainError("DataMatrix values must be 2-d")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


def _check_budget(n_rows: int, n_cols: int, filt_len: int, budget: int) -> None:
    need = n_rows * (n_cols + filt_len)
    if need > budget:
        raise MemoryBudgetError(
            f"generation needs {need} float slots but the budget is {budget}; "
            "raise the budget or shrink the run")


def _linear_values(filt: LinearFilter, law: InnovationLaw, n_rows: int,
                   n_cols: int, seed: int, stream: int) -> np.ndarray:
    coeffs = filt.coeffs
    flen = coeffs.size
    m = n_cols + flen - 1  # innovations per row
    nfft = 1
    while nfft < n_cols + 2 * flen - 2:
        nfft <<= 1
    kern = np.fft.rfft(coeffs, nfft)
    out = np.empty((n_rows, n_cols))
    chunk = max(1, min(n_rows, (1 << 23) // max(nfft, 1)))
    for lo in range(0, n_rows, chunk):
        hi = min(lo + chunk, n_rows)
        eps = np.empty((hi - lo, m))
        for i in range(lo, hi):
            eps[i - lo] = law.sample(row_rng(seed, i, stream), m)
        conv = np.fft.irfft(np.fft.rfft(eps, nfft, axis=1) * kern, nfft, axis=1)
        out[lo:hi] = conv[:, flen - 1:flen - 1 + n_cols]
    return out


def generate_linear_rows(filt: LinearFilter, law: InnovationLaw, n_rows: int,
                         n_cols: int, seed: int, *, stream: int = 0,
                         budget: int = DEFAULT_BUDGET) -> DataMatrix:
    """Rows are independent copies of the linear process defined by filt."""
    if n_rows < 1 or n_cols < 1:
        raise DomainError("matrix dimensions must be positive")
    _check_budget(n_rows, n_cols, filt.coeffs.size, budget)
    vals = _linear_values(filt, law, n_rows, n_cols, seed, stream)
    src = (f"linear|off={filt.offset}|coef={_digest(filt.coeffs)}"
           f"|law={law.describe()}|N={n_rows}|p={n_cols}"
           f"|seed={seed}|stream={stream}")
    return DataMatrix(vals, seed, src)


def generate_gaussian_rows(f: SpectralDensity, n_rows: int, n_cols: int,
                           seed: int, *, tail_tol: float = 1e-6,
                           stream: int = 0,
                           budget: int = DEFAULT_BUDGET) -> DataMatrix:
    """Gaussian linear-process rows for the density f (filter built on demand)."""
    filt = filter_from_density(f, tail_tol=tail_tol)
    return generate_linear_rows(filt, gaussian_law(), n_rows, n_cols, seed,
                                stream=stream, budget=budget)


def toeplitz_matrix(f: SpectralDensity, p: int) -> SymMatrix:
    """p x p covariance matrix with entries cov(k) on the |i-j| = k diagonals."""
    if p < 1:
        raise DomainError("order must be >= 1")
    c = covariance_sequence(f, p - 1)
    idx = np.arange(p)
    return SymMatrix(c[np.abs(np.subtract.outer(idx, idx))])


def generate_toeplitz_gaussian_rows(f: SpectralDensity, n_rows: int,
                                    n_cols: int, seed: int, *,
                                    stream: int = 0,
                                    budget: int = DEFAULT_BUDGET) -> DataMatrix:
    """Exact stationary Gaussian rows: N(0, Gamma_p) via the PSD square root.

    The square root uses the library symmetric eigendecomposition; this is
    deliberate plumbing, not a replacement for the package eigensolver,
    which never touches this path.
    """
    if n_rows < 1 or n_cols < 1:
        raise DomainError("matrix dimensions must be positive")
    _check_budget(n_rows, n_cols, n_cols, budget)
    gam = toeplitz_matrix(f, n_cols)
    c0 = float(gam.values[0, 0])
    w, v = np.linalg.eigh(gam.values)
    if w[0] < -1e-8 * c0:
        raise DomainError(
            f"covariance matrix is indefinite beyond tolerance "
            f"(min eigenvalue {w[0]:.3e} vs -1e-8*c0 = {-1e-8 * c0:.3e})")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    out = np.empty((n_rows, n_cols))
    for i in range(n_rows):
        out[i] = row_rng(seed, i, stream).standard_normal(n_cols) @ root
    src = (f"toeplitz-gaussian|f={f.family}|params={_params_str(f)}"
           f"|N={n_rows}|p={n_cols}|seed={seed}|stream={stream}")
    return DataMatrix(out, seed, src)


def generate_stationary_lower_triangle(filt: LinearFilter, law: InnovationLaw,
                                       n: int, seed: int, *, stream: int = 0,
                                       budget: int = DEFAULT_BUDGET
                                       ) -> np.ndarray:
    """Row-major lower-triangle entries, each row a fresh copy of the process.

    Row i contributes its first i+1 coordinates, so entries within a row are
    dependent (stationary) while distinct rows are independent.  Output has
    length n(n+1)/2, matching the layout of symmetric_from_lower.
    """
    if n < 1:
        raise DomainError("order must be >= 1")
    _check_budget(n, n, filt.coeffs.size, budget)
    vals = _linear_values(filt, law, n, n, seed, stream)
    return vals[np.tril_indices(n)].copy()


@dataclass(frozen=True)
class EnsembleConfig:
    """Recipe for one seeded data matrix; aspect ratio is kept exact."""

    kind: str  # "filter" | "gaussian-from-density" | "toeplitz-gaussian"
    n_rows: int
    n_cols: int
    seed: int
    density: SpectralDensity | None = None
    filt: LinearFilter | None = None
    law: InnovationLaw | None = None
    tail_tol: float = 1e-6
    stream: int = 0
    budget: int = field(default=DEFAULT_BUDGET, repr=False)

    def __post_init__(self):
        if self.kind not in ("filter", "gaussian-from-density",
                             "toeplitz-gaussian"):
            raise DomainError(f"unknown ensemble kind {self.kind!r}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise DomainError("matrix dimensions must be positive")
        if self.kind == "filter" and (self.filt is None or self.law is None):
            raise DomainError("filter ensembles need filt and law")
        if self.kind != "filter" and self.density is None:
            raise DomainError(f"{self.kind} ensembles need a density")

    @property
    def aspect_ratio(self) -> Fraction:
        return Fraction(self.n_cols, self.n_rows)


def generate(config: EnsembleConfig) -> DataMatrix:
    if config.kind == "filter":
        return generate_linear_rows(config.filt, config.law, config.n_rows,
                                    config.n_cols, config.seed,
                                    stream=config.stream, budget=config.budget)
    if config.kind == "gaussian-from-density":
        return generate_gaussian_rows(config.density, config.n_rows,
                                      config.n_cols, config.seed,
                                      tail_tol=config.tail_tol,
                                      stream=config.stream,
                                      budget=config.budget)
    return generate_toeplitz_gaussian_rows(config.density, config.n_rows,
                                           config.n_cols, config.seed,
                                           stream=config.stream,
                                           budget=config.budget)


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()[:16]


def _params_str(f: SpectralDensity) -> str:
    return ",".join(repr(v) for v in f.params)


def _source_hash(source: str) -> bytes:
    if source.startswith("sha256:"):
        return bytes.fromhex(source[len("sha256:"):])
    return hashlib.sha256(source.encode("utf-8")).digest()


def write_datamatrix(dm: DataMatrix, path) -> None:
    """Binary cache: 64-byte header then row-major little-endian float64."""
    header = _HEADER.pack(_MAGIC, _VERSION, dm.n_rows, dm.n_cols,
                          dm.seed & 0xFFFFFFFFFFFFFFFF, _source_hash(dm.source))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(dm.values, dtype="<f8").tobytes())


def read_datamatrix(path) -> DataMatrix:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise DomainError(f"{path}: truncated header")
        magic, version, n_rows, n_cols, seed, digest = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise DomainError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise DomainError(f"{path}: unsupported version {version}")
        body = fh.read(8 * n_rows * n_cols)
    if len(body) != 8 * n_rows * n_cols:
        raise DomainError(f"{path}: truncated payload")
    vals = np.frombuffer(body, dtype="<f8").reshape(n_rows, n_cols)
    return DataMatrix(vals.astype(float), seed, "sha256:" + digest.hex())


def datamatrix_to_csv(dm: DataMatrix, path) -> None:
    np.savetxt(path, dm.values, delimiter=",", fmt="%.17g")
