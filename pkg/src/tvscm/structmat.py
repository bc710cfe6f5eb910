"""Circulant algebra for two-valued symmetric circulant (TVSCM) weights.

A TVSCM of size ``n`` is built from two scalars ``a`` and ``b``: the
alternating row ``[a, b, a, b, ...]`` generates a circulant ``C`` (row ``i``
is row ``i - 1`` cyclically shifted right, ``C[i, j] = v[(j - i) % n]``),
which is then averaged with its transpose.  Only the ``n``-entry defining
vector of the symmetrized operator is stored.

Three exact matvec routes are provided:

* ``naive``: O(n^2) gather of the full matrix, used as the reference.
* ``fft``: diagonalization by the DFT, O(n log n).
* ``lowrank``: O(n) closed form.  For even ``n`` the operator has rank <= 2;
  for odd ``n`` it is ``((a - b)/2) I + ((a + b)/2) J``.

All routes accept a single vector or a ``(..., n)`` batch; since the
operator is symmetric, ``x @ W`` and ``W @ x`` coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionError, NumericsError, SizeError

MATERIALIZE_LIMIT = 4096
FFT_CROSSOVER = 64
MATVEC_PATHS = ("auto", "naive", "fft", "lowrank")


@dataclass(frozen=True)
class TwoValueParams:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"matrix dimension must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"a and b must be finite, got a={self.a!r}, b={self.b!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"defining vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericsError("defining vector contains non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class SymmetricCirculant:
    """First row of a symmetric circulant; the spectrum is computed lazily."""

    v_sym: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _as_vector(self.v_sym).copy()
        if not np.array_equal(v, v[(-np.arange(v.size)) % v.size]):
            raise ValueError("v_sym is not symmetric: v[k] != v[(n - k) % n]")
        v.setflags(write=False)
        object.__setattr__(self, "v_sym", v)

    @property
    def n(self) -> int:
        return self.v_sym.size

    @cached_property
    def spectrum(self) -> np.ndarray:
        return spectrum(self)

    @cached_property
    def half_spectrum(self) -> np.ndarray:
        # rfft layout, used by the FFT matvec
        return np.ascontiguousarray(self.spectrum[: self.n // 2 + 1])


def build_defining_vector(p: TwoValueParams) -> np.ndarray:
    """Return ``[a, b, a, b, ...]`` of length ``p.n``."""
    v = np.full(p.n, p.a)
    v[1::2] = p.b
    return v


def symmetrize(v) -> SymmetricCirculant:
    """Defining vector of ``(C(v) + C(v)^T) / 2``."""
    v = _as_vector(v)
    return SymmetricCirculant((v + v[(-np.arange(v.size)) % v.size]) / 2.0)


def circulant(v, direction: str = "right") -> np.ndarray:
    """Dense circulant generated by ``v`` with rows shifted ``direction``.

    ``right`` gives ``C[i, j] = v[(j - i) % n]``; ``left`` gives
    ``C[i, j] = v[(j + i) % n]``, which is already symmetric.  After
    symmetrization the two agree for even-length alternating vectors only;
    for odd ``n`` the left reading stays two-valued while the right one
    introduces ``(a + b) / 2``.
    """
    v = _as_vector(v)
    n = v.size
    _check_materialize(n, MATERIALIZE_LIMIT)
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    if direction == "right":
        return v[(j - i) % n]
    if direction == "left":
        return v[(j + i) % n]
    raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")


def _check_materialize(n: int, limit: int):
    if n > limit:
        raise SizeError(f"refusing to materialize a {n}x{n} matrix (limit {limit})")


@lru_cache(maxsize=16)
def _offset_index(n: int) -> np.ndarray:
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    idx.setflags(write=False)
    return idx


def materialize(s: SymmetricCirculant, limit: int = MATERIALIZE_LIMIT) -> np.ndarray:
    """Full ``n x n`` matrix with ``M[i, j] = v_sym[(j - i) % n]``."""
    _check_materialize(s.n, limit)
    return s.v_sym[_offset_index(s.n)]


def spectrum(s: SymmetricCirculant) -> np.ndarray:
    """Eigenvalues in DFT index order, ``lam_j = sum_k v[k] exp(-2 pi i j k / n)``.

    Raises NumericsError if the imaginary residue exceeds
    ``1e-9 * n * max|v_sym|``.
    """
    lam = np.fft.fft(s.v_sym)
    tol = 1e-9 * s.n * float(np.max(np.abs(s.v_sym)))
    worst = float(np.max(np.abs(lam.imag)))
    if worst > tol:
        raise NumericsError(f"spectrum has imaginary residue {worst:.3e} > {tol:.3e}")
    return np.ascontiguousarray(lam.real)


def _check_operand(n: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != n:
        raise DimensionError(f"operand last dimension must be {n}, got shape {x.shape}")
    return x


def matvec_naive(s: SymmetricCirculant, x) -> np.ndarray:
    """``y[i] = sum_j v_sym[(j - i) % n] x[j]`` via the gathered matrix."""
    x = _check_operand(s.n, x)
    return x @ s.v_sym[_offset_index(s.n)]


def matvec_fft(s: SymmetricCirculant, x) -> np.ndarray:
    """Same product through the real FFT: ``irfft(lam * rfft(x))``."""
    x = _check_operand(s.n, x)
    n = s.n
    if n == 1:
        return x * s.v_sym[0]
    return np.fft.irfft(np.fft.rfft(x, axis=-1) * s.half_spectrum, n=n, axis=-1)


def mask_decomposition(p: TwoValueParams | int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors with ``v_sym = a * M_A + b * M_B``."""
    n = p.n if isinstance(p, TwoValueParams) else TwoValueParams(0.0, 0.0, p).n
    m_a = np.zeros(n)
    m_b = np.zeros(n)
    if n % 2 == 0:
        m_a[0::2] = 1.0
        m_b[1::2] = 1.0
    else:
        m_a[0] = 1.0
        m_a[1:] = 0.5
        m_b[1:] = 0.5
    return m_a, m_b


@dataclass(frozen=True, eq=False)
class LowRankForm:
    """``W = diag * I + left @ right`` with ``left`` of shape ``(n, r)``, r <= 2."""

    diag: float
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)


def lowrank_form(p: TwoValueParams) -> LowRankForm:
    n = p.n
    if n % 2 == 0:
        left = np.zeros((n, 2))
        left[0::2, 0] = 1.0
        left[1::2, 1] = 1.0
        right = np.array([[p.a, p.b], [p.b, p.a]]) @ left.T
        return LowRankForm(0.0, left, np.ascontiguousarray(right))
    left = np.ones((n, 1))
    right = np.full((1, n), (p.a + p.b) / 2.0)
    return LowRankForm((p.a - p.b) / 2.0, left, right)


def matvec_lowrank(form: LowRankForm, x) -> np.ndarray:
    x = _check_operand(form.left.shape[0], x)
    y = (x @ form.left) @ form.right
    if form.diag != 0.0:
        y += form.diag * x
    return y


@dataclass(frozen=True, eq=False)
class TwoValueCirculant:
    """A TVSCM operator: the two scalars plus every derived representation."""

    params: TwoValueParams
    sym: SymmetricCirculant = field(repr=False)

    @classmethod
    def from_params(cls, a: float, b: float, n: int) -> "TwoValueCirculant":
        p = TwoValueParams(a, b, n)
        return cls(p, symmetrize(build_defining_vector(p)))

    @property
    def n(self) -> int:
        return self.params.n

    @cached_property
    def lowrank(self) -> LowRankForm:
        return lowrank_form(self.params)

    def resolve_path(self, path: str = "auto", crossover: int = FFT_CROSSOVER) -> str:
        if path not in MATVEC_PATHS:
            raise ValueError(f"unknown matvec path {path!r}; choose from {MATVEC_PATHS}")
        if path == "auto":
            return "fft" if self.n >= crossover else "naive"
        return path

    def matvec(self, x, path: str = "auto", crossover: int = FFT_CROSSOVER) -> np.ndarray:
        path = self.resolve_path(path, crossover)
        if path == "naive":
            return matvec_naive(self.sym, x)
        if path == "fft":
            return matvec_fft(self.sym, x)
        return matvec_lowrank(self.lowrank, x)


def numerical_rank(s: SymmetricCirculant, rtol: float = 1e-9) -> int:
    """Count eigenvalues above ``rtol * n * max|v_sym|``."""
    lam = s.spectrum
    scale = float(np.max(np.abs(s.v_sym)))
    if scale == 0.0:
        return 0
    return int(np.count_nonzero(np.abs(lam) > rtol * s.n * scale))
