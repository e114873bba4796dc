"""Dense symmetric-matrix numerics: spectral splits, PSD projection, roots, W2.

All heavy lifting is delegated to LAPACK via ``numpy.linalg.eigh``.  Matrices
are plain float arrays; :class:`SymMat` is the packed storage form used at
serialization boundaries (exact symmetry by construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NotPSDError

Array = np.ndarray

# Relative eigenvalue threshold below which an input no longer counts as PSD.
PSD_REL_TOL = 1e-6


class SymMat:
    """Symmetric matrix stored as the packed upper triangle, row-major."""

    __slots__ = ("dim", "data")

    def __init__(self, dim: int, data) -> None:
        dim = int(dim)
        if dim < 1:
            raise InvalidInputError("dim must be >= 1")
        data = np.asarray(data, dtype=float)
        expected = dim * (dim + 1) // 2
        if data.shape != (expected,):
            raise InvalidInputError(
                f"packed data for dim {dim} must have length {expected}, got shape {data.shape}"
            )
        self.dim = dim
        self.data = data

    @classmethod
    def from_full(cls, m, tol: float = 1e-8) -> "SymMat":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if not np.all(np.abs(m - m.T) <= tol * scale):
            raise InvalidInputError("matrix is not symmetric within tolerance")
        sym = 0.5 * (m + m.T)
        return cls(m.shape[0], sym[np.triu_indices(m.shape[0])])

    def full(self) -> Array:
        out = np.zeros((self.dim, self.dim))
        iu = np.triu_indices(self.dim)
        out[iu] = self.data
        out.T[iu] = self.data
        return out

    def __repr__(self) -> str:  # pragma: no cover
        return f"SymMat(dim={self.dim})"


def pack_symmetric(m: Array) -> Array:
    """Upper triangle of a symmetric matrix as a flat row-major vector."""
    m = np.asarray(m, dtype=float)
    return m[np.triu_indices(m.shape[0])]


def unpack_symmetric(dim: int, data) -> Array:
    return SymMat(dim, data).full()


def as_matrix(a) -> Array:
    """Coerce a SymMat or array-like to a dense symmetrized float matrix."""
    if isinstance(a, SymMat):
        return a.full()
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


@dataclass(frozen=True, eq=False)
class EigenDecomp:
    """Eigenvalues sorted descending, orthonormal eigenvectors in columns."""

    values: Array
    vectors: Array

    def reconstruct(self) -> Array:
        return (self.vectors * self.values) @ self.vectors.T


def eigen(a) -> EigenDecomp:
    """Symmetric eigendecomposition with descending eigenvalues."""
    m = as_matrix(a)
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    w, v = np.linalg.eigh(m)
    return EigenDecomp(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues (nuclear norm); equals the trace on PSD input."""
    m = as_matrix(a)
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def pos_neg_parts(delta) -> tuple[Array, Array, Array]:
    """Spectral split into PSD parts: delta = plus - minus, |delta| = plus + minus."""
    dec = eigen(delta)
    v = dec.vectors
    plus = (v * np.maximum(dec.values, 0.0)) @ v.T
    minus = (v * np.maximum(-dec.values, 0.0)) @ v.T
    plus = 0.5 * (plus + plus.T)
    minus = 0.5 * (minus + minus.T)
    return plus, minus, plus + minus


def psd_project(a, tol: float = 0.0) -> Array:
    """Clip eigenvalues below ``tol`` to zero.  Idempotent; fixes PSD inputs."""
    if tol < 0:
        raise InvalidInputError("tol must be >= 0")
    dec = eigen(a)
    w = np.maximum(dec.values, 0.0)
    w[w < tol] = 0.0
    out = (dec.vectors * w) @ dec.vectors.T
    return 0.5 * (out + out.T)


def _checked_spectrum(a, rel_tol: float = PSD_REL_TOL) -> EigenDecomp:
    dec = eigen(a)
    scale = float(np.max(np.abs(dec.values)))
    wmin = float(dec.values[-1])
    if wmin < -rel_tol * max(scale, np.finfo(float).tiny):
        raise NotPSDError(
            f"eigenvalue {wmin:.6e} is below -{rel_tol:g} * lambda_max ({scale:.6e})"
        )
    return dec


def sqrt_psd(a) -> Array:
    """Symmetric PSD square root; tiny negative eigenvalues are clipped first."""
    dec = _checked_spectrum(a)
    w = np.sqrt(np.maximum(dec.values, 0.0))
    out = (dec.vectors * w) @ dec.vectors.T
    return 0.5 * (out + out.T)


def gaussian_w2(sigma1, sigma2) -> float:
    """2-Wasserstein distance between centred Gaussians with these covariances.

    Computes sqrt(tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})), clamped at 0.
    """
    s1 = as_matrix(sigma1)
    s2 = as_matrix(sigma2)
    if s1.shape != s2.shape:
        raise InvalidInputError("covariance shapes differ")
    r1 = sqrt_psd(s1)
    _checked_spectrum(s2)
    cross = r1 @ s2 @ r1
    w = np.linalg.eigvalsh(0.5 * (cross + cross.T))
    inner = float(np.trace(s1) + np.trace(s2)) - 2.0 * float(np.sum(np.sqrt(np.maximum(w, 0.0))))
    return float(np.sqrt(max(inner, 0.0)))
