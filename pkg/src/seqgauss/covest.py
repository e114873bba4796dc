"""Overlapping-block cumulative long-run covariance estimation and diagnostics."""

from __future__ import annotations

import json

import numpy as np

from ._util import snapped_ceil
from .errors import InvalidInputError
from .matops import pack_symmetric, unpack_symmetric
from .procmodel import LinearKernel

Array = np.ndarray


class CovProcess:
    """Cumulative covariance path Q(0..n), stored through per-step increments.

    Q(0) = 0 and Q(k) = sum of the first k increments; each increment is a
    symmetric d x d matrix, PSD up to floating-point tolerance for estimator
    and analytic constructions.
    """

    __slots__ = ("increments",)

    def __init__(self, increments) -> None:
        inc = np.asarray(increments, dtype=float)
        if inc.ndim != 3 or inc.shape[1] != inc.shape[2]:
            raise InvalidInputError("increments must have shape (n, d, d)")
        if inc.shape[0] < 1 or inc.shape[1] < 1:
            raise InvalidInputError("need n >= 1 and d >= 1")
        if not np.all(np.isfinite(inc)):
            raise InvalidInputError("increments must be finite")
        sym = 0.5 * (inc + inc.transpose(0, 2, 1))
        scale = max(1.0, float(np.max(np.abs(inc))))
        if np.max(np.abs(inc - sym)) > 1e-8 * scale:
            raise InvalidInputError("increments must be symmetric")
        sym.flags.writeable = False
        self.increments = sym

    @property
    def horizon(self) -> int:
        return self.increments.shape[0]

    @property
    def dim(self) -> int:
        return self.increments.shape[1]

    def cumulative(self, k: int) -> Array:
        """Q(k) for 0 <= k <= n."""
        if not 0 <= k <= self.horizon:
            raise InvalidInputError(f"k must be in 0..{self.horizon}")
        if k == 0:
            return np.zeros((self.dim, self.dim))
        return self.increments[:k].sum(axis=0)

    def cumulatives(self) -> Array:
        """All of Q(0..n) stacked, shape (n + 1, d, d)."""
        out = np.zeros((self.horizon + 1, self.dim, self.dim))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def terminal(self) -> Array:
        return self.cumulative(self.horizon)

    def min_increment_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.increments)))

    def to_json_dict(self) -> dict:
        return {
            "n": self.horizon,
            "d": self.dim,
            "increments": [pack_symmetric(m).tolist() for m in self.increments],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CovProcess":
        try:
            n = int(payload["n"])
            d = int(payload["d"])
            packed = payload["increments"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed covariance-process payload: {exc}") from exc
        if len(packed) != n:
            raise InvalidInputError("increment count does not match n")
        inc = np.stack([unpack_symmetric(d, row) for row in packed]) if n else np.zeros((0, d, d))
        return cls(inc)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CovProcess":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def qhat(x, bandwidth: int, center: bool = False) -> CovProcess:
    """Overlapping-block estimator of the cumulative long-run covariance.

    Increment at time t >= b is the rank-1 outer product of the moving-window
    sum over (t-b+1..t), divided by b; increments before t = b are zero.  The
    window sums are maintained by a sliding update, O(n d + n d^2) total.

    ``center=True`` subtracts the global column means first; the estimator is
    otherwise applied to the raw data.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInputError("x must be a nonempty (n, d) matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x must be finite")
    n, d = x.shape
    b = int(bandwidth)
    if not 1 <= b <= n:
        raise InvalidInputError(f"bandwidth must be in 1..{n}")
    if center:
        x = x - x.mean(axis=0)
    prefix = np.vstack([np.zeros((1, d)), np.cumsum(x, axis=0)])
    windows = prefix[b:] - prefix[:-b]  # sums over (t-b+1..t) for t = b..n
    inc = np.zeros((n, d, d))
    inc[b - 1:] = np.einsum("ti,tj->tij", windows, windows) / b
    return CovProcess(inc)


def qtrue(kernel: LinearKernel, n: int) -> CovProcess:
    """Cumulated analytic long-run covariance path of a linear kernel."""
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("qtrue requires a linear kernel")
    if not 1 <= n <= kernel.horizon:
        raise InvalidInputError(f"n must be in 1..{kernel.horizon}")
    s = kernel.coeffs.sum(axis=0)
    base = s @ s.T
    inc = (kernel.schedule[:n] ** 2)[:, np.newaxis, np.newaxis] * base
    return CovProcess(inc)


def qhat_error(estimated: CovProcess, reference: CovProcess) -> float:
    """max_k trace-norm distance between two cumulative covariance paths."""
    if (estimated.horizon, estimated.dim) != (reference.horizon, reference.dim):
        raise InvalidInputError("covariance processes have mismatched shapes")
    diff = np.cumsum(estimated.increments - reference.increments, axis=0)
    eigs = np.linalg.eigvalsh(diff)
    return float(np.max(np.abs(eigs).sum(axis=1)))


def bandwidth_default(n: int) -> int:
    """Default moving-window length ceil(n^(1/3)), clamped to [1, n]."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return int(min(n, max(1, snapped_ceil(float(n) ** (1.0 / 3.0)))))
