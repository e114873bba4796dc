"""Constructive Gaussian couplings and approximation-rate functions.

Three couplings are provided:

* :func:`couple_gaussian_pair` turns a N(0, S1) draw into a N(0, S2) draw by
  adding correlated noise with covariance |S2 - S1| (spectral absolute value),
  realised through one PSD factor of a 3d x 3d joint covariance.
* :func:`couple_partial_sums` couples two independent Gaussian path laws so
  that blockwise sums match the target covariances exactly.
* :func:`decoupled_surrogate` rebuilds a kernel path with block-wise
  independent prehistories, so block sums are mutually independent while each
  block keeps its original joint law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import snapped_ceil, snapped_floor
from .errors import InvalidInputError
from .matops import as_matrix, pos_neg_parts, sqrt_psd, trace_norm
from .procmodel import InnovationStream, Kernel

Array = np.ndarray

# Relative clip threshold for numerically indefinite joint/conditional covariances.
_CLIP_REL_TOL = 1e-8


# ---------------------------------------------------------------------------
# Rate functions and block sizes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateParams:
    """Moment/decay/sample parameters entering the approximation rates."""

    q: float
    beta: float
    n: int
    d: int

    def __post_init__(self) -> None:
        if not self.q > 2:
            raise InvalidInputError("q must exceed 2")
        if not self.beta > 1:
            raise InvalidInputError("beta must exceed 1")
        if not 1 <= self.d <= self.n:
            raise InvalidInputError("need 1 <= d <= n")


def rate_chi(q: float, beta: float) -> float:
    """Exponent of (d/n) in the blockwise coupling error under decay (q, beta)."""
    if not q > 2:
        raise InvalidInputError("q must exceed 2")
    if not beta > 1:
        raise InvalidInputError("beta must exceed 1")
    if beta >= 1.5:
        return (q - 2.0) / (6.0 * q - 4.0)
    return (beta - 1.0) * (q - 2.0) / (q * (4.0 * beta - 3.0) - 2.0)


def xi_breakpoint(q: float) -> float:
    """Branch boundary of :func:`rate_xi` between the middle and low regimes."""
    return (3.0 + 2.0 / q) / (1.0 + 2.0 / q)


def rate_xi(q: float, beta: float) -> float:
    """Exponent of (d/n) for the coupling with explicit long-run covariances.

    Requires beta > 2 so the long-run covariance is summable.
    """
    if not q > 2:
        raise InvalidInputError("q must exceed 2")
    if not beta > 2:
        raise InvalidInputError("beta must exceed 2 for a well-defined long-run covariance")
    if beta >= 3.0:
        return (q - 2.0) / (6.0 * q - 4.0)
    if beta > xi_breakpoint(q):
        return (beta - 2.0) * (q - 2.0) / ((4.0 * beta - 6.0) * q - 4.0)
    return 0.5 - 1.0 / beta


def rate_zaitsev(q: float, d: int, n: int, alpha: float = 0.01) -> float:
    """Classical strong-approximation comparator d^(8+alpha) n^(1/q - 1/2)."""
    if not q >= 2:
        raise InvalidInputError("q must be >= 2")
    if d < 1 or n < 1:
        raise InvalidInputError("need d >= 1 and n >= 1")
    return float(d) ** (8.0 + alpha) * float(n) ** (1.0 / q - 0.5)


def block_size(params: RateParams, regime: str) -> int:
    """Rate-matching block length for the chi or xi regime, clamped to [1, n]."""
    q, beta = params.q, params.beta
    base = params.n / params.d
    if regime == "chi":
        if beta >= 1.5:
            expo = (q - 2.0) / (3.0 * q - 2.0)
        else:
            expo = (q - 2.0) / (4.0 * q * beta - 3.0 * q - 2.0)
        length = snapped_ceil(base ** expo)
    elif regime == "xi":
        if not beta > 2:
            raise InvalidInputError("xi regime needs beta > 2")
        if beta >= 3.0:
            expo = (q - 2.0) / (3.0 * q - 2.0)
        elif beta > xi_breakpoint(q):
            expo = (0.5 - 1.0 / q) / (beta - 1.5 - 1.0 / q)
        else:
            expo = 1.0 / beta
        length = snapped_floor(base ** expo)
    else:
        raise InvalidInputError("regime must be 'chi' or 'xi'")
    return int(min(max(length, 1), params.n))


# ---------------------------------------------------------------------------
# Pairwise Gaussian coupling through the |Delta| split
# ---------------------------------------------------------------------------

def _split_feasibility_gap(s1: Array, minus: Array) -> float:
    """Most negative eigenvalue of S1 - Delta_-, scaled into relative units.

    The spectral-split joint covariance is PSD exactly when S1 dominates the
    negative part of S2 - S1.  That domination can fail structurally (not just
    through rounding): e.g. S1 = [[2, .12], [.12, .01]],
    S2 = [[1, .12], [.12, 1.01]] leaves S1 - Delta_- indefinite.
    """
    w = np.linalg.eigvalsh(s1 - minus)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    return float(w[0]) / scale


def _shared_noise_weight(s1: Array, s2: Array) -> tuple[Array, Array, float]:
    """Roots (B1, B2) and the mixing weight of the trace-matched shared-noise coupling.

    With Y = B1 g and Y' = B2 (u g + sqrt(1-u^2) g'), the coupled marginals are
    exact for every u in [0, 1], and u is chosen so that E||Y' - Y||^2 equals
    the trace norm of S2 - S1.  Feasibility of that u follows from
    ||B1 - B2||_F^2 <= ||S1 - S2||_tr (Powers-Stormer).
    """
    b1 = sqrt_psd(s1)
    b2 = sqrt_psd(s2)
    cross = float(np.trace(b1 @ b2))
    target = trace_norm(s2 - s1)
    total = float(np.trace(s1) + np.trace(s2))
    if cross <= np.finfo(float).tiny:
        return b1, b2, 0.0
    return b1, b2, float(min(1.0, max(0.0, (total - target) / (2.0 * cross))))


class GaussianPairCoupling:
    """Joint sampler of (Y, Y') with Y ~ N(0, S1), Y' ~ N(0, S2).

    Marginals are exact and E||Y' - Y||^2 equals the trace norm of S2 - S1
    for every PSD pair.  The primary construction adds noise with covariance
    |S2 - S1| through one PSD factor of the 3d x 3d joint covariance with
    blocks (S1, -Delta_-, Delta_-, Delta_+), computed once and reused across
    draws.  When S1 does not dominate Delta_- (see
    :func:`_split_feasibility_gap`) that joint covariance is indefinite, so
    the sampler falls back to the trace-matched shared-noise coupling; the
    deficit is recorded in :attr:`feasibility_gap` and
    :attr:`construction` names the path taken.
    """

    def __init__(self, sigma1, sigma2) -> None:
        s1 = as_matrix(sigma1)
        s2 = as_matrix(sigma2)
        if s1.shape != s2.shape:
            raise InvalidInputError("covariance shapes differ")
        d = s1.shape[0]
        self.dim = d
        self.mean_square_shift = trace_norm(s2 - s1)
        plus, minus, absd = pos_neg_parts(s2 - s1)
        self.feasibility_gap = _split_feasibility_gap(s1, minus)
        self.projection_shift = 0.0
        if self.feasibility_gap >= -_CLIP_REL_TOL:
            self.construction = "spectral-split"
            joint = np.zeros((3 * d, 3 * d))
            joint[:d, :d] = s1
            joint[:d, d:2 * d] = -minus
            joint[d:2 * d, :d] = -minus
            joint[d:2 * d, d:2 * d] = minus
            joint[2 * d:, 2 * d:] = plus
            w, v = np.linalg.eigh(joint)
            self.projection_shift = max(0.0, -float(w[0]))
            root = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
            self._factor = 0.5 * (root + root.T)
        else:
            self.construction = "shared-noise"
            self._roots = _shared_noise_weight(s1, s2)

    def sample_many(self, reps: int, rng: np.random.Generator) -> tuple[Array, Array]:
        """Draw ``reps`` coupled pairs; returns arrays of shape (reps, d)."""
        if reps < 1:
            raise InvalidInputError("reps must be >= 1")
        if self.construction == "spectral-split":
            g = rng.standard_normal((reps, 3 * self.dim))
            z = g @ self._factor.T
            y = z[:, :self.dim]
            y_prime = y + z[:, self.dim:2 * self.dim] + z[:, 2 * self.dim:]
            return y, y_prime
        b1, b2, u = self._roots
        g = rng.standard_normal((reps, self.dim))
        g_fresh = rng.standard_normal((reps, self.dim))
        y = g @ b1.T
        y_prime = (u * g + math.sqrt(1.0 - u * u) * g_fresh) @ b2.T
        return y, y_prime

    def sample(self, rng: np.random.Generator) -> tuple[Array, Array]:
        y, y_prime = self.sample_many(1, rng)
        return y[0], y_prime[0]


def couple_gaussian_pair(sigma1, sigma2, stream: InnovationStream) -> tuple[Array, Array]:
    """One coupled draw (Y, Y') with marginals N(0, sigma1) and N(0, sigma2)."""
    coupling = GaussianPairCoupling(sigma1, sigma2)
    return coupling.sample(stream.generator("couple-gaussian-pair"))


# ---------------------------------------------------------------------------
# Blocked coupling of partial-sum paths
# ---------------------------------------------------------------------------

def plan_blocks(n: int, block_length: int) -> tuple[int, ...]:
    """Boundaries 0 = t_0 < ... < t_M = n with block lengths in [L, 2L].

    The remainder n mod L is merged into the last block.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if not 1 <= block_length <= n:
        raise InvalidInputError("block length must be in [1, n]")
    m = n // block_length
    bounds = [i * block_length for i in range(m)] + [n]
    return tuple(bounds)


@dataclass(frozen=True, eq=False)
class CouplingPlan:
    """Blocking layout with per-block covariance pairs and delta spectra."""

    boundaries: tuple[int, ...]
    block_length: int
    block_covs: tuple[tuple[Array, Array], ...]      # (S_l, S'_l)
    block_delta_parts: tuple[tuple[Array, Array], ...]  # (Delta_+, Delta_-)

    def __post_init__(self) -> None:
        b = self.boundaries
        if len(b) < 2 or b[0] != 0:
            raise InvalidInputError("boundaries must start at 0 and contain at least one block")
        lengths = np.diff(b)
        if np.any(lengths < 1):
            raise InvalidInputError("boundaries must be strictly increasing")
        if np.any(lengths < self.block_length) or np.any(lengths > 2 * self.block_length):
            raise InvalidInputError("block lengths must lie in [L, 2L]")

    @property
    def n_blocks(self) -> int:
        return len(self.boundaries) - 1


@dataclass(frozen=True, eq=False)
class CoupledPaths:
    """A pair of coupled Gaussian paths plus the blocking plan that built them."""

    base: Array      # Y, shape (n, d)
    coupled: Array   # Y', shape (n, d)
    plan: CouplingPlan

    def __post_init__(self) -> None:
        if self.base.shape != self.coupled.shape or self.base.ndim != 2:
            raise InvalidInputError("paths must share one (n, d) shape")

    def base_partial_sums(self) -> Array:
        return np.cumsum(self.base, axis=0)

    def coupled_partial_sums(self) -> Array:
        return np.cumsum(self.coupled, axis=0)

    def max_gap(self) -> float:
        """max_k || sum_{t<=k} (Y_t - Y'_t) ||."""
        diff = np.cumsum(self.base - self.coupled, axis=0)
        return float(np.sqrt(np.max(np.einsum("td,td->t", diff, diff))))


def _as_cov_list(sigmas, n: int | None = None) -> Array:
    arr = np.stack([as_matrix(s) for s in sigmas])
    if n is not None and arr.shape[0] != n:
        raise InvalidInputError("covariance schedule has the wrong length")
    return arr


def _pseudo_inverse(mat: Array) -> Array:
    w, v = np.linalg.eigh(mat)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    inv = np.where(w > _CLIP_REL_TOL * max(scale, np.finfo(float).tiny), 1.0 / w, 0.0)
    return (v * inv) @ v.T


class PartialSumCoupling:
    """Couples independent N(0, S_t) path increments with a N(0, S'_t) schedule.

    Per block, noise with total covariance of trace ||S'_l - S_l||_tr is added
    (conditionally on the block sum, so the coupled block sum has covariance
    S'_l exactly) and split uniformly into within-block increments via a
    Gaussian bridge.  The block noise law is |Delta_l| whenever the spectral
    split is feasible; otherwise the trace-matched shared-noise cross
    covariance is used (same exact block marginals and noise trace).  Blocks
    with bit-identical schedules are passed through unchanged, so equal
    schedules give bit-identical paths.
    """

    def __init__(self, sigmas, sigmas_prime, block_length: int | None = None) -> None:
        sig = _as_cov_list(sigmas)
        sig_p = _as_cov_list(sigmas_prime, n=sig.shape[0])
        n, d = sig.shape[0], sig.shape[1]
        if sig_p.shape[1] != d:
            raise InvalidInputError("schedules have different dimensions")

        cum_diff = np.cumsum(sig - sig_p, axis=0)
        self.delta = float(np.max(np.abs(np.linalg.eigvalsh(cum_diff)).sum(axis=1)))
        self.rho = float(np.max(np.abs(np.linalg.eigvalsh(sig)).sum(axis=1)))
        if block_length is None:
            block_length = default_block_length(n, self.delta, self.rho)
        if not 1 <= block_length <= n:
            raise InvalidInputError("block length must be in [1, n]")

        self._factors = self._per_step_factors(sig)
        bounds = plan_blocks(n, block_length)
        covs = []
        parts = []
        blocks = []
        fallbacks = 0
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            s_l = sig[lo:hi].sum(axis=0)
            sp_l = sig_p[lo:hi].sum(axis=0)
            plus, minus, absd = pos_neg_parts(sp_l - s_l)
            covs.append((s_l, sp_l))
            parts.append((plus, minus))
            if np.array_equal(sig[lo:hi], sig_p[lo:hi]):
                blocks.append(None)
                continue
            if _split_feasibility_gap(s_l, minus) >= -_CLIP_REL_TOL:
                cross = s_l - minus  # Cov(xi, xi'); block noise ~ |Delta_l|
            else:
                fallbacks += 1
                b1, b2, u = _shared_noise_weight(s_l, sp_l)
                cross = u * (b1 @ b2)
            s_pinv = _pseudo_inverse(s_l)
            gain = (cross.T - s_l) @ s_pinv
            noise_cov = s_l + sp_l - cross - cross.T
            cond_cov = noise_cov - gain @ (cross - s_l)
            blocks.append((gain, _clipped_root(cond_cov),
                           _clipped_root(noise_cov) / math.sqrt(hi - lo)))
        self.plan = CouplingPlan(boundaries=bounds, block_length=block_length,
                                 block_covs=tuple(covs), block_delta_parts=tuple(parts))
        self._blocks = blocks
        self.fallback_blocks = fallbacks
        self.n = n
        self.dim = d

    @staticmethod
    def _per_step_factors(sig: Array) -> list[tuple[np.ndarray, Array]]:
        """Unique PSD roots with the index sets they apply to."""
        groups: dict[bytes, list[int]] = {}
        for t in range(sig.shape[0]):
            groups.setdefault(sig[t].tobytes(), []).append(t)
        return [(np.asarray(idx), sqrt_psd(sig[idx[0]]))
                for idx in groups.values()]

    def sample_many(self, reps: int, rng: np.random.Generator) -> tuple[Array, Array]:
        """Draw ``reps`` coupled path pairs, shapes (reps, n, d)."""
        if reps < 1:
            raise InvalidInputError("reps must be >= 1")
        base = rng.standard_normal((reps, self.n, self.dim))
        y = np.empty_like(base)
        for idx, root in self._factors:
            y[:, idx, :] = base[:, idx, :] @ root.T
        y_prime = y.copy()
        bounds = self.plan.boundaries
        for (lo, hi), block in zip(zip(bounds[:-1], bounds[1:]), self._blocks):
            if block is None:
                continue
            gain, noise_factor, piece_factor = block
            m = hi - lo
            xi = y[:, lo:hi, :].sum(axis=1)
            zeta = xi @ gain.T + rng.standard_normal((reps, self.dim)) @ noise_factor.T
            w = rng.standard_normal((reps, m, self.dim)) @ piece_factor.T
            pieces = w + (zeta - w.sum(axis=1))[:, np.newaxis, :] / m
            y_prime[:, lo:hi, :] += pieces
        return y, y_prime

    def sample(self, rng: np.random.Generator) -> CoupledPaths:
        y, y_prime = self.sample_many(1, rng)
        return CoupledPaths(base=y[0], coupled=y_prime[0], plan=self.plan)


def _clipped_root(mat: Array) -> Array:
    """PSD root with small negative eigenvalues clipped (conditional covariances)."""
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    root = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
    return 0.5 * (root + root.T)


def default_block_length(n: int, delta: float, rho: float) -> int:
    """Error-balancing block length 1 v ceil(sqrt(n * delta / rho)), clamped to n."""
    if rho <= 0:
        return 1
    return int(min(n, max(1, snapped_ceil(math.sqrt(n * delta / rho)))))


def couple_partial_sums(sigmas, sigmas_prime, block_length: int | None,
                        stream: InnovationStream) -> CoupledPaths:
    """Draw one coupled pair of Gaussian paths for the two covariance schedules.

    ``block_length=None`` selects the error-balancing default.  Deterministic
    given (schedules, block_length, stream.base_seed).
    """
    coupling = PartialSumCoupling(sigmas, sigmas_prime, block_length)
    return coupling.sample(stream.generator("couple-partial-sums"))


# ---------------------------------------------------------------------------
# Block-decoupled surrogate paths
# ---------------------------------------------------------------------------

def decoupled_surrogate(kernel: Kernel, boundaries, stream: InnovationStream) -> Array:
    """Kernel path whose block sums are mutually independent across blocks.

    Within block l = 2..M (block = (t_{l-1}, t_l]), innovations at indices at
    or below the block's left boundary are taken from an independent tilde
    lane, so the block no longer shares prehistory with earlier blocks.  The
    first block keeps the original innovations; with a single block the
    surrogate equals the plain simulated path exactly, and each block's joint
    law always equals the original block's law.
    """
    bounds = [int(b) for b in boundaries]
    if len(bounds) < 2 or bounds[0] != 0:
        raise InvalidInputError("boundaries must start at 0")
    if any(b2 <= b1 for b1, b2 in zip(bounds[:-1], bounds[1:])):
        raise InvalidInputError("boundaries must be strictly increasing")
    n = bounds[-1]
    if n > kernel.horizon:
        raise InvalidInputError("final boundary exceeds the kernel horizon")
    j = kernel.window
    m = kernel.components
    out = np.empty((n, kernel.dim))
    for lane, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:]), start=1):
        if lane == 1 or j == 0:
            slab = stream.uniform_block(lo + 1 - j, hi + 1, m, lane=0)
        else:
            past = stream.uniform_block(lo + 1 - j, lo + 1, m, lane=lane)
            fresh = stream.uniform_block(lo + 1, hi + 1, m, lane=0)
            slab = np.concatenate([past, fresh], axis=0)
        out[lo:hi] = kernel.path(lo + 1, hi, slab)
    return out


def decoupling_bound(theta_by_lag, n: int, n_blocks: int, q: float = 2.0) -> float:
    """Bound shape for the surrogate error: n^(1/2) sum_j theta_j (1 ^ M j / n)^(1/q)."""
    if n < 1 or n_blocks < 1:
        raise InvalidInputError("need n >= 1 and n_blocks >= 1")
    theta = np.asarray(theta_by_lag, dtype=float)
    lags = np.arange(theta.size)
    weights = np.minimum(1.0, n_blocks * lags / n) ** (1.0 / q)
    return math.sqrt(n) * float(np.sum(theta * weights))
