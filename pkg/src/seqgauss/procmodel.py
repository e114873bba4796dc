"""Nonstationary time-series kernels, innovation streams, and dependence diagnostics.

A process is ``X_t = G_t(eps_t, eps_{t-1}, ...)`` where the innovations are iid
U[0,1] variables addressed by a counter-based generator, so any window of the
past can be regenerated in O(1) without sequential state.  Kernels carry the
declared decay metadata ``theta_{t,j,q,2} <= Theta * (j v 1)^(-beta)`` and a
time-regularity constant ``Gamma`` used by the bound evaluators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ._util import mix64, tag_to_int
from .errors import InvalidInputError

Array = np.ndarray

_MASK64 = (1 << 64) - 1
_COUNTER_OFFSET = 1 << 64  # maps signed time indices into the Philox counter space
_COMPONENT_BITS = 20       # low bits of the key's high word address vector components


@dataclass(frozen=True)
class InnovationStream:
    """Seeded iid U[0,1] field addressed by (time index, lane, component).

    Lane 0 is the main innovation sequence; positive lanes are independent
    replacement ("tilde") sequences used for dependence measurement and
    block decoupling.  The same (seed, index, lane, component) always yields
    the same value, and disjoint addresses are independent Philox outputs.
    """

    base_seed: int

    def _key(self, lane: int, component: int) -> int:
        if lane < 0 or component < 0 or component >= (1 << _COMPONENT_BITS):
            raise InvalidInputError("lane must be >= 0 and component below 2**20")
        high = (int(lane) << _COMPONENT_BITS) | int(component)
        return (int(self.base_seed) & _MASK64) | (high << 64)

    def uniforms(self, start: int, stop: int, lane: int = 0, component: int = 0) -> Array:
        """U[0,1] values at indices start..stop-1 (vectorised random access).

        Each index owns one Philox counter block; value = first double of the
        block, so overlapping ranges agree exactly.
        """
        count = int(stop) - int(start)
        if count < 0:
            raise InvalidInputError("stop must be >= start")
        if count == 0:
            return np.empty(0)
        bitgen = np.random.Philox(key=self._key(lane, component),
                                  counter=int(start) + _COUNTER_OFFSET)
        return np.random.Generator(bitgen).random(4 * count)[::4].copy()

    def uniform_block(self, start: int, stop: int, components: int, lane: int = 0) -> Array:
        """Stacked uniforms with shape (stop - start, components)."""
        cols = [self.uniforms(start, stop, lane=lane, component=c) for c in range(components)]
        return np.stack(cols, axis=1)

    def derive(self, tag) -> "InnovationStream":
        """Independent stream deterministically derived from (seed, tag)."""
        return InnovationStream(mix64(int(self.base_seed), tag_to_int(tag)))

    def generator(self, tag) -> np.random.Generator:
        """Bulk numpy Generator keyed by (seed, tag), for non-indexed sampling."""
        t = tag_to_int(tag)
        low = mix64(int(self.base_seed), t)
        high = mix64(int(self.base_seed) ^ 0x5851F42D4C957F2D, t)
        return np.random.Generator(np.random.Philox(key=low | (high << 64)))


_SQRT12 = math.sqrt(12.0)
_INNOVATION_KINDS = ("gaussian", "uniform")


def _psi(kind: str, u: Array) -> Array:
    """Standardised innovation map: mean zero, unit variance per component."""
    if kind == "gaussian":
        return ndtri(np.clip(u, 2.0 ** -53, 1.0 - 2.0 ** -54))
    if kind == "uniform":
        return (u - 0.5) * _SQRT12
    raise InvalidInputError(f"unknown innovation map {kind!r}")


def innovation_pair_moment(kind: str, components: int, q: float) -> float:
    """mu_q = (E || psi(u) - psi(u') ||^q)^(1/q) for independent u, u'."""
    if q < 1:
        raise InvalidInputError("q must be >= 1")
    m = int(components)
    if m < 1:
        raise InvalidInputError("components must be >= 1")
    if kind == "gaussian":
        # || psi - psi' || ~ sqrt(2 * chi2_m)
        return 2.0 * math.exp((math.lgamma((m + q) / 2.0) - math.lgamma(m / 2.0)) / q)
    if kind == "uniform":
        if m == 1:
            # difference of two scaled uniforms is triangular on [-sqrt(12), sqrt(12)]
            return _SQRT12 * (2.0 / ((q + 1.0) * (q + 2.0))) ** (1.0 / q)
        if q == int(q) and int(q) % 2 == 0:
            return _uniform_pair_even_moment(m, int(q))
        raise InvalidInputError("uniform innovations: mu_q with components > 1 needs an even integer q")
    raise InvalidInputError(f"unknown innovation map {kind!r}")


def _uniform_pair_even_moment(m: int, q: int) -> float:
    # E (sum_i Z_i^2)^(q/2) by the independent-sum moment recursion,
    # Z = sqrt(12) (U - U') with E Z^(2a) = 12^a * 2 / ((2a+1)(2a+2)).
    s = q // 2
    z2 = [12.0 ** a * 2.0 / ((2 * a + 1) * (2 * a + 2)) for a in range(s + 1)]
    cur = [1.0] + [0.0] * s
    for _ in range(m):
        cur = [
            sum(math.comb(k, j) * cur[k - j] * z2[j] for j in range(k + 1))
            for k in range(s + 1)
        ]
    return cur[s] ** (1.0 / q)


def _innovation_single_moment_bound(kind: str, components: int, q: float) -> float:
    """Upper bound on (E || psi(u) ||^q)^(1/q)."""
    if kind == "gaussian":
        return innovation_pair_moment("gaussian", components, q) / math.sqrt(2.0)
    # scaled uniform is bounded by sqrt(3) per component
    return math.sqrt(3.0 * components)


@dataclass(frozen=True)
class ThetaMeta:
    """Declared dependence decay: theta_{t,j,q,2} <= theta * (j v 1)^(-beta), moments <= theta."""

    theta: float
    beta: float
    q: float

    def __post_init__(self) -> None:
        if not self.theta > 0:
            raise InvalidInputError("theta must be positive")
        if not self.beta > 1:
            raise InvalidInputError("beta must exceed 1")
        if not self.q > 2:
            raise InvalidInputError("q must exceed 2")


class Kernel:
    """Time-indexed generator mapping an innovation window to R^d.

    Attributes
    ----------
    dim : output dimension d
    window : truncation lag J (no dependence beyond lag J)
    horizon : largest admissible time index n
    components : innovation coordinates consumed per time index
    theta_meta : declared (Theta, beta, q) decay metadata
    gamma_bound : declared time-regularity constant Gamma >= 1
    """

    dim: int
    window: int
    horizon: int
    components: int
    theta_meta: ThetaMeta
    gamma_bound: float

    def apply(self, t: int, windows: Array) -> Array:
        """Evaluate G_t on a batch of windows (batch, window+1, components).

        ``windows[:, j]`` holds the raw uniform innovation at lag j (j = 0 is
        time t itself).  Returns an array of shape (batch, dim).
        """
        raise NotImplementedError

    def path(self, t0: int, t1: int, innovations: Array) -> Array:
        """Rows G_t for t = t0..t1, given uniforms at indices t0-window .. t1."""
        n = t1 - t0 + 1
        if n < 1:
            raise InvalidInputError("t1 must be >= t0")
        if innovations.shape != (n + self.window, self.components):
            raise InvalidInputError("innovation slab has the wrong shape")
        out = np.empty((n, self.dim))
        for i in range(n):
            w = innovations[i : i + self.window + 1][::-1]
            out[i] = self.apply(t0 + i, w[np.newaxis])[0]
        return out

    def _check_t(self, t: int) -> None:
        if t < 1 or t > self.horizon:
            raise InvalidInputError(f"time index {t} outside 1..{self.horizon}")


@dataclass(frozen=True, eq=False)
class LinearKernel(Kernel):
    """X_t = s(t) * sum_j A_j psi(eps_{t-j}) with a standardised innovation map.

    ``coeffs[j]`` is the (dim, components) loading at lag j and ``schedule``
    the scalar modulation s(t), t = 1..horizon.  A constant schedule makes the
    process stationary.
    """

    coeffs: Array
    schedule: Array
    innovation: str
    theta_meta: ThetaMeta
    gamma_bound: float = 1.0

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        schedule = np.array(self.schedule, dtype=float)
        if coeffs.ndim != 3:
            raise InvalidInputError("coeffs must have shape (window+1, dim, components)")
        if schedule.ndim != 1 or schedule.size < 1:
            raise InvalidInputError("schedule must be a nonempty vector")
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(schedule))):
            raise InvalidInputError("kernel parameters must be finite")
        if self.innovation not in _INNOVATION_KINDS:
            raise InvalidInputError(f"unknown innovation map {self.innovation!r}")
        if not self.gamma_bound >= 1:
            raise InvalidInputError("gamma_bound must be >= 1")
        coeffs.flags.writeable = False
        schedule.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "schedule", schedule)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def window(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def horizon(self) -> int:
        return self.schedule.shape[0]

    @property
    def components(self) -> int:
        return self.coeffs.shape[2]

    @property
    def is_stationary(self) -> bool:
        return bool(np.all(self.schedule == self.schedule[0]))

    def scale(self, t: int) -> float:
        self._check_t(t)
        return float(self.schedule[t - 1])

    def apply(self, t: int, windows: Array) -> Array:
        self._check_t(t)
        psi = _psi(self.innovation, np.asarray(windows, dtype=float))
        return self.scale(t) * np.einsum("bjm,jdm->bd", psi, self.coeffs)

    def path(self, t0: int, t1: int, innovations: Array) -> Array:
        n = t1 - t0 + 1
        self._check_t(t0)
        self._check_t(t1)
        if innovations.shape != (n + self.window, self.components):
            raise InvalidInputError("innovation slab has the wrong shape")
        psi = _psi(self.innovation, innovations)
        out = np.zeros((n, self.dim))
        for j in range(self.window + 1):
            out += psi[self.window - j : self.window - j + n] @ self.coeffs[j].T
        return out * self.schedule[t0 - 1 : t1, np.newaxis]


@dataclass(frozen=True, eq=False)
class CategoricalKernel(Kernel):
    """Centred one-hot encoding of iid categorical draws: (X_t)_j = 1(Z_t = j) - p_j."""

    probs: Array
    horizon: int
    theta_meta: ThetaMeta
    gamma_bound: float = 1.0

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise InvalidInputError("probs must be a nonempty vector")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidInputError("probs must be nonnegative and sum to 1")
        if self.horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return self.probs.shape[0]

    @property
    def window(self) -> int:
        return 0

    @property
    def components(self) -> int:
        return 1

    def _draw(self, u: Array) -> Array:
        edges = np.cumsum(self.probs)
        z = np.searchsorted(edges, u, side="right")
        return np.minimum(z, self.dim - 1)

    def apply(self, t: int, windows: Array) -> Array:
        self._check_t(t)
        u = np.asarray(windows, dtype=float)[:, 0, 0]
        out = np.tile(-self.probs, (u.shape[0], 1))
        out[np.arange(u.shape[0]), self._draw(u)] += 1.0
        return out

    def path(self, t0: int, t1: int, innovations: Array) -> Array:
        n = t1 - t0 + 1
        self._check_t(t0)
        self._check_t(t1)
        if innovations.shape != (n, 1):
            raise InvalidInputError("innovation slab has the wrong shape")
        return self.apply(t0, innovations[:, np.newaxis, :])


# ---------------------------------------------------------------------------
# Path generation and dependence diagnostics
# ---------------------------------------------------------------------------

def gen_path(kernel: Kernel, n: int, stream: InnovationStream) -> Array:
    """Simulate rows X_t = G_t(main-lane innovations), t = 1..n.

    Deterministic given (kernel, stream.base_seed).
    """
    if n < 1 or n > kernel.horizon:
        raise InvalidInputError(f"n must be in 1..{kernel.horizon}")
    u = stream.uniform_block(1 - kernel.window, n + 1, kernel.components, lane=0)
    return kernel.path(1, n, u)


def theta_mc(kernel: Kernel, t: int, j: int, q: float, r: float,
             reps: int, stream: InnovationStream) -> float:
    """Monte-Carlo physical dependence at lag j: swap one innovation to the tilde lane.

    Estimates (E || G_t(w) - G_t(w with lag-j entry replaced) ||_r^q)^(1/q)
    with common random numbers in all other window positions.  Lags beyond the
    kernel window return exactly 0.
    """
    if not 2 <= r <= q:
        raise InvalidInputError("need 2 <= r <= q")
    if j < 0 or reps < 1:
        raise InvalidInputError("need j >= 0 and reps >= 1")
    kernel._check_t(t)
    if j > kernel.window:
        return 0.0
    sub = stream.derive(("theta-mc", t, j))
    width = kernel.window + 1
    m = kernel.components
    chunk = max(1, (1 << 21) // (width * m))
    total = 0.0
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        lo, hi = done * width, (done + size) * width
        main = sub.uniform_block(lo, hi, m, lane=0).reshape(size, width, m)
        swap = sub.uniform_block(lo, hi, m, lane=1).reshape(size, width, m)
        tilde = main.copy()
        tilde[:, j, :] = swap[:, j, :]
        diff = kernel.apply(t, main) - kernel.apply(t, tilde)
        norms = np.linalg.norm(diff, ord=r, axis=1)
        total += float(np.sum(norms ** q))
        done += size
    return (total / reps) ** (1.0 / q)


def theta_analytic(kernel: LinearKernel, t: int, j: int, q: float) -> float:
    """Closed-form dependence bound ||A_j(t)||_F * mu_q for linear kernels.

    Exact for q = 2 with a single innovation component, an upper bound
    otherwise.
    """
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("theta_analytic requires a linear kernel")
    if j < 0:
        raise InvalidInputError("j must be >= 0")
    if j > kernel.window:
        return 0.0
    mu = innovation_pair_moment(kernel.innovation, kernel.components, q)
    return abs(kernel.scale(t)) * float(np.linalg.norm(kernel.coeffs[j])) * mu


def sigma_analytic(kernel: LinearKernel, t: int) -> Array:
    """Local long-run covariance of the kernel frozen at time t.

    For standardized innovations this is (sum_j A_j(t)) (sum_j A_j(t))^T.
    """
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("sigma_analytic requires a linear kernel")
    s = kernel.coeffs.sum(axis=0)
    return (kernel.scale(t) ** 2) * (s @ s.T)


def autocov_analytic(kernel: LinearKernel, t: int, h: int) -> Array:
    """Lag-h autocovariance of the kernel frozen at time t (h >= 0)."""
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("autocov_analytic requires a linear kernel")
    if h < 0:
        raise InvalidInputError("h must be >= 0")
    d = kernel.dim
    if h > kernel.window:
        return np.zeros((d, d))
    acc = np.zeros((d, d))
    for j in range(kernel.window - h + 1):
        acc += kernel.coeffs[j + h] @ kernel.coeffs[j].T
    return (kernel.scale(t) ** 2) * acc


def gamma_tv(kernel: Kernel, n: int, reps: int = 256,
             stream: InnovationStream | None = None) -> float:
    """Total-variation-in-time constant: max(1, sum_t (E||G_t - G_{t-1}||^2)^(1/2) / Theta).

    Uses the closed form for linear kernels (Frobenius norm of the stacked
    coefficient differences); otherwise estimates each step by Monte Carlo
    with common random numbers.
    """
    theta = kernel.theta_meta.theta
    if not theta > 0:
        raise InvalidInputError("kernel Theta must be positive")
    if n < 1 or n > kernel.horizon:
        raise InvalidInputError(f"n must be in 1..{kernel.horizon}")
    if isinstance(kernel, LinearKernel):
        stacked = float(np.linalg.norm(kernel.coeffs))
        total = stacked * float(np.sum(np.abs(np.diff(kernel.schedule[:n]))))
    elif isinstance(kernel, CategoricalKernel):
        total = 0.0  # time-constant by construction
    else:
        if stream is None:
            raise InvalidInputError("a stream is required for Monte-Carlo estimation")
        if reps < 1:
            raise InvalidInputError("reps must be >= 1")
        width = kernel.window + 1
        total = 0.0
        for t in range(2, n + 1):
            sub = stream.derive(("gamma-tv", t))
            w = sub.uniform_block(0, reps * width, kernel.components, lane=0)
            w = w.reshape(reps, width, kernel.components)
            diff = kernel.apply(t, w) - kernel.apply(t - 1, w)
            total += math.sqrt(float(np.mean(np.sum(diff * diff, axis=1))))
    return max(1.0, total / theta)


# ---------------------------------------------------------------------------
# Shipped kernels and JSON specification files
# ---------------------------------------------------------------------------

def _declared_theta(coeffs: Array, schedule: Array, innovation: str,
                    q: float, beta: float) -> float:
    """Smallest Theta satisfying both declared inequalities for a linear kernel."""
    m = coeffs.shape[2]
    mu_pair = innovation_pair_moment(innovation, m, q)
    smax = float(np.max(np.abs(schedule)))
    lag_norms = np.linalg.norm(coeffs.reshape(coeffs.shape[0], -1), axis=1)
    weights = np.maximum(np.arange(coeffs.shape[0]), 1) ** beta
    dep = smax * mu_pair * float(np.max(lag_norms * weights))
    mom = smax * float(lag_norms.sum()) * _innovation_single_moment_bound(innovation, m, q)
    return max(dep, mom)


def _gamma_of_schedule(coeffs: Array, schedule: Array, theta: float) -> float:
    stacked = float(np.linalg.norm(coeffs))
    return max(1.0, stacked * float(np.sum(np.abs(np.diff(schedule)))) / theta)


def _linear_kernel(lags, d: int, schedule: Array, innovation: str,
                   q: float = 4.0, beta: float = 3.0,
                   theta: float | None = None, gamma: float | None = None) -> LinearKernel:
    lags = np.asarray(lags, dtype=float)
    coeffs = np.stack([a * np.eye(d) for a in lags])
    if theta is None:
        theta = _declared_theta(coeffs, schedule, innovation, q, beta)
    if gamma is None:
        gamma = _gamma_of_schedule(coeffs, schedule, theta)
    meta = ThetaMeta(theta=theta, beta=beta, q=q)
    return LinearKernel(coeffs=coeffs, schedule=schedule, innovation=innovation,
                        theta_meta=meta, gamma_bound=gamma)


def iid_kernel(d: int, n: int, innovation: str = "gaussian") -> LinearKernel:
    """d iid standardized coordinates per time step."""
    return _linear_kernel([1.0], d, np.ones(n), innovation)


def ma1_kernel(d: int, n: int, lag_weight: float = 0.5,
               innovation: str = "gaussian") -> LinearKernel:
    """Stationary first-order moving average, identical across coordinates."""
    return _linear_kernel([1.0, lag_weight], d, np.ones(n), innovation)


def lipschitz_kernel(d: int, n: int, start: float = 1.0, end: float = 2.0,
                     lag_weight: float = 0.5, innovation: str = "gaussian") -> LinearKernel:
    """Locally stationary moving average with a linearly drifting scale."""
    return _linear_kernel([1.0, lag_weight], d, np.linspace(start, end, n), innovation)


def jump_kernel(d: int, n: int, at: int | None = None, factor: float = 2.0,
                lag_weight: float = 0.5, innovation: str = "gaussian") -> LinearKernel:
    """Moving average whose scale jumps once, from 1 to ``factor`` after time ``at``."""
    at = n // 2 if at is None else int(at)
    if not 1 <= at < n:
        raise InvalidInputError("jump time must satisfy 1 <= at < n")
    schedule = np.ones(n)
    schedule[at:] = factor
    return _linear_kernel([1.0, lag_weight], d, schedule, innovation)


def categorical_kernel(probs, n: int, q: float = 8.0, beta: float = 4.0) -> CategoricalKernel:
    """Centred indicator vectors of iid categorical draws; ||X_t||_1 <= 2."""
    meta = ThetaMeta(theta=2.0, beta=beta, q=q)
    return CategoricalKernel(probs=np.asarray(probs, dtype=float), horizon=n, theta_meta=meta)


_SCHEDULE_KINDS = ("constant", "lipschitz", "jump")


def kernel_from_spec(spec: dict, n: int | None = None, d: int | None = None) -> Kernel:
    """Build a kernel from its JSON description.

    Linear kernels: ``{"type": "linear", "d", "n", "lags": [...],
    "schedule": {"kind": "constant" | "lipschitz" | "jump", ...},
    "innovation": "gaussian" | "uniform", "theta_meta": {"Theta", "beta", "q"},
    "Gamma": ...}``.  Categorical: ``{"type": "categorical", "probs": [...], "n"}``.
    ``n`` and ``d`` arguments override the file values (used by experiment grids).
    """
    kind = spec.get("type")
    if kind == "categorical":
        horizon = int(n if n is not None else spec.get("n", 0))
        if horizon < 1:
            raise InvalidInputError("categorical kernel needs a horizon n >= 1")
        probs = spec.get("probs")
        if probs is None:
            dd = int(d if d is not None else spec.get("d", 0))
            if dd < 1:
                raise InvalidInputError("categorical kernel needs probs or d")
            probs = np.full(dd, 1.0 / dd)
        return categorical_kernel(probs, horizon)
    if kind != "linear":
        raise InvalidInputError(f"unknown kernel type {kind!r}")

    horizon = int(n if n is not None else spec.get("n", 0))
    dd = int(d if d is not None else spec.get("d", 0))
    if horizon < 1 or dd < 1:
        raise InvalidInputError("linear kernel needs n >= 1 and d >= 1")
    lags = np.asarray(spec.get("lags", [1.0]), dtype=float)
    if "J" in spec and int(spec["J"]) != lags.size - 1:
        raise InvalidInputError("J is inconsistent with the number of lag weights")
    innovation = spec.get("innovation", "gaussian")

    sched_spec = spec.get("schedule", {"kind": "constant"})
    kind = sched_spec.get("kind", "constant")
    if kind == "constant":
        schedule = np.ones(horizon)
    elif kind == "lipschitz":
        schedule = np.linspace(float(sched_spec.get("start", 1.0)),
                               float(sched_spec.get("end", 2.0)), horizon)
    elif kind == "jump":
        at = int(sched_spec.get("at", horizon // 2))
        if not 1 <= at < horizon:
            raise InvalidInputError("jump time must satisfy 1 <= at < n")
        schedule = np.ones(horizon)
        schedule[at:] = float(sched_spec.get("factor", 2.0))
    else:
        raise InvalidInputError(f"unknown schedule kind {kind!r}")

    meta = spec.get("theta_meta")
    theta = beta = q = None
    if meta is not None:
        theta = float(meta["Theta"])
        beta = float(meta["beta"])
        q = float(meta["q"])
    return _linear_kernel(lags, dd, schedule, innovation,
                          q=q if q is not None else 4.0,
                          beta=beta if beta is not None else 3.0,
                          theta=theta,
                          gamma=float(spec["Gamma"]) if "Gamma" in spec else None)


def kernel_to_spec(kernel: Kernel) -> dict:
    """JSON-serialisable description; inverse of :func:`kernel_from_spec` for shipped forms."""
    if isinstance(kernel, CategoricalKernel):
        return {"type": "categorical", "n": kernel.horizon, "d": kernel.dim,
                "probs": kernel.probs.tolist()}
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("only linear and categorical kernels serialise to spec files")
    sched = kernel.schedule
    if np.all(sched == sched[0]) and sched[0] == 1.0:
        schedule: dict = {"kind": "constant"}
    elif np.allclose(np.diff(sched, 2), 0.0) and sched.size > 1 and sched[1] != sched[0]:
        schedule = {"kind": "lipschitz", "start": float(sched[0]), "end": float(sched[-1])}
    else:
        steps = np.nonzero(np.diff(sched))[0]
        if steps.size == 1 and sched[0] == 1.0:
            schedule = {"kind": "jump", "at": int(steps[0] + 1), "factor": float(sched[-1])}
        else:
            raise InvalidInputError("schedule does not match a shipped schedule kind")
    lags = [float(np.linalg.norm(kernel.coeffs[j]) / math.sqrt(kernel.dim))
            for j in range(kernel.window + 1)]
    signs = [1.0 if np.trace(kernel.coeffs[j]) >= 0 else -1.0 for j in range(kernel.window + 1)]
    return {
        "type": "linear",
        "n": kernel.horizon,
        "d": kernel.dim,
        "J": kernel.window,
        "lags": [s * a for s, a in zip(signs, lags)],
        "schedule": schedule,
        "innovation": kernel.innovation,
        "theta_meta": {"Theta": kernel.theta_meta.theta,
                       "beta": kernel.theta_meta.beta,
                       "q": kernel.theta_meta.q},
        "Gamma": kernel.gamma_bound,
    }


def load_kernel(path, n: int | None = None, d: int | None = None) -> Kernel:
    with open(path, "r", encoding="utf-8") as fh:
        return kernel_from_spec(json.load(fh), n=n, d=d)
