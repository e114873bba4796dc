"""Sequential-mean and CUSUM test statistics with Monte-Carlo quantile calibration.

The critical value is the empirical (1 - alpha) quantile of the statistic
applied to Gaussian paths whose increments have the covariances of a
cumulative covariance process (typically the overlapping-block estimate), and
the rejection rule adds offsets (tau, nu) that absorb estimation and coupling
error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coupling import rate_xi
from .covest import CovProcess, bandwidth_default, qhat
from .errors import InvalidInputError
from .procmodel import InnovationStream

Array = np.ndarray

_MC_CHUNK = 512
_PSD_REL_TOL = 1e-8


def _stat_seq_batch(paths: Array) -> Array:
    n = paths.shape[-2]
    sums = np.cumsum(paths, axis=-2)
    norms = np.sqrt(np.einsum("...td,...td->...t", sums, sums))
    return norms.max(axis=-1) / math.sqrt(n)


def _stat_cusum_batch(paths: Array) -> Array:
    n = paths.shape[-2]
    sums = np.cumsum(paths, axis=-2)
    frac = (np.arange(1, n + 1) / n)[:, np.newaxis]
    resid = sums - frac * sums[..., -1:, :]
    norms = np.sqrt(np.einsum("...td,...td->...t", resid, resid))
    return norms.max(axis=-1) / math.sqrt(n)


_STATISTICS = {"seq": _stat_seq_batch, "cusum": _stat_cusum_batch}


def _check_path(x) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidInputError("x must be a nonempty (n, d) matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x must be finite")
    return x


def stat_seq(x) -> float:
    """max_k || n^(-1/2) sum_{t<=k} X_t ||: sensitive to any nonzero mean."""
    return float(_stat_seq_batch(_check_path(x)[np.newaxis])[0])


def stat_cusum(x) -> float:
    """max_k n^(-1/2) || sum_{t<=k} X_t - (k/n) sum_t X_t ||: shift-invariant."""
    return float(_stat_cusum_batch(_check_path(x)[np.newaxis])[0])


def _resolve_statistic(statistic):
    if callable(statistic):
        return None, statistic
    if statistic not in _STATISTICS:
        raise InvalidInputError(f"statistic must be one of {sorted(_STATISTICS)}")
    return statistic, _STATISTICS[statistic]


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated quantile with a distribution-free Monte-Carlo error estimate."""

    quantile: float
    standard_error: float
    alpha: float
    mc_reps: int
    projected_increments: int
    projection_shift: float


def _increment_factors(cov: CovProcess) -> tuple[Array, int, float]:
    """Per-increment PSD roots (computed once, reused across replications)."""
    w, v = np.linalg.eigh(cov.increments)
    scale = np.abs(w).max(axis=1)
    wmin = w.min(axis=1)
    bad = wmin < -_PSD_REL_TOL * np.maximum(scale, np.finfo(float).tiny)
    n_projected = int(np.count_nonzero(bad))
    shift = float(max(0.0, -wmin.min())) if n_projected else 0.0
    if n_projected:
        warnings.warn(
            f"{n_projected} covariance increment(s) were not PSD "
            f"(worst eigenvalue {wmin.min():.3e}); projected onto the PSD cone",
            RuntimeWarning,
            stacklevel=3,
        )
    roots = np.sqrt(np.maximum(w, 0.0))
    factors = np.einsum("tik,tk,tjk->tij", v, roots, v)
    return factors, n_projected, shift


def calibrate_quantile(cov: CovProcess, statistic, alpha: float, mc_reps: int,
                       stream: InnovationStream) -> CalibrationResult:
    """Empirical upper-alpha quantile of the statistic on calibrated Gaussian paths.

    Draws ``mc_reps`` independent paths Z_t ~ N(0, Q(t) - Q(t-1)) and returns
    the ceil((1 - alpha)(mc_reps + 1))-th order statistic (a conservative
    finite-sample choice), together with an order-statistic bracket as a
    standard-error estimate.  Deterministic given the stream seed; replicates
    are generated in fixed chunks so the result does not depend on scheduling.
    """
    if mc_reps < 100:
        raise InvalidInputError("mc_reps must be at least 100")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError("alpha must lie in (0, 1)")
    _, stat = _resolve_statistic(statistic)
    factors, n_projected, shift = _increment_factors(cov)
    samples = np.empty(mc_reps)
    done = 0
    chunk_id = 0
    while done < mc_reps:
        size = min(_MC_CHUNK, mc_reps - done)
        rng = stream.generator(("quantile-mc", chunk_id))
        normals = rng.standard_normal((size, cov.horizon, cov.dim))
        paths = np.einsum("tij,rtj->rti", factors, normals)
        samples[done:done + size] = stat(paths)
        done += size
        chunk_id += 1
    samples.sort()
    rank = min(mc_reps, math.ceil((1.0 - alpha) * (mc_reps + 1)))
    q = float(samples[rank - 1])
    half = math.sqrt(mc_reps * alpha * (1.0 - alpha))
    lo = max(1, math.ceil(rank - half))
    hi = min(mc_reps, math.ceil(rank + half))
    se = 0.5 * float(samples[hi - 1] - samples[lo - 1])
    return CalibrationResult(quantile=q, standard_error=se, alpha=alpha,
                             mc_reps=mc_reps, projected_increments=n_projected,
                             projection_shift=shift)


def quantile_mc(cov: CovProcess, statistic, alpha: float, mc_reps: int,
                stream: InnovationStream) -> float:
    """Monte-Carlo quantile a_alpha(Q); see :func:`calibrate_quantile`."""
    return calibrate_quantile(cov, statistic, alpha, mc_reps, stream).quantile


def default_offsets(n: int) -> tuple[float, float]:
    """Vanishing offsets (tau, nu) = (1/log n, 1/log n) for n >= 3.

    nu is additionally clamped below alpha/2 when the rejection rule is
    evaluated.
    """
    if n < 3:
        raise InvalidInputError("n must be >= 3")
    return 1.0 / math.log(n), 1.0 / math.log(n)


@dataclass(frozen=True)
class TestConfig:
    """Parameters of the calibrated test.

    ``nu``, ``tau`` and ``bandwidth`` default to the standard choices for the
    sample size when left unset; ``nu`` is clamped to alpha/2 at evaluation
    time so the calibration level alpha - nu stays bounded away from zero.
    """

    __test__ = False  # not a pytest class despite the name

    alpha: float
    statistic: str = "seq"
    nu: float | None = None
    tau: float | None = None
    bandwidth: int | None = None
    mc_reps: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if self.statistic not in _STATISTICS:
            raise InvalidInputError(f"statistic must be one of {sorted(_STATISTICS)}")
        if self.nu is not None and not self.nu >= 0.0:
            raise InvalidInputError("nu must be >= 0")
        if self.tau is not None and not self.tau >= 0.0:
            raise InvalidInputError("tau must be >= 0")
        if self.bandwidth is not None and self.bandwidth < 1:
            raise InvalidInputError("bandwidth must be >= 1")
        if self.mc_reps < 100:
            raise InvalidInputError("mc_reps must be at least 100")


@dataclass(frozen=True)
class TestReport:
    """Decision record: reject iff value > quantile + tau."""

    __test__ = False  # not a pytest class despite the name

    statistic: str
    value: float
    quantile: float
    threshold: float
    reject: bool
    alpha: float
    nu: float
    tau: float
    bandwidth: int
    mc_reps: int
    seed: int
    quantile_se: float

    def to_json_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "value": self.value,
            "quantile": self.quantile,
            "tau": self.tau,
            "nu": self.nu,
            "alpha": self.alpha,
            "bandwidth": self.bandwidth,
            "mc_reps": self.mc_reps,
            "seed": self.seed,
            "reject": self.reject,
            "quantile_se": self.quantile_se,
        }


def run_test(x, config: TestConfig) -> TestReport:
    """Calibrated test of a zero / constant mean against the observed path.

    Estimates the cumulative covariance with the overlapping-block estimator,
    calibrates the (alpha - nu) quantile by Monte Carlo, and rejects when the
    statistic exceeds quantile + tau.
    """
    x = _check_path(x)
    n = x.shape[0]
    b = config.bandwidth if config.bandwidth is not None else bandwidth_default(n)
    if n < b:
        raise InvalidInputError("sample size must be at least the bandwidth")
    tau, nu = config.tau, config.nu
    if tau is None or nu is None:
        tau_default, nu_default = default_offsets(n)
        tau = tau_default if tau is None else tau
        nu = nu_default if nu is None else nu
    nu = min(nu, config.alpha / 2.0)

    estimate = qhat(x, b)
    calibration = calibrate_quantile(estimate, config.statistic, config.alpha - nu,
                                     config.mc_reps, InnovationStream(config.seed))
    value = float(_STATISTICS[config.statistic](x[np.newaxis])[0])
    threshold = calibration.quantile + tau
    return TestReport(
        statistic=config.statistic,
        value=value,
        quantile=calibration.quantile,
        threshold=threshold,
        reject=bool(value > threshold),
        alpha=config.alpha,
        nu=nu,
        tau=tau,
        bandwidth=b,
        mc_reps=config.mc_reps,
        seed=config.seed,
        quantile_se=calibration.standard_error,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Diagnostic evaluation of the offset-size condition with constant 1.

    ``terms`` holds the seven diagnostic quantities: the Gaussian-coupling
    rate, the nu^(-1/2) amplification factor, and the five estimation/bias
    summands it scales.  Informational only, never a hard gate.
    """

    satisfied: bool
    ratio: float
    offset: float
    threshold: float
    terms: dict


def seq_test_condition(n: int, d: int, theta: float, gamma: float, bandwidth: int,
                       q: float, beta: float, nu: float, tau: float) -> ConditionReport:
    """Compare tau against the rate expression controlling the test's validity.

    Requires q > 4 and beta > 2.  Returns each term separately plus the ratio
    tau / threshold; asymptotic validity corresponds to the ratio diverging as
    n grows, not to any fixed finite-n value.
    """
    if not q > 4:
        raise InvalidInputError("q must exceed 4")
    if not beta > 2:
        raise InvalidInputError("beta must exceed 2")
    if n < 3 or d < 1 or bandwidth < 1:
        raise InvalidInputError("need n >= 3, d >= 1, bandwidth >= 1")
    if not (theta > 0 and gamma >= 1):
        raise InvalidInputError("need theta > 0 and gamma >= 1")
    if not (nu > 0 and tau >= 0):
        raise InvalidInputError("need nu > 0 and tau >= 0")
    terms = {
        "gauss_rate": (d / n) ** rate_xi(q, beta),
        "nu_scale": nu ** -0.5,
        "bias_total_variation": gamma ** 0.25 * n ** -0.25 * bandwidth ** 0.125,
        "estimation_error": n ** -0.125 * d ** 0.125 * bandwidth ** 0.125,
        "window_bias": bandwidth ** -0.25,
        "tail_bias": bandwidth ** ((2.0 - beta) / 4.0),
        "remainder": n ** -0.5,
    }
    bracket = (terms["bias_total_variation"] + terms["estimation_error"]
               + terms["window_bias"] + terms["tail_bias"] + terms["remainder"])
    threshold = math.sqrt(math.log(n)) * theta * (terms["gauss_rate"]
                                                  + terms["nu_scale"] * bracket)
    ratio = tau / threshold if threshold > 0 else math.inf
    return ConditionReport(satisfied=ratio > 1.0, ratio=ratio, offset=tau,
                           threshold=threshold, terms=terms)
