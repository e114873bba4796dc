"""Desk-scale experiments measuring the implied constants of the error bounds.

Every experiment is a pure function of (spec, seed): replications use seeds
derived from the spec seed and deterministic chunking, aggregation is
order-invariant, and reports embed the exact bound formula the implied
constants refer to.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coupling import PartialSumCoupling
from .covest import bandwidth_default, qhat, qhat_error, qtrue
from .errors import InvalidInputError
from .inference import TestConfig, _STATISTICS, run_test
from .procmodel import (
    InnovationStream,
    LinearKernel,
    gen_path,
    innovation_pair_moment,
    kernel_from_spec,
    sigma_analytic,
)

Array = np.ndarray

EXPERIMENTS = ("size", "power", "coupling-scaling", "qhat-scaling", "rosenthal", "dist-approx")


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    experiment: str
    grid: tuple
    replications: int
    seed: int
    kernel: dict | None = None
    output: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"experiment must be one of {EXPERIMENTS}")
        if self.replications < 10:
            raise InvalidInputError("replications must be at least 10")
        grid = tuple(dict(g) for g in self.grid)
        if not grid:
            raise InvalidInputError("grid must be nonempty")
        for g in grid:
            if int(g.get("n", 0)) < 1 or int(g.get("d", 0)) < 1:
                raise InvalidInputError("every grid point needs n >= 1 and d >= 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ExperimentSpec":
        known = {"experiment", "grid", "replications", "seed", "kernel", "output"}
        params = dict(payload.get("params", {}))
        params.update({k: v for k, v in payload.items() if k not in known | {"params"}})
        grid = payload.get("grid", ())
        grid = tuple(g if isinstance(g, dict) else {"n": g[0], "d": g[1]} for g in grid)
        return cls(
            experiment=payload["experiment"],
            grid=grid,
            replications=int(payload["replications"]),
            seed=int(payload["seed"]),
            kernel=payload.get("kernel"),
            output=payload.get("output"),
            params=params,
        )


@dataclass
class GridPoint:
    """One grid point: measured quantity, bound value, and their ratio."""

    params: dict
    measured: float
    predicted: float | None
    implied_constant: float | None
    extra: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "params": self.params,
            "measured": self.measured,
            "predicted": self.predicted,
            "implied_constant": self.implied_constant,
            "extra": self.extra,
        }


@dataclass
class ScalingReport:
    """Per-grid measurements against a bound shape, with a log-log slope fit."""

    experiment: str
    formula: str
    points: list
    slope: float | None
    slope_residual: float | None
    meta: dict

    def implied_constants(self) -> list:
        return [p.implied_constant for p in self.points if p.implied_constant is not None]

    def stability_factor(self) -> float | None:
        consts = self.implied_constants()
        if not consts or min(consts) <= 0:
            return None
        return max(consts) / min(consts)

    def to_json_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "formula": self.formula,
            "points": [p.to_json_dict() for p in self.points],
            "slope": self.slope,
            "slope_residual": self.slope_residual,
            "stability_factor": self.stability_factor(),
            "meta": self.meta,
        }


def _fit_loglog(points: list) -> tuple[float | None, float | None]:
    xs = [p.params["n"] for p in points if p.measured > 0]
    ys = [p.measured for p in points if p.measured > 0]
    if len(set(xs)) < 2:
        return None, None
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def _parallel_map(fn, items, jobs: int) -> list:
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _require_kernel(spec: ExperimentSpec) -> dict:
    if spec.kernel is None:
        raise InvalidInputError(f"experiment {spec.experiment!r} needs a kernel spec")
    return spec.kernel


# ---------------------------------------------------------------------------
# Size / power
# ---------------------------------------------------------------------------

def exp_size(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """Empirical rejection frequency of the calibrated test per grid point.

    With a ``shift`` parameter a level shift is injected after a change point,
    turning the size experiment into the power experiment.
    """
    kernel_spec = _require_kernel(spec)
    params = spec.params
    alpha = float(params.get("alpha", 0.1))
    statistic = params.get("statistic", "seq")
    if statistic not in _STATISTICS:
        raise InvalidInputError(f"statistic must be one of {sorted(_STATISTICS)}")
    mc_reps = int(params.get("mc_reps", 2000))
    shift = params.get("shift")
    if spec.experiment == "power" and shift is None:
        shift = {"coordinate": 0, "size": 1.0}
    root = InnovationStream(spec.seed)

    points = []
    for gi, g in enumerate(spec.grid):
        n, d = int(g["n"]), int(g["d"])
        kernel = kernel_from_spec(kernel_spec, n=n, d=d)
        bandwidth = int(g.get("b", params.get("bandwidth", bandwidth_default(n))))
        tau = params.get("tau")
        nu = params.get("nu")

        def one_rep(r: int, *, n=n, kernel=kernel, bandwidth=bandwidth,
                    tau=tau, nu=nu, gi=gi) -> int:
            x = gen_path(kernel, n, root.derive(("path", gi, r)))
            if shift is not None:
                at = int(shift.get("at", n // 2))
                x = x.copy()
                x[at:, int(shift.get("coordinate", 0))] += float(shift.get("size", 1.0))
            config = TestConfig(alpha=alpha, statistic=statistic, nu=nu, tau=tau,
                                bandwidth=bandwidth, mc_reps=mc_reps,
                                seed=root.derive(("calibrate", gi, r)).base_seed)
            return int(run_test(x, config).reject)

        rejects = _parallel_map(one_rep, range(spec.replications), jobs)
        freq = float(np.mean(rejects))
        se = math.sqrt(freq * (1.0 - freq) / spec.replications)
        points.append(GridPoint(
            params={"n": n, "d": d, "b": bandwidth},
            measured=freq,
            predicted=alpha,
            implied_constant=freq / alpha if freq > 0 else None,
            extra={"binomial_se": se, "rejections": int(np.sum(rejects))},
            samples=[float(v) for v in rejects],
        ))
    slope, resid = _fit_loglog(points)
    return ScalingReport(
        experiment=spec.experiment,
        formula="P(T > a_{alpha-nu}(Qhat) + tau) <= alpha",
        points=points, slope=slope, slope_residual=resid,
        meta={"seed": spec.seed, "replications": spec.replications, "alpha": alpha,
              "statistic": statistic, "mc_reps": mc_reps, "shift": shift},
    )


# ---------------------------------------------------------------------------
# Partial-sum coupling scaling
# ---------------------------------------------------------------------------

def _as_schedule_matrix(value, d: int) -> Array:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(d)
    if arr.shape != (d, d):
        raise InvalidInputError("covariance parameter must be scalar or (d, d)")
    return 0.5 * (arr + arr.T)


def exp_coupling_scaling(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """Mean squared maximal gap between coupled Gaussian paths vs. its bound.

    The bound shape is log(n) (sqrt(n delta rho) + rho) with delta the maximal
    cumulative trace-norm covariance discrepancy and rho the largest per-step
    trace norm.
    """
    params = spec.params
    root = InnovationStream(spec.seed)
    chunk = 128
    points = []
    for gi, g in enumerate(spec.grid):
        n, d = int(g["n"]), int(g["d"])
        sigma = _as_schedule_matrix(params.get("sigma", 1.0), d)
        sigma_prime = _as_schedule_matrix(params.get("sigma_prime", 1.21), d)
        coupling = PartialSumCoupling([sigma] * n, [sigma_prime] * n,
                                      params.get("block_size"))

        def one_chunk(c: int, *, coupling=coupling, gi=gi) -> Array:
            size = min(chunk, spec.replications - c * chunk)
            rng = root.derive(("coupling", gi)).generator(("chunk", c))
            y, y_prime = coupling.sample_many(size, rng)
            gap = np.cumsum(y - y_prime, axis=1)
            return np.einsum("rtd,rtd->rt", gap, gap).max(axis=1)

        n_chunks = (spec.replications + chunk - 1) // chunk
        values = np.concatenate(_parallel_map(one_chunk, range(n_chunks), jobs))
        measured = float(values.mean())
        predicted = math.log(n) * (math.sqrt(n * coupling.delta * coupling.rho) + coupling.rho)
        points.append(GridPoint(
            params={"n": n, "d": d, "L": coupling.plan.block_length},
            measured=measured,
            predicted=predicted,
            implied_constant=measured / predicted if measured > 0 else None,
            extra={"delta": coupling.delta, "rho": coupling.rho,
                   "mc_se": float(values.std(ddof=1) / math.sqrt(values.size))},
            samples=[float(v) for v in values],
        ))
    slope, resid = _fit_loglog(points)
    report = ScalingReport(
        experiment=spec.experiment,
        formula="log(n) * (sqrt(n*delta*rho) + rho)",
        points=points, slope=slope, slope_residual=resid,
        meta={"seed": spec.seed, "replications": spec.replications,
              "stability_required": float(spec.params.get("stability_factor", 2.0))},
    )
    factor = report.stability_factor()
    report.meta["stable"] = bool(factor is not None
                                 and factor <= report.meta["stability_required"])
    return report


# ---------------------------------------------------------------------------
# Covariance-estimator scaling
# ---------------------------------------------------------------------------

def exp_qhat_scaling(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """Mean maximal trace-norm estimation error against the four-term bound."""
    kernel_spec = _require_kernel(spec)
    root = InnovationStream(spec.seed)
    points = []
    for gi, g in enumerate(spec.grid):
        n, d = int(g["n"]), int(g["d"])
        kernel = kernel_from_spec(kernel_spec, n=n, d=d)
        if not isinstance(kernel, LinearKernel):
            raise InvalidInputError("qhat-scaling needs a linear kernel (analytic target)")
        b = int(g.get("b", spec.params.get("bandwidth", bandwidth_default(n))))
        reference = qtrue(kernel, n)

        def one_rep(r: int, *, kernel=kernel, n=n, b=b, reference=reference, gi=gi) -> float:
            x = gen_path(kernel, n, root.derive(("qhat", gi, r)))
            return qhat_error(qhat(x, b), reference)

        values = np.asarray(_parallel_map(one_rep, range(spec.replications), jobs))
        measured = float(values.mean())
        theta = kernel.theta_meta.theta
        beta = kernel.theta_meta.beta
        gamma = kernel.gamma_bound
        predicted = theta ** 2 * (gamma * math.sqrt(b) + math.sqrt(n * d * b)
                                  + n / b + n * b ** (2.0 - beta))
        points.append(GridPoint(
            params={"n": n, "d": d, "b": b},
            measured=measured,
            predicted=predicted,
            implied_constant=measured / predicted if measured > 0 else None,
            extra={"mc_se": float(values.std(ddof=1) / math.sqrt(values.size)),
                   "error_over_n": measured / n},
            samples=[float(v) for v in values],
        ))
    slope, resid = _fit_loglog(points)
    return ScalingReport(
        experiment=spec.experiment,
        formula="Theta^2 * (Gamma*sqrt(b) + sqrt(n*d*b) + n/b + n*b^(2-beta))",
        points=points, slope=slope, slope_residual=resid,
        meta={"seed": spec.seed, "replications": spec.replications},
    )


# ---------------------------------------------------------------------------
# Moment-inequality ratio
# ---------------------------------------------------------------------------

def theta_matrix(kernel: LinearKernel, n: int, q: float) -> Array:
    """Analytic dependence bounds theta_{t,j} arranged as an (n, window+1) array."""
    if not isinstance(kernel, LinearKernel):
        raise InvalidInputError("theta_matrix requires a linear kernel")
    if not 1 <= n <= kernel.horizon:
        raise InvalidInputError(f"n must be in 1..{kernel.horizon}")
    mu = innovation_pair_moment(kernel.innovation, kernel.components, q)
    lag_norms = np.linalg.norm(kernel.coeffs.reshape(kernel.window + 1, -1), axis=1)
    return np.abs(kernel.schedule[:n])[:, np.newaxis] * (lag_norms * mu)[np.newaxis, :]


def rosenthal_rhs_general(theta: Array, q: float) -> float:
    """n^(1/2 - 1/q) * sum_j (sum_t theta_{t,j}^q)^(1/q), lags summed from 0."""
    n = theta.shape[0]
    cols = (theta ** q).sum(axis=0) ** (1.0 / q)
    return float(n ** (0.5 - 1.0 / q) * cols.sum())


def rosenthal_rhs_euclidean(theta_q: Array, theta_2: Array, q: float) -> float:
    """Refined Euclidean-norm bound: lag-weighted q-term plus second-moment term."""
    if theta_q.shape != theta_2.shape:
        raise InvalidInputError("theta arrays must share a shape")
    n = theta_q.shape[0]
    lags = np.arange(theta_q.shape[1])
    weights = np.minimum(np.maximum(lags, 1), n) ** (0.5 - 1.0 / q)
    cols_q = (theta_q ** q).sum(axis=0) ** (1.0 / q)
    term_q = float((weights * cols_q).sum())
    cols_2 = np.sqrt((theta_2 ** 2).sum(axis=0))
    term_2 = float(cols_2[: min(cols_2.size, n + 1)].sum())
    return term_q + term_2


def exp_rosenthal(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """Ratio of the measured maximal-partial-sum moment to the analytic bounds."""
    kernel_spec = _require_kernel(spec)
    q = float(spec.params.get("q", 4.0))
    r = float(spec.params.get("r", 2.0))
    if not 2 <= r <= q:
        raise InvalidInputError("need 2 <= r <= q")
    root = InnovationStream(spec.seed)
    points = []
    for gi, g in enumerate(spec.grid):
        n, d = int(g["n"]), int(g["d"])
        kernel = kernel_from_spec(kernel_spec, n=n, d=d)
        if not isinstance(kernel, LinearKernel):
            raise InvalidInputError("rosenthal needs a linear kernel (analytic theta)")

        def one_rep(rep: int, *, kernel=kernel, n=n, gi=gi) -> float:
            x = gen_path(kernel, n, root.derive(("rosenthal", gi, rep)))
            sums = np.cumsum(x, axis=0)
            return float(np.linalg.norm(sums, ord=r, axis=1).max())

        values = np.asarray(_parallel_map(one_rep, range(spec.replications), jobs))
        lhs = float(np.mean(values ** q) ** (1.0 / q))
        bound_general = rosenthal_rhs_general(theta_matrix(kernel, n, q), q)
        extra = {"lhs": lhs, "rhs_general": bound_general,
                 "mc_se": float(values.std(ddof=1) / math.sqrt(values.size))}
        if r == 2:
            bound_euclid = rosenthal_rhs_euclidean(theta_matrix(kernel, n, q),
                                                   theta_matrix(kernel, n, 2.0), q)
            extra["rhs_euclidean"] = bound_euclid
            extra["ratio_euclidean"] = lhs / bound_euclid
        points.append(GridPoint(
            params={"n": n, "d": d},
            measured=lhs,
            predicted=bound_general,
            implied_constant=lhs / bound_general if lhs > 0 else None,
            extra=extra,
            samples=[float(v) for v in values],
        ))
    slope, resid = _fit_loglog(points)
    return ScalingReport(
        experiment=spec.experiment,
        formula="n^(1/2-1/q) * sum_j (sum_t theta_{t,j,q,r}^q)^(1/q)",
        points=points, slope=slope, slope_residual=resid,
        meta={"seed": spec.seed, "replications": spec.replications, "q": q, "r": r},
    )


# ---------------------------------------------------------------------------
# Distributional approximation
# ---------------------------------------------------------------------------

def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def exp_dist_approx(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """KS distance between the statistic on data and on matched Gaussian paths."""
    kernel_spec = _require_kernel(spec)
    statistic = spec.params.get("statistic", "seq")
    if statistic not in _STATISTICS:
        raise InvalidInputError(f"statistic must be one of {sorted(_STATISTICS)}")
    stat = _STATISTICS[statistic]
    root = InnovationStream(spec.seed)
    chunk = 128
    points = []
    for gi, g in enumerate(spec.grid):
        n, d = int(g["n"]), int(g["d"])
        kernel = kernel_from_spec(kernel_spec, n=n, d=d)
        if not isinstance(kernel, LinearKernel):
            raise InvalidInputError("dist-approx needs a linear kernel (analytic covariances)")

        def data_rep(rep: int, *, kernel=kernel, n=n, gi=gi) -> float:
            x = gen_path(kernel, n, root.derive(("data", gi, rep)))
            return float(stat(x[np.newaxis])[0])

        data_stats = np.asarray(_parallel_map(data_rep, range(spec.replications), jobs))

        w, v = np.linalg.eigh(np.stack([sigma_analytic(kernel, t) for t in range(1, n + 1)]))
        factors = np.einsum("tik,tk,tjk->tij", v, np.sqrt(np.maximum(w, 0.0)), v)

        def gauss_chunk(c: int, *, factors=factors, gi=gi) -> Array:
            size = min(chunk, spec.replications - c * chunk)
            rng = root.derive(("gauss", gi)).generator(("chunk", c))
            normals = rng.standard_normal((size, factors.shape[0], factors.shape[1]))
            return stat(np.einsum("tij,rtj->rti", factors, normals))

        n_chunks = (spec.replications + chunk - 1) // chunk
        gauss_stats = np.concatenate(_parallel_map(gauss_chunk, range(n_chunks), jobs))

        measured = ks_two_sample(data_stats, gauss_stats)
        band = 1.36 * math.sqrt(2.0 / spec.replications)
        points.append(GridPoint(
            params={"n": n, "d": d},
            measured=measured,
            predicted=band,
            implied_constant=measured / band if measured > 0 else None,
            extra={"null_band_5pct": band},
            samples=[float(x) for x in data_stats],
        ))
    slope, resid = _fit_loglog(points)
    return ScalingReport(
        experiment=spec.experiment,
        formula="two-sample KS vs 1.36*sqrt(2/R) null band",
        points=points, slope=slope, slope_residual=resid,
        meta={"seed": spec.seed, "replications": spec.replications, "statistic": statistic},
    )


_RUNNERS = {
    "size": exp_size,
    "power": exp_size,
    "coupling-scaling": exp_coupling_scaling,
    "qhat-scaling": exp_qhat_scaling,
    "rosenthal": exp_rosenthal,
    "dist-approx": exp_dist_approx,
}


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ScalingReport:
    """Dispatch an experiment spec to its runner."""
    return _RUNNERS[spec.experiment](spec, jobs=jobs)
