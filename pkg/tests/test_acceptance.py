"""Acceptance suite: one test per release criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are fixed here, not tuned at run time; Monte-Carlo
criteria use pinned seeds so outcomes are reproducible bit for bit.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np

from seqgauss import (
    ExperimentSpec,
    GaussianPairCoupling,
    InnovationStream,
    exp_coupling_scaling,
    exp_dist_approx,
    exp_qhat_scaling,
    exp_rosenthal,
    exp_size,
    qhat,
    quantile_mc,
    rate_chi,
    rate_xi,
    trace_norm,
    xi_breakpoint,
)
from seqgauss.covest import CovProcess
from seqgauss.cli import cli_main

MA1_GAUSSIAN = {"type": "linear", "lags": [1.0, 0.5], "innovation": "gaussian"}
MA1_UNIFORM = {"type": "linear", "lags": [1.0, 0.5], "innovation": "uniform"}


def _report(num, name, ok, detail):
    print(f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} failed: {detail}"


def _chi_fraction(q, beta):
    if beta >= Fraction(3, 2):
        return (q - 2) / (6 * q - 4)
    return (beta - 1) * (q - 2) / (q * (4 * beta - 3) - 2)


def _xi_fraction(q, beta):
    if beta >= 3:
        return (q - 2) / (6 * q - 4)
    if beta > (3 + 2 / q) / (1 + 2 / q):
        return (beta - 2) * (q - 2) / ((4 * beta - 6) * q - 4)
    return Fraction(1, 2) - 1 / beta


def _inverse_normal(p, tol=1e-13):
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_01_rate_functions():
    start = time.perf_counter()
    qs = [Fraction(5, 2), Fraction(3), Fraction(4), Fraction(8), Fraction(32)]
    chi_betas = [Fraction(11, 10), Fraction(5, 4), Fraction(3, 2), Fraction(2), Fraction(3)]
    xi_betas = [Fraction(21, 10), Fraction(11, 5), Fraction(5, 2), Fraction(14, 5), Fraction(3)]
    worst = 0.0
    points = 0
    for q in qs:
        for beta in chi_betas:
            worst = max(worst, abs(rate_chi(float(q), float(beta)) - float(_chi_fraction(q, beta))))
            points += 1
        for beta in xi_betas:
            worst = max(worst, abs(rate_xi(float(q), float(beta)) - float(_xi_fraction(q, beta))))
            points += 1

    seam_err = 0.0
    for q in (2.5, 3.0, 4.0, 8.0, 32.0):
        qf = Fraction(q)
        # chi branch seam at beta = 3/2
        lhs = (qf - 2) / (6 * qf - 4)
        rhs = (Fraction(3, 2) - 1) * (qf - 2) / (qf * (4 * Fraction(3, 2) - 3) - 2)
        seam_err = max(seam_err, abs(float(lhs - rhs)))
        seam_err = max(seam_err, abs(rate_chi(q, 1.5) - float(rhs)))
        # xi seam at beta = 3 between the top and middle branches
        mid_at_3 = (3 - 2) * (q - 2.0) / ((4 * 3 - 6) * q - 4)
        seam_err = max(seam_err, abs(rate_xi(q, 3.0) - mid_at_3))
        # xi seam at the low/middle breakpoint
        bstar = xi_breakpoint(q)
        low = 0.5 - 1.0 / bstar
        mid = (bstar - 2) * (q - 2.0) / ((4 * bstar - 6) * q - 4)
        seam_err = max(seam_err, abs(low - mid), abs(rate_xi(q, bstar) - low))
    elapsed = time.perf_counter() - start
    ok = points >= 50 and worst <= 1e-12 and seam_err <= 1e-12 and elapsed < 1.0
    _report(1, "rate functions vs exact rationals",
            ok, f"{points} points, max err {worst:.2e}, seam err {seam_err:.2e}, {elapsed:.3f}s")


def test_criterion_02_pair_coupling():
    start = time.perf_counter()
    rng = np.random.default_rng(20240802)
    draws = InnovationStream(515151)
    reps = 100000
    worst_cov = worst_shift = 0.0
    constructions = set()
    for i in range(10):
        a = rng.standard_normal((8, 16))
        b = rng.standard_normal((8, 16))
        sigma1, sigma2 = a @ a.T / 8, b @ b.T / 8
        coupling = GaussianPairCoupling(sigma1, sigma2)
        constructions.add(coupling.construction)
        y, y_prime = coupling.sample_many(reps, draws.generator(("pair", i)))
        emp = y_prime.T @ y_prime / reps
        worst_cov = max(worst_cov, float(np.linalg.norm(emp - sigma2) / np.linalg.norm(sigma2)))
        shift = float(np.mean(np.sum((y_prime - y) ** 2, axis=1)))
        target = trace_norm(sigma2 - sigma1)
        worst_shift = max(worst_shift, abs(shift - target) / target)
    elapsed = time.perf_counter() - start
    ok = worst_cov <= 0.03 and worst_shift <= 0.03 and elapsed < 120.0
    _report(2, "pairwise Gaussian coupling (10 pairs, d=8, R=1e5)",
            ok, f"cov err {worst_cov:.4f}, shift err {worst_shift:.4f}, "
                f"constructions {sorted(constructions)}, {elapsed:.1f}s")


def test_criterion_03_partial_sum_coupling_scaling():
    start = time.perf_counter()
    spec = ExperimentSpec(
        experiment="coupling-scaling",
        grid=({"n": 256, "d": 1}, {"n": 1024, "d": 1}, {"n": 4096, "d": 1}),
        replications=400, seed=424242,
        params={"sigma": 1.0, "sigma_prime": 1.21})
    report = exp_coupling_scaling(spec)
    factor = report.stability_factor()
    elapsed = time.perf_counter() - start
    consts = {p.params["n"]: round(p.implied_constant, 4) for p in report.points}
    ok = factor is not None and factor <= 2.0 and elapsed < 300.0
    _report(3, "partial-sum coupling implied constant",
            ok, f"C(n) = {consts}, max/min = {factor:.3f}, {elapsed:.1f}s")


def test_criterion_04_covariance_estimator():
    start = time.perf_counter()
    spec = ExperimentSpec(
        experiment="qhat-scaling",
        grid=({"n": 512, "d": 1}, {"n": 4096, "d": 1}),
        replications=100, seed=99,
        kernel=MA1_GAUSSIAN)
    report = exp_qhat_scaling(spec)
    by_n = {p.params["n"]: p.extra["error_over_n"] for p in report.points}
    ratio = by_n[4096] / by_n[512]

    rng = np.random.default_rng(17)
    x = rng.standard_normal((256, 3))
    sliding = qhat(x, 12).increments
    naive = np.zeros_like(sliding)
    for t in range(12, 257):
        w = x[t - 12:t].sum(axis=0)
        naive[t - 1] = np.outer(w, w) / 12
    rel = float(np.abs(sliding - naive).max() / max(1.0, np.abs(naive).max()))
    elapsed = time.perf_counter() - start
    ok = ratio <= 0.6 and rel <= 1e-10 and elapsed < 300.0
    _report(4, "overlapping-block estimator error decay",
            ok, f"(err/n) ratio {ratio:.3f} <= 0.6, sliding-vs-naive {rel:.2e}, {elapsed:.1f}s")


def test_criterion_05_test_size():
    start = time.perf_counter()
    n = 500
    spec = ExperimentSpec(
        experiment="size", grid=({"n": n, "d": 5},), replications=500, seed=31415,
        kernel=MA1_GAUSSIAN,
        params={"alpha": 0.1, "statistic": "seq", "mc_reps": 2000,
                "tau": 1.0 / math.log(n), "nu": 1.0 / math.log(n)})
    report = exp_size(spec)
    freq = report.points[0].measured
    elapsed = time.perf_counter() - start
    ok = freq <= 0.13 and elapsed < 900.0
    _report(5, "null rejection rate (conservative)",
            ok, f"freq {freq:.3f} <= 0.13 over 500 reps, {elapsed:.1f}s")


def test_criterion_06_test_power():
    start = time.perf_counter()
    n = 500
    spec = ExperimentSpec(
        experiment="power", grid=({"n": n, "d": 5},), replications=200, seed=27182,
        kernel=MA1_GAUSSIAN,
        params={"alpha": 0.1, "statistic": "cusum", "mc_reps": 2000,
                "tau": 1.0 / math.log(n), "nu": 1.0 / math.log(n),
                "shift": {"coordinate": 0, "size": 1.0, "at": n // 2}})
    report = exp_size(spec)
    freq = report.points[0].measured
    elapsed = time.perf_counter() - start
    ok = freq >= 0.8 and elapsed < 900.0
    _report(6, "level-shift power (CUSUM)",
            ok, f"freq {freq:.3f} >= 0.8 over 200 reps, {elapsed:.1f}s")


def test_criterion_07_moment_inequality_ratio():
    start = time.perf_counter()
    spec = ExperimentSpec(
        experiment="rosenthal",
        grid=tuple({"n": n, "d": 1} for n in (64, 256, 1024, 4096)),
        replications=2000, seed=161803,
        kernel=MA1_GAUSSIAN, params={"q": 4.0, "r": 2.0})
    report = exp_rosenthal(spec)
    ratios = {p.params["n"]: p.implied_constant for p in report.points}
    finite = all(r is not None and 0 < r < math.inf for r in ratios.values())
    growth = ratios[4096] / ratios[64]
    elapsed = time.perf_counter() - start
    ok = finite and growth <= 10.0 and elapsed < 600.0
    _report(7, "maximal-moment bound ratio",
            ok, f"ratios {{n: %s}}, growth {growth:.3f} <= 10, {elapsed:.1f}s"
                % {k: round(v, 3) for k, v in ratios.items()})


def test_criterion_08_distributional_approximation():
    start = time.perf_counter()
    spec = ExperimentSpec(
        experiment="dist-approx", grid=({"n": 1000, "d": 5},),
        replications=2000, seed=17, kernel=MA1_UNIFORM)
    report = exp_dist_approx(spec)
    ks = report.points[0].measured

    control_spec = ExperimentSpec(
        experiment="dist-approx", grid=({"n": 200, "d": 5},),
        replications=2000, seed=90,
        kernel={"type": "linear", "lags": [1.0], "innovation": "gaussian"})
    control = exp_dist_approx(control_spec)
    band = control.points[0].predicted
    control_ks = control.points[0].measured
    elapsed = time.perf_counter() - start
    ok = ks <= 0.05 and control_ks <= band and elapsed < 600.0
    _report(8, "statistic-law Gaussian approximation",
            ok, f"KS {ks:.4f} <= 0.05, control {control_ks:.4f} <= band {band:.4f}, {elapsed:.1f}s")


def test_criterion_09_quantile_calibration():
    start = time.perf_counter()
    cov = CovProcess(np.ones((1, 1, 1)))
    got = quantile_mc(cov, "seq", 0.1, 100000, InnovationStream(7))
    oracle = _inverse_normal(0.95)
    err = abs(got - oracle)
    elapsed = time.perf_counter() - start
    ok = err <= 0.02
    _report(9, "Monte-Carlo quantile vs inverse-normal oracle",
            ok, f"got {got:.4f}, oracle {oracle:.4f}, err {err:.4f} <= 0.02, {elapsed:.1f}s")


def test_criterion_10_cli_determinism(tmp_path):
    start = time.perf_counter()
    kernel_path = tmp_path / "kernel.json"
    kernel_path.write_text(json.dumps({**MA1_GAUSSIAN, "d": 2, "n": 128}))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "experiment": "coupling-scaling", "grid": [{"n": 64, "d": 1}],
        "replications": 40, "seed": 12, "params": {"sigma": 1.0, "sigma_prime": 1.21}}))

    def run_twice(args, outputs, extra=()):
        blobs = []
        for tag in ("a", "b"):
            paths = {key: tmp_path / f"{key}_{tag}" for key in outputs}
            argv = [a.format(**{k: str(v) for k, v in paths.items()}) for a in args]
            assert cli_main(argv + list(extra)) == 0
            blobs.append(b"".join(paths[k].read_bytes() for k in outputs))
        return blobs[0] == blobs[1]

    checks = {}
    checks["simulate"] = run_twice(
        ["simulate", "--kernel", str(kernel_path), "--n", "64", "--seed", "5",
         "--output", "{x}"], ["x"])
    cli_main(["simulate", "--kernel", str(kernel_path), "--n", "64", "--seed", "5",
              "--output", str(tmp_path / "x.csv")])
    checks["estimate-cov"] = run_twice(
        ["estimate-cov", "--input", str(tmp_path / "x.csv"), "--bandwidth", "4",
         "--output", "{q}"], ["q"])
    cli_main(["estimate-cov", "--input", str(tmp_path / "x.csv"), "--bandwidth", "4",
              "--output", str(tmp_path / "q.json")])
    checks["test"] = run_twice(
        ["test", "--input", str(tmp_path / "x.csv"), "--stat", "cusum", "--alpha", "0.1",
         "--seed", "1", "--mc", "300", "--output", "{r}"], ["r"])
    checks["calibrate"] = run_twice(
        ["calibrate", "--cov", str(tmp_path / "q.json"), "--alpha", "0.1", "--mc", "300",
         "--seed", "2", "--output", "{c}"], ["c"])
    checks["verify-coupling"] = run_twice(
        ["verify-coupling", "--dim", "3", "--pairs", "2", "--reps", "5000", "--seed", "3",
         "--output", "{v}"], ["v"])

    jobs_blobs = []
    for jobs, tag in (("1", "j1"), ("3", "j3")):
        out = tmp_path / f"rep_{tag}.json"
        tidy = tmp_path / f"tidy_{tag}.csv"
        assert cli_main(["experiment", "--spec", str(spec_path), "--jobs", jobs,
                         "--output", str(out), "--tidy", str(tidy)]) == 0
        jobs_blobs.append(out.read_bytes() + tidy.read_bytes())
    checks["experiment-multiworker"] = jobs_blobs[0] == jobs_blobs[1]

    elapsed = time.perf_counter() - start
    failed = [k for k, v in checks.items() if not v]
    _report(10, "CLI byte-identical reproducibility",
            not failed, f"checked {sorted(checks)}, failures {failed}, {elapsed:.1f}s")
