"""Command-line interface: simulate, estimate-cov, test, calibrate, rates,
verify-coupling, experiment.

Exit codes: 0 success, 1 invalid input (including unknown flags), 2 internal
numerical failure.  All outputs are byte-identical given the same flags and
seed; the environment variable SEQGAUSS_SEED overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ._util import g17
from .coupling import GaussianPairCoupling, block_size, rate_chi, rate_xi, rate_zaitsev, RateParams
from .covest import CovProcess, bandwidth_default, qhat
from .errors import InvalidInputError, NotPSDError
from .experiments import ExperimentSpec, run_experiment
from .inference import TestConfig, calibrate_quantile, run_test
from .procmodel import InnovationStream, gen_path, load_kernel


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str) -> None:
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors through exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(self, message)


def _default_seed() -> int:
    raw = os.environ.get("SEQGAUSS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"SEQGAUSS_SEED must be an integer, got {raw!r}") from exc


def write_csv_matrix(path: str, x: np.ndarray, header: bool = False) -> None:
    """CSV with 17 significant digits per value (lossless round trip)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(",".join(f"x{i + 1}" for i in range(x.shape[1])) + "\n")
        for row in x:
            fh.write(",".join(g17(v) for v in row) + "\n")


def read_csv_matrix(path: str) -> np.ndarray:
    """Read a numeric CSV, skipping one header line if present."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    skip = 0
    if first:
        try:
            [float(tok) for tok in first.strip().split(",")]
        except ValueError:
            skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.size == 0:
        raise InvalidInputError(f"no data rows in {path}")
    return data


def _dump_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_simulate(args) -> int:
    kernel = load_kernel(args.kernel, n=args.n, d=args.d)
    n = args.n if args.n is not None else kernel.horizon
    x = gen_path(kernel, n, InnovationStream(args.seed))
    write_csv_matrix(args.output, x, header=args.header)
    return 0


def _cmd_estimate_cov(args) -> int:
    x = read_csv_matrix(args.input)
    b = args.bandwidth if args.bandwidth is not None else bandwidth_default(x.shape[0])
    qhat(x, b, center=args.center).save(args.output)
    return 0


def _cmd_test(args) -> int:
    x = read_csv_matrix(args.input)
    config = TestConfig(alpha=args.alpha, statistic=args.stat, nu=args.nu, tau=args.tau,
                        bandwidth=args.bandwidth, mc_reps=args.mc, seed=args.seed)
    report = run_test(x, config)
    _dump_json(report.to_json_dict(), args.output)
    return 0


def _cmd_calibrate(args) -> int:
    cov = CovProcess.load(args.cov)
    result = calibrate_quantile(cov, args.stat, args.alpha, args.mc,
                                InnovationStream(args.seed))
    _dump_json({
        "statistic": args.stat,
        "alpha": result.alpha,
        "quantile": result.quantile,
        "quantile_se": result.standard_error,
        "mc_reps": result.mc_reps,
        "seed": args.seed,
        "n": cov.horizon,
        "d": cov.dim,
        "projected_increments": result.projected_increments,
    }, args.output)
    return 0


def _cmd_rates(args) -> int:
    chi = rate_chi(args.q, args.beta)
    lines = [f"chi={chi:.12g}"]
    if args.beta > 2:
        lines.append(f"xi={rate_xi(args.q, args.beta):.12g}")
    else:
        lines.append("xi=undefined (needs beta > 2)")
    if args.n is not None and args.d is not None:
        params = RateParams(q=args.q, beta=args.beta, n=args.n, d=args.d)
        lines.append(f"block_chi={block_size(params, 'chi')}")
        if args.beta > 2:
            lines.append(f"block_xi={block_size(params, 'xi')}")
        lines.append(f"zaitsev={rate_zaitsev(args.q, args.d, args.n):.12g}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_verify_coupling(args) -> int:
    rng_setup = InnovationStream(args.seed).generator("verify-coupling-setup")
    rng_draws = InnovationStream(args.seed).generator("verify-coupling-draws")
    pairs = []
    all_ok = True
    for i in range(args.pairs):
        a = rng_setup.standard_normal((args.dim, args.dim))
        b = rng_setup.standard_normal((args.dim, args.dim))
        sigma1 = a @ a.T / args.dim
        sigma2 = b @ b.T / args.dim
        coupling = GaussianPairCoupling(sigma1, sigma2)
        y, y_prime = coupling.sample_many(args.reps, rng_draws)
        cov_err = float(np.linalg.norm(y_prime.T @ y_prime / args.reps - sigma2)
                        / np.linalg.norm(sigma2))
        target = coupling.mean_square_shift
        shift_err = abs(float(np.mean(np.sum((y_prime - y) ** 2, axis=1))) - target) / target
        ok = cov_err <= args.tolerance and shift_err <= args.tolerance
        all_ok = all_ok and ok
        pairs.append({"pair": i, "cov_rel_err": cov_err, "shift_rel_err": shift_err,
                      "mean_square_shift": target, "ok": ok})
        sys.stdout.write(f"pair {i}: cov_rel_err={cov_err:.4f} "
                         f"shift_rel_err={shift_err:.4f} [{'OK' if ok else 'FAIL'}]\n")
    payload = {"dim": args.dim, "pairs": pairs, "reps": args.reps, "seed": args.seed,
               "tolerance": args.tolerance, "all_ok": all_ok}
    if args.output:
        _dump_json(payload, args.output)
    sys.stdout.write(f"verify-coupling: {'PASS' if all_ok else 'FAIL'}\n")
    return 0


def _cmd_experiment(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    spec = ExperimentSpec.from_json_dict(payload)
    report = run_experiment(spec, jobs=args.jobs)
    output = args.output if args.output is not None else spec.output
    _dump_json(report.to_json_dict(), output)
    if args.tidy:
        with open(args.tidy, "w", encoding="utf-8", newline="") as fh:
            fh.write("experiment,n,d,replicate,value\n")
            for point in report.points:
                n, d = point.params.get("n"), point.params.get("d")
                for rep, value in enumerate(point.samples):
                    fh.write(f"{report.experiment},{n},{d},{rep},{g17(value)}\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="seqgauss",
                     description="Gaussian-coupling calibrated inference for "
                                 "high-dimensional nonstationary time series")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    seed = _default_seed()

    p = sub.add_parser("simulate", help="simulate a kernel path to CSV")
    p.add_argument("--kernel", required=True, help="kernel spec JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--header", action="store_true", help="write x1..xd column names")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate-cov", help="overlapping-block cumulative covariance")
    p.add_argument("--input", required=True, help="CSV path, one row per time step")
    p.add_argument("--bandwidth", type=int, default=None)
    p.add_argument("--center", action="store_true", help="subtract global column means")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_estimate_cov)

    p = sub.add_parser("test", help="calibrated sequential-mean or CUSUM test")
    p.add_argument("--input", required=True)
    p.add_argument("--stat", choices=["seq", "cusum"], default="seq")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--bandwidth", type=int, default=None)
    p.add_argument("--mc", type=int, default=2000)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("calibrate", help="Monte-Carlo quantile of a covariance process")
    p.add_argument("--cov", required=True, help="covariance-process JSON file")
    p.add_argument("--stat", choices=["seq", "cusum"], default="seq")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mc", type=int, default=2000)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("rates", help="approximation-rate exponents and block sizes")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("verify-coupling", help="Monte-Carlo check of the pair coupling")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--reps", type=int, default=100000)
    p.add_argument("--tolerance", type=float, default=0.03)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_verify_coupling)

    p = sub.add_parser("experiment", help="run an experiment spec JSON")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", default=None, help="override the spec's output path")
    p.add_argument("--tidy", default=None, help="per-replicate tidy CSV path")
    p.set_defaults(func=_cmd_experiment)
    return parser


def cli_main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(exc.parser.format_usage())
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except InvalidInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    try:
        return args.func(args)
    except (InvalidInputError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (NotPSDError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2


def main() -> None:  # console-script entry point
    sys.exit(cli_main(sys.argv[1:]))
