"""Command-line entry point: ``subspace-evt {test,debias,simulate,saddlepoint-check,validate}``.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 null rejected
(``test --exit-code-decision`` only).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .debias import DebiasInput, debias_singular_values, theta_location
from .errors import SubspaceEvtError
from .evt import GenGamma, gengamma_survival
from .harness import DEFAULT_SEED, ExperimentConfig, builtin_experiments, emit_outputs, run_experiment
from .linalg import read_matrix
from .saddlepoint import QuadFormSpec, quadform_sf, row_norm_quantiles
from .testing import OracleMode, PluginMode, test_subspace, validate_hypothesis

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_REJECT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str, flag: str) -> np.ndarray:
    """A file path (CSV or DMAT) or an inline comma-separated list."""
    path = Path(text)
    if path.exists():
        return read_matrix(path).ravel()
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise UsageError(f"{flag}: {text!r} is neither a readable file nor a comma-separated list") from None


def _alpha(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float {text!r}") from None
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {a}")
    return a


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {k}")
    return k


def _nonneg_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float {text!r}") from None
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {x}")
    return x


def cmd_test(args) -> int:
    if args.mode == "plugin":
        if args.sigma is None:
            raise UsageError("--mode plugin requires --sigma")
        mode = PluginMode(args.sigma)
    else:
        if args.oracle_s is None:
            raise UsageError("--mode oracle requires --oracle-s")
        s = _vector(args.oracle_s, "--oracle-s")
        if args.noise_cov is not None:
            if args.oracle_v is None:
                raise UsageError("--noise-cov requires --oracle-v")
            mode = OracleMode(s, read_matrix(args.oracle_v), _vector(args.noise_cov, "--noise-cov"))
        else:
            V = read_matrix(args.oracle_v) if args.oracle_v else None
            mode = OracleMode(s, V, (args.sigma if args.sigma is not None else 1.0) ** 2)
    Mhat = read_matrix(args.matrix)
    U0 = read_matrix(args.null)
    report = test_subspace(Mhat, args.rank, U0, args.alpha, mode, C_mu=args.c_mu)
    if args.json:
        print(report.to_json(indent=2))
    else:
        print(f"decision:       {report.decision}")
        print(f"statistic:      {report.statistic:.6g}")
        print(f"critical value: {report.critical_value:.6g} (alpha = {report.alpha:g})")
        print(f"p-value:        {report.p_value:.6g}")
        for k, v in report.diagnostics.items():
            print(f"  {k}: {v}")
    if args.exit_code_decision and report.rejected:
        return EXIT_REJECT
    return EXIT_OK


def cmd_debias(args) -> int:
    shat = _vector(args.svals, "--svals")
    inp = DebiasInput(np.sort(shat)[::-1], args.n, args.m, args.sigma)
    stilde = debias_singular_values(inp)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["shat", "stilde", "theta"])
    for a, b in zip(inp.shat, stilde):
        w.writerow([repr(float(a)), repr(float(b)), repr(float(theta_location(b, inp)))])
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if args.scale != 1.0:
            cfg = cfg.scaled(args.scale)
    else:
        table = {c.name: c for c in builtin_experiments(args.scale)}
        if args.preset not in table:
            raise UsageError(f"unknown preset {args.preset!r}; available: {', '.join(table)}")
        cfg = table[args.preset]
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = cfg.replace(**overrides)
    res = run_experiment(cfg)
    root = emit_outputs(res, args.out)
    bad = [c.index for c in res.cells if not c.valid]
    print(f"wrote {root} ({len(res.cells)} cells, {len(bad)} invalid)")
    return EXIT_OK


def cmd_saddlepoint_check(args) -> int:
    lam = np.sort(_vector(args.lambdas, "--lambdas"))[::-1]
    levels = _vector(args.grid_quantiles, "--grid-quantiles")
    if np.any((levels <= 0) | (levels >= 1)) or np.any(np.diff(levels) <= 0):
        raise UsageError("--grid-quantiles must be ascending levels in (0, 1)")
    spec = QuadFormSpec(lam, args.ell)
    ref = GenGamma(spec.lambda1, spec.ell)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["x", "exact_tail", "gengamma_tail", "ratio", "A"])
    for x in row_norm_quantiles(spec, levels):
        exact = quadform_sf(x * x, spec)
        gg = gengamma_survival(x, ref)
        w.writerow([repr(float(x)), repr(exact), repr(float(gg)), repr(float(gg / exact)), repr(spec.A)])
    return EXIT_OK


def cmd_validate(args) -> int:
    out = validate_hypothesis(read_matrix(args.null), args.c_mu)
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subspace-evt", description="Two-to-infinity subspace tests with Gumbel calibration.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test H0: U = U0 on an observed matrix")
    t.add_argument("--matrix", required=True, help="observed matrix (CSV or DMAT)")
    t.add_argument("--rank", required=True, type=_positive_int, help="signal rank r")
    t.add_argument("--null", required=True, help="hypothesized n x r frame U0 (CSV or DMAT)")
    t.add_argument("--alpha", type=_alpha, default=0.05, help="level in (0, 1) (default 0.05)")
    t.add_argument("--mode", choices=("plugin", "oracle"), default="plugin", help="calibration source (default plugin)")
    t.add_argument("--sigma", type=_nonneg_float, help="noise standard deviation (plugin: required; oracle: D = sigma^2 I)")
    t.add_argument("--oracle-s", help="population singular values (file or comma list), oracle mode")
    t.add_argument("--oracle-v", help="population right frame V (m x r), oracle mode")
    t.add_argument("--noise-cov", help="diagonal of the noise column covariance (length m), oracle mode")
    t.add_argument("--c-mu", type=float, help="delocalization constant for the parameter-space screen")
    t.add_argument("--json", action="store_true", help="print the report as JSON")
    t.add_argument("--exit-code-decision", action="store_true", help="exit 3 when H0 is rejected")
    t.set_defaults(func=cmd_test)

    d = sub.add_parser("debias", help="de-bias sample singular values")
    d.add_argument("--svals", required=True, help="sample singular values (file or comma list)")
    d.add_argument("--n", required=True, type=_positive_int, help="rows")
    d.add_argument("--m", required=True, type=_positive_int, help="columns")
    d.add_argument("--sigma", required=True, type=_nonneg_float, help="noise standard deviation")
    d.set_defaults(func=cmd_debias)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment config JSON")
    src.add_argument("--preset", help="built-in preset name: " + ", ".join(c.name for c in builtin_experiments()))
    s.add_argument("--scale", type=float, default=1.0, help="multiplies dimensions and replicate counts (default 1)")
    s.add_argument("--workers", type=_positive_int, help="worker processes (results do not depend on it)")
    s.add_argument("--out", default="results", help="output directory (default ./results)")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    s.add_argument("--replicates", type=_positive_int, help="override the replicate count")
    s.add_argument("--alpha", type=_alpha, help="override the test level")
    s.set_defaults(func=cmd_simulate)

    q = sub.add_parser("saddlepoint-check", help="tail ratio of the generalized gamma reference to the exact tail")
    q.add_argument("--lambdas", required=True, help="eigenvalues lambda_j (file or comma list)")
    q.add_argument("--grid-quantiles", default="0.99,0.999,0.9999", help="ascending quantile levels (default 0.99,0.999,0.9999)")
    q.add_argument("--ell", type=_positive_int, help="multiplicity (default: detected)")
    q.set_defaults(func=cmd_saddlepoint_check)

    v = sub.add_parser("validate", help="screen U0 against the delocalized parameter space")
    v.add_argument("--null", required=True, help="hypothesized frame U0 (CSV or DMAT)")
    v.add_argument("--c-mu", type=float, default=10.0, help="delocalization constant (default 10)")
    v.add_argument("--json", action="store_true", help="print JSON")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"subspace-evt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SubspaceEvtError, ValueError, ArithmeticError, OSError) as exc:
        print(f"subspace-evt {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
