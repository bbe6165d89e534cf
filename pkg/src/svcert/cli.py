"""Command-line front end: bounds tables, model fitting, sweeps, Monte Carlo
validation and SVG plots.

Every command is deterministic under fixed flags and seed, writes complete
artifacts or nothing, and exits nonzero on any failure.  ``SVCERT_THREADS``
sets the worker count for trial fan-out; ``SVCERT_BACKEND`` picks the
numba/numpy compute backend.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bounds as bnd
from . import experiments as exp
from . import models as mdl
from . import svgplot
from .kernels import KernelSpec

__all__ = ["main"]


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _kernel_from_args(args) -> KernelSpec:
    kind = args.kernel
    if kind == "gaussian":
        return KernelSpec(kind="gaussian", width=args.width)
    if kind == "polynomial":
        return KernelSpec(kind="polynomial", degree=args.degree,
                          offset=args.offset)
    return KernelSpec(kind="linear")


def _add_kernel_flags(p):
    p.add_argument("--kernel", choices=("gaussian", "linear", "polynomial"),
                   default="gaussian")
    p.add_argument("--width", type=float, default=1.0,
                   help="gaussian kernel width")
    p.add_argument("--degree", type=int, default=2,
                   help="polynomial kernel degree")
    p.add_argument("--offset", type=float, default=0.0,
                   help="polynomial kernel offset")


def _write_text(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _read_dataset(path, needs_outputs=True):
    if not os.path.exists(path):
        raise CliError(f"data file not found: {path}", code=1)
    with open(path) as fh:
        text = fh.read()
    try:
        return exp.parse_dataset_csv(text, needs_outputs=needs_outputs)
    except ValueError as e:
        raise CliError(f"{path}: {e}", code=1) from None


def cmd_bounds(args) -> int:
    if args.k is not None and args.k > args.n:
        raise CliError("complexity exceeds sample size")
    if args.k is not None:
        iv = bnd.epsilon_bounds(bnd.BoundQuery(args.n, args.k, args.beta))
        print(f"{iv.lower:.2g}, {iv.upper:.2g}")
        return 0
    table = bnd.epsilon_table(args.n, args.beta)
    text = bnd.interval_table_csv(table)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gendata(args) -> int:
    config = exp.SincConfig(
        n_train=args.n,
        input_range=(args.range[0], args.range[1]),
        noise_scale=args.noise_scale,
        seed=args.seed,
    )
    data = exp.gen_sinc(config)
    _write_text(args.out, exp.dataset_csv(data))
    return 0


def _interval_text(iv) -> str:
    return f"[{iv.lower:.3g}, {iv.upper:.3g}]"


def cmd_fit(args) -> int:
    kernel = _kernel_from_args(args)
    data = _read_dataset(args.data, needs_outputs=args.method != "svdd")
    n = len(data)
    if args.method == "svr":
        model = mdl.fit_svr(data, args.tau, args.rho, kernel)
        s_star = mdl.svr_complexity(model, data)
        cert = mdl.certify("svr", s_star, n, args.beta)
    elif args.method == "svdd":
        model = mdl.fit_svdd(data, args.rho, kernel)
        s_star = mdl.svdd_complexity(model, data)
        cert = mdl.certify("svdd", s_star, n, args.beta)
    else:
        model = mdl.fit_svm(data, args.rho, kernel)
        s_star = mdl.svm_complexity(model, data)
        cert = mdl.certify("svm_violation", s_star, n, args.beta)
    cost = mdl.scenario_cost(model)
    mdl.save_model(args.out, model, s_star=s_star, certificate=cert, cost=cost)
    extra = ""
    if args.method == "svm" and model.w_is_zero:
        extra = f" w_zero=True b={model.offset:.3g}"
    print(
        f"{args.method}: n={n} cost={cost:.3g} s_star={s_star} "
        f"interval={_interval_text(cert.interval)} "
        f"confidence={cert.confidence:.6g}{extra}"
    )
    return 0


def _parse_rhos(spec: str):
    spec = spec.strip()
    if spec.startswith("pow(") and spec.endswith(")"):
        body = spec[4:-1]
        base_s, rng = body.split(",", 1)
        if "/" in base_s:
            num, den = base_s.split("/")
            base = float(num) / float(den)
        else:
            base = float(base_s)
        lo_s, hi_s = rng.strip().split("..")
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise CliError(f"bad exponent range in {spec!r}")
        return [base**e for e in range(lo, hi + 1)]
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"cannot parse rho list {spec!r}") from None


def cmd_sweep(args) -> int:
    kernel = _kernel_from_args(args)
    data = _read_dataset(args.data)
    rhos = _parse_rhos(args.rhos)
    rows = exp.rho_sweep(data, rhos, args.tau, kernel, args.beta)
    _write_text(args.out, exp.sweep_csv(rows))
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"rho={r.rho:.3g} failed: {r.error}", file=sys.stderr)
    print(f"sweep: {len(rows) - len(failed)}/{len(rows)} rows -> {args.out}")
    return 0 if not failed else 1


def cmd_validate(args) -> int:
    kernel = _kernel_from_args(args)
    config = exp.SincConfig(
        n_train=args.n,
        noise_scale=args.noise_scale,
        seed=args.seed,
    )
    report = exp.monte_carlo_validation(
        config,
        rho=args.rho,
        tau=args.tau,
        kernel=kernel,
        beta=args.beta,
        n_trials=args.trials,
        n_test=args.test_size,
    )
    _write_text(args.out, exp.validation_csv(report))
    print(f"coverage: {report.coverage_count}/{report.n_trials}")
    return 0


def _read_csv_rows(path, expected_header):
    if not os.path.exists(path):
        raise CliError(f"csv file not found: {path}", code=1)
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise CliError(f"{path}: empty CSV", code=1)
    header = [h.strip() for h in lines[0].split(",")]
    if header != expected_header:
        raise CliError(
            f"{path}: schema mismatch, expected columns "
            f"{','.join(expected_header)} but found {','.join(header)}",
            code=1,
        )
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise CliError(f"{path}: line {lineno}: wrong field count", code=1)
        rows.append([float(c) for c in cells])
    if not rows:
        raise CliError(f"{path}: no data rows", code=1)
    return rows


def cmd_plot(args) -> int:
    if args.kind == "bounds":
        rows = _read_csv_rows(args.csv, ["k", "eps_lower", "eps_upper"])
        svg = svgplot.line_plot(
            [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]
        )
    elif args.kind == "cost_risk":
        rows = _read_csv_rows(
            args.csv, ["rho", "cost", "tube", "s_star", "eps_lower", "eps_upper"]
        )
        rows = [r for r in rows if not any(math.isnan(v) for v in r)]
        if not rows:
            raise CliError(f"{args.csv}: no usable rows", code=1)
        svg = svgplot.cost_risk_plot(
            [r[0] for r in rows],
            [r[1] for r in rows],
            [r[4] for r in rows],
            [r[5] for r in rows],
        )
    elif args.kind == "scatter":
        rows = _read_csv_rows(
            args.csv,
            ["trial", "s_star", "empirical_risk", "eps_lower", "eps_upper",
             "covered"],
        )
        svg = svgplot.scatter_plot(
            [int(r[1]) for r in rows],
            [r[2] for r in rows],
            [r[3] for r in rows],
            [r[4] for r in rows],
        )
    else:  # tube
        if not args.model:
            raise CliError("tube plots need --model")
        data = _read_dataset(args.csv)
        try:
            model, _ = mdl.load_model(args.model)
        except (OSError, ValueError, KeyError) as e:
            raise CliError(f"{args.model}: {e}", code=1) from None
        if not isinstance(model, mdl.SvrModel):
            raise CliError("tube plots need a tube-regression model", code=1)
        m = data.inputs[:, 0]
        grid = np.linspace(float(m.min()), float(m.max()), 400)
        centers = model.centers(grid)
        svg = svgplot.tube_plot(
            list(m), list(data.outputs), list(grid), list(centers), model.tube
        )
    _write_text(args.out, svg)
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="svcert",
        description="Relaxation-weighted support vector methods with "
        "distribution-free risk certificates.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="risk interval(s) for given N, beta")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path for the full table")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gendata", help="generate a noisy sinc dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--range", type=float, nargs=2, default=(-3.0, 3.0))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gendata)

    p = sub.add_parser("fit", help="fit a model and write its JSON document")
    p.add_argument("--method", choices=("svr", "svdd", "svm"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1e-4)
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="cost-risk table across relaxation weights")
    p.add_argument("--data", required=True)
    p.add_argument("--rhos", required=True,
                   help='e.g. "pow(3/5,0..14)" or "1.0,0.5,0.25"')
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="Monte Carlo coverage of the intervals")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, default=(3.0 / 5.0) ** 9)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--test-size", type=int, default=10000)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render a CSV artifact as SVG")
    p.add_argument("--kind", choices=("bounds", "cost_risk", "scatter", "tube"),
                   required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None,
                   help="model JSON (tube plots only)")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
