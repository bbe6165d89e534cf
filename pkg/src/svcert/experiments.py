"""Synthetic-data benchmark: noisy sinc regression, relaxation sweeps and
Monte Carlo coverage validation of the certified risk intervals."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundQuery, RiskInterval, epsilon_bounds
from .kernels import KernelSpec, gram_matrix
from .models import (
    Dataset,
    SvddModel,
    SvmModel,
    SvrModel,
    _fit_svr_full,
    scenario_cost,
    svr_complexity,
)
from .qp import SolverSettings

__all__ = [
    "SincConfig",
    "CostRiskRow",
    "ValidationReport",
    "gen_sinc",
    "rho_sweep",
    "empirical_risk",
    "monte_carlo_validation",
    "sweep_csv",
    "validation_csv",
    "dataset_csv",
    "parse_dataset_csv",
]

_EVAL_CHUNK = 4096


@dataclass(frozen=True)
class SincConfig:
    n_train: int = 2000
    input_range: tuple = (-3.0, 3.0)
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1:
            raise ValueError("n_train must be >= 1")
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        lo, hi = self.input_range
        if not lo < hi:
            raise ValueError("input_range must be increasing")


@dataclass(frozen=True)
class CostRiskRow:
    rho: float
    cost: float
    tube: float
    complexity: int
    eps_lower: float
    eps_upper: float
    error: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    trials: tuple  # (complexity, empirical_risk) pairs, ordered by trial index
    coverage_count: int
    n_trials: int
    intervals: tuple = field(default=())


def _gen_from_rng(rng, config: SincConfig) -> Dataset:
    lo, hi = config.input_range
    m = rng.uniform(lo, hi, config.n_train)
    noise = rng.laplace(0.0, config.noise_scale, config.n_train)
    return Dataset(inputs=m, outputs=np.sinc(m) + noise)


def gen_sinc(config: SincConfig) -> Dataset:
    """Uniform inputs with sinc(m) targets under Laplace noise, seeded."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    return _gen_from_rng(rng, config)


def empirical_risk(model, test_data: Dataset) -> float:
    """Fraction of test points strictly violating the model's constraint.

    Boundary ties count as non-violations; evaluation is chunked so large
    test sets do not materialize a full cross-kernel matrix.
    """
    X = test_data.inputs
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty test set")
    violations = 0
    for start in range(0, n, _EVAL_CHUNK):
        sl = slice(start, min(start + _EVAL_CHUNK, n))
        if isinstance(model, SvrModel):
            resid = np.abs(test_data.outputs[sl] - model.centers(X[sl]))
            violations += int(np.count_nonzero(resid > model.tube))
        elif isinstance(model, SvmModel):
            margin = 1.0 - test_data.outputs[sl] * model.decision_values(X[sl])
            violations += int(np.count_nonzero(margin > 0.0))
        elif isinstance(model, SvddModel):
            d2 = model.distances_sq(X[sl])
            violations += int(np.count_nonzero(d2 > model.radius_sq))
        else:
            raise TypeError(f"not a model: {type(model)!r}")
    return violations / n


def rho_sweep(
    data: Dataset,
    rhos,
    tau: float,
    kernel: KernelSpec,
    beta: float,
    settings: SolverSettings = SolverSettings(),
):
    """Fit the tube regressor across relaxation weights.

    The Gram matrix is built once and consecutive fits warm-start from the
    previous solution.  A failed fit yields a row flagged with its error and
    NaN numbers; remaining rows proceed.
    """
    rhos = list(rhos)
    if not rhos:
        raise ValueError("need at least one rho")
    gram = gram_matrix(kernel, data.inputs)
    cache: dict[int, RiskInterval] = {}
    rows = []
    init = None
    n = len(data)
    for rho in rhos:
        try:
            model, sol, _ = _fit_svr_full(
                data, tau, rho, kernel, settings, gram=gram, init=init
            )
            init = (sol.primal, sol.dual)
            s_star = svr_complexity(model, data)
            if s_star not in cache:
                cache[s_star] = epsilon_bounds(BoundQuery(n, s_star, beta))
            iv = cache[s_star]
            K = gram.values
            cost = model.tube + tau * float(
                model.dual_coeffs @ K @ model.dual_coeffs
            )
            rows.append(
                CostRiskRow(
                    rho=rho,
                    cost=cost,
                    tube=model.tube,
                    complexity=s_star,
                    eps_lower=iv.lower,
                    eps_upper=iv.upper,
                )
            )
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            rows.append(
                CostRiskRow(
                    rho=rho,
                    cost=float("nan"),
                    tube=float("nan"),
                    complexity=-1,
                    eps_lower=float("nan"),
                    eps_upper=float("nan"),
                    error=str(exc),
                )
            )
    return rows


def _worker_count() -> int:
    raw = os.environ.get("SVCERT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def monte_carlo_validation(
    config: SincConfig,
    rho: float,
    tau: float,
    kernel: KernelSpec,
    beta: float,
    n_trials: int,
    n_test: int,
    settings: SolverSettings = SolverSettings(),
) -> ValidationReport:
    """Repeatedly refit on fresh samples and test interval coverage.

    Per-trial RNG streams are spawned from the config seed, so results do not
    depend on execution order or worker count; coverage counts trials whose
    held-out risk estimate falls inside the certified interval.
    """
    if n_trials < 1 or n_test < 1:
        raise ValueError("n_trials and n_test must be >= 1")
    children = np.random.SeedSequence(config.seed).spawn(n_trials)
    cache: dict[int, RiskInterval] = {}
    n = config.n_train

    def run_trial(idx):
        train_ss, test_ss = children[idx].spawn(2)
        train = _gen_from_rng(np.random.default_rng(train_ss), config)
        test_cfg = SincConfig(
            n_train=n_test,
            input_range=config.input_range,
            noise_scale=config.noise_scale,
            seed=0,
        )
        test = _gen_from_rng(np.random.default_rng(test_ss), test_cfg)
        model, _, _ = _fit_svr_full(train, tau, rho, kernel, settings)
        s_star = svr_complexity(model, train)
        risk = empirical_risk(model, test)
        return s_star, risk

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, range(n_trials)))
    else:
        results = [run_trial(i) for i in range(n_trials)]

    trials = []
    intervals = []
    covered = 0
    for s_star, risk in results:
        if s_star not in cache:
            cache[s_star] = epsilon_bounds(BoundQuery(n, s_star, beta))
        iv = cache[s_star]
        trials.append((s_star, risk))
        intervals.append(iv)
        if iv.lower <= risk <= iv.upper:
            covered += 1
    return ValidationReport(
        trials=tuple(trials),
        coverage_count=covered,
        n_trials=n_trials,
        intervals=tuple(intervals),
    )


# ------------------------------------------------------------------ CSV I/O


def sweep_csv(rows) -> str:
    lines = ["rho,cost,tube,s_star,eps_lower,eps_upper"]
    for r in rows:
        lines.append(
            f"{r.rho:.17g},{r.cost:.17g},{r.tube:.17g},{r.complexity},"
            f"{r.eps_lower:.17g},{r.eps_upper:.17g}"
        )
    return "\n".join(lines) + "\n"


def validation_csv(report: ValidationReport) -> str:
    lines = ["trial,s_star,empirical_risk,eps_lower,eps_upper,covered"]
    for i, ((s_star, risk), iv) in enumerate(zip(report.trials, report.intervals)):
        covered = int(iv.lower <= risk <= iv.upper)
        lines.append(
            f"{i},{s_star},{risk:.17g},{iv.lower:.17g},{iv.upper:.17g},{covered}"
        )
    return "\n".join(lines) + "\n"


def dataset_csv(data: Dataset) -> str:
    d = data.inputs.shape[1]
    if d == 1:
        header = "m"
    else:
        header = ",".join(f"m{j}" for j in range(d))
    if data.outputs is not None:
        header += ",y"
    lines = [header]
    for i in range(len(data)):
        cells = [f"{v:.17g}" for v in data.inputs[i]]
        if data.outputs is not None:
            cells.append(f"{data.outputs[i]:.17g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_dataset_csv(text: str, needs_outputs: bool) -> Dataset:
    """Parse ``m[,m1,...][,y]`` CSV; errors carry 1-based line numbers."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("line 1: empty dataset file")
    header = [h.strip() for h in lines[0].split(",")]
    has_y = header[-1] == "y"
    if needs_outputs and not has_y:
        raise ValueError("line 1: expected a trailing 'y' column")
    n_in = len(header) - (1 if has_y else 0)
    if n_in < 1:
        raise ValueError("line 1: no input columns")
    inputs, outputs = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(
                f"line {lineno}: expected {len(header)} fields, got {len(cells)}"
            )
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
        inputs.append(vals[:n_in])
        if has_y:
            outputs.append(vals[-1])
    if not inputs:
        raise ValueError("line 2: no data rows")
    return Dataset(
        inputs=np.asarray(inputs),
        outputs=np.asarray(outputs) if has_y else None,
    )
