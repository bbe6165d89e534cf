"""Support-vector regression, data description and classification with
relaxation-weighted slacks, tie-broken to unique solutions, plus the
complexity counts that drive the risk certificates.

Every method is the kernelized form of a relaxed program: constraint
violations are charged at ``rho`` per unit, the trained object retains its
dual coefficients over the training inputs, and the observed complexity
(number of active-or-violated constraints) indexes the certified risk
interval.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundQuery, RiskInterval, epsilon_bounds
from .kernels import GramMatrix, KernelSpec, cross_kernel, gram_matrix
from .qp import QpProblem, SolverSettings, lexicographic_solve, solve_qp

__all__ = [
    "Dataset",
    "SvrModel",
    "SvddModel",
    "SvmModel",
    "RiskCertificate",
    "SvrPrediction",
    "SvddPrediction",
    "fit_svr",
    "svr_complexity",
    "fit_svdd",
    "svdd_complexity",
    "fit_svm",
    "svm_complexity",
    "certify",
    "predict",
    "scenario_cost",
    "svr_stage_problems",
    "svm_stage_problems",
    "svdd_dual_problem",
    "model_to_doc",
    "model_from_doc",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class Dataset:
    """Training inputs with optional outputs (targets or +-1 labels)."""

    inputs: np.ndarray
    outputs: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("inputs must be a nonempty (N, d) array")
        object.__setattr__(self, "inputs", X)
        if self.outputs is not None:
            y = np.asarray(self.outputs, dtype=np.float64).ravel()
            if y.shape[0] != X.shape[0]:
                raise ValueError("inputs and outputs lengths differ")
            object.__setattr__(self, "outputs", y)

    def __len__(self):
        return self.inputs.shape[0]


@dataclass(frozen=True)
class RiskCertificate:
    complexity: int
    interval: RiskInterval
    confidence: float
    semantics: str  # "violation" or "misclassification_upper"


@dataclass(frozen=True)
class SvrPrediction:
    center: float
    tube: float

    @property
    def lower(self):
        return self.center - self.tube

    @property
    def upper(self):
        return self.center + self.tube


@dataclass(frozen=True)
class SvddPrediction:
    inside: bool
    distance_sq: float


@dataclass(frozen=True, eq=False)
class SvrModel:
    dual_coeffs: np.ndarray
    offset: float
    tube: float
    ridge_weight: float
    relax_weight: float
    kernel: KernelSpec
    support_inputs: np.ndarray
    slacks: np.ndarray | None = None

    def centers(self, X) -> np.ndarray:
        """Regression surface values at the query points."""
        Kx = cross_kernel(self.kernel, _col(X), self.support_inputs)
        return Kx @ self.dual_coeffs + self.offset


@dataclass(frozen=True, eq=False)
class SvddModel:
    dual_coeffs: np.ndarray
    radius_sq: float
    relax_weight: float
    kernel: KernelSpec
    support_inputs: np.ndarray
    slacks: np.ndarray | None = None
    center_norm_sq: float = field(default=math.nan)

    def distances_sq(self, X) -> np.ndarray:
        """Squared kernel-space distance from the learned center."""
        X2 = _col(X)
        Kx = cross_kernel(self.kernel, X2, self.support_inputs)
        return _self_kernel(self.kernel, X2) - 2.0 * (Kx @ self.dual_coeffs) \
            + self.center_norm_sq


@dataclass(frozen=True, eq=False)
class SvmModel:
    dual_coeffs: np.ndarray
    offset: float
    w_is_zero: bool
    relax_weight: float
    kernel: KernelSpec
    support_inputs: np.ndarray
    slacks: np.ndarray | None = None

    def decision_values(self, X) -> np.ndarray:
        """Classifier argument <w, u> - b at the query points."""
        Kx = cross_kernel(self.kernel, _col(X), self.support_inputs)
        return Kx @ self.dual_coeffs - self.offset


def _col(X):
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def _self_kernel(spec, X2):
    """k(x, x) per row."""
    if spec.kind == "gaussian":
        return np.ones(X2.shape[0])
    sq = (X2 * X2).sum(axis=1)
    if spec.kind == "linear":
        return sq
    return (sq + spec.offset) ** spec.degree


def _gram_values(kernel, inputs, gram):
    if gram is not None:
        vals = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram)
        if vals.shape[0] != inputs.shape[0]:
            raise ValueError("precomputed Gram size does not match the data")
        return vals
    return gram_matrix(kernel, inputs).values


# ----------------------------------------------------------------------- SVR


def svr_stage_problems(K, y, tau, rho):
    """Lexicographic stage QPs for the tube regression program.

    Variables (alpha[N], gamma, b, xi[N], s); stage objectives: full cost,
    then the tube size, then |b| through the auxiliary s >= |b|.
    """
    N = len(y)
    n = 2 * N + 3
    i_gam, i_b, i_s = N, N + 1, n - 1
    P1 = np.zeros((n, n))
    P1[:N, :N] = 2.0 * tau * K
    q1 = np.zeros(n)
    q1[i_gam] = 1.0
    q1[i_b + 1 : i_b + 1 + N] = rho
    m = 3 * N + 3
    A = np.zeros((m, n))
    lo = np.full(m, -np.inf)
    up = np.full(m, np.inf)
    rng = np.arange(N)
    A[:N, :N] = K
    A[:N, i_gam] = 1.0
    A[:N, i_b] = 1.0
    A[rng, i_b + 1 + rng] = 1.0
    lo[:N] = y
    A[N : 2 * N, :N] = K
    A[N : 2 * N, i_gam] = -1.0
    A[N : 2 * N, i_b] = 1.0
    A[N + rng, i_b + 1 + rng] = -1.0
    up[N : 2 * N] = y
    A[2 * N + rng, i_b + 1 + rng] = 1.0
    lo[2 * N : 3 * N] = 0.0
    A[3 * N, i_gam] = 1.0
    lo[3 * N] = 0.0
    A[3 * N + 1, i_s] = 1.0
    A[3 * N + 1, i_b] = -1.0
    lo[3 * N + 1] = 0.0
    A[3 * N + 2, i_s] = 1.0
    A[3 * N + 2, i_b] = 1.0
    lo[3 * N + 2] = 0.0
    q2 = np.zeros(n)
    q2[i_gam] = 1.0
    q3 = np.zeros(n)
    q3[i_s] = 1.0
    zero = np.zeros((n, n))
    mk = lambda P, q: QpProblem(P, q, A, lo, up)
    return [mk(P1, q1), mk(zero, q2), mk(zero, q3)]


def _fit_svr_full(data, tau, rho, kernel, settings, gram=None, init=None):
    if data.outputs is None:
        raise ValueError("tube regression needs outputs")
    if tau <= 0 or rho <= 0:
        raise ValueError("tau and rho must be positive")
    K = _gram_values(kernel, data.inputs, gram)
    y = data.outputs
    N = len(y)
    stages = svr_stage_problems(K, y, tau, rho)
    collect = {}
    x0 = y0 = None
    if init is not None:
        x0, y0 = init
    sol = lexicographic_solve(stages, settings, x0=x0, y0=y0, collect=collect)
    if sol.status != "optimal":
        raise RuntimeError(f"tube regression solve ended with status {sol.status}")
    alpha = sol.primal[:N].copy()
    gamma = max(0.0, float(sol.primal[N]))
    b = float(sol.primal[N + 1])
    resid = np.abs(y - K @ alpha - b)
    slacks = np.maximum(0.0, resid - gamma)
    model = SvrModel(
        dual_coeffs=alpha,
        offset=b,
        tube=gamma,
        ridge_weight=tau,
        relax_weight=rho,
        kernel=kernel,
        support_inputs=data.inputs,
        slacks=slacks,
    )
    return model, sol, collect


def fit_svr(
    data: Dataset,
    tau: float,
    rho: float,
    kernel: KernelSpec,
    settings: SolverSettings = SolverSettings(),
    gram=None,
) -> SvrModel:
    """Fit the tube regressor; smallest tube, then smallest |b|, break ties."""
    model, _, _ = _fit_svr_full(data, tau, rho, kernel, settings, gram=gram)
    return model


def svr_complexity(model: SvrModel, data: Dataset, active_tol=None) -> int:
    """Number of points on or outside the tube boundary."""
    if active_tol is None:
        active_tol = 1e-6 * (1.0 + abs(model.tube))
    resid = np.abs(data.outputs - model.centers(data.inputs))
    return int(np.count_nonzero(resid >= model.tube - active_tol))


# ---------------------------------------------------------------------- SVDD


def svdd_dual_problem(K, rho):
    """Center-coefficient QP: min b'Kb - sum b_i K_ii over the capped simplex."""
    N = K.shape[0]
    A = np.vstack([np.ones((1, N)), np.eye(N)])
    lo = np.concatenate([[1.0], np.zeros(N)])
    up = np.concatenate([[1.0], np.full(N, rho)])
    return QpProblem(2.0 * K, -np.diag(K).copy(), A, lo, up)


def _smallest_arg_gamma(d2, rho):
    """Smallest minimizer of gamma + rho * sum(max(0, d2 - gamma)).

    The objective is convex piecewise-linear in gamma with breakpoints at the
    squared distances; the scan returns the first breakpoint whose
    right-slope is nonnegative.
    """
    breaks = np.unique(np.concatenate([[0.0], d2[d2 > 0.0]]))
    for g in breaks:
        slope = 1.0 - rho * np.count_nonzero(d2 > g + 1e-12 * (1.0 + g))
        if slope >= -1e-9:
            return float(g)
    return float(breaks[-1])


def fit_svdd(
    data: Dataset,
    rho: float,
    kernel: KernelSpec,
    settings: SolverSettings = SolverSettings(),
    gram=None,
) -> SvddModel:
    """Fit the enclosing ball; the smallest optimal radius breaks ties.

    For rho * N <= 1 raising the radius never pays for itself, so the radius
    is zero and the center is the kernel-space centroid.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    K = _gram_values(kernel, data.inputs, gram)
    N = K.shape[0]
    if rho * N <= 1.0:
        beta = np.full(N, 1.0 / N)
    else:
        sol = solve_qp(svdd_dual_problem(K, rho), settings)
        if sol.status != "optimal":
            raise RuntimeError(f"ball fit ended with status {sol.status}")
        beta = np.clip(sol.primal, 0.0, rho)
        beta /= beta.sum()
    center_sq = float(beta @ K @ beta)
    d2 = np.diag(K) - 2.0 * (K @ beta) + center_sq
    d2 = np.maximum(d2, 0.0)
    gamma = 0.0 if rho * N <= 1.0 else _smallest_arg_gamma(d2, rho)
    slacks = np.maximum(0.0, d2 - gamma)
    return SvddModel(
        dual_coeffs=beta,
        radius_sq=gamma,
        relax_weight=rho,
        kernel=kernel,
        support_inputs=data.inputs,
        slacks=slacks,
        center_norm_sq=center_sq,
    )


def svdd_complexity(model: SvddModel, data: Dataset, active_tol=None) -> int:
    """Number of points on or outside the ball boundary."""
    if active_tol is None:
        active_tol = 1e-6 * (1.0 + abs(model.radius_sq))
    d2 = model.distances_sq(data.inputs)
    return int(np.count_nonzero(d2 >= model.radius_sq - active_tol))


# ----------------------------------------------------------------------- SVM


def svm_stage_problems(K, labels, rho):
    """Stage QPs for the soft-margin classifier.

    Variables (alpha[N], b, xi[N], s); stage 2 minimizes |b + 1| through
    s >= |b + 1|, which keeps the all-one-label solution away from the
    undefined classifier at (w, b) = (0, 0).
    """
    N = len(labels)
    n = 2 * N + 2
    i_b, i_s = N, n - 1
    P1 = np.zeros((n, n))
    P1[:N, :N] = 2.0 * K
    q1 = np.zeros(n)
    q1[i_b + 1 : i_b + 1 + N] = rho
    m = 2 * N + 2
    A = np.zeros((m, n))
    lo = np.full(m, -np.inf)
    up = np.full(m, np.inf)
    rng = np.arange(N)
    A[:N, :N] = labels[:, None] * K
    A[:N, i_b] = -labels
    A[rng, i_b + 1 + rng] = 1.0
    lo[:N] = 1.0
    A[N + rng, i_b + 1 + rng] = 1.0
    lo[N : 2 * N] = 0.0
    A[2 * N, i_s] = 1.0
    A[2 * N, i_b] = -1.0
    lo[2 * N] = 1.0
    A[2 * N + 1, i_s] = 1.0
    A[2 * N + 1, i_b] = 1.0
    lo[2 * N + 1] = -1.0
    q2 = np.zeros(n)
    q2[i_s] = 1.0
    return [QpProblem(P1, q1, A, lo, up), QpProblem(np.zeros((n, n)), q2, A, lo, up)]


def fit_svm(
    data: Dataset,
    rho: float,
    kernel: KernelSpec,
    settings: SolverSettings = SolverSettings(),
    gram=None,
) -> SvmModel:
    """Fit the soft-margin classifier with the |b + 1| tie-break."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if data.outputs is None:
        raise ValueError("classification needs labels")
    labels = data.outputs
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    K = _gram_values(kernel, data.inputs, gram)
    N = len(labels)
    stages = svm_stage_problems(K, labels, rho)
    sol = lexicographic_solve(stages, settings)
    if sol.status != "optimal":
        raise RuntimeError(f"classifier solve ended with status {sol.status}")
    alpha = sol.primal[:N].copy()
    b = float(sol.primal[N])
    w_norm_sq = float(alpha @ K @ alpha)
    tol_w = 1e-8 * float(np.trace(K)) / N
    w_is_zero = w_norm_sq <= tol_w
    if w_is_zero:
        alpha = np.zeros(N)
        b = -1.0 if b < 0 else 1.0
    slacks = np.maximum(0.0, 1.0 - labels * (K @ alpha - b))
    return SvmModel(
        dual_coeffs=alpha,
        offset=b,
        w_is_zero=w_is_zero,
        relax_weight=rho,
        kernel=kernel,
        support_inputs=data.inputs,
        slacks=slacks,
    )


def svm_complexity(model: SvmModel, data: Dataset, active_tol=None) -> int:
    """Active-plus-violated margin constraints; minority-class count at w = 0.

    With a zero classifier the count is the size of the smaller label class
    (half the sample on an exact tie).
    """
    labels = data.outputs
    if model.w_is_zero:
        n_pos = int(np.count_nonzero(labels == 1.0))
        n_neg = len(labels) - n_pos
        if n_pos == n_neg:
            return len(labels) // 2
        return min(n_pos, n_neg)
    if active_tol is None:
        active_tol = 2e-6
    margin = 1.0 - labels * model.decision_values(data.inputs)
    return int(np.count_nonzero(margin >= -active_tol))


# ---------------------------------------------------------------- certifying

_CERT_KINDS = ("svr", "svdd", "svm_violation", "svm_misclassification")


def certify(kind: str, s_star: int, n: int, beta: float) -> RiskCertificate:
    """Wrap the risk interval at the observed complexity with its confidence.

    Classification certificates hold with confidence 1 - 3*beta; the
    misclassification variant binds only through the upper endpoint since
    misclassification implies margin violation but not conversely.
    """
    if kind not in _CERT_KINDS:
        raise ValueError(f"unknown certificate kind {kind!r}")
    interval = epsilon_bounds(BoundQuery(n, s_star, beta))
    if kind in ("svm_violation", "svm_misclassification"):
        confidence = 1.0 - 3.0 * beta
    else:
        confidence = 1.0 - beta
    semantics = (
        "misclassification_upper" if kind == "svm_misclassification" else "violation"
    )
    return RiskCertificate(
        complexity=s_star,
        interval=interval,
        confidence=confidence,
        semantics=semantics,
    )


def scenario_cost(model) -> float:
    """Design cost of the fitted object (the relaxation penalty excluded)."""
    if isinstance(model, SvrModel):
        K = gram_matrix(model.kernel, model.support_inputs).values
        return model.tube + model.ridge_weight * float(
            model.dual_coeffs @ K @ model.dual_coeffs
        )
    if isinstance(model, SvddModel):
        return model.radius_sq
    if isinstance(model, SvmModel):
        K = gram_matrix(model.kernel, model.support_inputs).values
        return float(model.dual_coeffs @ K @ model.dual_coeffs)
    raise TypeError(f"not a model: {type(model)!r}")


def predict(model, new_input):
    """Model-specific prediction at one query point.

    Tube regression returns the (center, tube) interval; classification the
    +-1 label (zero decision counts as +1); the ball membership flag comes
    with the squared distance.
    """
    x = np.asarray(new_input, dtype=np.float64).ravel()
    if x.shape[0] != model.support_inputs.shape[1]:
        raise ValueError("query dimension does not match training inputs")
    if isinstance(model, SvrModel):
        c = float(model.centers(x[None, :])[0])
        return SvrPrediction(center=c, tube=model.tube)
    if isinstance(model, SvmModel):
        val = float(model.decision_values(x[None, :])[0])
        return 1 if val >= 0.0 else -1
    if isinstance(model, SvddModel):
        d2 = float(model.distances_sq(x[None, :])[0])
        return SvddPrediction(inside=d2 <= model.radius_sq, distance_sq=d2)
    raise TypeError(f"not a model: {type(model)!r}")


# ------------------------------------------------------------- serialization


def model_to_doc(model, s_star=None, certificate=None, cost=None) -> dict:
    if isinstance(model, SvrModel):
        method, tube_or_radius, offset = "svr", model.tube, model.offset
    elif isinstance(model, SvddModel):
        method, tube_or_radius, offset = "svdd", model.radius_sq, None
    elif isinstance(model, SvmModel):
        method, tube_or_radius, offset = "svm", None, model.offset
    else:
        raise TypeError(f"not a model: {type(model)!r}")
    doc = {
        "method": method,
        "kernel": model.kernel.to_dict(),
        "dual_coeffs": [float(v) for v in model.dual_coeffs],
        "offset": offset,
        "tube_or_radius": tube_or_radius,
        "relax_weight": model.relax_weight,
        "n_train": int(model.support_inputs.shape[0]),
        "s_star": None if s_star is None else int(s_star),
        "certificate": None,
        "support_inputs": [[float(v) for v in row] for row in model.support_inputs],
    }
    if method == "svr":
        doc["ridge_weight"] = model.ridge_weight
    if method == "svm":
        doc["w_is_zero"] = bool(model.w_is_zero)
    if cost is not None:
        doc["cost"] = float(cost)
    if certificate is not None:
        doc["certificate"] = {
            "lower": certificate.interval.lower,
            "upper": certificate.interval.upper,
            "beta": certificate.interval.query.confidence_param,
            "confidence": certificate.confidence,
        }
    return doc


def model_from_doc(doc: dict):
    """Rebuild a model from its JSON document; unknown method tags rejected."""
    method = doc.get("method")
    if method not in ("svr", "svdd", "svm"):
        raise ValueError(f"unknown method tag {method!r}")
    kernel = KernelSpec.from_dict(doc["kernel"])
    support = np.asarray(doc["support_inputs"], dtype=np.float64)
    coeffs = np.asarray(doc["dual_coeffs"], dtype=np.float64)
    rho = float(doc["relax_weight"])
    if method == "svr":
        model = SvrModel(
            dual_coeffs=coeffs,
            offset=float(doc["offset"]),
            tube=float(doc["tube_or_radius"]),
            ridge_weight=float(doc.get("ridge_weight", 0.0)),
            relax_weight=rho,
            kernel=kernel,
            support_inputs=support,
        )
    elif method == "svdd":
        K = gram_matrix(kernel, support).values
        model = SvddModel(
            dual_coeffs=coeffs,
            radius_sq=float(doc["tube_or_radius"]),
            relax_weight=rho,
            kernel=kernel,
            support_inputs=support,
            center_norm_sq=float(coeffs @ K @ coeffs),
        )
    else:
        model = SvmModel(
            dual_coeffs=coeffs,
            offset=float(doc["offset"]),
            w_is_zero=bool(doc.get("w_is_zero", False)),
            relax_weight=rho,
            kernel=kernel,
            support_inputs=support,
        )
    return model, doc


def save_model(path, model, s_star=None, certificate=None, cost=None):
    doc = model_to_doc(model, s_star=s_star, certificate=certificate, cost=cost)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_doc(doc)
