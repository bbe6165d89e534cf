"""Dense convex QP solver with lexicographic tie-breaking.

Problems are stated in the canonical form

    minimize    0.5 x' P x + q' x
    subject to  l <= A x <= u        (rows with l == u are equalities)

and solved by an operator-splitting (ADMM) iteration with a single Cholesky
factorization of the reduced KKT matrix, followed by an active-set polish
step that re-solves the equality-constrained system at the identified active
set to push residuals to machine precision.  Everything is deterministic:
same inputs and settings produce the same iterates.

Lexicographic re-solves implement convex tie-breaking: after a stage is
solved, its optimal set ``{x : P x = P x*, q' x = q' x*}`` (an exact linear
description, since the quadratic part is constant on the optimal face) is
pinned via rows appended to the constraint matrix, and the next stage's
objective is minimized over it.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from ._accel import njit, use_numba

__all__ = [
    "QpProblem",
    "QpSolution",
    "SolverSettings",
    "solve_qp",
    "kkt_residuals",
    "lexicographic_solve",
]

OPTIMAL = "optimal"
MAX_ITERS = "max_iters"
INFEASIBLE = "infeasible"

# ADMM internals (the public tolerances live in SolverSettings).
_SIGMA = 1e-6
_RELAX = 1.6
_RHO0 = 0.1
_RHO_EQ_SCALE = 1e3
_CHECK_EVERY = 25
_ADAPT_EVERY = 100
_MAX_RHO_UPDATES = 4
_POLISH_COOLDOWN = 300
_POLISH_TRIGGER = 1e-5
_POLISH_REFINE = 3
_POLISH_ROUNDS = 6
_POLISH_DELTA = 1e-9
_EPS_INFEAS = 1e-6


@dataclass(frozen=True)
class SolverSettings:
    tol_feas: float = 1e-8
    tol_opt: float = 1e-8
    max_iters: int = 50000
    tie_tolerance: float = 1e-7

    def __post_init__(self):
        for name in ("tol_feas", "tol_opt", "tie_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass(frozen=True)
class QpProblem:
    quadratic_term: np.ndarray
    linear_term: np.ndarray
    constraint_matrix: np.ndarray
    lower_limits: np.ndarray
    upper_limits: np.ndarray

    def __post_init__(self):
        P = np.ascontiguousarray(np.asarray(self.quadratic_term, dtype=np.float64))
        q = np.ascontiguousarray(np.asarray(self.linear_term, dtype=np.float64))
        A = np.ascontiguousarray(
            np.asarray(self.constraint_matrix, dtype=np.float64)
        )
        lo = np.ascontiguousarray(np.asarray(self.lower_limits, dtype=np.float64))
        up = np.ascontiguousarray(np.asarray(self.upper_limits, dtype=np.float64))
        n = P.shape[0]
        if P.shape != (n, n):
            raise ValueError("quadratic_term must be square")
        if q.shape != (n,):
            raise ValueError("linear_term dimension mismatch")
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError("constraint_matrix must have one column per variable")
        m = A.shape[0]
        if lo.shape != (m,) or up.shape != (m,):
            raise ValueError("limit vectors must have one entry per constraint row")
        scale = max(1.0, float(np.abs(P).max(initial=0.0)))
        if np.abs(P - P.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("quadratic_term must be symmetric")
        if np.any(lo > up):
            raise ValueError("lower_limits must not exceed upper_limits")
        object.__setattr__(self, "quadratic_term", P)
        object.__setattr__(self, "linear_term", q)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "lower_limits", lo)
        object.__setattr__(self, "upper_limits", up)

    @property
    def n(self):
        return self.quadratic_term.shape[0]

    @property
    def m(self):
        return self.constraint_matrix.shape[0]

    def objective(self, x):
        return float(0.5 * x @ (self.quadratic_term @ x) + self.linear_term @ x)


@dataclass(frozen=True)
class QpSolution:
    primal: np.ndarray
    dual: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    status: str
    iterations: int = field(default=0)


@njit(cache=True)
def _chol_solve_nb(L, Lt, b, out):  # pragma: no cover - dispatch target
    n = L.shape[0]
    for i in range(n):
        acc = b[i]
        for j in range(i):
            acc -= L[i, j] * out[j]
        out[i] = acc / L[i, i]
    for i in range(n - 1, -1, -1):
        acc = out[i]
        for j in range(i + 1, n):
            acc -= Lt[i, j] * out[j]
        out[i] = acc / Lt[i, i]


@njit(cache=True)
def _admm_chunk_nb(L, Lt, A, At, q, lo, up, rho, sigma, relax, x, z, y, steps):
    # pragma: no cover - dispatch target
    n = x.shape[0]
    m = z.shape[0]
    xt = np.empty(n)
    for _ in range(steps):
        rhs = sigma * x - q + np.dot(At, rho * z - y)
        _chol_solve_nb(L, Lt, rhs, xt)
        zt = np.dot(A, xt)
        for i in range(n):
            x[i] = relax * xt[i] + (1.0 - relax) * x[i]
        for i in range(m):
            w = relax * zt[i] + (1.0 - relax) * z[i] + y[i] / rho[i]
            zi = w
            if zi < lo[i]:
                zi = lo[i]
            if zi > up[i]:
                zi = up[i]
            z[i] = zi
            y[i] = rho[i] * (w - zi)


def _admm_chunk_np(chol, A, At, q, lo, up, rho, sigma, relax, x, z, y, steps):
    for _ in range(steps):
        rhs = sigma * x - q + At @ (rho * z - y)
        xt = sla.cho_solve(chol, rhs, check_finite=False)
        zt = A @ xt
        x *= 1.0 - relax
        x += relax * xt
        w = relax * zt + (1.0 - relax) * z + y / rho
        np.clip(w, lo, up, out=z)
        np.multiply(rho, w - z, out=y)


class _Workspace:
    """Per-solve state: cost-normalized data, factorization, iterates.

    The iteration runs on (P, q) / cost_scale so huge relaxation weights do
    not wreck the splitting; duals are rescaled on the way out.
    """

    def __init__(self, problem: QpProblem, x0, y0):
        self.cost_scale = max(
            1.0,
            float(np.abs(problem.linear_term).max(initial=0.0)),
            float(np.abs(problem.quadratic_term).max(initial=0.0)),
        )
        self.P = problem.quadratic_term / self.cost_scale
        self.q = problem.linear_term / self.cost_scale
        self.A = problem.constraint_matrix
        self.At = np.ascontiguousarray(self.A.T)
        self.lo = problem.lower_limits
        self.up = problem.upper_limits
        n, m = problem.n, problem.m
        self.rho = np.full(m, _RHO0)
        # near-equality rows (sliver bands, e.g. tie pins) get the equality
        # boost or the splitting crawls along them
        with np.errstate(invalid="ignore"):
            narrow = (self.up - self.lo) <= 1e-5
        self.rho[narrow] = _RHO0 * _RHO_EQ_SCALE
        self.x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
        y_init = np.zeros(m) if y0 is None else np.asarray(y0, dtype=np.float64)
        self.y = y_init / self.cost_scale
        self.z = np.clip(self.A @ self.x, self.lo, self.up)
        self.jitter = 0.0
        self._factor()

    def set_linear(self, q_new):
        """Swap the linear term, keeping the factorization and iterates."""
        self.q = np.asarray(q_new, dtype=np.float64) / self.cost_scale

    def _factor(self):
        n = self.P.shape[0]
        base = self.P + self.jitter * np.eye(n) if self.jitter else self.P
        S = base + _SIGMA * np.eye(n) + (self.At * self.rho) @ self.A
        for attempt in range(4):
            try:
                self.L = np.linalg.cholesky(S)
                break
            except np.linalg.LinAlgError:
                # Gram-built quadratic terms can be marginally indefinite in
                # floating point; bump the diagonal and retry.
                bump = 1e-10 * max(np.trace(self.P), 1.0) / n * 10.0**attempt
                self.jitter += bump
                S += bump * np.eye(n)
        else:
            raise np.linalg.LinAlgError("KKT factorization failed")
        self.Lt = np.ascontiguousarray(self.L.T)
        self.chol = (self.L, True)

    def run(self, steps):
        if use_numba():
            _admm_chunk_nb(
                self.L, self.Lt, self.A, self.At, self.q, self.lo, self.up,
                self.rho, _SIGMA, _RELAX, self.x, self.z, self.y, steps,
            )
        else:
            _admm_chunk_np(
                self.chol, self.A, self.At, self.q, self.lo, self.up,
                self.rho, _SIGMA, _RELAX, self.x, self.z, self.y, steps,
            )

    def residuals(self):
        """(Ax, primal residual, scaled dual residual, relative scales)."""
        Ax = self.A @ self.x
        r_prim = float(np.abs(Ax - self.z).max(initial=0.0))
        Px = self.P @ self.x
        Aty = self.At @ self.y
        r_dual = float(np.abs(Px + self.q + Aty).max(initial=0.0))
        prim_scale = 1.0 + max(
            np.abs(Ax).max(initial=0.0), np.abs(self.z).max(initial=0.0)
        )
        dual_scale = 1.0 + max(
            np.abs(Px).max(initial=0.0),
            np.abs(Aty).max(initial=0.0),
            np.abs(self.q).max(initial=0.0),
        )
        return Ax, r_prim, r_dual, prim_scale, dual_scale


def _violation(A, lo, up, x):
    Ax = A @ x
    below = np.where(np.isfinite(lo), lo - Ax, -np.inf)
    above = np.where(np.isfinite(up), Ax - up, -np.inf)
    return float(max(0.0, np.maximum(below, above).max(initial=0.0)))


def _polish(P, q, A, lo, up, y, z, tol_feas, tol_opt):
    """Equality re-solve at the active set, trying two active-set guesses.

    The first guess comes from dual signs (sharp when the duals have
    converged), the second from which bounds the projected iterate sits on
    (robust at degenerate plateaus where weakly active rows carry noisy
    duals).  The first guess that yields a sign-consistent solution within
    tolerance wins.
    """
    m = A.shape[0]
    if m == 0:
        return None
    eq = lo == up
    thr = 1e-6 * max(1.0, float(np.abs(y).max(initial=0.0)))
    low_dual = (y < -thr) & np.isfinite(lo) & ~eq
    upp_dual = ((y > thr) & np.isfinite(up)) | eq
    scale_lo = np.where(np.isfinite(lo), np.abs(lo), 0.0)
    scale_up = np.where(np.isfinite(up), np.abs(up), 0.0)
    low_geo = np.isfinite(lo) & (z <= lo + 1e-7 * (1.0 + scale_lo)) & ~eq
    upp_geo = (np.isfinite(up) & (z >= up - 1e-7 * (1.0 + scale_up))) | eq
    nnz = np.count_nonzero(A, axis=1)
    unit_col = np.where(nnz == 1, np.abs(A).argmax(axis=1), -1)
    unit_coef = np.where(
        unit_col >= 0, A[np.arange(A.shape[0]), np.maximum(unit_col, 0)], 1.0
    )
    for low, upp in ((low_dual, upp_dual), (low_geo, upp_geo)):
        result = _polish_attempt(P, q, A, lo, up, eq, low.copy(), upp.copy(),
                                 unit_col, unit_coef, tol_feas, tol_opt)
        if result is not None:
            return result
    return None


def _solve_active_kkt(P, q, A, b_act, act, unit_col, unit_coef):
    """Equality KKT solve with bound-fixing rows eliminated.

    Active rows holding a single variable (slack nonnegativity and friends)
    just pin that variable; substituting them out keeps the factorized system
    small.  Returns (x, nu) over the full variable/active-row indices, or
    None when the guess is inconsistent or singular.
    """
    n = P.shape[0]
    na = act.size
    is_unit = unit_col[act] >= 0
    fixed_val = np.full(n, np.nan)
    unit_owner = np.full(n, -1)
    for pos in np.where(is_unit)[0]:
        j = unit_col[act[pos]]
        val = b_act[pos] / unit_coef[act[pos]]
        if unit_owner[j] >= 0:
            if abs(val - fixed_val[j]) > 1e-9 * (1.0 + abs(val)):
                return None  # two rows pin one variable at different values
            continue
        unit_owner[j] = pos
        fixed_val[j] = val
    fixed = unit_owner >= 0
    free = ~fixed
    gen = np.where(~is_unit)[0]
    nf, ng = int(free.sum()), gen.size
    if nf + ng == 0:
        x = fixed_val.copy()
        return x, np.zeros(na)
    Ag = A[act[gen]][:, free]
    xf = fixed_val[fixed]
    kkt = np.zeros((nf + ng, nf + ng))
    kkt[:nf, :nf] = P[np.ix_(free, free)] + _POLISH_DELTA * np.eye(nf)
    kkt[:nf, nf:] = Ag.T
    kkt[nf:, :nf] = Ag
    kkt[nf:, nf:] = -_POLISH_DELTA * np.eye(ng)
    rhs = np.concatenate(
        [
            -q[free] - P[np.ix_(free, fixed)] @ xf,
            b_act[gen] - A[act[gen]][:, fixed] @ xf,
        ]
    )
    try:
        lu = sla.lu_factor(kkt, check_finite=False)
        sol = sla.lu_solve(lu, rhs, check_finite=False)
        Pff = kkt[:nf, :nf] - _POLISH_DELTA * np.eye(nf)
        for _ in range(_POLISH_REFINE):
            resid = rhs - np.concatenate(
                [Pff @ sol[:nf] + Ag.T @ sol[nf:], Ag @ sol[:nf]]
            )
            sol = sol + sla.lu_solve(lu, resid, check_finite=False)
    except (np.linalg.LinAlgError, ValueError, MemoryError):
        return None
    x = np.empty(n)
    x[free] = sol[:nf]
    x[fixed] = xf
    nu = np.zeros(na)
    nu[gen] = sol[nf:]
    # duals of the eliminated rows come from stationarity at their variables
    stat = -(P @ x + q + A[act[gen]].T @ sol[nf:])
    for pos in np.where(is_unit)[0]:
        j = unit_col[act[pos]]
        if unit_owner[j] == pos:
            nu[pos] = stat[j] / unit_coef[act[pos]]
    return x, nu


def _polish_attempt(P, q, A, lo, up, eq, low, upp, unit_col, unit_coef,
                    tol_feas, tol_opt):
    """One active-set guess, refined like a bounded active-set iteration.

    Each round solves the regularized equality KKT system; rows the solution
    newly violates join the active set, and rows whose multiplier comes out
    with the wrong sign (degenerate redundancy) leave it.  At most
    _POLISH_ROUNDS rounds, then the candidate must pass the KKT checks.
    """
    m, n = A.shape
    for _ in range(_POLISH_ROUNDS):
        act = np.where(low | upp)[0]
        b_act = np.where(upp[act], up[act], lo[act])
        solved = _solve_active_kkt(P, q, A, b_act, act, unit_col, unit_coef)
        if solved is None:
            return None
        xp, nu = solved
        Ax = A @ xp
        mask = ~(low | upp)
        viol_l = mask & np.isfinite(lo) & (Ax < lo - tol_feas)
        viol_u = mask & np.isfinite(up) & (Ax > up + tol_feas)
        if viol_l.any() or viol_u.any():
            low |= viol_l
            upp |= viol_u
            continue
        bad_u = upp[act] & ~eq[act] & (nu < -10 * tol_opt)
        bad_l = low[act] & (nu > 10 * tol_opt)
        if bad_u.any() or bad_l.any():
            upp[act[bad_u]] = False
            low[act[bad_l]] = False
            continue
        yp = np.zeros(m)
        yp[act] = nu
        r_prim = _violation(A, lo, up, xp)
        r_dual = float(np.abs(P @ xp + q + A.T @ yp).max(initial=0.0))
        if r_prim <= tol_feas and r_dual <= tol_opt:
            return xp, yp, r_prim, r_dual
        return None
    return None


def _primal_infeasibility_cert(A, lo, up, dy):
    nrm = float(np.abs(dy).max(initial=0.0))
    if nrm <= 1e-14:
        return False
    d = dy / nrm
    if np.abs(A.T @ d).max(initial=0.0) > _EPS_INFEAS:
        return False
    pos, neg = np.maximum(d, 0.0), np.minimum(d, 0.0)
    if np.any(pos[~np.isfinite(up)] > _EPS_INFEAS):
        return False
    if np.any(-neg[~np.isfinite(lo)] > _EPS_INFEAS):
        return False
    fin_u, fin_l = np.isfinite(up), np.isfinite(lo)
    support = float(up[fin_u] @ pos[fin_u] + lo[fin_l] @ neg[fin_l])
    return support < -_EPS_INFEAS


def _solve_unconstrained(problem, settings):
    P, q = problem.quadratic_term, problem.linear_term
    try:
        x = sla.solve(P, -q, assume_a="pos")
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(P, -q, rcond=None)[0]
    r_dual = float(np.abs(P @ x + q).max(initial=0.0))
    status = OPTIMAL if r_dual <= settings.tol_opt else MAX_ITERS
    return QpSolution(
        primal=x,
        dual=np.zeros(0),
        objective=problem.objective(x),
        primal_residual=0.0,
        dual_residual=r_dual,
        status=status,
        iterations=0,
    )


def solve_qp(
    problem: QpProblem,
    settings: SolverSettings = SolverSettings(),
    x0=None,
    y0=None,
) -> QpSolution:
    """Solve the QP to the settings tolerances.

    Operator-splitting iterations with periodic residual checks; once
    residuals are small an active-set polish is attempted, and the first
    polished point meeting the tolerances is returned.  Divergent dual
    updates that certify primal infeasibility end the solve with status
    ``infeasible``; the iteration cap returns the best iterate seen.
    """
    if problem.m == 0:
        return _solve_unconstrained(problem, settings)
    return _run_admm(problem, _Workspace(problem, x0, y0), settings)


def _run_admm(problem: QpProblem, ws: "_Workspace", settings) -> QpSolution:
    P0, q0 = problem.quadratic_term, problem.linear_term
    A, lo, up = ws.A, ws.lo, ws.up
    c = ws.cost_scale
    tol_f, tol_o = settings.tol_feas, settings.tol_opt
    max_rho_updates = _MAX_RHO_UPDATES if problem.n <= 1500 else 2
    it = 0
    last_polish = -_POLISH_COOLDOWN
    polish_gate = _POLISH_TRIGGER
    rho_updates = 0
    best = None
    y_prev = ws.y.copy()

    def raw_solution(x, y_scaled, r_prim, status):
        y = c * y_scaled
        r_dual = float(np.abs(P0 @ x + q0 + A.T @ y).max(initial=0.0))
        return QpSolution(
            primal=x.copy(), dual=y, objective=problem.objective(x),
            primal_residual=r_prim, dual_residual=r_dual,
            status=status, iterations=it,
        )

    while it < settings.max_iters:
        steps = min(_CHECK_EVERY, settings.max_iters - it)
        y_prev[:] = ws.y
        ws.run(steps)
        it += steps
        Ax, r_prim, r_dual_s, prim_scale, dual_scale = ws.residuals()
        score = r_prim / prim_scale + r_dual_s / dual_scale
        if best is None or score < best[0]:
            best = (score, ws.x.copy(), ws.y.copy(), r_prim)
        done = r_prim <= tol_f and c * r_dual_s <= tol_o
        near = (
            r_prim <= polish_gate * prim_scale
            and r_dual_s <= polish_gate * dual_scale
        )
        if done or (near and it - last_polish >= _POLISH_COOLDOWN):
            last_polish = it
            pol = _polish(P0, q0, A, lo, up, ws.y, ws.z, tol_f, tol_o)
            if pol is not None:
                xp, yp, rp, rd = pol
                return QpSolution(
                    primal=xp, dual=yp, objective=problem.objective(xp),
                    primal_residual=rp, dual_residual=rd,
                    status=OPTIMAL, iterations=it,
                )
            # each failed attempt costs a factorization-sized solve; demand a
            # 10x closer iterate before trying again
            polish_gate = max(polish_gate * 0.1, 1e-9)
            if done:
                return raw_solution(ws.x, ws.y, r_prim, OPTIMAL)
        if _primal_infeasibility_cert(A, lo, up, ws.y - y_prev):
            return raw_solution(ws.x, ws.y, r_prim, INFEASIBLE)
        if it % _ADAPT_EVERY == 0 and rho_updates < max_rho_updates:
            ratio = math.sqrt(
                (r_prim / prim_scale) / max(r_dual_s / dual_scale, 1e-16)
            )
            if ratio > 5.0 or ratio < 0.2:
                ws.rho = np.clip(ws.rho * ratio, 1e-6, 1e6)
                ws._factor()
                rho_updates += 1
    pol = _polish(P0, q0, A, lo, up, ws.y, ws.z, tol_f, tol_o)
    if pol is not None:
        xp, yp, rp, rd = pol
        return QpSolution(
            primal=xp, dual=yp, objective=problem.objective(xp),
            primal_residual=rp, dual_residual=rd,
            status=OPTIMAL, iterations=it,
        )
    _, xb, yb, rp = best
    sol = raw_solution(xb, yb, rp, MAX_ITERS)
    if sol.primal_residual <= tol_f and sol.dual_residual <= tol_o:
        sol = QpSolution(
            primal=sol.primal, dual=sol.dual, objective=sol.objective,
            primal_residual=sol.primal_residual,
            dual_residual=sol.dual_residual,
            status=OPTIMAL, iterations=it,
        )
    return sol


_PROX_ROUNDS = 12
_PROX_INNER_ITERS = 6000


def _solve_lp_stage(
    problem: QpProblem, settings: SolverSettings, x_ref, y_ref
) -> QpSolution:
    """Linear tie-break stage via proximal-point iterations on the splitting.

    Plain operator splitting crawls on these (usually highly degenerate)
    LPs.  Instead, min q'x + mu * |x - ref|^2 is solved repeatedly with the
    reference moved to the last solution: each inner problem is strongly
    convex and polishes cleanly, and at the fixed point the inner duals
    satisfy the original LP's optimality system, which is checked explicitly
    before reporting success.
    """
    n, m = problem.n, problem.m
    q = problem.linear_term
    A = problem.constraint_matrix
    mu = max(float(np.abs(q).max(initial=0.0)), 1e-6)
    P_prox = np.zeros((n, n))
    np.fill_diagonal(P_prox, 2.0 * mu)
    x_ref = np.zeros(n) if x_ref is None else np.asarray(x_ref, dtype=np.float64)
    y_ws = y_ref
    inner = replace(settings, max_iters=min(settings.max_iters, _PROX_INNER_ITERS))
    sol = None
    total_iters = 0
    workspace = None
    for _ in range(_PROX_ROUNDS):
        prox = QpProblem(
            quadratic_term=P_prox,
            linear_term=q - 2.0 * mu * x_ref,
            constraint_matrix=A,
            lower_limits=problem.lower_limits,
            upper_limits=problem.upper_limits,
        )
        # the quadratic part and constraints never change across rounds, so
        # the factorization is built once and only the linear term moves
        if workspace is None:
            workspace = _Workspace(prox, x_ref, y_ws)
        else:
            workspace.set_linear(prox.linear_term)
        sol = _run_admm(prox, workspace, inner)
        total_iters += sol.iterations
        if sol.status != OPTIMAL:
            return QpSolution(
                primal=sol.primal, dual=sol.dual,
                objective=problem.objective(sol.primal),
                primal_residual=sol.primal_residual,
                dual_residual=sol.dual_residual,
                status=sol.status, iterations=total_iters,
            )
        step = float(
            np.abs(sol.primal - x_ref).max(initial=0.0)
        )
        x_ref = sol.primal
        y_ws = sol.dual
        if step <= 1e-9 * (1.0 + np.abs(x_ref).max(initial=0.0)):
            break
    r_prim = _violation(A, problem.lower_limits, problem.upper_limits, x_ref)
    r_dual = float(np.abs(q + A.T @ y_ws).max(initial=0.0))
    ok = r_prim <= settings.tol_feas and r_dual <= settings.tol_opt
    return QpSolution(
        primal=x_ref, dual=y_ws, objective=problem.objective(x_ref),
        primal_residual=r_prim, dual_residual=r_dual,
        status=OPTIMAL if ok else MAX_ITERS, iterations=total_iters,
    )


def kkt_residuals(problem: QpProblem, candidate: QpSolution):
    """Max-norm residuals of the three KKT blocks at a candidate solution.

    Returns (stationarity, feasibility, complementarity).  Convention:
    positive duals push rows to the upper limit, negative to the lower.
    """
    P, q, A = (
        problem.quadratic_term,
        problem.linear_term,
        problem.constraint_matrix,
    )
    lo, up = problem.lower_limits, problem.upper_limits
    x, y = np.asarray(candidate.primal), np.asarray(candidate.dual)
    if x.shape != (problem.n,) or y.shape != (problem.m,):
        raise ValueError("candidate dimensions do not match the problem")
    stat = float(np.abs(P @ x + q + A.T @ y).max(initial=0.0))
    feas = _violation(A, lo, up, x)
    Ax = A @ x
    y_pos, y_neg = np.maximum(y, 0.0), np.minimum(y, 0.0)
    eq = lo == up
    gap_u = np.where(np.isfinite(up), np.abs(up - Ax), 1.0)
    gap_l = np.where(np.isfinite(lo), np.abs(Ax - lo), 1.0)
    comp_arr = np.maximum(y_pos * gap_u, -y_neg * gap_l)
    comp_arr[eq] = 0.0
    comp = float(comp_arr.max(initial=0.0))
    return stat, feas, comp


_PIN_EPS = 1e-7
# Bands narrower than the splitting can resolve just create conflicting
# active rows; every pin keeps at least this width (normalized row units).
_PIN_FLOOR = 1e-7


def _pin_rows(P, q, x_opt, tie_tolerance, eps_scale=0.0):
    """Linear rows pinning the optimal set {P x = P x*, q' x = q' x*}.

    The quadratic part is constant on the optimal face, so it is pinned
    through the range of P (unit-normalized eigendirections; eigenvalues
    below 1e-12 of the largest count as ties left for later stages).  With
    eps_scale 0 the pins are equalities at the achieved values, which the
    previous stage's solution satisfies exactly by construction; positive
    eps_scale widens them into bands (fallback when a pinned stage cannot be
    solved).  Either form implies the tie constraint "previous objective
    within tie_tolerance of its optimum" as long as eps_scale stays below
    tie_tolerance / _PIN_FLOOR.
    """
    n = P.shape[0]
    rows, lovals, upvals = [], [], []

    def add(row, val):
        slack = eps_scale * _PIN_FLOOR * (1.0 + abs(val))
        rows.append(row)
        lovals.append(val - slack)
        upvals.append(val + slack)

    support = np.where(np.abs(P).max(axis=0) > 0.0)[0]
    if support.size:
        lam, vecs = np.linalg.eigh(P[np.ix_(support, support)])
        keep = lam > 1e-12 * max(lam.max(), 0.0)
        for idx in np.where(keep)[0]:
            row = np.zeros(n)
            row[support] = vecs[:, idx]
            add(row, float(row @ x_opt))
    qn = float(np.linalg.norm(q))
    if qn > 0.0:
        row = q / qn
        add(row, float(row @ x_opt))
    if not rows:
        return np.zeros((0, n)), np.zeros(0), np.zeros(0)
    return np.array(rows), np.array(lovals), np.array(upvals)


def lexicographic_solve(
    stages,
    settings: SolverSettings = SolverSettings(),
    x0=None,
    y0=None,
    collect: dict | None = None,
) -> QpSolution:
    """Sequentially minimize stage objectives over shrinking optimal sets.

    All stages must share the constraint block and variable dimension; each
    later stage is solved with rows appended that pin every earlier stage's
    objective to its achieved optimum (within tie_tolerance).  Returns the
    final stage's solution with duals truncated to the original rows; pass a
    dict as ``collect`` to receive per-stage objectives, KKT residuals and
    statuses.
    """
    stages = list(stages)
    if not stages:
        raise ValueError("need at least one stage")
    base = stages[0]
    for s in stages[1:]:
        if s.n != base.n or not (
            np.array_equal(s.constraint_matrix, base.constraint_matrix)
            and np.array_equal(s.lower_limits, base.lower_limits)
            and np.array_equal(s.upper_limits, base.upper_limits)
        ):
            raise ValueError("stages must share constraints and dimension")
    m0 = base.m
    pinned = []  # (earlier stage, its optimum), pins rebuilt on retries
    x_ws, y_ws = x0, y0
    sol = None
    objectives, kkts, statuses = [], [], []
    for t, stage in enumerate(stages):
        # Equality pins first; if a pinned stage cannot be solved, retry with
        # widening bands.  Early attempts run on a reduced iteration budget
        # so a grind fails fast.
        scales = (0.0, 1.0, 1e2)
        for attempt, eps_scale in enumerate(scales):
            if t == 0:
                prob = stage
            else:
                blocks = [
                    _pin_rows(
                        s.quadratic_term,
                        s.linear_term,
                        xs,
                        settings.tie_tolerance,
                        eps_scale,
                    )
                    for s, xs in pinned
                ]
                prob = QpProblem(
                    quadratic_term=stage.quadratic_term,
                    linear_term=stage.linear_term,
                    constraint_matrix=np.vstack(
                        [base.constraint_matrix] + [b[0] for b in blocks]
                    ),
                    lower_limits=np.concatenate(
                        [base.lower_limits] + [b[1] for b in blocks]
                    ),
                    upper_limits=np.concatenate(
                        [base.upper_limits] + [b[2] for b in blocks]
                    ),
                )
            y_init = None
            if y_ws is not None:
                y_init = np.concatenate([y_ws, np.zeros(prob.m - m0)])
            stage_settings = settings
            if t > 0:
                # Tie-break stages cannot meaningfully resolve below the pin
                # band width, so their tolerances are floored to it; early
                # attempts also run on a reduced iteration budget.
                stage_settings = replace(
                    settings,
                    tol_feas=max(settings.tol_feas, 2.0 * _PIN_FLOOR),
                    tol_opt=max(settings.tol_opt, 2.0 * _PIN_FLOOR),
                    max_iters=(
                        min(settings.max_iters, 8000)
                        if attempt < len(scales) - 1
                        else settings.max_iters
                    ),
                )
            if t > 0 and not stage.quadratic_term.any():
                sol = _solve_lp_stage(prob, stage_settings, x_ws, y_init)
            else:
                sol = solve_qp(prob, stage_settings, x0=x_ws, y0=y_init)
            if sol.status == OPTIMAL or t == 0:
                break
        if sol.status != OPTIMAL:
            break
        objectives.append(stage.objective(sol.primal))
        kkts.append(kkt_residuals(prob, sol))
        statuses.append(sol.status)
        pinned.append((stage, sol.primal))
        x_ws = sol.primal
        y_ws = sol.dual[:m0]
    if collect is not None:
        collect["objectives"] = objectives
        collect["kkt"] = kkts
        collect["statuses"] = statuses
    return QpSolution(
        primal=sol.primal,
        dual=sol.dual[:m0],
        objective=sol.objective,
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
        status=sol.status,
        iterations=sol.iterations,
    )
