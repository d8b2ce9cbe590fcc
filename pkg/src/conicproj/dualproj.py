"""Dual projection methods for conic least squares.

The problem is the projection of a point c onto the intersection of a
product cone K with affine equalities A_E x = b_E (and optional affine
inequalities, stored in the sign convention A_I x >= b_I that makes the
multipliers below nonnegative; encode upper bounds by negating rows):

    min 1/2 ||x - c||^2   s.t.  A_E x = b_E,  A_I x >= b_I,  x in K.

Dualizing the affine constraints only gives a concave, differentiable dual
function

    theta(y, z) = b_E'y + b_I'z + (||c||^2 - ||x(y,z)||^2) / 2,
    x(y, z)     = P_K(c + A_E'y + A_I'z),
    grad theta  = b - A x(y, z),

to be maximized over y free and z >= 0.  Three engines are provided: a
fixed-metric gradient ascent with W = [AA^T]^{-1} (iterate-for-iterate
equal to Dykstra's alternating projections), a limited-memory quasi-Newton
method with weak Wolfe line search, and a semismooth Newton-CG method using
one element of the Clarke generalized Jacobian of the cone projection.

A positive ``scale`` t and a linear ``tilt`` turn the same machinery into
the inner subproblem of the regularization solvers, with
x(y) = P_K(c + t(A'y - tilt)) and theta(y) = b'y + (||c||^2-||x||^2)/(2t).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cones import (
    AffineMap,
    BlockPoint,
    ConeSpec,
    InputError,
    _project_ambient,
    _psd_omega,
    cone_jacobian_apply,
    soc_jacobian_apply,
    symmetrize,
)
from .report import (
    CONVERGED,
    ITERATION_LIMIT,
    NUMERICAL_FAILURE,
    SolveReport,
)

__all__ = [
    "ProjectionProblem",
    "DualPoint",
    "DualEval",
    "eval_theta",
    "solve_fixed_metric",
    "solve_quasi_newton",
    "solve_ssnewton",
    "nearest_correlation",
    "correlation_problem",
    "rescale_correlation",
]


@dataclass(frozen=True)
class ProjectionProblem:
    """Data of the conic least-squares problem.

    ``c`` is the point being projected (the prox center when reused by the
    regularization solvers), ``eq`` the equality rows, ``ineq`` optional
    inequality rows in the >= orientation, ``scale`` the prox parameter t
    (default 1 gives the plain projection) and ``tilt`` the optional linear
    objective shift of the regularized subproblem.
    """

    c: BlockPoint
    eq: AffineMap
    cone: ConeSpec
    ineq: AffineMap | None = None
    scale: float = 1.0
    tilt: BlockPoint | None = None

    def __post_init__(self):
        if self.c.cone != self.cone or self.eq.cone != self.cone:
            raise InputError("problem blocks do not conform to the cone spec")
        if self.ineq is not None and self.ineq.cone != self.cone:
            raise InputError("inequality rows do not conform to the cone spec")
        if self.tilt is not None and self.tilt.cone != self.cone:
            raise InputError("tilt does not conform to the cone spec")
        if not self.scale > 0:
            raise InputError("scale must be positive")
        if self.eq.m + self.m_ineq < 1:
            raise InputError("problem has no affine constraints")

    @property
    def m_eq(self) -> int:
        return self.eq.m

    @property
    def m_ineq(self) -> int:
        return self.ineq.m if self.ineq is not None else 0

    def default_tol(self) -> float:
        """Gradient-norm tolerance 1e-7 * (total conic order)."""
        return 1e-7 * self.cone.order


@dataclass(frozen=True)
class DualPoint:
    """Dual variable (y, z) with z componentwise nonnegative."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        if self.z.size and np.min(self.z) < 0:
            raise InputError("inequality multipliers must be nonnegative")


@dataclass(frozen=True)
class DualEval:
    """theta, its gradient, and the primal candidate x(y, z) in K."""

    theta: float
    grad_y: np.ndarray
    grad_z: np.ndarray
    x: BlockPoint


class _Workspace:
    """Raw-vector view of a ProjectionProblem for the solver hot paths."""

    def __init__(self, problem: ProjectionProblem):
        self.problem = problem
        self.cone = problem.cone
        self.t = float(problem.scale)
        self.c_vec = problem.c.ravel()
        self.c_sq = float(self.c_vec @ self.c_vec)
        self.tilt_vec = (
            problem.tilt.ravel() if problem.tilt is not None else None
        )
        self.eq = problem.eq
        self.ineq = problem.ineq
        self.b_eq = problem.eq.rhs
        self.b_ineq = problem.ineq.rhs if problem.ineq is not None else None

    def eval(self, y, z=None, want_info=False):
        s = self.eq.adjoint_vec(y)
        if z is not None and self.ineq is not None:
            s = s + self.ineq.adjoint_vec(z)
        if self.tilt_vec is not None:
            s = s - self.tilt_vec
        w = self.c_vec + self.t * s
        x, infos = _project_ambient(self.cone, w, want_info)
        theta = float(self.b_eq @ y)
        if z is not None and self.b_ineq is not None:
            theta += float(self.b_ineq @ z)
        theta += (self.c_sq - float(x @ x)) / (2.0 * self.t)
        gy = self.b_eq - self.eq.apply_vec(x)
        gz = (
            self.b_ineq - self.ineq.apply_vec(x)
            if z is not None and self.ineq is not None
            else None
        )
        return theta, gy, gz, x, infos


def eval_theta(problem: ProjectionProblem, d: DualPoint) -> DualEval:
    """Evaluate the dual function, its gradient and the primal candidate."""
    ws = _Workspace(problem)
    y = np.asarray(d.y, dtype=float)
    z = np.asarray(d.z, dtype=float) if problem.ineq is not None else None
    if y.size != problem.m_eq:
        raise InputError(f"y has length {y.size}, expected {problem.m_eq}")
    if problem.ineq is not None and z.size != problem.m_ineq:
        raise InputError(f"z has length {z.size}, expected {problem.m_ineq}")
    if not np.all(np.isfinite(y)) or (z is not None and not np.all(np.isfinite(z))):
        raise InputError("dual point has non-finite entries")
    theta, gy, gz, x, _ = ws.eval(y, z)
    return DualEval(
        theta=theta,
        grad_y=gy,
        grad_z=gz if gz is not None else np.zeros(0),
        x=BlockPoint.from_vector(problem.cone, x),
    )


# ---------------------------------------------------------------------------
# weak Wolfe line search (shared by quasi-Newton and semismooth Newton)

_WOLFE_C1 = 1e-4
_WOLFE_C2 = 0.9
_WOLFE_TRIALS = 40


def _wolfe(phi, f0, slope0, alpha0=1.0):
    """Weak Wolfe search on a descent direction by expansion + bisection.

    ``phi(alpha)`` returns (f, slope, payload).  Returns
    (alpha, f, payload, ok, best) where ``best`` is the lowest trial seen,
    used as a fallback when the search fails (e.g. at the floating-point
    floor of f, where the Armijo test turns into coin flipping).
    """
    lo, hi = 0.0, np.inf
    alpha = alpha0
    best = None  # (alpha, f, payload)
    for _ in range(_WOLFE_TRIALS):
        f, slope, payload = phi(alpha)
        if np.isfinite(f) and (best is None or f < best[1]):
            best = (alpha, f, payload)
        if not np.isfinite(f) or f > f0 + _WOLFE_C1 * alpha * slope0:
            hi = alpha
        elif slope < _WOLFE_C2 * slope0:
            lo = alpha
        else:
            return alpha, f, payload, True, best
        alpha = 2.0 * lo if hi == np.inf else 0.5 * (lo + hi)
        if alpha == 0.0:
            break
    return None, None, None, False, best


# ---------------------------------------------------------------------------
# fixed-metric gradient ascent (the dual face of Dykstra)


def solve_fixed_metric(
    problem: ProjectionProblem,
    tol: float | None = None,
    max_iter: int = 5000,
    y0=None,
    record_iterates: bool = False,
):
    """Gradient ascent on theta in the metric W = [AA^T]^{-1} with unit step.

    Equality constraints only.  With scale t the step is W g / t.  The
    primal iterates x_k = P_K(c + t(A'y_k - tilt)) coincide iterate for
    iterate with Dykstra's corrected alternating projections (t = 1).
    Stops when ||grad theta|| = ||A x - b|| <= tol.
    """
    if problem.m_ineq:
        raise InputError("fixed-metric solver handles equality constraints only")
    ws = _Workspace(problem)
    fact = problem.eq.gram
    tol = problem.default_tol() if tol is None else float(tol)
    y = np.zeros(problem.m_eq) if y0 is None else np.array(y0, dtype=float)
    report = SolveReport()
    start = time.perf_counter()
    status = ITERATION_LIMIT
    theta = np.nan
    x = None
    gnorm = np.inf
    for k in range(max_iter + 1):
        theta, g, _, x, _ = ws.eval(y)
        gnorm = float(np.linalg.norm(g))
        if record_iterates:
            report.iterate_history.append(
                BlockPoint.from_vector(problem.cone, x)
            )
        report.residual_history.append(gnorm)
        report.iterations = k
        if gnorm <= tol:
            status = CONVERGED
            break
        if k == max_iter:
            break
        y = y + fact.solve(g) / ws.t
    report.status = status
    report.primal_residual = gnorm
    report.dual_residual = 0.0
    report.objective = theta
    report.inner_iterations = report.iterations
    report.wall_time = time.perf_counter() - start
    xbp = BlockPoint.from_vector(problem.cone, x)
    return xbp, DualPoint(y, np.zeros(0)), report


# ---------------------------------------------------------------------------
# limited-memory quasi-Newton


class _Lbfgs:
    """Two-loop recursion over at most ``memory`` curvature pairs."""

    def __init__(self, memory=10, pairs=None):
        self.memory = memory
        self.pairs = list(pairs) if pairs else []

    def push(self, s, yv):
        sy = float(s @ yv)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            self.pairs.append((s, yv, sy))
            if len(self.pairs) > self.memory:
                self.pairs.pop(0)

    def direction(self, grad):
        q = -grad.copy()
        if not self.pairs:
            return q
        alphas = []
        for s, yv, sy in reversed(self.pairs):
            a = (s @ q) / sy
            q -= a * yv
            alphas.append(a)
        s, yv, sy = self.pairs[-1]
        q *= sy / float(yv @ yv)
        for (s, yv, sy), a in zip(self.pairs, reversed(alphas)):
            b = (yv @ q) / sy
            q += (a - b) * s
        return q


class _DenseBfgs:
    """Dense inverse-Hessian BFGS update, for small dual dimensions."""

    def __init__(self, m):
        self.h = np.eye(m)

    def push(self, s, yv):
        sy = float(s @ yv)
        if sy <= 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            return
        hy = self.h @ yv
        self.h += (
            np.outer(s, s) * ((sy + yv @ hy) / sy**2)
            - (np.outer(hy, s) + np.outer(s, hy)) / sy
        )

    def direction(self, grad):
        return -(self.h @ grad)

    pairs = ()


def _kkt_residual(gy, gz, z):
    if gz is None or gz.size == 0:
        return float(np.linalg.norm(gy))
    # projected-gradient residual on the nonnegative multipliers
    zres = z - np.maximum(z + gz, 0.0)
    return float(np.sqrt(np.linalg.norm(gy) ** 2 + np.linalg.norm(zres) ** 2))


def solve_quasi_newton(
    problem: ProjectionProblem,
    tol: float | None = None,
    max_iter: int = 1000,
    memory: int = 10,
    dense: bool = False,
    y0=None,
    z0=None,
    carry_state: dict | None = None,
    record_iterates: bool = False,
):
    """Maximize theta by (limited-memory) BFGS with a weak Wolfe search.

    Inequality multipliers are kept feasible by clamping z to the orthant
    after each accepted step; curvature pairs are skipped whenever the clamp
    activates.  ``carry_state`` lets an outer loop retain curvature pairs
    between restarts.
    """
    ws = _Workspace(problem)
    me, mi = problem.m_eq, problem.m_ineq
    tol = problem.default_tol() if tol is None else float(tol)
    v = np.zeros(me + mi)
    if y0 is not None:
        v[:me] = np.asarray(y0, dtype=float)
    if z0 is not None and mi:
        v[me:] = np.maximum(np.asarray(z0, dtype=float), 0.0)

    if dense and me + mi <= 500:
        model = _DenseBfgs(me + mi)
    else:
        pairs = carry_state.get("pairs") if carry_state else None
        model = _Lbfgs(memory, pairs)

    evals = 0

    def fg(vec):
        nonlocal evals
        evals += 1
        y = vec[:me]
        z = vec[me:] if mi else None
        theta, gy, gz, x, _ = ws.eval(y, z)
        g = np.concatenate([gy, gz]) if mi else gy
        return -theta, -g, (theta, gy, gz, x)

    report = SolveReport()
    start = time.perf_counter()
    f, gf, payload = fg(v)
    status = ITERATION_LIMIT
    for k in range(max_iter + 1):
        theta, gy, gz, x = payload
        crit = _kkt_residual(gy, gz, v[me:] if mi else None)
        if record_iterates:
            report.iterate_history.append(
                BlockPoint.from_vector(problem.cone, x)
            )
        report.residual_history.append(crit)
        report.iterations = k
        if crit <= tol:
            status = CONVERGED
            break
        if k == max_iter:
            break

        d = model.direction(gf)
        slope = float(gf @ d)
        if slope >= 0.0:  # stale curvature; restart from steepest ascent
            model = _Lbfgs(memory) if isinstance(model, _Lbfgs) else model
            d = -gf
            slope = float(gf @ d)

        lowest_grad = [None]  # best trial by gradient norm, for stalls

        def phi(alpha, _v=v, _d=d, _lg=lowest_grad):
            fa, ga, pl = fg(_v + alpha * _d)
            gn = float(np.linalg.norm(ga))
            if _lg[0] is None or gn < _lg[0][0]:
                _lg[0] = (gn, alpha, fa, ga, pl)
            return fa, float(ga @ _d), (fa, ga, pl)

        alpha, fa, data, ok, best = _wolfe(phi, f, slope)
        if not ok:
            # the Armijo test turns to noise at the floating-point floor of
            # f; accept progress in value, else in gradient norm (without
            # giving back more than rounding noise in f)
            floor = f + 1e-12 * (1.0 + abs(f))
            if best is not None and best[1] < f:
                alpha, data = best[0], best[2]
            elif (
                lowest_grad[0] is not None
                and lowest_grad[0][0] < float(np.linalg.norm(gf))
                and lowest_grad[0][2] <= floor
            ):
                gn, alpha, fa, ga, pl = lowest_grad[0]
                data = (fa, ga, pl)
            else:
                status = NUMERICAL_FAILURE
                report.message = "Wolfe line search failed to make progress"
                break
            model = _Lbfgs(memory) if isinstance(model, _Lbfgs) else model
        f_new, gf_new, payload_new = data
        v_new = v + alpha * d
        clamped = False
        if mi:
            zc = np.maximum(v_new[me:], 0.0)
            clamped = bool(np.any(zc != v_new[me:]))
            if clamped:
                v_new = np.concatenate([v_new[:me], zc])
                f_new, gf_new, payload_new = fg(v_new)
        if not clamped:
            model.push(v_new - v, gf_new - gf)
        v, f, gf, payload = v_new, f_new, gf_new, payload_new

    if carry_state is not None and isinstance(model, _Lbfgs):
        carry_state["pairs"] = model.pairs

    theta, gy, gz, x = payload
    report.status = status
    report.primal_residual = _kkt_residual(gy, gz, v[me:] if mi else None)
    report.dual_residual = 0.0
    report.objective = theta
    report.inner_iterations = evals
    report.wall_time = time.perf_counter() - start
    xbp = BlockPoint.from_vector(problem.cone, x)
    dp = DualPoint(v[:me], np.maximum(v[me:], 0.0) if mi else np.zeros(0))
    return xbp, dp, report


# ---------------------------------------------------------------------------
# semismooth Newton-CG


def _hessian_diagonal(ws: _Workspace, infos) -> np.ndarray:
    """Exact diagonal of t * A J A^T by probing with coordinate vectors.

    Exploits the block-sparse rows of A: probing row i costs
    O(r_i * d^2) on a d-dim PSD block touching r_i of its matrix rows.
    """
    a = ws.eq.matrix
    m = a.shape[0]
    diag = np.zeros(m)
    blocks = ws.cone.blocks
    omegas = [
        _psd_omega(info.eigenvalues) if kind == "psd" else None
        for (kind, _, _), info in zip(blocks, infos)
    ]
    indptr, indices, data = a.indptr, a.indices, a.data
    for i in range(m):
        cols = indices[indptr[i]:indptr[i + 1]]
        vals = data[indptr[i]:indptr[i + 1]]
        total = 0.0
        for (kind, d, sl), info, omega in zip(blocks, infos, omegas):
            lo, hi = sl.start, sl.stop
            mask = (cols >= lo) & (cols < hi)
            if not np.any(mask):
                continue
            bc = cols[mask] - lo
            bv = vals[mask]
            if kind == "psd":
                rows = bc // d
                cs = bc % d
                rset = np.unique(rows)
                s_sub = np.zeros((rset.size, d))
                rmap = {r: j for j, r in enumerate(rset)}
                for r, cidx, val in zip(rows, cs, bv):
                    s_sub[rmap[r], cidx] = val
                u = info.eigenvectors
                m_mat = u[rset, :].T @ (s_sub @ u)
                total += float(np.sum(omega * m_mat * m_mat))
            elif kind == "soc":
                h = np.zeros(d)
                h[bc] = bv
                total += float(h @ soc_jacobian_apply(info, h))
            else:
                total += float(np.sum((info[bc] > 0.0) * bv * bv))
        diag[i] = ws.t * total
    return diag


def _pcg(apply_h, g, precond_diag, eta, cap):
    """Preconditioned CG on H d = g for PSD H; stops at ||Hd - g|| <= eta||g||.

    Returns (d, iterations, breakdown).  On curvature breakdown the current
    iterate (or the normalized search direction on the first pass) is
    returned, mirroring standard practice in truncated Newton codes.
    """
    m = g.size
    d = np.zeros(m)
    r = g.copy()
    gnorm = np.linalg.norm(g)
    target = eta * gnorm
    z = r / precond_diag
    rz = float(r @ z)
    p = z.copy()
    for it in range(cap):
        hp = apply_h(p)
        curve = float(p @ hp)
        if curve <= 1e-14 * float(p @ p):
            if it == 0:
                return p / max(np.linalg.norm(p), 1e-300), it + 1, True
            return d, it + 1, True
        alpha = rz / curve
        d += alpha * p
        r -= alpha * hp
        if np.linalg.norm(r) <= target:
            return d, it + 1, False
        z = r / precond_diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return d, cap, False


def solve_ssnewton(
    problem: ProjectionProblem,
    tol: float | None = None,
    max_iter: int = 200,
    cg_cap: int | None = None,
    precond: str = "jacobi",
    precond_limit: int = 2000,
    y0=None,
    record_iterates: bool = False,
):
    """Semismooth Newton-CG ascent on theta (equality constraints only).

    The generalized Hessian element H = t * A (dP_K) A^T is accessed only
    through products H d via the cone-projection Jacobian; the Newton system
    H d = grad theta is solved inexactly by preconditioned CG with forcing
    sequence eta = min(0.1, sqrt(||grad||)).  Steps are safeguarded by a
    weak Wolfe search, falling back to a (preconditioned) gradient step when
    CG returns a non-ascent direction.
    """
    if problem.m_ineq:
        raise InputError("semismooth Newton handles equality constraints only")
    ws = _Workspace(problem)
    m = problem.m_eq
    tol = problem.default_tol() if tol is None else float(tol)
    cg_cap = 2 * m if cg_cap is None else int(cg_cap)
    y = np.zeros(m) if y0 is None else np.array(y0, dtype=float)

    report = SolveReport()
    start = time.perf_counter()
    evals = 0

    def fg(yv, want_info=False):
        nonlocal evals
        evals += 1
        return ws.eval(yv, want_info=want_info)

    status = ITERATION_LIMIT
    theta, g, _, x, infos = fg(y, want_info=True)
    for k in range(max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if record_iterates:
            report.iterate_history.append(
                BlockPoint.from_vector(problem.cone, x)
            )
        report.residual_history.append(gnorm)
        report.iterations = k
        if gnorm <= tol:
            status = CONVERGED
            break
        if k == max_iter:
            break

        def apply_h(dvec):
            lifted = ws.eq.adjoint_vec(dvec)
            jac = cone_jacobian_apply(ws.cone, infos, lifted)
            return ws.t * ws.eq.apply_vec(jac)

        if precond == "jacobi" and m <= precond_limit:
            pd = np.maximum(_hessian_diagonal(ws, infos), 1e-8)
        else:
            pd = np.ones(m)
        eta = min(0.1, np.sqrt(gnorm))
        d, cg_iters, breakdown = _pcg(apply_h, g, pd, eta, cg_cap)
        report.inner_iterations += cg_iters
        if breakdown:
            report.gradient_fallbacks += 1
        if float(g @ d) <= 1e-14 * gnorm * max(np.linalg.norm(d), 1e-300):
            d = g / pd
            report.gradient_fallbacks += 1

        lowest_grad = [None]

        def phi(alpha, _y=y, _d=d, _lg=lowest_grad):
            th, gg, _, xx, inf = fg(_y + alpha * _d, want_info=True)
            gn = float(np.linalg.norm(gg))
            if _lg[0] is None or gn < _lg[0][0]:
                _lg[0] = (gn, alpha, (th, gg, xx, inf))
            return -th, float(-gg @ _d), (th, gg, xx, inf)

        alpha, _, data, ok, best = _wolfe(phi, -theta, float(-g @ d))
        if not ok:
            floor = -theta + 1e-12 * (1.0 + abs(theta))
            if best is not None and best[1] < -theta:
                alpha, data = best[0], best[2]
            elif (
                lowest_grad[0] is not None
                and lowest_grad[0][0] < float(np.linalg.norm(g))
                and -lowest_grad[0][2][0] <= floor
            ):
                _, alpha, data = lowest_grad[0]
            else:
                status = NUMERICAL_FAILURE
                report.message = "line search failed along the Newton direction"
                break
        theta, g, x, infos = data
        y = y + alpha * d

    report.status = status
    report.primal_residual = float(np.linalg.norm(g))
    report.dual_residual = 0.0
    report.objective = theta
    report.wall_time = time.perf_counter() - start
    if report.inner_iterations == 0:
        report.inner_iterations = evals  # converged before any CG pass
    xbp = BlockPoint.from_vector(problem.cone, x)
    return xbp, DualPoint(y, np.zeros(0)), report


# ---------------------------------------------------------------------------
# nearest correlation matrix


def correlation_problem(c) -> ProjectionProblem:
    """Projection problem for the nearest correlation matrix to ``c``:
    unit diagonal rows A_i = e_i e_i^T (so AA^T = I) over the PSD cone."""
    c = symmetrize(np.asarray(c, dtype=float))
    n = c.shape[0]
    cone = ConeSpec(psd_dims=(n,))
    import scipy.sparse as sp

    diag_flat = np.arange(n) * n + np.arange(n)
    mat = sp.csr_matrix(
        (np.ones(n), (np.arange(n), diag_flat)), shape=(n, n * n)
    )
    amap = AffineMap(cone, mat, np.ones(n))
    return ProjectionProblem(
        c=BlockPoint(cone, [c]), eq=amap, cone=cone
    )


_SOLVERS = {
    "fixed_metric": solve_fixed_metric,
    "quasi_newton": solve_quasi_newton,
    "ssnewton": solve_ssnewton,
}


def nearest_correlation(
    c,
    method: str = "ssnewton",
    tol: float | None = None,
    max_iter: int | None = None,
    record_iterates: bool = False,
):
    """Nearest correlation matrix to ``c`` (unit diagonal, PSD).

    ``method`` is one of fixed_metric / quasi_newton / ssnewton (dual
    engines) or dykstra / admm / alternating (geometric schemes).  Default
    tolerance is the ||grad theta|| <= 1e-7 n rule.  Returns the projected
    matrix and the solve report; apply :func:`rescale_correlation` when an
    exactly-unit diagonal is required.
    """
    problem = correlation_problem(c)
    n = problem.cone.psd_dims[0]
    tol = 1e-7 * n if tol is None else float(tol)
    if method in _SOLVERS:
        kwargs = {"tol": tol, "record_iterates": record_iterates}
        if max_iter is not None:
            kwargs["max_iter"] = max_iter
        x, _, rep = _SOLVERS[method](problem, **kwargs)
    elif method in ("dykstra", "admm", "alternating"):
        from . import altschemes

        two = altschemes.TwoSetProblem.from_projection(problem)
        kwargs = {"tol": tol, "record_iterates": record_iterates}
        if max_iter is not None:
            kwargs["max_iter"] = max_iter
        if method == "dykstra":
            x, rep = altschemes.dykstra(two, **kwargs)
        elif method == "admm":
            kwargs.pop("record_iterates")
            x, rep = altschemes.admm_projection(two, **kwargs)
        else:
            kwargs.pop("record_iterates")
            x, rep = altschemes.alternating_projections(two, **kwargs)
    else:
        raise InputError(f"unknown nearest-correlation method {method!r}")
    return np.array(x.blocks[0]), rep


def rescale_correlation(x) -> np.ndarray:
    """Exact-unit-diagonal post treatment D^{-1/2} X D^{-1/2}, D = diag(X)."""
    x = np.asarray(x, dtype=float)
    d = np.diag(x)
    if np.any(d <= 0):
        bad = int(np.argmax(d <= 0))
        raise InputError(f"diagonal entry {bad} is {d[bad]:.3e}, must be > 0")
    scale = 1.0 / np.sqrt(d)
    out = x * np.outer(scale, scale)
    np.fill_diagonal(out, 1.0)
    return (out + out.T) / 2.0
