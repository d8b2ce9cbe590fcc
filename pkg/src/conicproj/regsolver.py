"""Regularization (proximal / dual augmented Lagrangian) methods for
standard-form linear conic programs

    min <c, x>   s.t.  A x = b,  x in K,

with dual  max b'y  s.t.  A'y - u - c = 0, u in K°.

The outer loop is the proximal iteration p_{k+1} ~ prox(p_k), each prox
point being the solution of a conic least-squares subproblem handled by the
dual projection engines; equivalently, a dual augmented Lagrangian method.
Conic feasibility p in K, u in K° and complementarity <p, u> = 0 hold at
every outer iterate by construction (they come out of one cone projection),
so the overall stopping test is the pair of scaled infeasibilities

    max{ ||A p - b|| / (1 + ||b||),  ||A'y - u - c|| / (1 + ||c||) }.

``solve_simple`` is the one-inner-iteration scheme: the y-step maximizes
the augmented dual Lagrangian exactly (AA^T factorized once), and the cone
projection yields the new p and u as by-products.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cones import (
    AffineMap,
    BlockPoint,
    ConeSpec,
    GramFactorization,
    InputError,
    _project_ambient,
    gram_factorize,
)
from .dualproj import (
    ProjectionProblem,
    solve_fixed_metric,
    solve_quasi_newton,
    solve_ssnewton,
)
from .report import (
    CONVERGED,
    ITERATION_LIMIT,
    SUSPECTED_INFEASIBLE,
    DivergenceMonitor,
    SolveReport,
)

__all__ = [
    "LinearConicProblem",
    "RegParams",
    "IterateTriple",
    "prox_eval",
    "solve_regularized",
    "solve_simple",
    "residuals",
    "gram_factorize",
]

INNER_SOLVERS = ("fixed_metric", "quasi_newton", "ssnewton", "one_iteration")


@dataclass(frozen=True)
class LinearConicProblem:
    """Objective c, constraints A x = b (rhs stored on the map), cone K.

    Minimization sense throughout.
    """

    c: BlockPoint
    a: AffineMap
    cone: ConeSpec

    def __post_init__(self):
        if self.c.cone != self.cone or self.a.cone != self.cone:
            raise InputError("problem blocks do not conform to the cone spec")
        if self.a.m < 1:
            raise InputError("problem needs at least one constraint")

    @property
    def b(self) -> np.ndarray:
        return self.a.rhs

    @property
    def m(self) -> int:
        return self.a.m


@dataclass
class RegParams:
    """Tuning knobs of the regularization solvers.

    ``eps0``/``decay`` define the summable inner tolerance schedule
    eps_k = max(outer_tol/10, eps0 / k^decay), decay > 1.  The optional
    prox-parameter balancing (off by default) rescales t by ``t_scale``
    when one scaled residual exceeds ``t_band`` times the other, at most
    every ``t_period`` outer iterations, clamped to [t_min, t_max]: t
    shrinks when the primal residual dominates and grows when the dual
    residual does (t multiplies the dual-infeasibility penalty, and the
    dual residual itself scales like 1/t, so the opposite direction
    self-amplifies).
    """

    t0: float = 1.0
    inner: str = "quasi_newton"
    eps0: float = 1e-2
    decay: float = 1.5
    outer_tol: float = 1e-7
    max_outer: int = 1000
    max_inner: int = 300
    adapt_t: bool = False
    t_band: float = 10.0
    t_scale: float = 2.0
    t_min: float = 1e-4
    t_max: float = 1e4
    t_period: int = 10
    carry_memory: bool = True

    def __post_init__(self):
        if not self.t0 > 0:
            raise InputError("t0 must be positive")
        if not self.decay > 1:
            raise InputError(
                "decay must exceed 1: the inner tolerance series must be summable"
            )
        if self.inner not in INNER_SOLVERS:
            raise InputError(f"unknown inner solver {self.inner!r}")
        if not self.outer_tol > 0:
            raise InputError("outer tolerance must be positive")

    def inner_tol(self, k: int) -> float:
        """Scaled inner tolerance at outer iteration k (1-based)."""
        return max(self.outer_tol / 10.0, self.eps0 / k**self.decay)


@dataclass(frozen=True)
class IterateTriple:
    """Primal-dual outer iterate (p, y, u) in K x R^m x K°."""

    p: BlockPoint
    y: np.ndarray
    u: BlockPoint


def _residuals_vec(problem, p_vec, y, u_vec, b_scale, c_scale):
    a = problem.a
    rp = float(np.linalg.norm(a.apply_vec(p_vec) - a.rhs)) / b_scale
    rd = (
        float(np.linalg.norm(a.adjoint_vec(y) - u_vec - problem.c.ravel()))
        / c_scale
    )
    return rp, rd


def residuals(problem: LinearConicProblem, triple: IterateTriple):
    """Scaled primal/dual infeasibilities of an outer iterate:
    (||Ap - b||/(1+||b||), ||A'y - u - c||/(1+||c||))."""
    b_scale = 1.0 + float(np.linalg.norm(problem.b))
    c_scale = 1.0 + problem.c.norm()
    return _residuals_vec(
        problem, triple.p.ravel(), triple.y, triple.u.ravel(), b_scale, c_scale
    )


def prox_eval(
    problem: LinearConicProblem,
    p: BlockPoint,
    t: float,
    inner: str = "quasi_newton",
    inner_tol: float = 1e-8,
    max_inner: int = 300,
    y0=None,
    carry_state: dict | None = None,
):
    """One (truncated) proximal step: approximately minimize
    <c, x> + ||x - p||^2 / (2t) over the intersection, via its dual.

    Returns (x, y, u, inner_report) with u recovered from the final cone
    projection, so p + t(A'y - c) = t u + x holds exactly.
    ``inner_tol`` is an absolute bound on ||A x - b||.
    """
    if not t > 0:
        raise InputError("prox parameter must be positive")
    sub = ProjectionProblem(
        c=p, eq=problem.a, cone=problem.cone, scale=t, tilt=problem.c
    )
    if inner == "fixed_metric":
        x, d, rep = solve_fixed_metric(
            sub, tol=inner_tol, max_iter=max_inner, y0=y0
        )
    elif inner == "quasi_newton":
        x, d, rep = solve_quasi_newton(
            sub,
            tol=inner_tol,
            max_iter=max_inner,
            y0=y0,
            carry_state=carry_state,
        )
    elif inner == "ssnewton":
        x, d, rep = solve_ssnewton(
            sub, tol=inner_tol, max_iter=max_inner, y0=y0
        )
    else:
        raise InputError(f"unknown inner solver {inner!r}")
    x_vec = x.ravel()
    w = p.ravel() + t * (problem.a.adjoint_vec(d.y) - problem.c.ravel())
    u_vec = (w - x_vec) / t
    u = BlockPoint.from_vector(problem.cone, u_vec)
    return x, d.y, u, rep


def solve_regularized(problem: LinearConicProblem, params: RegParams | None = None):
    """Proximal outer loop with a dual projection method as inner solver.

    The inner solve at outer iteration k is stopped at
    ||A x - b|| <= eps_k (1 + ||b||) with the summable schedule from
    ``params``; the inner dual vector (and quasi-Newton memory, when
    enabled) restarts from the previous outer iteration.  Stops when both
    scaled residuals fall below ``params.outer_tol``.
    """
    params = RegParams() if params is None else params
    if params.inner == "one_iteration":
        return solve_simple(problem, params)
    cone = problem.cone
    b_scale = 1.0 + float(np.linalg.norm(problem.b))
    c_scale = 1.0 + problem.c.norm()
    t = params.t0
    p = BlockPoint.zeros(cone)
    y = np.zeros(problem.m)
    u = BlockPoint.zeros(cone)
    carry: dict = {} if params.carry_memory else None
    monitor = DivergenceMonitor()
    report = SolveReport()
    start = time.perf_counter()
    status = ITERATION_LIMIT
    rp, rd = _residuals_vec(problem, p.ravel(), y, u.ravel(), b_scale, c_scale)
    monitor.update(0, float(np.linalg.norm(y)), rp)
    last_adapt = 0
    adapt_wait = params.t_period
    for k in range(1, params.max_outer + 1):
        inner_tol = params.inner_tol(k) * b_scale
        p, y, u, inner_rep = prox_eval(
            problem,
            p,
            t,
            inner=params.inner,
            inner_tol=inner_tol,
            max_inner=params.max_inner,
            y0=y,
            carry_state=carry if params.carry_memory else None,
        )
        report.inner_iterations += inner_rep.inner_iterations
        report.gradient_fallbacks += inner_rep.gradient_fallbacks
        rp, rd = _residuals_vec(
            problem, p.ravel(), y, u.ravel(), b_scale, c_scale
        )
        report.residual_history.append(max(rp, rd))
        report.iterations = k
        if max(rp, rd) <= params.outer_tol:
            status = CONVERGED
            break
        if monitor.update(k, float(np.linalg.norm(y)), rp):
            status = SUSPECTED_INFEASIBLE
            report.message = (
                "dual variable diverging while primal residual stagnates"
            )
            break
        if (
            params.adapt_t
            and k - last_adapt >= adapt_wait
            and max(rp, rd) > 100.0 * params.outer_tol
        ):
            # every change of t restarts the fixed-point contraction, so the
            # waiting period doubles after each adaptation: finitely many
            # changes, balancing confined to the transient
            if rp > params.t_band * rd:
                t = max(t / params.t_scale, params.t_min)
                last_adapt = k
                adapt_wait *= 2
            elif rd > params.t_band * rp:
                t = min(t * params.t_scale, params.t_max)
                last_adapt = k
                adapt_wait *= 2
    report.status = status
    report.primal_residual = rp
    report.dual_residual = rd
    report.objective = problem.c.dot(p)
    report.wall_time = time.perf_counter() - start
    return IterateTriple(p=p, y=y, u=u), report


def solve_simple(problem: LinearConicProblem, params: RegParams | None = None):
    """One-inner-iteration regularization (boundary-point style) scheme.

    AA^T is factorized once.  Each sweep maximizes the augmented dual
    Lagrangian exactly in y,

        y_{k+1} = [AA^T]^{-1} (A(u_k + c) + (b - A p_k) / t_k),

    then projects w = p_k + t_k (A'y_{k+1} - c) onto the cone, which yields
    p_{k+1} = P_K(w) and the polar part u_{k+1} = P_K°(w)/t_k as by-products
    of the same decomposition.
    """
    params = (
        RegParams(max_outer=200000, inner="one_iteration")
        if params is None
        else params
    )
    cone = problem.cone
    a = problem.a
    fact = gram_factorize(a)
    c_vec = problem.c.ravel()
    b = a.rhs
    b_scale = 1.0 + float(np.linalg.norm(b))
    c_scale = 1.0 + float(np.linalg.norm(c_vec))
    t = params.t0
    p = np.zeros(cone.dim)
    u = np.zeros(cone.dim)
    y = np.zeros(a.m)
    monitor = DivergenceMonitor()
    report = SolveReport()
    start = time.perf_counter()
    status = ITERATION_LIMIT
    rp, rd = _residuals_vec(problem, p, y, u, b_scale, c_scale)
    monitor.update(0, float(np.linalg.norm(y)), rp)
    last_adapt = 0
    adapt_wait = params.t_period
    for k in range(1, params.max_outer + 1):
        y = fact.solve(a.apply_vec(u + c_vec) + (b - a.apply_vec(p)) / t)
        w = p + t * (a.adjoint_vec(y) - c_vec)
        p, _ = _project_ambient(cone, w)
        u = (w - p) / t
        rp, rd = _residuals_vec(problem, p, y, u, b_scale, c_scale)
        report.residual_history.append(max(rp, rd))
        report.iterations = k
        if max(rp, rd) <= params.outer_tol:
            status = CONVERGED
            break
        if monitor.update(k, float(np.linalg.norm(y)), rp):
            status = SUSPECTED_INFEASIBLE
            report.message = (
                "dual variable diverging while primal residual stagnates"
            )
            break
        if (
            params.adapt_t
            and k - last_adapt >= adapt_wait
            and max(rp, rd) > 100.0 * params.outer_tol
        ):
            # every change of t restarts the fixed-point contraction, so the
            # waiting period doubles after each adaptation: finitely many
            # changes, balancing confined to the transient
            if rp > params.t_band * rd:
                t = max(t / params.t_scale, params.t_min)
                last_adapt = k
                adapt_wait *= 2
            elif rd > params.t_band * rp:
                t = min(t * params.t_scale, params.t_max)
                last_adapt = k
                adapt_wait *= 2
    report.status = status
    report.primal_residual = rp
    report.dual_residual = rd
    report.inner_iterations = report.iterations
    p_bp = BlockPoint.from_vector(cone, p)
    u_bp = BlockPoint.from_vector(cone, u)
    report.objective = problem.c.dot(p_bp)
    report.wall_time = time.perf_counter() - start
    return IterateTriple(p=p_bp, y=y, u=u_bp), report
