"""Solvers for the reduced interior-edge system plus postprocessing.

The reduced matrix is symmetric positive definite, so two methods are
offered: a Jacobi-preconditioned conjugate gradient (the default, works
at any size) and a dense Cholesky factorization for small systems.  The
element unknowns are recovered afterwards from the diagonal element
block, and :func:`vertex_average` folds edge values down to vertices for
plotting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import WgSystem, ReducedSystem, schur_algebraic, boundary_averages
from .mesh import TriMesh

__all__ = [
    "SolverError",
    "NonConvergenceError",
    "SolverConfig",
    "WgSolution",
    "solve_reduced",
    "recover_interior",
    "vertex_average",
    "solve_problem",
    "export_solution_csv",
    "export_vertex_csv",
]

METHODS = ("conjugate-gradient-jacobi", "dense-cholesky")
DENSE_LIMIT = 2000


class SolverError(Exception):
    """Raised for invalid solver configuration or misuse."""


class NonConvergenceError(SolverError):
    """Iteration cap reached; carries the residual norm history."""

    def __init__(self, message, residual_history):
        super().__init__(message)
        self.residual_history = list(residual_history)


@dataclass
class SolverConfig:
    """Solver selection and stopping control.

    ``max_iterations`` of ``None`` means ``20 * n`` for an ``n``-unknown
    system.  ``rel_tolerance`` bounds the final true residual relative to
    the right hand side norm.
    """

    rel_tolerance: float = 1e-12
    max_iterations: int | None = None
    method: str = "conjugate-gradient-jacobi"

    def __post_init__(self):
        if self.method not in METHODS:
            raise SolverError(f"unknown method {self.method!r}; "
                              f"expected one of {METHODS}")
        if not (0 < self.rel_tolerance < 1):
            raise SolverError(f"rel_tolerance must be in (0, 1), "
                              f"got {self.rel_tolerance}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise SolverError("max_iterations must be positive")


@dataclass
class WgSolution:
    """Solution vectors: per-element ``u0``, per-interior-edge ``ub``,
    per-boundary-edge data ``ub_bdry``, and the final solver residual."""

    u0: np.ndarray
    ub: np.ndarray
    ub_bdry: np.ndarray
    residual_norm: float


def _pcg_jacobi(a_mat, b, tol, max_iterations):
    """Jacobi-preconditioned CG with true-residual confirmation.

    The recurrence residual is refreshed against ``b - A x`` every 50
    steps and again before accepting convergence; acceptance requires the
    true residual to meet the tolerance.
    """
    n = b.shape[0]
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0.0, [0.0]
    dinv = 1.0 / a_mat.diagonal()
    x = np.zeros(n)
    r = b.copy()
    history = []
    its = 0
    while True:
        z = dinv * r
        p = z.copy()
        rz = float(r @ z)
        while True:
            rn = float(np.linalg.norm(r))
            history.append(rn)
            if rn <= tol * bnorm or its >= max_iterations:
                break
            ap = a_mat @ p
            alpha = rz / float(p @ ap)
            x += alpha * p
            r -= alpha * ap
            its += 1
            if its % 50 == 0:
                # periodic refresh: recompute the true residual and restart
                # the search direction from it
                r = b - a_mat @ x
                z = dinv * r
                rz = float(r @ z)
                p = z.copy()
                continue
            z = dinv * r
            rz_new = float(r @ z)
            beta = rz_new / rz
            p = z + beta * p
            rz = rz_new
        r_true = b - a_mat @ x
        rn_true = float(np.linalg.norm(r_true))
        if rn_true <= tol * bnorm:
            history[-1] = rn_true
            return x, rn_true, history
        if its >= max_iterations:
            raise NonConvergenceError(
                f"conjugate gradient did not reach a relative residual of "
                f"{tol:g} within {max_iterations} iterations "
                f"(last true residual {rn_true / bnorm:.3e} relative)",
                history)
        r = r_true  # restart from the verified residual


def solve_reduced(system: ReducedSystem, g_h: np.ndarray,
                  config: SolverConfig | None = None) -> tuple[np.ndarray, float]:
    """Solve ``a_mat @ ub = rhs - a_bdry @ g_h`` for the interior edges.

    Returns ``(ub, residual_norm)``.  A zero right hand side short
    circuits to the zero vector.
    """
    cfg = config or SolverConfig()
    b = system.rhs - system.a_bdry @ np.asarray(g_h, dtype=float)
    n = b.shape[0]
    if n == 0:
        return np.zeros(0), 0.0
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0.0

    if cfg.method == "dense-cholesky":
        if n > DENSE_LIMIT:
            raise SolverError(
                f"dense-cholesky is limited to {DENSE_LIMIT} unknowns, "
                f"system has {n}")
        dense = system.a_mat.toarray()
        factor = scipy.linalg.cho_factor(dense, lower=True)
        ub = scipy.linalg.cho_solve(factor, b)
        resid = float(np.linalg.norm(b - system.a_mat @ ub))
        return ub, resid

    max_it = cfg.max_iterations if cfg.max_iterations is not None else 20 * n
    ub, resid, _ = _pcg_jacobi(system.a_mat, b, cfg.rel_tolerance, max_it)
    return ub, resid


def recover_interior(system: WgSystem, ub: np.ndarray,
                     ub_bdry: np.ndarray) -> np.ndarray:
    """Back-substitute the element unknowns from the diagonal block:
    ``u0 = (f0 - M0b ub - M0b_bdry ub_bdry) / m00``."""
    return (system.f0 - system.m0b @ ub - system.m0b_bdry @ ub_bdry) \
        / system.m00_diag


def vertex_average(mesh: TriMesh, solution: WgSolution) -> np.ndarray:
    """Average the edge values incident to each vertex (for plotting)."""
    total = np.zeros(mesh.n_vertices)
    count = np.zeros(mesh.n_vertices)
    for edges, vals in ((mesh.interior_edges, solution.ub),
                        (mesh.boundary_edges, solution.ub_bdry)):
        for col in (0, 1):
            np.add.at(total, edges[:, col], vals)
            np.add.at(count, edges[:, col], 1.0)
    if np.any(count == 0):
        # isolated vertices cannot occur in a valid mesh, but guard anyway
        count[count == 0] = 1.0
    return total / count


def solve_problem(mesh: TriMesh, field, f=None, g=None, rule=None,
                  config: SolverConfig | None = None) -> WgSolution:
    """Assemble, reduce, solve and recover in one call."""
    from .assembly import assemble

    system = assemble(mesh, field, f=f, g=g, rule=rule)
    reduced = schur_algebraic(system)
    ub, resid = solve_reduced(reduced, system.g_h, config)
    u0 = recover_interior(system, ub, system.g_h)
    return WgSolution(u0=u0, ub=ub, ub_bdry=system.g_h.copy(),
                      residual_norm=resid)


def export_solution_csv(solution: WgSolution, path) -> None:
    """Write ``kind,index,value`` rows for all unknown groups."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("kind,index,value\n")
        for kind, vec in (("element", solution.u0),
                          ("interior_edge", solution.ub),
                          ("boundary_edge", solution.ub_bdry)):
            for i, v in enumerate(vec):
                fh.write(f"{kind},{i},{format(v, '.17g')}\n")


def export_vertex_csv(mesh: TriMesh, values: np.ndarray, path) -> None:
    """Write ``x,y,value`` rows of a per-vertex field."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(mesh.vertices, values):
            fh.write(f"{format(x, '.17g')},{format(y, '.17g')},"
                     f"{format(v, '.17g')}\n")
