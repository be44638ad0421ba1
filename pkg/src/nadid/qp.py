"""
Primal active-set solver for small dense convex quadratic programs::

    minimize    0.5 x'Hx + c'x
    subject to  A x  = b
                G x <= h

``H`` must be positive definite on the null space of the equality
constraints. The method starts from a feasible point and keeps a working
set of inequality constraints treated as equalities; each iteration solves
the equality-constrained subproblem through its KKT system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class QpError(RuntimeError):
    pass


class InfeasibleStartError(QpError):
    pass


class ConvergenceError(QpError):
    """Iteration cap reached, or the final KKT residual exceeds the tolerance."""

    def __init__(self, message: str, best: "QpSolution"):
        super().__init__(message)
        self.best = best


@dataclass
class QpSolution:
    x: np.ndarray
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    iterations: int
    working_set: list
    residual: float
    residuals: dict

    @property
    def n_active(self) -> int:
        return len(self.working_set)


def kkt_residuals(H, c, A, b, G, h, x, y, mu) -> dict:
    """Stationarity, feasibility, dual-sign and complementarity errors.

    Stationarity is divided by ``max(1, |H|_inf, |c|_inf)`` so the
    tolerance is insensitive to the number of samples behind ``H``.
    """
    scale = max(1.0, float(np.abs(H).max(initial=0.0)), float(np.abs(c).max(initial=0.0)))
    grad = H @ x + c + A.T @ y + G.T @ mu
    slack = G @ x - h
    return {
        "stationarity": float(np.abs(grad).max(initial=0.0)) / scale,
        "primal": max(float(np.maximum(slack, 0.0).max(initial=0.0)),
                      float(np.abs(A @ x - b).max(initial=0.0))),
        "dual": float(np.maximum(-mu, 0.0).max(initial=0.0)),
        "complementarity": float(np.abs(mu * slack).max(initial=0.0)),
    }


def _kkt_solve(H, C, g):
    n, m = H.shape[0], C.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    K[:n, n:] = C.T
    K[n:, :n] = C
    rhs = np.concatenate([-g, np.zeros(m)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def solve_qp(H, c, A, b, G, h, x0, tol: float = 1e-8, max_iter: Optional[int] = None,
             feas_tol: float = 1e-9) -> QpSolution:
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    n = H.shape[0]
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    G = np.asarray(G, dtype=float).reshape(-1, n)
    h = np.asarray(h, dtype=float).reshape(-1)
    x = np.array(x0, dtype=float)
    m_eq, m_in = A.shape[0], G.shape[0]

    if m_eq and np.abs(A @ x - b).max() > feas_tol:
        raise InfeasibleStartError("starting point violates the equality constraints")
    if m_in and (G @ x - h).max() > feas_tol:
        raise InfeasibleStartError("starting point violates the inequality constraints")

    if max_iter is None:
        max_iter = 50 * (n + m_in) + 100
    dual_tol = 0.1 * tol
    step_tol = 1e-13 * (1.0 + n)

    working: list = []
    y = np.zeros(m_eq)
    mu_w = np.zeros(0)
    at_face_min = False
    stalls = 0

    for it in range(1, max_iter + 1):
        C = np.vstack([A, G[working]]) if working else A
        g = H @ x + c
        p, lam = _kkt_solve(H, C, g)
        y, mu_w = lam[:m_eq], lam[m_eq:]

        if at_face_min or np.abs(p).max(initial=0.0) <= step_tol * (1.0 + np.abs(x).max(initial=0.0)):
            at_face_min = False
            if not working or mu_w.min() >= -dual_tol:
                break
            # Bland-style smallest index after repeated degenerate steps
            neg = np.flatnonzero(mu_w < -dual_tol)
            drop = neg[0] if stalls > 25 else int(np.argmin(mu_w))
            working.pop(int(drop))
            continue

        Gp = G @ p
        slack = np.maximum(h - G @ x, 0.0)
        alpha, block = 1.0, None
        if m_in:
            in_w = np.zeros(m_in, dtype=bool)
            in_w[working] = True
            cand = np.flatnonzero(~in_w & (Gp > 1e-14 * np.abs(p).max()))
            if cand.size:
                ratios = slack[cand] / Gp[cand]
                k = int(np.argmin(ratios))
                if ratios[k] < 1.0:
                    alpha, block = float(ratios[k]), int(cand[k])
        x = x + alpha * p
        if block is None:
            at_face_min = True
        else:
            working.append(block)
        stalls = stalls + 1 if alpha == 0.0 else 0
    else:
        best = _pack(H, c, A, b, G, h, x, y, mu_w, working, max_iter)
        raise ConvergenceError(
            f"active-set iteration cap {max_iter} reached (residual {best.residual:.3g})", best
        )

    sol = _pack(H, c, A, b, G, h, x, y, mu_w, working, it)
    if sol.residual > tol:
        raise ConvergenceError(f"KKT residual {sol.residual:.3g} exceeds tolerance {tol:.3g}", sol)
    return sol


def _pack(H, c, A, b, G, h, x, y, mu_w, working, iterations) -> QpSolution:
    mu = np.zeros(G.shape[0])
    if working and len(mu_w) == len(working):
        mu[working] = mu_w
    res = kkt_residuals(H, c, A, b, G, h, x, y, mu)
    return QpSolution(x, y, mu, iterations, list(working), max(res.values()), res)
