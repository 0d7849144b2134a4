"""Small dense convex QP solver: minimize 0.5 x'Qx subject to l <= Ax <= u.

Method: over-relaxed operator splitting (ADMM) with a fixed penalty that is
periodically rescaled when primal and dual residuals drift apart. The
factorization of Q + sigma*I + rho*A'A is cached per penalty value and shared
across any number of right-hand sides, so the per-node debiasing programs
(p-1 rows with identical Q and A) are solved as one batched iteration.

Infeasible problems are detected through the standard certificate (a dual
direction y with A'y ~ 0 whose support function on the box is negative), with
a stagnation fallback, and reported as status "infeasible".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import SolverConfig
from .errors import DimensionMismatch, NonPsdCost

FEAS_TOL = 1e-7
QP_DEFAULT_CONFIG = SolverConfig(max_iter=50_000, tol=1e-7)

STATUS_OPTIMAL = "optimal"
STATUS_MAXITER = "max_iter"
STATUS_INFEASIBLE = "infeasible"

_CHECK_EVERY = 25
_RHO_EVERY = 200
_ALPHA = 1.6
_SIGMA = 1e-6


@dataclass(frozen=True)
class BoxConstrainedQp:
    """Problem data for 0.5 x'Qx subject to lower <= Ax <= upper."""

    Q: np.ndarray
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64)
        A = np.asarray(self.A, dtype=np.float64)
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch(f"Q must be square, got {Q.shape}")
        if A.ndim != 2 or A.shape[1] != Q.shape[0]:
            raise DimensionMismatch(f"A {A.shape} incompatible with Q {Q.shape}")
        if lower.shape != (A.shape[0],) or upper.shape != (A.shape[0],):
            raise DimensionMismatch("bound lengths must match constraint rows")
        if np.max(np.abs(Q - Q.T)) > 1e-12:
            raise NonPsdCost("Q is not symmetric")
        if Q.size and scipy.linalg.eigvalsh(Q, subset_by_index=[0, 0])[0] < -1e-8:
            raise NonPsdCost("Q has a significantly negative eigenvalue")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    objective: float
    primal_infeasibility: float
    status: str
    iterations: int
    dual: np.ndarray


class QpHandle:
    """Prefactored (Q, A) pair reused across many bound vectors.

    Immutable after construction apart from the internal factor cache; safe
    to share between worker tasks that solve disjoint rows.
    """

    def __init__(self, Q: np.ndarray, A: np.ndarray):
        self.Q = np.asarray(Q, dtype=np.float64)
        self.A = np.asarray(A, dtype=np.float64)
        if self.A.shape[1] != self.Q.shape[0]:
            raise DimensionMismatch(f"A {self.A.shape} incompatible with Q {self.Q.shape}")
        self.AtA = self.A.T @ self.A
        self._factors: dict[float, tuple] = {}

    def _factor(self, rho: float) -> np.ndarray:
        f = self._factors.get(rho)
        if f is None:
            K = self.Q + _SIGMA * np.eye(self.Q.shape[0]) + rho * self.AtA
            f = np.linalg.inv(K)
            self._factors[rho] = f
        return f

    def _rho0(self) -> float:
        """Penalty matched to the cost/constraint scale ratio."""
        d = max(self.Q.shape[0], 1)
        q = np.trace(self.Q) / d
        a = np.trace(self.AtA) / d
        if q <= 0 or a <= 0:
            return 1.0
        return float(np.clip(q / a, 1e-4, 1e4))

    def solve_batch(self, lowers: np.ndarray, uppers: np.ndarray,
                    cfg: SolverConfig = QP_DEFAULT_CONFIG,
                    feas_tol: float = FEAS_TOL):
        """Solve one QP per column of ``lowers``/``uppers``.

        Returns (x: d x m, y: mc x m, status: list, iterations, infeas: m).
        """
        Q, A = self.Q, self.A
        d = Q.shape[0]
        mc = A.shape[0]
        lowers = np.atleast_2d(np.asarray(lowers, dtype=np.float64).T).T
        uppers = np.atleast_2d(np.asarray(uppers, dtype=np.float64).T).T
        m = lowers.shape[1]
        if lowers.shape != (mc, m) or uppers.shape != (mc, m):
            raise DimensionMismatch("bounds must be mc x m arrays")

        rho = self._rho0()
        x = np.zeros((d, m))
        z = np.minimum(np.maximum(np.zeros((mc, m)), lowers), uppers)
        w = np.zeros((mc, m))
        status = np.array([STATUS_MAXITER] * m, dtype=object)
        done = np.zeros(m, dtype=bool)
        x_out = np.zeros((d, m))
        y_out = np.zeros((mc, m))
        infeas_out = np.full(m, np.inf)
        y_prev = np.zeros((mc, m))
        infeas_prev = np.full(m, np.inf)
        ynorm_prev = np.zeros(m)
        it = 0
        finite_l = np.isfinite(lowers)
        finite_u = np.isfinite(uppers)

        Kinv = self._factor(rho)
        while it < cfg.max_iter and not done.all():
            it += 1
            rhs = _SIGMA * x + rho * (A.T @ (z - w))
            x = Kinv @ rhs
            Ax = A @ x
            zhat = _ALPHA * Ax + (1.0 - _ALPHA) * z
            z_new = np.minimum(np.maximum(zhat + w, lowers), uppers)
            w = w + zhat - z_new
            z = z_new

            if it % _CHECK_EVERY == 0 or it == cfg.max_iter:
                y = rho * w
                viol = np.maximum(Ax - uppers, lowers - Ax)
                viol = np.maximum(viol, 0.0).max(axis=0) if mc else np.zeros(m)
                stat = np.abs(Q @ x + A.T @ y).max(axis=0) if d else np.zeros(m)
                newly = (~done) & (viol <= feas_tol) & (stat <= cfg.tol)
                if newly.any():
                    status[newly] = STATUS_OPTIMAL
                    x_out[:, newly] = x[:, newly]
                    y_out[:, newly] = y[:, newly]
                    infeas_out[newly] = viol[newly]
                    done |= newly

                # primal infeasibility certificate on the dual increment
                dy = y - y_prev
                nrm = np.abs(dy).max(axis=0)
                with np.errstate(invalid="ignore", divide="ignore"):
                    for c in np.nonzero((~done) & (nrm > 1e-14))[0]:
                        yh = dy[:, c] / nrm[c]
                        if np.abs(A.T @ yh).max() > 1e-6:
                            continue
                        pos = yh > 1e-9
                        neg = yh < -1e-9
                        if np.any(pos & ~finite_u[:, c]) or np.any(neg & ~finite_l[:, c]):
                            continue
                        sup = float(np.sum(uppers[pos, c] * yh[pos])
                                    + np.sum(lowers[neg, c] * yh[neg]))
                        if sup < -1e-6:
                            status[c] = STATUS_INFEASIBLE
                            x_out[:, c] = x[:, c]
                            y_out[:, c] = y[:, c]
                            infeas_out[c] = viol[c]
                            done[c] = True
                y_prev = y.copy()

                # stagnation fallback: no primal progress, growing dual
                if it % (_RHO_EVERY * 10) == 0:
                    ynorm = np.abs(y).max(axis=0)
                    stuck = ((~done) & (viol > 100 * feas_tol)
                             & (viol > 0.999 * infeas_prev)
                             & (ynorm > 2.0 * ynorm_prev + 1.0))
                    if stuck.any():
                        status[stuck] = STATUS_INFEASIBLE
                        x_out[:, stuck] = x[:, stuck]
                        y_out[:, stuck] = y[:, stuck]
                        infeas_out[stuck] = viol[stuck]
                        done |= stuck
                    infeas_prev = np.where(viol < infeas_prev, viol, infeas_prev)
                    ynorm_prev = ynorm

            if it % _RHO_EVERY == 0 and not done.all():
                y = rho * w
                r_prim = np.abs(Ax - z).max() if mc else 0.0
                r_dual = float(np.abs(Q @ x + A.T @ y).max())
                if r_prim > 10 * r_dual or r_dual > 10 * r_prim:
                    scale = np.sqrt(max(r_prim, 1e-16) / max(r_dual, 1e-16))
                    new_rho = float(np.clip(rho * scale, 1e-6, 1e6))
                    if new_rho != rho and not np.isclose(new_rho, rho):
                        w = w * (rho / new_rho)
                        rho = new_rho
                        Kinv = self._factor(rho)

        open_cols = ~done
        if open_cols.any():
            y = rho * w
            viol = np.maximum(np.maximum(A @ x - uppers, lowers - A @ x), 0.0)
            vmax = viol.max(axis=0) if mc else np.zeros(m)
            x_out[:, open_cols] = x[:, open_cols]
            y_out[:, open_cols] = y[:, open_cols]
            infeas_out[open_cols] = vmax[open_cols]
            far = open_cols & (infeas_out > 10 * feas_tol)
            status[far] = STATUS_INFEASIBLE
        return x_out, y_out, list(status), it, infeas_out


def solve_qp(prob: BoxConstrainedQp, cfg: SolverConfig = QP_DEFAULT_CONFIG,
             feas_tol: float = FEAS_TOL) -> QpSolution:
    """Solve a single box-constrained QP; see module docstring."""
    handle = QpHandle(prob.Q, prob.A)
    x, y, status, iters, infeas = handle.solve_batch(
        prob.lower[:, None], prob.upper[:, None], cfg, feas_tol)
    xv = x[:, 0]
    return QpSolution(x=xv, objective=float(0.5 * xv @ prob.Q @ xv),
                      primal_infeasibility=float(infeas[0]), status=status[0],
                      iterations=iters, dual=y[:, 0])
