"""Numba-compiled inner loops for the coordinate-descent solvers.

Everything here works on Gram-form inputs (G = X'X/n, c = X'y/n), so one
sweep costs O(p^2) regardless of sample size. Callers own all validation.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def lasso_cd(G, c, lam, beta, max_iter, tol):
    """Cyclic coordinate descent on 0.5*b'Gb - c'b + lam*|b|_1.

    Mutates ``beta`` in place (warm start). Returns (sweeps, objective
    history over sweeps, final gradient c - G beta).
    """
    p = c.shape[0]
    grad = c - G @ beta
    hist = np.empty(max_iter)
    sweeps = 0
    for it in range(max_iter):
        delta = 0.0
        for j in range(p):
            qjj = G[j, j]
            if qjj <= 0.0:
                continue
            bj = beta[j]
            rho = grad[j] + qjj * bj
            bn = _soft(rho, lam) / qjj
            if bn != bj:
                d = bn - bj
                for k in range(p):
                    grad[k] -= G[k, j] * d
                beta[j] = bn
                ad = abs(d)
                if ad > delta:
                    delta = ad
        quad = 0.0
        lin = 0.0
        l1 = 0.0
        for j in range(p):
            gj = 0.0
            for k in range(p):
                gj += G[j, k] * beta[k]
            quad += beta[j] * gj
            lin += c[j] * beta[j]
            l1 += abs(beta[j])
        hist[it] = 0.5 * quad - lin + lam * l1
        sweeps = it + 1
        if delta < tol:
            break
    return sweeps, hist[:sweeps], grad


@njit(cache=True)
def _pair_objective(a, b, q1, c1, q2, c2, lam1, lam2):
    return (0.5 * q1 * a * a - c1 * a + 0.5 * q2 * b * b - c2 * b
            + lam1 * (abs(a) + abs(b)) + lam2 * abs(a - b))


@njit(cache=True)
def pair_min(q1, c1, q2, c2, lam1, lam2):
    """Exact minimizer of the coupled scalar pair problem.

    Minimizes 0.5*q1*a^2 - c1*a + 0.5*q2*b^2 - c2*b
              + lam1*(|a|+|b|) + lam2*|a-b|
    by evaluating every stationary candidate: the origin, the two axes,
    the fused line a=b, and the six sign-consistent smooth pieces. The
    convex objective's minimizer is always among these.
    """
    best_a = 0.0
    best_b = 0.0
    best = _pair_objective(0.0, 0.0, q1, c1, q2, c2, lam1, lam2)

    # b axis (a = 0): |a-b| contributes |b|
    if q2 > 0.0:
        b = _soft(c2, lam1 + lam2) / q2
        v = _pair_objective(0.0, b, q1, c1, q2, c2, lam1, lam2)
        if v < best:
            best, best_a, best_b = v, 0.0, b
    # a axis (b = 0)
    if q1 > 0.0:
        a = _soft(c1, lam1 + lam2) / q1
        v = _pair_objective(a, 0.0, q1, c1, q2, c2, lam1, lam2)
        if v < best:
            best, best_a, best_b = v, a, 0.0
    # fused line a = b
    if q1 + q2 > 0.0:
        t = _soft(c1 + c2, 2.0 * lam1) / (q1 + q2)
        v = _pair_objective(t, t, q1, c1, q2, c2, lam1, lam2)
        if v < best:
            best, best_a, best_b = v, t, t
    # smooth pieces: (sign a, sign b, sign(a-b)) consistent combinations
    if q1 > 0.0 and q2 > 0.0:
        for idx in range(6):
            if idx == 0:
                sa, sb, sd = 1.0, 1.0, 1.0
            elif idx == 1:
                sa, sb, sd = 1.0, 1.0, -1.0
            elif idx == 2:
                sa, sb, sd = -1.0, -1.0, 1.0
            elif idx == 3:
                sa, sb, sd = -1.0, -1.0, -1.0
            elif idx == 4:
                sa, sb, sd = 1.0, -1.0, 1.0
            else:
                sa, sb, sd = -1.0, 1.0, -1.0
            a = (c1 - lam1 * sa - lam2 * sd) / q1
            b = (c2 - lam1 * sb + lam2 * sd) / q2
            v = _pair_objective(a, b, q1, c1, q2, c2, lam1, lam2)
            if v < best:
                best, best_a, best_b = v, a, b
    return best_a, best_b


@njit(cache=True)
def fused_cd(G1, c1, G2, c2, lam1, lam2, beta1, beta2, max_iter, tol):
    """Block coordinate descent over coordinate pairs of the two-task objective.

    Minimizes 0.5*b1'G1b1 - c1'b1 + 0.5*b2'G2b2 - c2'b2
              + lam1*(|b1|_1 + |b2|_1) + lam2*|b1-b2|_1
    with each pair update solved exactly by ``pair_min``. Mutates beta1/beta2
    in place. Returns (sweeps, objective history, grad1, grad2).
    """
    p = c1.shape[0]
    g1 = c1 - G1 @ beta1
    g2 = c2 - G2 @ beta2
    hist = np.empty(max_iter)
    sweeps = 0
    for it in range(max_iter):
        delta = 0.0
        for j in range(p):
            q1 = G1[j, j]
            q2 = G2[j, j]
            aj = beta1[j]
            bj = beta2[j]
            ca = g1[j] + q1 * aj
            cb = g2[j] + q2 * bj
            an, bn = pair_min(q1, ca, q2, cb, lam1, lam2)
            if an != aj:
                d = an - aj
                for k in range(p):
                    g1[k] -= G1[k, j] * d
                beta1[j] = an
                if abs(d) > delta:
                    delta = abs(d)
            if bn != bj:
                d = bn - bj
                for k in range(p):
                    g2[k] -= G2[k, j] * d
                beta2[j] = bn
                if abs(d) > delta:
                    delta = abs(d)
        obj = 0.0
        for j in range(p):
            gj1 = 0.0
            gj2 = 0.0
            for k in range(p):
                gj1 += G1[j, k] * beta1[k]
                gj2 += G2[j, k] * beta2[k]
            obj += 0.5 * beta1[j] * gj1 - c1[j] * beta1[j]
            obj += 0.5 * beta2[j] * gj2 - c2[j] * beta2[j]
            obj += lam1 * (abs(beta1[j]) + abs(beta2[j]))
            obj += lam2 * abs(beta1[j] - beta2[j])
        hist[it] = obj
        sweeps = it + 1
        if delta < tol:
            break
    return sweeps, hist[:sweeps], g1, g2
