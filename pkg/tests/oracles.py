"""Independent brute-force oracles the solver tests are checked against.

These deliberately share no code with the package: the lasso and fused
oracles enumerate sign patterns and solve each smooth piece's stationarity
system; the QP oracle enumerates active constraint sets. All are exponential
in the dimension and only meant for tiny instances.
"""

import itertools

import numpy as np

SIGN_TOL = 1e-12


def lasso_oracle(X, y, lam):
    """Global lasso minimizer for p <= 3 by sign-pattern enumeration."""
    n, p = X.shape
    G = X.T @ X / n
    c = X.T @ y / n
    best = None
    best_obj = np.inf
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=p):
        s = np.array(signs)
        active = np.nonzero(s != 0)[0]
        beta = np.zeros(p)
        if active.size:
            try:
                sol = np.linalg.solve(G[np.ix_(active, active)],
                                      c[active] - lam * s[active])
            except np.linalg.LinAlgError:
                continue
            if np.any(sol * s[active] < -SIGN_TOL):
                continue
            beta[active] = sol
        k = c - G @ beta
        inactive = np.nonzero(s == 0)[0]
        if inactive.size and np.max(np.abs(k[inactive])) > lam + 1e-9:
            continue
        obj = 0.5 * beta @ G @ beta - c @ beta + lam * np.abs(beta).sum()
        if obj < best_obj:
            best_obj = obj
            best = beta
    assert best is not None, "no feasible sign pattern found"
    return best


# piece labels for one fused coordinate: how (b1_j, b2_j) relate to zero
# and to each other. sd is the (fixed) sign of b1_j - b2_j where applicable.
_FUSED_PIECES = (
    [("zz", 0, 0, 0)]
    + [("fused", s, s, 0) for s in (-1, 1)]
    + [("a0", 0, sb, -sb) for sb in (-1, 1)]
    + [("b0", sa, 0, sa) for sa in (-1, 1)]
    + [("gen", sa, sb, sd) for sa, sb, sd in
       [(1, 1, 1), (1, 1, -1), (-1, -1, 1), (-1, -1, -1), (1, -1, 1), (-1, 1, -1)]]
)


def fused_oracle(X1, y1, X2, y2, lam1, lam2):
    """Global fused-lasso minimizer for p <= 2 by piece enumeration.

    Enumerates all assignments of coordinates to sign pieces of
    (b1_j, b2_j, b1_j - b2_j), solves the stationarity system of each smooth
    piece, checks every subgradient condition, and keeps the feasible point
    with the lowest objective.
    """
    n1, p = X1.shape
    n2 = X2.shape[0]
    G1 = X1.T @ X1 / n1
    c1 = X1.T @ y1 / n1
    G2 = X2.T @ X2 / n2
    c2 = X2.T @ y2 / n2

    def objective(b1, b2):
        return (0.5 * b1 @ G1 @ b1 - c1 @ b1 + 0.5 * b2 @ G2 @ b2 - c2 @ b2
                + lam1 * (np.abs(b1).sum() + np.abs(b2).sum())
                + lam2 * np.abs(b1 - b2).sum())

    best = None
    best_obj = np.inf
    for combo in itertools.product(range(len(_FUSED_PIECES)), repeat=p):
        pieces = [_FUSED_PIECES[i] for i in combo]
        # unknown layout: one slot per free b1_j, free b2_j, fused t_j, fused w_j
        slots = {}
        for j, (kind, sa, sb, sd) in enumerate(pieces):
            if kind in ("b0", "gen"):
                slots[("b1", j)] = len(slots)
            if kind in ("a0", "gen"):
                slots[("b2", j)] = len(slots)
            if kind == "fused":
                slots[("t", j)] = len(slots)
                slots[("w", j)] = len(slots)
        nv = len(slots)
        rows = []
        rhs = []

        def b_coeffs(task, j):
            """Coefficients of beta_task[j] in terms of the unknown slots."""
            coef = np.zeros(nv)
            kind = pieces[j][0]
            if kind == "zz" or (kind == "a0" and task == 1) or (kind == "b0" and task == 2):
                return coef, 0.0
            if kind == "fused":
                coef[slots[("t", j)]] = 1.0
                return coef, 0.0
            coef[slots[(f"b{task}", j)]] = 1.0
            return coef, 0.0

        for j, (kind, sa, sb, sd) in enumerate(pieces):
            if kind in ("b0", "gen"):  # stationarity in b1_j
                row = np.zeros(nv)
                for k in range(p):
                    ck, _ = b_coeffs(1, k)
                    row += G1[j, k] * ck
                rows.append(row)
                rhs.append(c1[j] - lam1 * sa - lam2 * sd)
            if kind in ("a0", "gen"):  # stationarity in b2_j
                row = np.zeros(nv)
                for k in range(p):
                    ck, _ = b_coeffs(2, k)
                    row += G2[j, k] * ck
                rows.append(row)
                rhs.append(c2[j] - lam1 * sb + lam2 * sd)
            if kind == "fused":  # both stationarities, w_j unknown
                row = np.zeros(nv)
                for k in range(p):
                    ck, _ = b_coeffs(1, k)
                    row += G1[j, k] * ck
                row[slots[("w", j)]] += lam2
                rows.append(row)
                rhs.append(c1[j] - lam1 * sa)
                row = np.zeros(nv)
                for k in range(p):
                    ck, _ = b_coeffs(2, k)
                    row += G2[j, k] * ck
                row[slots[("w", j)]] -= lam2
                rows.append(row)
                rhs.append(c2[j] - lam1 * sb)

        if nv:
            Amat = np.vstack(rows) if rows else np.zeros((0, nv))
            bvec = np.asarray(rhs)
            if Amat.shape[0] != nv:
                continue
            try:
                sol = np.linalg.solve(Amat, bvec)
            except np.linalg.LinAlgError:
                continue
        else:
            sol = np.zeros(0)

        b1 = np.zeros(p)
        b2 = np.zeros(p)
        ok = True
        for j, (kind, sa, sb, sd) in enumerate(pieces):
            if kind == "fused":
                t = sol[slots[("t", j)]]
                w = sol[slots[("w", j)]]
                if t * sa < SIGN_TOL or abs(w) > 1.0 + 1e-9:
                    ok = False
                    break
                b1[j] = b2[j] = t
            elif kind == "b0":
                v = sol[slots[("b1", j)]]
                if v * sa < SIGN_TOL:
                    ok = False
                    break
                b1[j] = v
            elif kind == "a0":
                v = sol[slots[("b2", j)]]
                if v * sb < SIGN_TOL:
                    ok = False
                    break
                b2[j] = v
            elif kind == "gen":
                v1 = sol[slots[("b1", j)]]
                v2 = sol[slots[("b2", j)]]
                if v1 * sa < SIGN_TOL or v2 * sb < SIGN_TOL or (v1 - v2) * sd < SIGN_TOL:
                    ok = False
                    break
                b1[j] = v1
                b2[j] = v2
        if not ok:
            continue

        # subgradient checks at coordinates pinned to zero
        k1 = c1 - G1 @ b1
        k2 = c2 - G2 @ b2
        for j, (kind, sa, sb, sd) in enumerate(pieces):
            if kind == "zz":
                if lam2 == 0:
                    if abs(k1[j]) > lam1 + 1e-9 or abs(k2[j]) > lam1 + 1e-9:
                        ok = False
                        break
                    continue
                lo = max(-1.0, (k1[j] - lam1) / lam2, (-k2[j] - lam1) / lam2)
                hi = min(1.0, (k1[j] + lam1) / lam2, (-k2[j] + lam1) / lam2)
                if lo > hi + 1e-9:
                    ok = False
                    break
            elif kind == "a0":
                if abs(k1[j] + lam2 * sb) > lam1 + 1e-9:
                    ok = False
                    break
            elif kind == "b0":
                if abs(k2[j] + lam2 * sa) > lam1 + 1e-9:
                    ok = False
                    break
        if not ok:
            continue

        obj = objective(b1, b2)
        if obj < best_obj:
            best_obj = obj
            best = (b1.copy(), b2.copy())
    assert best is not None, "no feasible piece assignment found"
    return best


def qp_oracle(Q, A, lower, upper, tol=1e-9):
    """Global minimizer of 0.5 x'Qx s.t. lower <= Ax <= upper, d and m tiny.

    Enumerates active-set assignments (each row inactive, at lower, or at
    upper), solves the equality-constrained KKT system, and keeps feasible
    points with correctly signed multipliers.
    """
    d = Q.shape[0]
    m = A.shape[0]
    best = None
    best_obj = np.inf
    for assign in itertools.product((0, -1, 1), repeat=m):
        act = [i for i in range(m) if assign[i] != 0]
        b = np.array([upper[i] if assign[i] > 0 else lower[i] for i in act])
        if act and not np.all(np.isfinite(b)):
            continue
        k = len(act)
        KKT = np.zeros((d + k, d + k))
        KKT[:d, :d] = Q
        if k:
            KKT[:d, d:] = A[act].T
            KKT[d:, :d] = A[act]
        rhs = np.concatenate([np.zeros(d), b])
        sol, res, rank, _ = np.linalg.lstsq(KKT, rhs, rcond=None)
        if np.max(np.abs(KKT @ sol - rhs)) > 1e-8:
            continue
        x = sol[:d]
        nu = sol[d:]
        # multiplier signs: upper-active >= 0, lower-active <= 0
        ok = True
        for t, i in enumerate(act):
            if lower[i] == upper[i]:
                continue
            if assign[i] > 0 and nu[t] < -tol:
                ok = False
            if assign[i] < 0 and nu[t] > tol:
                ok = False
        if not ok:
            continue
        Ax = A @ x
        if np.any(Ax > upper + 1e-8) or np.any(Ax < lower - 1e-8):
            continue
        obj = 0.5 * x @ Q @ x
        if obj < best_obj:
            best_obj = obj
            best = x
    assert best is not None, "QP oracle found no KKT point"
    return best


def bh_oracle(pvals, q):
    """Benjamini-Hochberg by the textbook definition, no shortcuts."""
    flat = np.asarray(pvals, dtype=float).ravel()
    m = flat.size
    ranked = np.sort(flat)
    thresh = 0.0
    for k in range(1, m + 1):
        if ranked[k - 1] <= q * k / m:
            thresh = ranked[k - 1]
    return (flat <= thresh).reshape(np.asarray(pvals).shape) if thresh > 0 else \
        np.zeros_like(np.asarray(pvals), dtype=bool)
