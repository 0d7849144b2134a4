"""Ground-truth precision-matrix pairs and Gaussian sampling.

A pair is built from one base precision matrix by deleting two disjoint edge
subsets, so the two graphs agree everywhere except on a small difference set.
The base graph is a union of community blocks (cliques) with positive
partial-correlation weights; block structure keeps individual edges strong
enough to be detectable while guaranteeing positive definiteness after a
single spectral rescale. Deleted edges are spread to keep every node's
removal degree minimal, which bounds the spectral damage of the deletions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import SampleMatrix, standardize
from .errors import InfeasibleTargets

WEIGHT_RANGE = (0.38, 0.48)
SPECTRAL_MARGIN = 0.1


@dataclass(frozen=True)
class GgmPair:
    """Two precision matrices with their edge supports and difference set."""

    theta1: np.ndarray
    theta2: np.ndarray
    S1: frozenset
    S2: frozenset
    Sd: frozenset
    seed: int

    @property
    def p(self) -> int:
        return self.theta1.shape[0]

    def in_difference(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.Sd


def _choose_block_sizes(p: int, target_edges: int) -> list[int]:
    """Clique sizes (>= 2) whose total edge count lands near the target.

    Tries every main clique size with a single smaller patch block; among
    partitions with the same edge gap prefers larger minimum blocks.
    """
    best = None
    for k in range(3, p + 1):
        ek = k * (k - 1) // 2
        for nmain in range(0, p // k + 1):
            used = nmain * k
            e = nmain * ek
            if used > p or e > target_edges + ek:
                continue
            sizes = [k] * nmain
            left = p - used
            gap = target_edges - e
            patch = 0
            for s in range(2, left + 1):
                if s * (s - 1) // 2 <= gap + 2:
                    patch = s
                else:
                    break
            if patch:
                sizes = sizes + [patch]
                e += patch * (patch - 1) // 2
            if not sizes:
                continue
            cand = (abs(e - target_edges), -min(sizes), sizes)
            if best is None or cand[:2] < best[:2]:
                best = cand
    if best is None:
        raise InfeasibleTargets(f"no block partition reaches {target_edges} edges at p={p}")
    return best[2]


def _pick_removals(edges: list, r1: int, r2: int, rng) -> tuple[list, list]:
    """Two disjoint edge subsets, each keeping per-node degree minimal."""
    order = rng.permutation(len(edges))
    sets: tuple[list, list] = ([], [])
    for which, need in ((0, r1), (1, r2)):
        cap = 1
        deg: dict[int, int] = {}
        taken = set(sets[0]) | set(sets[1])
        while len(sets[which]) < need:
            placed = False
            for idx in order:
                e = edges[idx]
                if e in taken:
                    continue
                if max(deg.get(e[0], 0), deg.get(e[1], 0)) >= cap:
                    continue
                sets[which].append(e)
                taken.add(e)
                deg[e[0]] = deg.get(e[0], 0) + 1
                deg[e[1]] = deg.get(e[1], 0) + 1
                placed = True
                if len(sets[which]) == need:
                    break
            if not placed:
                cap += 1
                if cap > len(edges) + 2:
                    raise InfeasibleTargets("cannot place disjoint removal sets")
    return sets


def generate_ggm_pair(p: int, sparsity: float, diff_sparsity: float, seed: int) -> GgmPair:
    """Build a seeded precision-matrix pair hitting the sparsity targets."""
    if p < 4:
        raise InfeasibleTargets("p must be at least 4")
    # diff_sparsity == 0 is the degenerate null pair theta1 == theta2
    if not (0 <= diff_sparsity <= sparsity < 1) or sparsity <= 0:
        raise InfeasibleTargets("need 0 <= diff_sparsity <= sparsity < 1")
    rng = np.random.default_rng(seed)
    n_pairs = p * (p - 1) // 2
    r = int(round(diff_sparsity * n_pairs / 2))
    m_base = int(round(sparsity * n_pairs)) + r
    if m_base > n_pairs:
        raise InfeasibleTargets("sparsity plus difference targets exceed the edge budget")
    if 2 * r > m_base:
        raise InfeasibleTargets("difference target too large for the base support")

    sizes = _choose_block_sizes(p, m_base)
    nodes = rng.permutation(p)
    W = np.zeros((p, p))
    edges = []
    pos = 0
    for k in sizes:
        blk = np.sort(nodes[pos:pos + k])
        pos += k
        for a in range(k):
            for b in range(a + 1, k):
                w = rng.uniform(*WEIGHT_RANGE)
                W[blk[a], blk[b]] = W[blk[b], blk[a]] = w
                edges.append((int(blk[a]), int(blk[b])))

    rem1, rem2 = _pick_removals(edges, r, r, rng)
    W1, W2 = W.copy(), W.copy()
    for i, j in rem1:
        W1[i, j] = W1[j, i] = 0.0
    for i, j in rem2:
        W2[i, j] = W2[j, i] = 0.0

    lam = 0.0
    if edges:
        lam = min(scipy.linalg.eigvalsh(W1, subset_by_index=[0, 0])[0],
                  scipy.linalg.eigvalsh(W2, subset_by_index=[0, 0])[0])
    t = 1.0 if 1.0 + lam >= SPECTRAL_MARGIN else (1.0 - SPECTRAL_MARGIN) / (-lam)
    theta1 = np.eye(p) + t * W1
    theta2 = np.eye(p) + t * W2

    for th in (theta1, theta2):
        if scipy.linalg.eigvalsh(th, subset_by_index=[0, 0])[0] <= 1e-6:
            raise InfeasibleTargets("generated precision matrix lost definiteness")

    edge_set = set(edges)
    S1 = frozenset(edge_set - set(rem1))
    S2 = frozenset(edge_set - set(rem2))
    Sd = frozenset(set(rem1) | set(rem2))
    return GgmPair(theta1=theta1, theta2=theta2, S1=S1, S2=S2, Sd=Sd, seed=seed)


def sample_dataset(truth: GgmPair, n1: int, n2: int, seed: int
                   ) -> tuple[SampleMatrix, SampleMatrix]:
    """Draw n_j standardized samples from N(0, theta_j^-1), task 1 first."""
    if n1 < 2 or n2 < 2:
        raise ValueError("need at least two samples per dataset")
    rng = np.random.default_rng(seed)
    out = []
    for theta, n in ((truth.theta1, n1), (truth.theta2, n2)):
        L = scipy.linalg.cholesky(theta, lower=True)
        Z = rng.standard_normal((n, truth.p))
        # L' x = z  =>  x ~ N(0, theta^{-1})
        X = scipy.linalg.solve_triangular(L.T, Z.T, lower=False).T
        out.append(standardize(X))
    return out[0], out[1]


def node_truth(truth: GgmPair, v: int, standardized: bool = True):
    """True regressions of node v on the rest, for both models.

    Returns (beta1, beta2, sigma1, sigma2) with beta_j over v's complement in
    index order. With ``standardized`` the coefficients and noise levels are
    rescaled to the unit-variance coordinates the estimators actually see.
    """
    p = truth.p
    if not 0 <= v < p:
        raise IndexError(f"node {v} out of range")
    others = [k for k in range(p) if k != v]
    res = []
    for theta in (truth.theta1, truth.theta2):
        beta = -theta[others, v] / theta[v, v]
        var = 1.0 / theta[v, v]
        if standardized:
            sd = np.sqrt(np.diag(np.linalg.inv(theta)))
            beta = beta * sd[others] / sd[v]
            var = var / sd[v] ** 2
        res.append((beta, np.sqrt(var)))
    return res[0][0], res[1][0], res[0][1], res[1][1]
