"""Shared generators and independent oracles for the test suite.

The oracles here (sign-vector operator norm, quantifier subrectangularity,
spanning-tree transport enumeration) deliberately avoid the library code
paths they are used to check.
"""

from __future__ import annotations

import itertools

import numpy as np

from filtermc import (
    DiscreteMeasure,
    NonnegMatrix,
    Partition,
    TestFunction,
    TransitionMatrix,
    partition_from_lumping,
    partition_from_observation,
)


# ---------------------------------------------------------------------------
# random model generators
# ---------------------------------------------------------------------------

def random_transition(rng, n: int, sparsity: float = 0.0) -> TransitionMatrix:
    """Random row-stochastic matrix; with sparsity > 0 some entries are
    zeroed (rows keep at least two positive entries)."""
    rows = rng.dirichlet(np.ones(n), size=n)
    if sparsity > 0.0 and n > 2:
        for i in range(n):
            mask = rng.random(n) < sparsity
            keep = np.flatnonzero(~mask)
            if keep.size < 2:
                keep = rng.choice(n, size=2, replace=False)
            row = np.zeros(n)
            row[keep] = rng.dirichlet(np.ones(keep.size))
            rows[i] = row
    return TransitionMatrix.from_dense(rows)


def random_partition(rng, P: TransitionMatrix, num_labels: int, kind: str | None = None) -> Partition:
    """Random partition of P: lumping, observation, or explicit value split."""
    n = P.n
    if kind is None:
        kind = rng.choice(["lumping", "observation", "explicit"])
    if kind == "lumping":
        g = [int(rng.integers(num_labels)) for _ in range(n)]
        # make the label set surjective so num_labels is honest
        for a in range(min(num_labels, n)):
            g[a] = a
        return partition_from_lumping(P, g)
    if kind == "observation":
        R = rng.dirichlet(np.ones(num_labels), size=n)
        return partition_from_observation(P, NonnegMatrix.from_dense(R))
    # explicit: split every entry across labels with positive weights
    members = {a: [] for a in range(num_labels)}
    for i, j, v in P.inner.triplets():
        weights = rng.dirichlet(np.ones(num_labels))
        weights = np.maximum(weights, 1e-12)
        weights /= weights.sum()
        for a in range(num_labels):
            members[a].append((i, j, v * weights[a]))
    return Partition(
        {a: NonnegMatrix(n, n, trips) for a, trips in members.items()}, P
    )


def random_measure(rng, dim: int, atoms: int) -> DiscreteMeasure:
    w = rng.dirichlet(np.ones(atoms))
    pts = rng.dirichlet(np.ones(dim), size=atoms)
    return DiscreteMeasure(w, pts, merge_eps=0.0)


def random_affine_max(rng, n: int, pieces: int = 3) -> TestFunction:
    ps = [(rng.uniform(-1.0, 1.0, size=n), float(rng.uniform(-0.5, 0.5)))
          for _ in range(pieces)]
    return TestFunction.affine_max(ps)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def operator_norm_by_sign_vectors(M: NonnegMatrix) -> float:
    """Brute force over the extreme points +-e_i of the l1 unit ball."""
    a = M.toarray()
    best = 0.0
    n = a.shape[0]
    for i in range(n):
        for sign in (1.0, -1.0):
            x = np.zeros(n)
            x[i] = sign
            best = max(best, float(np.abs(x @ a).sum()))
    return best


def subrectangular_by_quantifiers(a: np.ndarray) -> bool:
    """Literal four-index quantifier check."""
    nz = list(zip(*np.nonzero(a)))
    for (i1, j1) in nz:
        for (i2, j2) in nz:
            if a[i1, j2] == 0 or a[i2, j1] == 0:
                return False
    return True


def transport_by_tree_enumeration(mu_w: np.ndarray, nu_w: np.ndarray, C: np.ndarray) -> float:
    """Exact min-cost transport by enumerating spanning-tree vertices of the
    transportation polytope (feasible for supports up to about 3x3)."""
    m, n = C.shape
    cells = list(itertools.product(range(m), range(n)))
    nodes = m + n
    best = np.inf
    for subset in itertools.combinations(cells, nodes - 1):
        # spanning tree check on the bipartite graph
        parent = list(range(nodes))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        acyclic = True
        for (i, j) in subset:
            ru, rv = find(i), find(m + j)
            if ru == rv:
                acyclic = False
                break
            parent[ru] = rv
        if not acyclic or len({find(u) for u in range(nodes)}) != 1:
            continue
        flow = _solve_tree_flow(subset, mu_w, nu_w, m, n)
        if flow is None:
            continue
        cost = sum(f * C[i, j] for (i, j), f in zip(subset, flow))
        best = min(best, cost)
    return float(best)


def _solve_tree_flow(edges, mu_w, nu_w, m, n):
    residual = np.concatenate([np.asarray(mu_w, dtype=float), np.asarray(nu_w, dtype=float)])
    adj = {u: [] for u in range(m + n)}
    for k, (i, j) in enumerate(edges):
        adj[i].append((k, m + j))
        adj[m + j].append((k, i))
    flow = [None] * len(edges)
    degree = {u: len(adj[u]) for u in adj}
    leaves = [u for u, d in degree.items() if d == 1]
    removed = [False] * len(edges)
    while leaves:
        u = leaves.pop()
        edge = next(((k, v) for k, v in adj[u] if not removed[k]), None)
        if edge is None:
            continue
        k, v = edge
        flow[k] = residual[u]
        if flow[k] < -1e-12:
            return None
        residual[v] -= residual[u]
        residual[u] = 0.0
        removed[k] = True
        degree[u] -= 1
        degree[v] -= 1
        if degree[v] == 1:
            leaves.append(v)
    if any(f is None for f in flow) or np.abs(residual).max() > 1e-9:
        return None
    if min(flow) < -1e-12:
        return None
    return [max(0.0, f) for f in flow]


def measures_close(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-9) -> bool:
    """Equality of discrete measures up to atom matching at tolerance."""
    if mu.size != nu.size:
        return False
    used = [False] * nu.size
    for w, p in zip(mu.weights, mu.points):
        hit = False
        for k in range(nu.size):
            if used[k]:
                continue
            if abs(w - nu.weights[k]) <= tol and np.abs(p - nu.points[k]).sum() <= tol:
                used[k] = True
                hit = True
                break
        if not hit:
            return False
    return True
