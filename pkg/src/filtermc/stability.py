"""Checkable sufficient conditions for asymptotic stability of the filter
chain, and a checker for the hypotheses that certify non-stability.

Stability here is approached through words: finite label sequences and the
matrix products they induce.  A partition passes the *subrectangularity*
search when some word's product is nonzero with product-set support; it is
*localizing* when some word's product has few nonzero columns; and the
rank-one detector looks for word sequences whose normalised products
approach a nonnegative rank-1 matrix of norm 1 — the checkable core of the
sufficient stability conditions.  All searches are bounded and, when they
fail, return "undecided": these conditions are sufficient, not necessary,
so absence of a witness never certifies instability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core_model import (
    ModelError,
    NonnegMatrix,
    Partition,
    matrix_word_product,
    operator_norm,
)

__all__ = [
    "StabilityVerdict",
    "NonstabilityReport",
    "is_subrectangular",
    "find_subrectangular_word",
    "find_localizing_word",
    "default_col_bound",
    "rank_one_proximity",
    "detect_rank_one_limit",
    "compose_rank_one_witness",
    "check_isometry_obstruction",
    "default_search_depth",
]

DEFAULT_BUDGET = 200_000


@dataclass
class StabilityVerdict:
    """Outcome of a stability search.

    ``kind`` is one of ``condition_a``, ``localizing``, ``b1_converged``,
    ``undecided``, ``nonstable``.  A ``b1_converged`` verdict carries the
    witness ``W`` (a normalised word product of operator norm 1 whose rows
    above the floor are aligned within the tolerance).
    """

    kind: str
    word: tuple | None = None
    W: NonnegMatrix | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.kind == "b1_converged"


def is_subrectangular(M: NonnegMatrix | np.ndarray) -> bool:
    """True iff the support is a product set (rows with entries) x (columns
    with entries); the zero matrix passes vacuously."""
    a = M.toarray() if isinstance(M, NonnegMatrix) else np.asarray(M)
    sup = a > 0
    rows = sup.any(axis=1)
    cols = sup.any(axis=0)
    return bool((sup == np.outer(rows, cols)).all())


def default_search_depth(num_labels: int, cap: int = 8, node_budget: int = 10**6) -> int:
    """Exhaustive enumeration depth: at most ``cap``, and no more than
    ``node_budget`` words."""
    if num_labels < 2:
        return cap
    return min(cap, int(math.log(node_budget) / math.log(num_labels)))


def _word_search(m: Partition, predicate, max_len: int, budget: int):
    """Bounded search for a word whose product satisfies ``predicate``.

    Phase 1 enumerates all words up to the exhaustive depth in label order
    (depth-first, so prefixes are tested before their extensions); phase 2
    extends a single word greedily by the label maximising the product norm.
    Returns the first hit or None; ties in the greedy phase break
    lexicographically.
    """
    if max_len < 1:
        raise ModelError("word search requires max_len >= 1")
    labels = m.labels
    exhaustive_depth = min(max_len, default_search_depth(len(labels)))
    examined = 0

    stack = [((w,), m.member(w)) for w in reversed(labels)]
    while stack and examined < budget:
        word, prod = stack.pop()
        examined += 1
        if not prod.is_zero() and predicate(prod):
            return word
        if len(word) < exhaustive_depth and not prod.is_zero():
            for w in reversed(labels):
                stack.append((word + (w,), prod @ m.member(w)))

    # greedy extension by maximal product norm
    word: tuple = ()
    prod = NonnegMatrix.identity(m.n)
    while len(word) < max_len and examined < budget:
        best = None
        for w in labels:
            cand = prod @ m.member(w)
            examined += 1
            nrm = operator_norm(cand)
            if nrm > 0 and (best is None or nrm > best[2] + 1e-15):
                best = (w, cand, nrm)
        if best is None:
            break
        word = word + (best[0],)
        prod = best[1].scaled(1.0 / best[2])
        if predicate(prod):
            return word
    return None


def find_subrectangular_word(m: Partition, max_len: int = 8,
                             budget: int = DEFAULT_BUDGET) -> tuple | None:
    """Search for a word whose product is nonzero and subrectangular.

    A None result is inconclusive (budget or depth ran out), never a
    refutation.
    """
    return _word_search(m, is_subrectangular, max_len, budget)


def default_col_bound(n: int) -> int:
    """On a truncated space "finitely many columns" is read as "at most
    ceil(n/4) columns" unless the caller says otherwise."""
    return -(-n // 4)


def find_localizing_word(m: Partition, max_len: int = 8, col_bound: int | None = None,
                         budget: int = DEFAULT_BUDGET) -> tuple | None:
    """Search for a word whose product has at most ``col_bound`` nonzero
    columns (default bound: ceil(n/4)).  None is inconclusive."""
    bound = default_col_bound(m.n) if col_bound is None else int(col_bound)
    return _word_search(
        m, lambda prod: prod.nonzero_column_count() <= bound, max_len, budget
    )


def rank_one_proximity(M: NonnegMatrix | np.ndarray, row_floor: float = 0.0) -> float:
    """How far the rows (with l1 mass above ``row_floor``) are from being
    proportional: the maximum pairwise l1 distance between normalised rows.
    Zero exactly when those rows are proportional."""
    a = M.toarray() if isinstance(M, NonnegMatrix) else np.asarray(M, dtype=float)
    sums = a.sum(axis=1)
    keep = sums > row_floor
    if not keep.any():
        raise ModelError("rank_one_proximity: all rows at or below the floor")
    rows = a[keep] / sums[keep, None]
    if rows.shape[0] == 1:
        return 0.0
    diffs = np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)
    return float(diffs.max())


def _normalized(M: NonnegMatrix) -> NonnegMatrix:
    nrm = operator_norm(M)
    if nrm <= 0:
        raise ModelError("cannot normalise the zero matrix")
    return M.scaled(1.0 / nrm)


def _power_curve(m: Partition, unit: tuple, tol: float, row_floor: float,
                 iters: int) -> tuple[list[float], NonnegMatrix | None, int]:
    """Proximity of the normalised powers (M(unit))^k, k = 1..iters."""
    base = matrix_word_product(m, unit)
    if base.is_zero():
        return [], None, 0
    base = _normalized(base)
    H = base
    curve = []
    for k in range(1, iters + 1):
        prox = rank_one_proximity(H, row_floor)
        curve.append(prox)
        if prox <= tol:
            return curve, H, k
        H = _normalized(H @ base)
    return curve, None, 0


def detect_rank_one_limit(m: Partition, tol: float = 1e-8, max_depth: int | None = None,
                          power_iters: int = 500, row_floor: float | None = None,
                          repeat_words: Sequence[tuple] | None = None,
                          policy: Sequence[str] = ("exhaustive", "repeat", "greedy"),
                          budget: int = DEFAULT_BUDGET) -> StabilityVerdict:
    """Look for word sequences whose normalised products become rank one.

    Three bounded policies are tried: exhaustive enumeration up to
    ``max_depth``; powers of repeated unit words (all single labels and
    ordered label pairs unless ``repeat_words`` is given); and a single
    greedy word extended by maximal product norm.  Success returns a
    ``b1_converged`` verdict whose ``W`` is the normalised product itself
    (operator norm 1, rows above ``row_floor`` aligned within ``tol``);
    otherwise the verdict is ``undecided`` — never "unstable".

    ``row_floor`` (default ``sqrt(tol)``) is the relative row mass below
    which a row is treated as vanished; vanishing rows are the signature of
    limits whose row-scale vector has zero entries.
    """
    if row_floor is None:
        row_floor = math.sqrt(tol)
    if max_depth is None:
        max_depth = default_search_depth(m.num_labels)
    diagnostics: dict = {"tol": tol, "row_floor": row_floor, "curves": {}}
    examined = 0
    best_prox = float("inf")
    best_word = None

    if "exhaustive" in policy and max_depth >= 1:
        stack = [((w,), m.member(w)) for w in reversed(m.labels)]
        while stack and examined < budget:
            word, prod = stack.pop()
            examined += 1
            if prod.is_zero():
                continue
            H = _normalized(prod)
            prox = rank_one_proximity(H, row_floor)
            if prox < best_prox:
                best_prox, best_word = prox, word
            if prox <= tol:
                diagnostics["examined"] = examined
                diagnostics["min_proximity"] = prox
                return StabilityVerdict("b1_converged", word=word, W=H,
                                        diagnostics=diagnostics | {"policy": "exhaustive"})
            if len(word) < max_depth:
                for w in reversed(m.labels):
                    stack.append((word + (w,), prod @ m.member(w)))

    if "repeat" in policy:
        if repeat_words is None:
            singles = [(w,) for w in m.labels]
            pairs = [(w1, w2) for w1 in m.labels for w2 in m.labels if (w1,) != (w2,)]
            repeat_words = singles + pairs
        for unit in repeat_words:
            curve, W, reps = _power_curve(m, tuple(unit), tol, row_floor, power_iters)
            examined += len(curve)
            diagnostics["curves"][repr(tuple(unit))] = curve
            if curve:
                best_here = min(curve)
                if best_here < best_prox:
                    best_prox, best_word = best_here, tuple(unit) * max(1, reps)
            if W is not None:
                diagnostics["examined"] = examined
                diagnostics["min_proximity"] = min(curve)
                return StabilityVerdict("b1_converged", word=tuple(unit), W=W,
                                        diagnostics=diagnostics | {
                                            "policy": "repeat", "repetitions": reps})
            if examined >= budget:
                break

    if "greedy" in policy and examined < budget:
        word: tuple = ()
        prod = NonnegMatrix.identity(m.n)
        curve = []
        greedy_len = max(32, 2 * m.n)
        while len(word) < greedy_len and examined < budget:
            best = None
            for w in m.labels:
                cand = prod @ m.member(w)
                examined += 1
                nrm = operator_norm(cand)
                if nrm > 0 and (best is None or nrm > best[2] + 1e-15):
                    best = (w, cand, nrm)
            if best is None:
                break
            word = word + (best[0],)
            prod = best[1].scaled(1.0 / best[2])
            prox = rank_one_proximity(prod, row_floor)
            curve.append(prox)
            if prox < best_prox:
                best_prox, best_word = prox, word
            if prox <= tol:
                diagnostics["curves"]["greedy"] = curve
                diagnostics["examined"] = examined
                diagnostics["min_proximity"] = prox
                return StabilityVerdict("b1_converged", word=word, W=prod,
                                        diagnostics=diagnostics | {"policy": "greedy"})
        diagnostics["curves"]["greedy"] = curve

    diagnostics["examined"] = examined
    diagnostics["min_proximity"] = best_prox
    diagnostics["best_word"] = best_word
    return StabilityVerdict("undecided", diagnostics=diagnostics | {"budget_spent": examined})


# ---------------------------------------------------------------------------
# witness composition
# ---------------------------------------------------------------------------

def _connector_word(m: Partition, start: int, goal: int, max_len: int) -> tuple | None:
    """Shortest label word whose product has a positive (start, goal) entry,
    found by BFS over single-member support edges."""
    if start == goal:
        return ()
    supports = {w: (M.toarray() > 0) for w, M in m}
    frontier = {start: ()}
    seen = {start}
    for _ in range(max_len):
        nxt: dict[int, tuple] = {}
        for u, word in frontier.items():
            for w in m.labels:
                for v in np.flatnonzero(supports[w][u]):
                    v = int(v)
                    if v in seen:
                        continue
                    cand = word + (w,)
                    if v == goal:
                        return cand
                    nxt[v] = cand
                    seen.add(v)
        if not nxt:
            return None
        frontier = nxt
    return None


def compose_rank_one_witness(m: Partition, max_len: int = 8, tol: float = 1e-9,
                             col_bound: int | None = None, power_iters: int = 10_000,
                             row_floor: float | None = None):
    """Assemble a rank-one witness from a subrectangular word, a localizing
    word, and connector words found on the support graph.

    Requires the base chain irreducible and aperiodic.  The four pieces are
    chained as ``d + a + c + b`` so that the combined product ``G`` is
    subrectangular with boundedly many columns and a positive diagonal
    entry; its normalised powers then converge to rank one, and the witness
    ``(word, W)`` is returned.  None means some prerequisite word was not
    found within the budget — an inconclusive outcome.
    """
    from .core_model import check_irreducible_aperiodic

    verdict = check_irreducible_aperiodic(m.base)
    if not (verdict["irreducible"] and verdict["aperiodic"]):
        raise ModelError("witness composition requires an irreducible aperiodic base chain")
    if row_floor is None:
        row_floor = math.sqrt(tol)

    word_a = find_subrectangular_word(m, max_len=max_len)
    if word_a is None:
        return None
    word_b = find_localizing_word(m, max_len=max_len, col_bound=col_bound)
    if word_b is None:
        return None
    Ma = matrix_word_product(m, word_a)
    Mb = matrix_word_product(m, word_b)
    i1, j1, _ = Ma.triplets()[0]
    i0, j0, _ = Mb.triplets()[0]
    conn_len = max(2 * m.n, max_len)
    word_c = _connector_word(m, j1, i0, conn_len)
    word_d = _connector_word(m, j0, i1, conn_len)
    if word_c is None or word_d is None:
        return None

    word = tuple(word_d) + tuple(word_a) + tuple(word_c) + tuple(word_b)
    G = matrix_word_product(m, word)
    if G.is_zero():
        return None
    H = _normalized(G)
    base = H
    for _ in range(power_iters):
        if rank_one_proximity(H, row_floor) <= tol:
            return word, H
        H = _normalized(H @ base)
    return None


# ---------------------------------------------------------------------------
# non-stability hypotheses
# ---------------------------------------------------------------------------

@dataclass
class NonstabilityReport:
    """Sampled verification of the three non-stability hypotheses on a
    state subset: isolated orbit points, start-independent active word
    sets, and exact isometry of the normalised word action."""

    subset: tuple[int, ...]
    separation: float
    isolated_pass: bool
    equal_words_pass: bool
    isometry_pass: bool
    max_isometry_deviation: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.isolated_pass and self.equal_words_pass and self.isometry_pass


def _active_words(x: np.ndarray, m: Partition, n_max: int):
    """Words of each length 1..n_max with positive mass from x, together
    with the (mass, direction) they lead to."""
    out: dict[tuple, tuple[float, np.ndarray]] = {}
    stack = [((), x, 1.0)]
    while stack:
        word, vec, mass = stack.pop()
        if len(word) >= n_max:
            continue
        for w in reversed(m.labels):
            y = m.member(w).left_apply(vec)
            p = float(y.sum())
            if p <= 0.0:
                continue
            nw = word + (w,)
            ynorm = y / p
            out[nw] = (mass * p, ynorm)
            stack.append((nw, ynorm, mass * p))
    return out


def check_isometry_obstruction(m: Partition, subset: Sequence[int], n_max: int = 4,
                               sample_count: int = 6, seed: int = 0,
                               dedup_eps: float = 1e-9) -> NonstabilityReport:
    """Check, on sampled starts supported in ``subset``, the three
    hypotheses under which the filter chain cannot be asymptotically stable.

    1. orbit points are separated: minimum pairwise l1 distance over each
       start's reachable set (to depth ``n_max``) is positive — reported as
       ``separation``;
    2. the set of words with positive mass does not depend on the start;
    3. the normalised word action is an exact l1 isometry between starts.

    Vertices of the subset are always included among the samples.
    """
    subset = tuple(sorted(int(i) for i in subset))
    if len(subset) < 2:
        raise ModelError("subset must contain at least two states")
    n = m.n
    if any(i < 0 or i >= n for i in subset):
        raise ModelError("subset index out of range")
    rng = np.random.default_rng(seed)
    samples = []
    for i in subset:
        e = np.zeros(n)
        e[i] = 1.0
        samples.append(e)
    for _ in range(sample_count):
        x = np.zeros(n)
        x[list(subset)] = rng.dirichlet(np.ones(len(subset)))
        samples.append(x)

    actives = [_active_words(x, m, n_max) for x in samples]

    equal_words = True
    words_witness = None
    for a in range(len(samples)):
        for b in range(a + 1, len(samples)):
            if set(actives[a]) != set(actives[b]):
                equal_words = False
                diff = set(actives[a]) ^ set(actives[b])
                words_witness = {"pair": (a, b), "differing_word": sorted(diff, key=len)[0]}
                break
        if not equal_words:
            break

    max_dev = 0.0
    iso_witness = None
    for a in range(len(samples)):
        for b in range(a + 1, len(samples)):
            base_dist = float(np.abs(samples[a] - samples[b]).sum())
            common = set(actives[a]) & set(actives[b])
            for word in common:
                da = actives[a][word][1]
                db = actives[b][word][1]
                dev = abs(float(np.abs(da - db).sum()) - base_dist)
                if dev > max_dev:
                    max_dev = dev
                    iso_witness = {"pair": (a, b), "word": word, "deviation": dev}
    isometry_pass = max_dev <= 1e-9

    # orbits are finite point sets; they fail to look isolated only when two
    # distinct points collapse below the dedup floor.  Singleton orbits are
    # isolated vacuously and contribute no separation value.
    separation = float("inf")
    for act in actives:
        pts = [direction for _, direction in act.values()]
        uniq: list[np.ndarray] = []
        for p in pts:
            if not any(np.abs(p - q).sum() <= dedup_eps for q in uniq):
                uniq.append(p)
        if len(uniq) < 2:
            continue
        stackpts = np.asarray(uniq)
        d = np.abs(stackpts[:, None, :] - stackpts[None, :, :]).sum(axis=2)
        np.fill_diagonal(d, np.inf)
        separation = min(separation, float(d.min()))
    isolated = separation > dedup_eps

    return NonstabilityReport(
        subset=subset,
        separation=separation,
        isolated_pass=isolated,
        equal_words_pass=equal_words,
        isometry_pass=isometry_pass,
        max_isometry_deviation=max_dev,
        witnesses={"equal_words": words_witness, "isometry": iso_witness},
    )
