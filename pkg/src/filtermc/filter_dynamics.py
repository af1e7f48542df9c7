"""The filtering process as a Markov chain on the probability simplex.

Given a partition ``{M(w)}`` of a transition matrix, a point ``x`` of the
simplex jumps to ``x M(w) / |x M(w)|`` with probability ``|x M(w)|`` (l1
norms throughout).  This module implements one step of that kernel, its
action on finitely supported measures and on test functions, barycenters,
and seeded simulation of sample paths.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core_model import (
    ModelError,
    Partition,
    ProbVector,
    as_prob_vector,
)

__all__ = [
    "Outcome",
    "DiscreteMeasure",
    "TestFunction",
    "FilterTrace",
    "step_outcomes",
    "pushforward",
    "evolve",
    "transition_operator",
    "barycenter",
    "vertex_measure",
    "simulate_filter",
    "dirac",
    "save_measure",
    "load_measure",
]

DEFAULT_PRUNE = 1e-12
DEFAULT_MERGE_EPS = 1e-10


@dataclass(frozen=True)
class Outcome:
    """One possible filter transition: observe ``label`` with probability
    ``prob`` and move to ``next_state``."""

    label: object
    prob: float
    next_state: ProbVector


class DiscreteMeasure:
    """A finitely supported probability measure on the simplex.

    Atoms are ``(weight, point)`` pairs with positive weights summing to 1
    (renormalised within the usual tolerance).  Construction merges atoms
    closer than ``merge_eps`` in l1: weights add up and the coordinates of
    the heavier atom are kept, ties resolved in favour of the first seen.
    ``pruned_mass``/``pruned_count`` record mass dropped upstream (by
    pushforward pruning); they are bookkeeping, not part of the measure.
    """

    __slots__ = ("weights", "points", "pruned_mass", "pruned_count")

    def __init__(self, weights, points, merge_eps: float = DEFAULT_MERGE_EPS,
                 pruned_mass: float = 0.0, pruned_count: int = 0):
        w = np.asarray(weights, dtype=float)
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if w.ndim != 1 or w.shape[0] != pts.shape[0]:
            raise ModelError("DiscreteMeasure weights/points mismatch")
        if w.size == 0:
            raise ModelError("DiscreteMeasure must have at least one atom")
        if (w <= 0).any():
            raise ModelError("DiscreteMeasure weights must be strictly positive")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"DiscreteMeasure mass {total!r} deviates from 1")
        w = w / total
        if merge_eps > 0.0 and w.size > 1:
            w, pts = _merge_atoms(w, pts, merge_eps)
            w = w / w.sum()
        pts = pts.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        self.weights = w
        self.points = pts
        self.pruned_mass = float(pruned_mass)
        self.pruned_count = int(pruned_count)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def atoms(self) -> list[tuple[float, np.ndarray]]:
        return [(float(w), self.points[k]) for k, w in enumerate(self.weights)]

    def integrate(self, u: Callable[[np.ndarray], float]) -> float:
        """<u, mu> = sum of weight * u(point)."""
        return float(sum(w * u(p) for w, p in zip(self.weights, self.points)))

    def __repr__(self) -> str:
        return f"DiscreteMeasure(size={self.size}, dim={self.dim})"


def _merge_atoms(w: np.ndarray, pts: np.ndarray, eps: float):
    """Greedy first-seen merge of atoms within l1 distance eps."""
    rep_w: list[float] = []
    rep_p: list[np.ndarray] = []
    for k in range(w.shape[0]):
        p = pts[k]
        merged = False
        if rep_p:
            stack = np.asarray(rep_p)
            d = np.abs(stack - p).sum(axis=1)
            j = int(np.argmin(d))
            if d[j] <= eps:
                # keep the coordinates of the weight-larger atom
                if w[k] > rep_w[j]:
                    rep_p[j] = p
                rep_w[j] += float(w[k])
                merged = True
        if not merged:
            rep_w.append(float(w[k]))
            rep_p.append(p)
    return np.asarray(rep_w), np.asarray(rep_p)


def dirac(x) -> DiscreteMeasure:
    """Point mass at ``x``."""
    x = as_prob_vector(x)
    return DiscreteMeasure([1.0], [x.coords])


@dataclass
class TestFunction:
    """A real function on the simplex, optionally with a Lipschitz bound.

    ``convex_rep`` stores a finite list of affine pieces ``(a, b)`` whose
    pointwise maximum is the function; in that case the evaluator is derived
    and ``lipschitz`` defaults to the exact seminorm of an affine piece with
    respect to the l1 metric on the simplex, ``(max(a) - min(a)) / 2``,
    maximised over pieces.
    """

    evaluator: Callable[[np.ndarray], float] | None = None
    lipschitz: float | None = None
    convex_rep: list[tuple[np.ndarray, float]] | None = None

    def __post_init__(self):
        if self.convex_rep is not None:
            pieces = [(np.asarray(a, dtype=float), float(b)) for a, b in self.convex_rep]
            self.convex_rep = pieces
            if self.evaluator is None:
                A = np.stack([a for a, _ in pieces])
                bs = np.array([b for _, b in pieces])
                self.evaluator = lambda x: float((A @ np.asarray(x) + bs).max())
            if self.lipschitz is None:
                self.lipschitz = max(
                    (float(a.max() - a.min()) / 2.0) for a, _ in pieces
                )
        if self.evaluator is None:
            raise ModelError("TestFunction needs an evaluator or a convex_rep")

    @classmethod
    def constant(cls, c: float) -> "TestFunction":
        return cls(convex_rep=[(np.zeros(1), c)], evaluator=lambda x: c, lipschitz=0.0)

    @classmethod
    def coordinate(cls, i: int, n: int) -> "TestFunction":
        a = np.zeros(n)
        a[i] = 1.0
        return cls(convex_rep=[(a, 0.0)])

    @classmethod
    def affine_max(cls, pieces: Iterable[tuple[Sequence[float], float]]) -> "TestFunction":
        return cls(convex_rep=[(np.asarray(a, dtype=float), float(b)) for a, b in pieces])

    def __call__(self, x) -> float:
        c = x.coords if isinstance(x, ProbVector) else np.asarray(x, dtype=float)
        return float(self.evaluator(c))


@dataclass(frozen=True)
class FilterTrace:
    """A simulated path of the filtering process: observed labels and states."""

    x0: ProbVector
    steps: tuple[tuple[object, ProbVector], ...]
    seed: int

    def labels(self) -> list:
        return [lab for lab, _ in self.steps]

    def to_csv(self, path) -> None:
        """Columns: step, label, one column per state coordinate (full
        round-trip decimal precision).  Step 0 is the start vector."""
        n = self.x0.dim
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "label"] + [f"x{i}" for i in range(n)])
            writer.writerow([0, ""] + [repr(float(v)) for v in self.x0.coords])
            for k, (lab, state) in enumerate(self.steps, start=1):
                writer.writerow([k, lab] + [repr(float(v)) for v in state.coords])


# ---------------------------------------------------------------------------
# the kernel, its operators, and barycenters
# ---------------------------------------------------------------------------

def step_outcomes(x, m: Partition, threshold: float = 0.0) -> list[Outcome]:
    """All one-step transitions from ``x`` with mass above ``threshold``.

    Outcomes come back sorted by label.  At ``threshold == 0`` the outcome
    probabilities sum to 1 exactly (up to float error); with a positive
    threshold the missing mass is ``1 - sum(prob)``.
    """
    xv = as_prob_vector(x)
    if xv.dim != m.n:
        raise ModelError("state vector dimension does not match the partition")
    out = []
    for w, M in m:
        y = M.left_apply(xv.coords)
        p = float(y.sum())
        if p > threshold:
            out.append(Outcome(w, p, ProbVector(y / p)))
    return out


def pushforward(mu: DiscreteMeasure, m: Partition, prune: float = DEFAULT_PRUNE,
                merge_eps: float = DEFAULT_MERGE_EPS) -> DiscreteMeasure:
    """One step of the kernel applied to a finitely supported measure.

    Every atom fans out over the outcome set; branches of mass at most
    ``prune`` are dropped (their total is accumulated in ``pruned_mass``,
    never silently), the rest is merged within ``merge_eps`` and
    renormalised.
    """
    new_w: list[float] = []
    new_p: list[np.ndarray] = []
    pruned_mass = mu.pruned_mass
    pruned_count = mu.pruned_count
    for w_atom, point in zip(mu.weights, mu.points):
        for w, M in m:
            y = M.left_apply(point)
            p = float(y.sum())
            if p <= 0.0:
                continue
            mass = float(w_atom) * p
            if mass <= prune:
                pruned_mass += mass
                pruned_count += 1
                continue
            new_w.append(mass)
            new_p.append(y / p)
    if not new_w:
        raise ModelError("pushforward pruned away all mass; lower `prune`")
    return DiscreteMeasure(new_w, new_p, merge_eps=merge_eps,
                           pruned_mass=pruned_mass, pruned_count=pruned_count)


def evolve(x, m: Partition, n: int, prune: float = DEFAULT_PRUNE,
           merge_eps: float = DEFAULT_MERGE_EPS) -> DiscreteMeasure:
    """The n-step distribution of the filter started at ``x``: the n-fold
    pushforward of the point mass at ``x``."""
    if n < 1:
        raise ModelError("evolve requires n >= 1")
    mu = dirac(x)
    for _ in range(n):
        mu = pushforward(mu, m, prune=prune, merge_eps=merge_eps)
    return mu


def transition_operator(u, m: Partition, x) -> float:
    """The operator dual to the kernel: ``(Tu)(x) = sum prob * u(next)``
    over the one-step outcomes from ``x``."""
    ev = u if callable(u) else u.evaluator
    return float(sum(o.prob * ev(o.next_state.coords) for o in step_outcomes(x, m)))


def transition_operator_power(u, m: Partition, x, n: int) -> float:
    """(T^n u)(x), computed by integrating u against the exact n-step
    distribution (no pruning, no merging)."""
    if n == 0:
        ev = u if callable(u) else u.evaluator
        return float(ev(as_prob_vector(x).coords))
    mu = evolve(x, m, n, prune=0.0, merge_eps=0.0)
    ev = u if callable(u) else u.evaluator
    return mu.integrate(ev)


def barycenter(mu: DiscreteMeasure) -> ProbVector:
    """Weighted average of the atoms; always a point of the simplex."""
    return ProbVector(mu.weights @ mu.points)


def vertex_measure(q) -> DiscreteMeasure:
    """The measure on the simplex vertices with weight ``q_i`` at vertex
    ``e_i``; its barycenter is ``q``."""
    qv = as_prob_vector(q)
    n = qv.dim
    idx = np.flatnonzero(qv.coords > 0)
    pts = np.zeros((idx.size, n))
    pts[np.arange(idx.size), idx] = 1.0
    return DiscreteMeasure(qv.coords[idx], pts)


def simulate_filter(x0, m: Partition, steps: int, seed: int = 0,
                    threshold: float = 0.0) -> FilterTrace:
    """Sample one path of the filtering process with a seeded generator.

    Each step draws among the outcomes (sorted by label) by inverse CDF, so
    a fixed seed reproduces the trace bit for bit.
    """
    if steps < 1:
        raise ModelError("simulate_filter requires steps >= 1")
    x = as_prob_vector(x0)
    rng = np.random.default_rng(seed)
    path = []
    for _ in range(steps):
        outs = step_outcomes(x, m, threshold=threshold)
        if not outs:
            raise ModelError("no outcome above threshold; filter cannot move")
        probs = np.array([o.prob for o in outs])
        cdf = np.cumsum(probs)
        r = rng.random() * cdf[-1]
        k = int(np.searchsorted(cdf, r, side="right"))
        k = min(k, len(outs) - 1)
        chosen = outs[k]
        path.append((chosen.label, chosen.next_state))
        x = chosen.next_state
    return FilterTrace(x0=as_prob_vector(x0), steps=tuple(path), seed=seed)


# ---------------------------------------------------------------------------
# measure files
# ---------------------------------------------------------------------------

def save_measure(mu: DiscreteMeasure, path) -> None:
    """Measure file: ``{"atoms": [{"w": weight, "x": [coords]}, ...]}``."""
    doc = {"atoms": [{"w": float(w), "x": [float(v) for v in p]}
                     for w, p in zip(mu.weights, mu.points)]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_measure(path) -> DiscreteMeasure:
    with open(path) as fh:
        doc = json.load(fh)
    atoms = doc["atoms"]
    if not atoms:
        raise ModelError("measure file has no atoms")
    w = [float(a["w"]) for a in atoms]
    pts = [np.asarray(a["x"], dtype=float) for a in atoms]
    return DiscreteMeasure(w, pts, merge_eps=0.0)
