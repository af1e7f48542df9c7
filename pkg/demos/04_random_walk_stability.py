#!/usr/bin/env python3
"""Stability detection on reflecting birth-death chains observed through
column parity.

Two regimes both converge: constant holding probability (case A), where the
two-letter word (1,2) repeated drives the normalised products to a rank-one
limit built from an even-site stationary vector; and a unique maximal
holding probability (case B), where repeating a single letter concentrates
everything on the peak state's column.
"""

import numpy as np

import filtermc as fm

print("case A: constant holding probability 1/3, drift toward the origin")
model_a = fm.random_walk_case_a(64)
print("  positive-recurrence proxy (ratio partial sums, last 3):",
      np.round(model_a.meta["ratio_partial_sums"][-3:], 6))
res_a = fm.detect_rank_one_limit(model_a.partition, tol=1e-9,
                                 repeat_words=[(1, 2)], policy=("repeat",),
                                 power_iters=3000)
print("  verdict:", res_a.kind, "after", res_a.diagnostics["repetitions"], "repetitions of (1, 2)")
W = res_a.W.toarray()
row_mass = W.sum(axis=1)
print("  row masses (even rows ~ 1, odd rows ~ 1/2):", np.round(row_mass[:6], 4))
heavy = int(np.argmax(row_mass))
print("  common row direction, first entries:", np.round(W[heavy] / W[heavy].sum(), 4)[:6])

print("\ncase B: one state holds with probability 0.6 > 1/3")
model_b = fm.random_walk_case_b(64, peak_state=1, peak_hold=0.6)
res_b = fm.detect_rank_one_limit(model_b.partition, tol=1e-9,
                                 repeat_words=[(1,)], policy=("repeat",),
                                 power_iters=3000)
print("  verdict:", res_b.kind)
Wb = res_b.W.toarray()
print("  column mass concentrates on the peak column:",
      np.round(Wb.sum(axis=0)[:4], 6))
print("  row scales (c0, b1, a2)/max:", np.round(Wb.sum(axis=1)[:3], 6))

print("\nwitness composition on a small walk (n = 8):")
model_s = fm.random_walk_case_a(8)
ms = model_s.partition
print("  subrectangular word:", fm.find_subrectangular_word(ms, max_len=8))
print("  localizing word at bound n/2:", fm.find_localizing_word(ms, max_len=8, col_bound=4))
out = fm.compose_rank_one_witness(ms, max_len=8, tol=1e-9, col_bound=4)
word, Wc = out
print("  composed witness word:", word)
print("  witness operator norm:", fm.operator_norm(Wc),
      "| rank-one proximity:", fm.rank_one_proximity(Wc, row_floor=1e-4))

print("\nfull-observation chains certify in one step:")
P = fm.TransitionMatrix.from_dense(np.full((4, 4), 0.25))
ident = fm.partition_from_lumping(P, [0, 1, 2, 3])
word, Wi = fm.compose_rank_one_witness(ident, max_len=3, tol=1e-9)
print("  identity lumping witness word:", word)
